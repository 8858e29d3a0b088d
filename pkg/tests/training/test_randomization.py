# Third-party imports
import numpy as np

# Local application imports
from src.training.randomization import domain_randomize


def test_draws_stay_within_ranges(source_domain):
    ranges = source_domain.randomization
    for seed in range(10):
        randomized = domain_randomize(source_domain, np.random.default_rng(seed))

        low, high = ranges.lag_range
        assert low <= randomized.lag <= high
        for role, colour in randomized.palette.items():
            offset = np.abs(np.subtract(colour, source_domain.palette[role]))
            assert np.all(offset <= ranges.palette_jitter)
        assert randomized.view == source_domain.view


def test_same_rng_gives_same_domain(source_domain):
    first = domain_randomize(source_domain, np.random.default_rng(5))
    second = domain_randomize(source_domain, np.random.default_rng(5))
    assert first == second
    assert first != domain_randomize(source_domain, np.random.default_rng(6))


def test_domain_without_ranges_is_unchanged(target_domain):
    assert target_domain.randomization is None
    assert domain_randomize(target_domain, np.random.default_rng(0)) is target_domain
