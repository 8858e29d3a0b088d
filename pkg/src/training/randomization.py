# Standard library imports
from dataclasses import replace

# Third-party imports
import numpy as np

# Local application imports
from src.sim.domains import DomainConfig

MIN_LAG = 0.05


def domain_randomize(domain: DomainConfig, rng: np.random.Generator) -> DomainConfig:
    """Fresh palette and lag draws within the domain's randomization ranges"""
    ranges = domain.randomization
    if ranges is None:
        return domain

    jitter = ranges.palette_jitter
    palette = {}
    for role in sorted(domain.palette):
        offset = rng.integers(-jitter, jitter + 1, size=3)
        palette[role] = tuple(int(v) for v in np.clip(np.asarray(domain.palette[role]) + offset, 0, 255))

    lag = domain.lag
    if ranges.lag_range is not None:
        low, high = ranges.lag_range
        lag = float(np.clip(rng.uniform(low, high), MIN_LAG, 1.0))

    return replace(domain, palette=palette, lag=lag)
