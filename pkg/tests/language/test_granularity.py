# Third-party imports
import pytest

# Local application imports
from src.database.records import STAGE_COUNTS, Domain, Suite
from src.language.granularity import (
    ONE_SENTINEL,
    GranularityLevel,
    domain_sentinel,
    is_sentinel,
    merge_map,
    merged_count,
    reduce_granularity,
)
from src.language.templates import describe_stage
from src.sim.tasks import get_task


@pytest.mark.parametrize("suite", list(Suite))
@pytest.mark.parametrize("level", list(GranularityLevel))
def test_merge_maps_cover_every_stage_in_order(suite, level):
    """Merged indices are non-decreasing and cover 0..K'-1"""
    mapping = merge_map(suite, level)
    assert len(mapping) == STAGE_COUNTS[suite]
    assert mapping == sorted(mapping)
    assert set(mapping) == set(range(merged_count(suite, level)))


def test_all_level_keeps_original_descriptions():
    task = get_task('stack_milk')
    stages = [0, 1, 2, 6]
    descriptions = reduce_granularity(stages, GranularityLevel.ALL, Suite.STACK, Domain.SOURCE, task)
    assert descriptions == [describe_stage(s, task) for s in stages]


def test_two_level_on_two_step():
    task = get_task('two_step_carrot')
    descriptions = reduce_granularity([0, 6, 7, 13], GranularityLevel.TWO, Suite.TWO_STEP, Domain.TARGET, task)
    assert descriptions[0] == "picking carrot and putting in bowl"
    assert descriptions[1] == descriptions[0]
    assert descriptions[2] == "picking bowl and putting in plate"
    assert descriptions[3] == descriptions[2]


def test_one_level_is_identical_across_domains():
    """A single sentinel is shared by both domains"""
    stages = list(range(STAGE_COUNTS[Suite.STACK]))
    source = reduce_granularity(stages, GranularityLevel.ONE, Suite.STACK, Domain.SOURCE, get_task('stack_milk'))
    target = reduce_granularity(stages, GranularityLevel.ONE, Suite.STACK, Domain.TARGET, get_task('stack_can'))
    assert set(source) == set(target) == {ONE_SENTINEL}


def test_one_per_domain_level_differs_across_domains():
    stages = [0, 3]
    source = reduce_granularity(stages, GranularityLevel.ONE_PER_DOMAIN, Suite.STACK, Domain.SOURCE,
                                get_task('stack_milk'))
    target = reduce_granularity(stages, GranularityLevel.ONE_PER_DOMAIN, Suite.STACK, Domain.TARGET,
                                get_task('stack_can'))
    assert source == [domain_sentinel(Domain.SOURCE)] * 2
    assert target == [domain_sentinel(Domain.TARGET)] * 2
    assert all(is_sentinel(d) for d in source + target)
    assert not is_sentinel(describe_stage(0, get_task('stack_can')))
