# Standard library imports
from enum import Enum
from typing import List, Sequence

# Local application imports
from src.database.records import STAGE_COUNTS, Domain, Suite
from src.language.templates import fill_template, load_template_resource, stage_to_description, task_bindings
from src.sim.tasks import TaskSpec

SENTINEL_PREFIX = '<random language embedding'
ONE_SENTINEL = f'{SENTINEL_PREFIX}>'


class GranularityLevel(Enum):
    ALL = "all"
    HALF = "half"
    TWO = "two"
    ONE = "one"
    ONE_PER_DOMAIN = "one_per_domain"


def domain_sentinel(domain: Domain) -> str:
    return f'{SENTINEL_PREFIX}: {domain.value}>'


def is_sentinel(text: str) -> bool:
    return text.startswith(SENTINEL_PREFIX)


def merge_map(suite: Suite, level: GranularityLevel) -> List[int]:
    """Stage to merged-stage index for a suite at a granularity level"""
    count = STAGE_COUNTS[suite]
    if level == GranularityLevel.ALL:
        return list(range(count))
    if level in (GranularityLevel.ONE, GranularityLevel.ONE_PER_DOMAIN):
        return [0] * count
    return list(load_template_resource()['granularity'][suite.value][level.value]['merge_map'])


def merged_count(suite: Suite, level: GranularityLevel) -> int:
    return max(merge_map(suite, level)) + 1


def merged_description(merged: int, suite: Suite, level: GranularityLevel, domain: Domain, task: TaskSpec) -> str:
    if level == GranularityLevel.ONE:
        return ONE_SENTINEL
    if level == GranularityLevel.ONE_PER_DOMAIN:
        return domain_sentinel(domain)
    mapping = merge_map(suite, level)
    representative = mapping.index(merged)
    bindings = task_bindings(task, representative)
    if level == GranularityLevel.ALL:
        return stage_to_description(representative, suite, bindings)
    template = load_template_resource()['granularity'][suite.value][level.value]['templates'][merged]
    return fill_template(template, bindings)


def reduce_granularity(
    stages: Sequence[int],
    level: GranularityLevel,
    suite: Suite,
    domain: Domain,
    task: TaskSpec,
) -> List[str]:
    """Per-frame descriptions after merging stages to the given granularity"""
    mapping = merge_map(suite, level)
    cache = {}
    descriptions = []
    for stage in stages:
        merged = mapping[int(stage)]
        if merged not in cache:
            cache[merged] = merged_description(merged, suite, level, domain, task)
        descriptions.append(cache[merged])
    return descriptions
