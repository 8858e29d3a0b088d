# Standard library imports
import json
import string
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Mapping, Tuple

# Local application imports
from src.database.records import STAGE_COUNTS, Suite
from src.scripted.policies import PICK_PLACE_STAGES
from src.sim.tasks import TaskSpec

TEMPLATES_PATH = Path(__file__).with_name('templates.json')


@lru_cache(maxsize=1)
def load_template_resource() -> dict:
    with open(TEMPLATES_PATH, encoding='utf-8') as f:
        return json.load(f)


def template_slots(template: str) -> List[str]:
    return [name for _, name, _, _ in string.Formatter().parse(template) if name]


def fill_template(template: str, bindings: Mapping[str, str]) -> str:
    for slot in template_slots(template):
        if slot not in bindings:
            raise ValueError(f"missing binding for slot '{slot}' in template '{template}'")
    return template.format(**{slot: bindings[slot] for slot in template_slots(template)})


@dataclass(frozen=True)
class StageTemplateTable:
    suite: Suite
    templates: Tuple[str, ...]
    variables: Dict[str, Tuple[str, ...]]

    def __post_init__(self):
        if len(self.templates) != STAGE_COUNTS[self.suite]:
            raise ValueError(
                f"{self.suite.value} needs {STAGE_COUNTS[self.suite]} templates, got {len(self.templates)}")
        for template in self.templates:
            for slot in template_slots(template):
                if slot not in self.variables:
                    raise ValueError(f"slot '{slot}' has no allowed-values entry")

    def fill(self, stage: int, bindings: Mapping[str, str]) -> str:
        if not (0 <= stage < len(self.templates)):
            raise ValueError(f"stage {stage} outside [0, {len(self.templates)}) for {self.suite.value}")
        return fill_template(self.templates[stage], bindings)


@lru_cache(maxsize=None)
def template_table(suite: Suite) -> StageTemplateTable:
    resource = load_template_resource()
    variables = {slot: tuple(values) for slot, values in resource['variables'].items()}
    if suite == Suite.WRAP:
        templates = resource['wrap']
    elif suite == Suite.TWO_STEP:
        templates = resource['pick_place'] * 2
    else:
        templates = resource['pick_place']
    return StageTemplateTable(suite=suite, templates=tuple(templates), variables=variables)


def stage_to_description(stage: int, suite: Suite, bindings: Mapping[str, str]) -> str:
    return template_table(suite).fill(int(stage), bindings)


def task_bindings(task: TaskSpec, stage: int = 0) -> Dict[str, str]:
    """Slot values for a task; two-step tasks rebind objects for the second placement"""
    if task.suite == Suite.WRAP:
        return {
            'graspObjName': task.obj_name,
            'flexWraparoundObjName': task.flex_name,
            'direction': task.direction,
        }
    if task.suite == Suite.TWO_STEP:
        if stage < PICK_PLACE_STAGES:
            return {'objName': task.obj_name, 'contName': task.vessel_name}
        return {'objName': task.vessel_name, 'contName': task.cont_name}
    return {'objName': task.obj_name, 'contName': task.cont_name}


def describe_stage(stage: int, task: TaskSpec) -> str:
    return stage_to_description(stage, task.suite, task_bindings(task, stage))
