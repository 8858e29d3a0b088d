# Standard library imports
from dataclasses import dataclass
from typing import Dict, List, Optional

# Local application imports
from src.database.records import Domain, Suite

CCW = 'counterclockwise'
CW = 'clockwise'


@dataclass(frozen=True)
class TaskSpec:
    """A concrete task: which objects play which role in a suite"""
    task_id: str
    suite: Suite
    instruction: str
    obj_name: str
    cont_name: str
    vessel_name: Optional[str] = None
    flex_name: Optional[str] = None
    direction: Optional[str] = None

    @property
    def direction_sign(self) -> int:
        return -1 if self.direction == CW else 1


def _stack(item: str, container: str) -> TaskSpec:
    return TaskSpec(
        task_id=f"stack_{item}",
        suite=Suite.STACK,
        instruction=f"put the {item} on the {container}",
        obj_name=item,
        cont_name=container,
    )


def _two_step(item: str, vessel: str, container: str) -> TaskSpec:
    return TaskSpec(
        task_id=f"two_step_{item}",
        suite=Suite.TWO_STEP,
        instruction=f"put the {item} in the {vessel}, then put the {vessel} on the {container}",
        obj_name=item,
        cont_name=container,
        vessel_name=vessel,
    )


def _wrap(task_id: str, grasp: str, flex: str, direction: str) -> TaskSpec:
    return TaskSpec(
        task_id=task_id,
        suite=Suite.WRAP,
        instruction=f"wrap the {flex} {direction} around the cylinder",
        obj_name=grasp,
        cont_name='cylinder',
        flex_name=flex,
        direction=direction,
    )


TASKS: Dict[str, TaskSpec] = {
    task.task_id: task
    for task in [
        *(_stack(item, 'coaster') for item in ('milk', 'bread', 'can', 'cereal')),
        _stack('carrot', 'plate'),
        *(_two_step(item, 'pot', 'stove') for item in ('milk', 'bread', 'can', 'cereal')),
        _two_step('carrot', 'bowl', 'plate'),
        _wrap('wrap_ccw', 'last bead', 'beads', CCW),
        _wrap('wrap_cw', 'last bead', 'beads', CW),
        _wrap('wrap_cord_ccw', 'white plug', 'cord', CCW),
    ]
}

# Source demonstrations span every prior task of a suite; target demos default to one task
SOURCE_TASKS: Dict[Suite, List[str]] = {
    Suite.STACK: ['stack_milk', 'stack_bread', 'stack_can', 'stack_cereal'],
    Suite.TWO_STEP: ['two_step_milk', 'two_step_bread', 'two_step_can', 'two_step_cereal'],
    Suite.WRAP: ['wrap_ccw', 'wrap_cw'],
}

TARGET_TASKS: Dict[Suite, str] = {
    Suite.STACK: 'stack_can',
    Suite.TWO_STEP: 'two_step_can',
    Suite.WRAP: 'wrap_ccw',
}


def get_task(task_id: str) -> TaskSpec:
    try:
        return TASKS[task_id]
    except KeyError:
        raise ValueError(f"unknown task '{task_id}'; known tasks: {', '.join(sorted(TASKS))}")


def default_tasks(suite: Suite, domain: Domain) -> List[TaskSpec]:
    if domain == Domain.SOURCE:
        return [TASKS[task_id] for task_id in SOURCE_TASKS[suite]]
    return [TASKS[TARGET_TASKS[suite]]]
