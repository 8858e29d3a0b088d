"""Scripted expert controllers for the three task suites.

Each controller emits a normalized 4-D action (xyz delta in [-1, 1], gripper
in [-1, 0]) together with the stage index of the branch that produced it.
"""
# Standard library imports
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import Suite
from src.sim.domains import DomainConfig
from src.sim.tasks import TaskSpec
from src.sim.world import (
    DROP_HEIGHT,
    LIFT_HEIGHT,
    WorldState,
    item_in_vessel,
    vessel_on_plate,
)

DIST_THRESH = 0.02
HOVER_RADIUS = 0.04
NOISE_SIGMA = 0.1
TARGET_DIST_TO_CENTER = 0.15
WRAP_DONE_ANGLE = 11.0 * math.pi / 6.0
WRAPPED_ANGLE = 5.0 * math.pi / 3.0

OPEN = 0.0
CLOSE = -1.0

# Controller horizons at the slow control rate; other domains rescale these
BASE_HORIZONS = {
    Suite.STACK: 18,
    Suite.TWO_STEP: 45,
    Suite.WRAP: 45,
}


class PickPlaceStage(IntEnum):
    REACH = 0
    DESCEND = 1
    CLOSE = 2
    LIFT = 3
    CARRY = 4
    RELEASE = 5
    DONE = 6


PICK_PLACE_STAGES = len(PickPlaceStage)


class WrapStage(IntEnum):
    REACH = 0
    DESCEND = 1
    CLOSE = 2
    LIFT = 3
    LEFT = 4
    FRONT = 5
    RIGHT = 6
    BACK = 7
    WRAPPED = 8
    UNWRAPPED = 9


# Quadrant index (counterclockwise from the +y side) to positional stage
QUADRANT_STAGES = (WrapStage.BACK, WrapStage.LEFT, WrapStage.FRONT, WrapStage.RIGHT)


@dataclass
class ScriptedPolicyState:
    place_attempted: bool = False
    step_index: int = 0
    steps_completed: List[bool] = field(default_factory=lambda: [False, False])
    dist_thresh: float = DIST_THRESH
    noise_sigma: float = NOISE_SIGMA

    def __post_init__(self):
        if self.dist_thresh <= 0:
            raise ValueError(f"dist_thresh must be positive, got {self.dist_thresh}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


def suite_horizon(suite: Suite, domain: DomainConfig) -> int:
    return domain.suite_horizon(BASE_HORIZONS[suite])


def to_action(delta: Sequence[float], domain: DomainConfig) -> np.ndarray:
    """Convert a metric displacement into normalized units, shrinking uniformly to fit [-1, 1]"""
    scaled = np.asarray(delta, dtype=np.float64) / domain.action_scale
    peak = float(np.max(np.abs(scaled))) if scaled.size else 0.0
    if peak > 1.0:
        scaled = scaled / peak
    return scaled


def _compose(motion: np.ndarray, gripper: float, rng: Optional[np.random.Generator], noise_sigma: float) -> np.ndarray:
    motion = np.asarray(motion, dtype=np.float64)
    if rng is not None and noise_sigma > 0:
        motion = motion + rng.normal(0.0, noise_sigma, 3)
    return np.append(np.clip(motion, -1.0, 1.0), gripper)


def _approach_stage(ee: np.ndarray, pick: np.ndarray) -> int:
    xy = float(np.hypot(*(pick[:2] - ee[:2])))
    return PickPlaceStage.REACH if xy > HOVER_RADIUS else PickPlaceStage.DESCEND


def pick_place_step(
    state: WorldState,
    pick_pos: Sequence[float],
    drop_pos: Sequence[float],
    dist_thresh: float,
    place_attempted: bool,
    domain: DomainConfig,
    rng: Optional[np.random.Generator] = None,
    noise_sigma: float = NOISE_SIGMA,
) -> Tuple[np.ndarray, int, bool]:
    """One branch of the pick-and-place script; returns (action, stage, place_attempted)"""
    ee = state.gripper_pos
    pick = np.asarray(pick_pos, dtype=np.float64)
    drop = np.asarray(drop_pos, dtype=np.float64)
    held = state.grasped_object()

    if place_attempted:
        return _compose(np.zeros(3), OPEN, rng, noise_sigma), PickPlaceStage.DONE, True
    if held is None and np.linalg.norm(ee - pick) > dist_thresh:
        return _compose(to_action(pick - ee, domain), OPEN, rng, noise_sigma), _approach_stage(ee, pick), False
    if held is None:
        return _compose(to_action(pick - ee, domain), CLOSE, rng, noise_sigma), PickPlaceStage.CLOSE, False
    if held.pos[2] < LIFT_HEIGHT:
        return _compose(np.array([0.0, 0.0, 1.0]), CLOSE, rng, noise_sigma), PickPlaceStage.LIFT, False
    if np.linalg.norm(ee - drop) > dist_thresh:
        return _compose(to_action(drop - ee, domain), CLOSE, rng, noise_sigma), PickPlaceStage.CARRY, False
    return _compose(np.zeros(3), OPEN, rng, noise_sigma), PickPlaceStage.RELEASE, True


def quadrant_stage(rel_xy: Sequence[float]) -> int:
    """Positional wrap stage from the gripper's angle about the centre; boundaries go to the lower quadrant"""
    angle = math.atan2(rel_xy[1], rel_xy[0])
    offset = (angle - math.pi / 4.0) % (2.0 * math.pi)
    quadrant = max(math.ceil(offset / (math.pi / 2.0)) - 1, 0)
    return int(QUADRANT_STAGES[min(quadrant, 3)])


def wrap_motion(ee: np.ndarray, center: np.ndarray, direction_sign: int,
                target_dist: float = TARGET_DIST_TO_CENTER) -> Tuple[np.ndarray, np.ndarray]:
    """Metric (maintain-distance, tangent) displacement pair in the table plane"""
    rel = np.array([ee[0] - center[0], ee[1] - center[1], 0.0])
    dist = float(np.linalg.norm(rel))
    if dist < 1e-12:
        return np.zeros(3), np.zeros(3)
    norm_rel = rel / dist * target_dist
    maintain = rel * (target_dist - dist)
    tangent = np.array([-norm_rel[1], norm_rel[0], 0.0]) * direction_sign
    return maintain, tangent


class ScriptedController(ABC):
    """Stateful expert for one episode"""

    def __init__(self, task: TaskSpec, domain: DomainConfig, rng: Optional[np.random.Generator] = None,
                 noise_sigma: float = NOISE_SIGMA, dist_thresh: float = DIST_THRESH):
        self.task = task
        self.domain = domain
        self.rng = rng
        self.policy_state = ScriptedPolicyState(dist_thresh=dist_thresh, noise_sigma=noise_sigma)

    def reset(self) -> None:
        self.policy_state = ScriptedPolicyState(
            dist_thresh=self.policy_state.dist_thresh, noise_sigma=self.policy_state.noise_sigma)

    @abstractmethod
    def act(self, state: WorldState) -> Tuple[np.ndarray, int]:
        ...


class StackController(ScriptedController):
    def act(self, state: WorldState) -> Tuple[np.ndarray, int]:
        ps = self.policy_state
        pick = state.objects[0].pos
        drop = state.containers[0].pos + np.array([0.0, 0.0, DROP_HEIGHT])
        action, stage, ps.place_attempted = pick_place_step(
            state, pick, drop, ps.dist_thresh, ps.place_attempted, self.domain, self.rng, ps.noise_sigma)
        return action, int(stage)


class TwoStepController(ScriptedController):
    def _targets(self, state: WorldState) -> Tuple[np.ndarray, np.ndarray]:
        item, vessel = state.objects[0], state.objects[1]
        lift = np.array([0.0, 0.0, DROP_HEIGHT])
        if self.policy_state.step_index == 0:
            return item.pos, vessel.pos + lift
        return vessel.pos, state.containers[0].pos + lift

    @staticmethod
    def step_is_successful(state: WorldState, step_index: int) -> bool:
        placed = item_in_vessel(state) if step_index == 0 else vessel_on_plate(state)
        return placed and state.gripper_open

    def act(self, state: WorldState) -> Tuple[np.ndarray, int]:
        ps = self.policy_state
        phase = ps.step_index
        pick, drop = self._targets(state)
        action, stage, ps.place_attempted = pick_place_step(
            state, pick, drop, ps.dist_thresh, ps.place_attempted, self.domain, self.rng, ps.noise_sigma)
        if not ps.steps_completed[phase] and self.step_is_successful(state, phase):
            ps.steps_completed[phase] = True
            if phase == 0:
                ps.step_index = 1
                ps.place_attempted = False
        return action, int(stage) + PICK_PLACE_STAGES * phase


class WrapController(ScriptedController):
    def act(self, state: WorldState) -> Tuple[np.ndarray, int]:
        ps = self.policy_state
        rng, sigma = self.rng, ps.noise_sigma
        ee = state.gripper_pos
        wire = state.objects[0]
        sign = self.task.direction_sign
        held = state.grasped_object()
        done = state.wound * sign > WRAP_DONE_ANGLE

        if ps.place_attempted:
            stage = WrapStage.WRAPPED if state.wound * sign >= WRAPPED_ANGLE else WrapStage.UNWRAPPED
            return _compose(np.zeros(3), OPEN, rng, sigma), int(stage)
        if held is None and np.linalg.norm(ee - wire.pos) > ps.dist_thresh:
            return _compose(to_action(wire.pos - ee, self.domain), OPEN, rng, sigma), int(_approach_stage(ee, wire.pos))
        if held is None:
            return _compose(to_action(wire.pos - ee, self.domain), CLOSE, rng, sigma), int(WrapStage.CLOSE)
        if held.pos[2] < LIFT_HEIGHT:
            return _compose(np.array([0.0, 0.0, 1.0]), CLOSE, rng, sigma), int(WrapStage.LIFT)
        if not done:
            maintain, tangent = wrap_motion(ee, state.center_pos, sign)
            stage = quadrant_stage(ee[:2] - state.center_pos[:2])
            return _compose(to_action(maintain + tangent, self.domain), CLOSE, rng, sigma), stage
        ps.place_attempted = True
        return _compose(np.zeros(3), OPEN, rng, sigma), int(WrapStage.WRAPPED)


CONTROLLERS = {
    Suite.STACK: StackController,
    Suite.TWO_STEP: TwoStepController,
    Suite.WRAP: WrapController,
}


def make_controller(task: TaskSpec, domain: DomainConfig, rng: Optional[np.random.Generator] = None,
                    noise_sigma: float = NOISE_SIGMA) -> ScriptedController:
    return CONTROLLERS[task.suite](task, domain, rng=rng, noise_sigma=noise_sigma)
