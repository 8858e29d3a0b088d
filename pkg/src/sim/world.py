"""Kinematic tabletop world: placement, stepping and success checks.

Positions are meters in a right-handed frame with the table at z = 0 and the
workspace centred on the origin. All arithmetic is float64 and every function
here is pure: states go in by value and new states come out.
"""
# Standard library imports
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import Domain, Suite
from src.sim.domains import DomainConfig
from src.sim.tasks import TaskSpec

HOME_POSITION = (0.0, 0.0, 0.2)
WORKSPACE_LOW = np.array([-0.35, -0.35, 0.0])
WORKSPACE_HIGH = np.array([0.35, 0.35, 0.35])

GRASP_RADIUS = 0.03
GRASP_THRESHOLD = 0.5
CONTAINER_RADIUS = 0.05
LIFT_HEIGHT = 0.08
DROP_HEIGHT = 0.1
VESSEL_HEIGHT = 0.03

CYLINDER_RADIUS = 0.05
LINK_LENGTH = 0.025
CHAIN_LINKS = 6
WRAP_SUCCESS_ANGLE = 5.0 * math.pi / 3.0

GRID_COLUMNS = 5
GRID_ROWS = 2
GRID_SIZE = GRID_COLUMNS * GRID_ROWS
MIN_SEPARATION = 0.12
SCENARIO_JITTER = 0.02

ROLE_OBJECT = 'object'
ROLE_VESSEL = 'vessel'


@dataclass(frozen=True)
class Region:
    """Axis-aligned placement rectangle on the table"""
    x: Tuple[float, float]
    y: Tuple[float, float]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(*self.x), rng.uniform(*self.y), 0.0])

    def contains(self, pos: Sequence[float], tol: float = 1e-9) -> bool:
        return (self.x[0] - tol <= pos[0] <= self.x[1] + tol) and (self.y[0] - tol <= pos[1] <= self.y[1] + tol)

    def grid(self) -> List[np.ndarray]:
        """Cell centres of a GRID_COLUMNS x GRID_ROWS lattice, row-major"""
        xs = [self.x[0] + (i + 0.5) * (self.x[1] - self.x[0]) / GRID_COLUMNS for i in range(GRID_COLUMNS)]
        ys = [self.y[0] + (j + 0.5) * (self.y[1] - self.y[0]) / GRID_ROWS for j in range(GRID_ROWS)]
        return [np.array([x, y, 0.0]) for y in ys for x in xs]


STACK_REGION = Region(x=(-0.2, 0.2), y=(-0.2, 0.2))
ITEM_REGION = Region(x=(-0.2, 0.2), y=(-0.2, -0.06))
VESSEL_REGION = Region(x=(-0.2, -0.04), y=(0.06, 0.2))
PLATE_REGION = Region(x=(0.04, 0.2), y=(0.06, 0.2))
VESSEL_GRID_POSITION = (-0.12, 0.13)
PLATE_GRID_POSITION = (0.12, 0.13)
# Chain end starts left of the cylinder: polar angle and radius bands about the centre
WRAP_ANGLE_RANGE = (math.pi - 0.35, math.pi + 0.35)
WRAP_RADIUS_RANGE = (0.12, 0.2)


@dataclass(frozen=True)
class SceneObject:
    name: str
    pos: np.ndarray
    grasped: bool = False
    role: str = ROLE_OBJECT
    resting_on: Optional[str] = None


@dataclass(frozen=True)
class Container:
    name: str
    pos: np.ndarray


@dataclass(frozen=True, eq=False)
class WorldState:
    gripper_pos: np.ndarray
    gripper_aperture: float
    objects: Tuple[SceneObject, ...]
    containers: Tuple[Container, ...] = ()
    chain: Optional[np.ndarray] = None
    t: int = 0
    center_pos: Optional[np.ndarray] = None
    suite: Suite = Suite.STACK
    wound: float = 0.0
    wrap_direction: int = 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return _state_key(self) == _state_key(other)

    def grasped_index(self) -> Optional[int]:
        for index, obj in enumerate(self.objects):
            if obj.grasped:
                return index
        return None

    def grasped_object(self) -> Optional[SceneObject]:
        index = self.grasped_index()
        return None if index is None else self.objects[index]

    def find(self, name: str) -> SceneObject:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)

    def container(self, name: str) -> Container:
        for cont in self.containers:
            if cont.name == name:
                return cont
        raise KeyError(name)

    @property
    def gripper_open(self) -> bool:
        return self.gripper_aperture >= GRASP_THRESHOLD


def _state_key(state: WorldState) -> tuple:
    def arr(value):
        return None if value is None else np.asarray(value, dtype=np.float64).tobytes()
    return (
        arr(state.gripper_pos), float(state.gripper_aperture),
        tuple((o.name, arr(o.pos), o.grasped, o.role, o.resting_on) for o in state.objects),
        tuple((c.name, arr(c.pos)) for c in state.containers),
        arr(state.chain), state.t, arr(state.center_pos), state.suite, float(state.wound), state.wrap_direction,
    )


@dataclass(frozen=True)
class EvalScenario:
    suite: Suite
    domain: Domain
    init_index: int
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.init_index < GRID_SIZE):
            raise ValueError(f"init_index {self.init_index} outside evaluation grid of size {GRID_SIZE}")


def wrap_grid() -> List[Tuple[float, float]]:
    """(angle, radius) pairs of the wrap evaluation grid, row-major over radius"""
    a0, a1 = WRAP_ANGLE_RANGE
    r0, r1 = WRAP_RADIUS_RANGE
    angles = [a0 + (i + 0.5) * (a1 - a0) / GRID_COLUMNS for i in range(GRID_COLUMNS)]
    radii = [r0 + (j + 0.5) * (r1 - r0) / GRID_ROWS for j in range(GRID_ROWS)]
    return [(angle, radius) for radius in radii for angle in angles]


def scenario_grid(suite: Suite) -> List[np.ndarray]:
    """Primary-object placements of the evaluation grid for a suite"""
    if suite == Suite.STACK:
        return STACK_REGION.grid()
    if suite == Suite.TWO_STEP:
        return ITEM_REGION.grid()
    return [np.array([math.cos(a) * r, math.sin(a) * r, 0.0]) for a, r in wrap_grid()]


def _make_chain(angle: float, radius: float) -> np.ndarray:
    direction = np.array([math.cos(angle), math.sin(angle), 0.0])
    return np.stack([direction * (radius + i * LINK_LENGTH) for i in range(CHAIN_LINKS)])


def reset(
    task: TaskSpec,
    domain: DomainConfig,
    scenario: Optional[EvalScenario] = None,
    seed: Optional[int] = None,
) -> WorldState:
    """Place the task's objects on the grid scenario or uniformly at random from seed"""
    if scenario is not None:
        if scenario.suite != task.suite:
            raise ValueError(f"scenario suite {scenario.suite.value} does not match task suite {task.suite.value}")
        if scenario.domain != domain.name:
            raise ValueError(f"scenario domain {scenario.domain.value} does not match {domain.name.value}")
        rng = np.random.default_rng([scenario.seed, scenario.init_index])
    else:
        rng = np.random.default_rng(seed)

    home = np.array(HOME_POSITION)
    if task.suite == Suite.STACK:
        if scenario is not None:
            item = STACK_REGION.grid()[scenario.init_index]
            target = -item + np.append(rng.uniform(-SCENARIO_JITTER, SCENARIO_JITTER, 2), 0.0)
        else:
            item = STACK_REGION.sample(rng)
            target = STACK_REGION.sample(rng)
            while np.linalg.norm(target[:2] - item[:2]) < MIN_SEPARATION:
                target = STACK_REGION.sample(rng)
        return WorldState(
            gripper_pos=home,
            gripper_aperture=1.0,
            objects=(SceneObject(task.obj_name, item),),
            containers=(Container(task.cont_name, target),),
            suite=Suite.STACK,
        )

    if task.suite == Suite.TWO_STEP:
        if scenario is not None:
            item = ITEM_REGION.grid()[scenario.init_index]
            jitter = rng.uniform(-SCENARIO_JITTER, SCENARIO_JITTER, 4)
            vessel = np.array([VESSEL_GRID_POSITION[0] + jitter[0], VESSEL_GRID_POSITION[1] + jitter[1], 0.0])
            plate = np.array([PLATE_GRID_POSITION[0] + jitter[2], PLATE_GRID_POSITION[1] + jitter[3], 0.0])
        else:
            item = ITEM_REGION.sample(rng)
            vessel = VESSEL_REGION.sample(rng)
            plate = PLATE_REGION.sample(rng)
        return WorldState(
            gripper_pos=home,
            gripper_aperture=1.0,
            objects=(
                SceneObject(task.obj_name, item),
                SceneObject(task.vessel_name, vessel, role=ROLE_VESSEL),
            ),
            containers=(Container(task.cont_name, plate),),
            suite=Suite.TWO_STEP,
        )

    if scenario is not None:
        angle, radius = wrap_grid()[scenario.init_index]
        radius += rng.uniform(-0.01, 0.01)
    else:
        angle = rng.uniform(*WRAP_ANGLE_RANGE)
        radius = rng.uniform(*WRAP_RADIUS_RANGE)
    chain = _make_chain(angle, radius)
    return WorldState(
        gripper_pos=home,
        gripper_aperture=1.0,
        objects=(SceneObject(task.obj_name, chain[0].copy()),),
        chain=chain,
        center_pos=np.zeros(3),
        suite=Suite.WRAP,
        wrap_direction=task.direction_sign,
    )


def _xy_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def _nearest_graspable(objects: Sequence[SceneObject], pos: np.ndarray) -> Optional[int]:
    # Strict comparison keeps the earlier object on ties
    best, best_dist = None, GRASP_RADIUS
    for index, obj in enumerate(objects):
        if obj.resting_on is not None:
            continue
        dist = float(np.linalg.norm(obj.pos - pos))
        if dist <= GRASP_RADIUS and (best is None or dist < best_dist):
            best, best_dist = index, dist
    return best


def _settle(objects: Sequence[SceneObject], index: int, pos: np.ndarray) -> SceneObject:
    obj = objects[index]
    if obj.role == ROLE_OBJECT:
        for other in objects:
            if other.role == ROLE_VESSEL and _xy_distance(other.pos, pos) <= CONTAINER_RADIUS:
                return replace(obj, grasped=False, resting_on=other.name,
                               pos=other.pos + np.array([0.0, 0.0, VESSEL_HEIGHT]))
    return replace(obj, grasped=False, pos=np.array([pos[0], pos[1], 0.0]))


def _carry_contents(objects: List[SceneObject]) -> List[SceneObject]:
    by_name = {obj.name: obj for obj in objects}
    return [
        replace(obj, pos=by_name[obj.resting_on].pos + np.array([0.0, 0.0, VESSEL_HEIGHT]))
        if obj.resting_on is not None else obj
        for obj in objects
    ]


def signed_angle(p0: np.ndarray, p1: np.ndarray, center: np.ndarray) -> float:
    """Counterclockwise angle swept from p0 to p1 about center in the xy plane"""
    v0 = np.asarray(p0[:2], dtype=np.float64) - center[:2]
    v1 = np.asarray(p1[:2], dtype=np.float64) - center[:2]
    if np.linalg.norm(v0) < 1e-12 or np.linalg.norm(v1) < 1e-12:
        return 0.0
    cross = v0[0] * v1[1] - v0[1] * v1[0]
    dot = v0[0] * v1[0] + v0[1] * v1[1]
    return float(math.atan2(cross, dot))


def wrap_angle(path: np.ndarray, center: Sequence[float]) -> float:
    """Accumulated signed angle of a first-link path (positions over time) about center"""
    path = np.asarray(path, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    if path.shape[0] < 2:
        raise ValueError("wrap_angle needs at least 2 recorded positions")
    return float(sum(signed_angle(path[i - 1], path[i], center) for i in range(1, path.shape[0])))


def follow_chain(
    chain: np.ndarray,
    head: np.ndarray,
    center: Optional[np.ndarray],
    link_length: float = LINK_LENGTH,
    cylinder_radius: float = CYLINDER_RADIUS,
) -> np.ndarray:
    """Follow-the-leader update: each link keeps link_length from its predecessor"""
    updated = chain.copy()
    updated[0] = head
    for i in range(1, len(updated)):
        link = _snap(updated[i] - updated[i - 1], chain[i] - chain[i - 1])
        updated[i] = updated[i - 1] + link * link_length
        if center is not None:
            radial = updated[i, :2] - center[:2]
            norm = float(np.linalg.norm(radial))
            if norm < cylinder_radius:
                radial = radial / norm if norm > 1e-12 else np.array([1.0, 0.0])
                updated[i, :2] = center[:2] + radial * cylinder_radius
                updated[i] = updated[i - 1] + _snap(updated[i] - updated[i - 1], link) * link_length
    return updated


def _snap(direction: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(direction))
    if norm < 1e-12:
        direction, norm = fallback, float(np.linalg.norm(fallback))
    return direction / norm


def step(state: WorldState, action: Sequence[float], domain: DomainConfig) -> WorldState:
    """Advance one control step; out-of-range and non-finite inputs are clipped"""
    action = np.nan_to_num(np.asarray(action, dtype=np.float64), nan=0.0, posinf=1.0, neginf=-1.0)
    motion = np.clip(action[:3], -1.0, 1.0)
    gripper = float(np.clip(action[3], -1.0, 0.0))

    pos = np.clip(state.gripper_pos + domain.lag * domain.action_scale * motion, WORKSPACE_LOW, WORKSPACE_HIGH)
    aperture_target = 1.0 + gripper
    aperture = float(state.gripper_aperture + np.clip(
        aperture_target - state.gripper_aperture, -domain.aperture_rate, domain.aperture_rate))

    objects = list(state.objects)
    held = state.grasped_index()
    if held is None and aperture < GRASP_THRESHOLD:
        held = _nearest_graspable(objects, pos)
        if held is not None:
            objects[held] = replace(objects[held], grasped=True, resting_on=None)
    elif held is not None and aperture >= GRASP_THRESHOLD:
        objects[held] = _settle(objects, held, pos)
        held = None
    if held is not None:
        objects[held] = replace(objects[held], pos=pos.copy())
    objects = _carry_contents(objects)

    chain, wound = state.chain, state.wound
    if chain is not None:
        chain = follow_chain(state.chain, objects[0].pos, state.center_pos)
        wound += signed_angle(state.chain[0], chain[0], state.center_pos)

    return replace(
        state,
        gripper_pos=pos,
        gripper_aperture=aperture,
        objects=tuple(objects),
        chain=chain,
        t=state.t + 1,
        wound=wound,
    )


def proprio(state: WorldState, domain: DomainConfig) -> np.ndarray:
    """Gripper position and aperture, padded with phase features when proprio_dim is 22"""
    base = np.append(state.gripper_pos, state.gripper_aperture)
    if domain.proprio_dim == 4:
        return base.astype(np.float32)
    phases = [f(k * math.pi * state.gripper_pos / 0.4) for k in (1, 2, 3) for f in (np.sin, np.cos)]
    return np.concatenate([base, *phases]).astype(np.float32)


def item_in_vessel(state: WorldState) -> bool:
    item = state.objects[0]
    return not item.grasped and item.resting_on == state.objects[1].name


def vessel_on_plate(state: WorldState) -> bool:
    vessel = state.objects[1]
    return not vessel.grasped and _xy_distance(vessel.pos, state.containers[0].pos) <= CONTAINER_RADIUS


def success(history: Sequence[WorldState], suite: Suite) -> Tuple[bool, int]:
    """Return (success, subtasks completed) for a complete episode history"""
    if not history:
        return False, 0
    final = history[-1]

    if suite == Suite.STACK:
        item = final.objects[0]
        placed = not item.grasped and _xy_distance(item.pos, final.containers[0].pos) <= CONTAINER_RADIUS
        ok = placed and final.gripper_open
        return ok, int(ok)

    if suite == Suite.TWO_STEP:
        if not any(item_in_vessel(state) for state in history):
            return False, 0
        ok = item_in_vessel(final) and vessel_on_plate(final) and final.gripper_open
        return ok, 2 if ok else 1

    grasp_end = final.objects[0]
    ok = (final.wound * final.wrap_direction >= WRAP_SUCCESS_ANGLE
          and not grasp_end.grasped and final.gripper_open)
    return ok, int(ok)
