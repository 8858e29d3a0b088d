# Standard library imports
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np

FORMAT_VERSION = 1
ACTION_DIM = 4


class Domain(Enum):
    SOURCE = "source"
    TARGET = "target"


class Suite(Enum):
    STACK = "stack"
    TWO_STEP = "two_step"
    WRAP = "wrap"


# Number of full-granularity stage templates per task suite
STAGE_COUNTS = {
    Suite.STACK: 7,
    Suite.TWO_STEP: 14,
    Suite.WRAP: 10,
}


class ValidationError(ValueError):
    """Raised when data violates a record invariant"""

    def __init__(self, message: str, field: Optional[str] = None, trajectory_id: Optional[str] = None):
        self.field = field
        self.trajectory_id = trajectory_id
        prefix = []
        if trajectory_id is not None:
            prefix.append(f"trajectory {trajectory_id}")
        if field is not None:
            prefix.append(f"field '{field}'")
        super().__init__(f"{', '.join(prefix)}: {message}" if prefix else message)


class DatasetFormatError(ValidationError):
    """Raised when an on-disk dataset does not match the archive format"""


@dataclass(frozen=True)
class Frame:
    image: np.ndarray
    proprio: np.ndarray
    action: Optional[np.ndarray]
    stage: int
    description: Optional[str] = None


@dataclass(frozen=True)
class Trajectory:
    frames: Tuple[Frame, ...]
    task_id: str
    task_instruction: str
    domain: Domain
    suite: Suite
    seed: int
    success: bool

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def images(self) -> np.ndarray:
        return np.stack([f.image for f in self.frames])

    @property
    def actions(self) -> np.ndarray:
        return np.stack([f.action for f in self.frames])

    @property
    def stages(self) -> np.ndarray:
        return np.array([f.stage for f in self.frames], dtype=np.int32)

    @property
    def descriptions(self) -> List[Optional[str]]:
        return [f.description for f in self.frames]


@dataclass
class DatasetManifest:
    dataset_id: str
    domain: Domain
    suite: Suite
    task_ids: List[str]
    trajectory_count: int
    image_shape: Tuple[int, int, int]
    proprio_dim: int
    control_hz: float
    created_seed: int
    format_version: int = FORMAT_VERSION
    created_at: Optional[str] = None

    def to_json(self) -> dict:
        return {
            'dataset_id': self.dataset_id,
            'domain': self.domain.value,
            'suite': self.suite.value,
            'task_ids': list(self.task_ids),
            'trajectory_count': self.trajectory_count,
            'image_shape': list(self.image_shape),
            'proprio_dim': self.proprio_dim,
            'control_hz': self.control_hz,
            'created_seed': self.created_seed,
            'format_version': self.format_version,
            'created_at': self.created_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DatasetManifest":
        try:
            return cls(
                dataset_id=data['dataset_id'],
                domain=Domain(data['domain']),
                suite=Suite(data['suite']),
                task_ids=list(data['task_ids']),
                trajectory_count=int(data['trajectory_count']),
                image_shape=tuple(int(v) for v in data['image_shape']),
                proprio_dim=int(data['proprio_dim']),
                control_hz=float(data['control_hz']),
                created_seed=int(data['created_seed']),
                format_version=int(data['format_version']),
                created_at=data.get('created_at'),
            )
        except KeyError as e:
            raise DatasetFormatError("missing manifest entry", field=str(e.args[0]))
        except ValueError as e:
            raise DatasetFormatError(str(e), field="manifest")


@dataclass(frozen=True)
class Violation:
    frame_index: Optional[int]
    invariant: str
    message: str

    def __str__(self) -> str:
        where = f"frame {self.frame_index}" if self.frame_index is not None else "trajectory"
        return f"{where}: {self.invariant}: {self.message}"


def validate_trajectory(trajectory: Trajectory, check_monotonic: bool = False) -> List[Violation]:
    """Check every Frame/Trajectory invariant; violations are returned, never raised"""
    violations: List[Violation] = []
    if not trajectory.frames:
        return violations

    first = trajectory.frames[0]
    image_shape = getattr(first.image, 'shape', None)
    proprio_dim = int(np.asarray(first.proprio).shape[0]) if np.ndim(first.proprio) == 1 else None
    stage_count = STAGE_COUNTS[trajectory.suite]

    for index, frame in enumerate(trajectory.frames):
        image = frame.image
        if not isinstance(image, np.ndarray) or image.dtype != np.uint8:
            violations.append(Violation(index, "image_dtype", "image must be an unsigned 8-bit array"))
        elif image.ndim != 3 or image.shape[2] != 3:
            violations.append(Violation(index, "image_shape", f"expected HxWx3, got {image.shape}"))
        elif image.shape != image_shape:
            violations.append(Violation(index, "image_shape", f"{image.shape} differs from {image_shape}"))

        proprio = np.asarray(frame.proprio)
        if proprio.dtype != np.float32 or proprio.ndim != 1:
            violations.append(Violation(index, "proprio_dtype", "proprio must be a float32 vector"))
        elif proprio.shape[0] != proprio_dim:
            violations.append(Violation(index, "proprio_dim", f"{proprio.shape[0]} differs from {proprio_dim}"))

        if frame.action is not None:
            action = np.asarray(frame.action)
            if action.shape != (ACTION_DIM,):
                violations.append(Violation(index, "action_shape", f"expected ({ACTION_DIM},), got {action.shape}"))
            elif not np.all(np.isfinite(action)):
                violations.append(Violation(index, "action_finite", "action contains non-finite values"))
            elif not (-1.0 <= float(action[3]) <= 0.0):
                violations.append(Violation(index, "gripper_range", f"gripper action {float(action[3])} outside [-1, 0]"))

        if not isinstance(frame.stage, (int, np.integer)) or not (0 <= int(frame.stage) < stage_count):
            violations.append(Violation(index, "stage_range", f"stage {frame.stage} outside [0, {stage_count})"))

    if check_monotonic:
        violations.extend(check_stage_monotonic(trajectory.stages))
    return violations


def check_stage_monotonic(stages: Sequence[int]) -> List[Violation]:
    """Stage sequences of noise-free pick-and-place rollouts never go backwards"""
    return [
        Violation(i, "stage_monotonic", f"stage {stages[i]} follows {stages[i - 1]}")
        for i in range(1, len(stages))
        if stages[i] < stages[i - 1]
    ]
