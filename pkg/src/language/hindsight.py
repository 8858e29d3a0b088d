"""Stage labels recovered after collection from what the camera shows.

Object and container positions come from palette-keyed colour blobs; the
gripper position and open/closed bit come from a small CNN trained on frames
whose proprioception is known. The labeler replays the scripted branch logic
on those estimates.
"""
# Standard library imports
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

# Local application imports
from src.database.records import Suite, Trajectory
from src.language.templates import describe_stage
from src.models.checkpoint import load_checkpoint, load_module, module_tensors, save_checkpoint
from src.models.encoder import SpatialSoftmax, group_norm, images_to_tensor
from src.scripted.policies import (
    DIST_THRESH,
    HOVER_RADIUS,
    PICK_PLACE_STAGES,
    WRAP_DONE_ANGLE,
    WRAPPED_ANGLE,
    PickPlaceStage,
    WrapStage,
    quadrant_stage,
)
from src.sim.domains import DomainConfig
from src.sim.render import project, unproject
from src.sim.tasks import TaskSpec
from src.sim.world import (
    CONTAINER_RADIUS,
    DROP_HEIGHT,
    GRASP_THRESHOLD,
    LIFT_HEIGHT,
    signed_angle,
)

logger = logging.getLogger(__name__)

# Targets are divided by this so regression outputs stay near unit scale
POSITION_SCALE = 0.35
# Held-object test radius in pixels at 64x64, scaled with image size
HOLD_RADIUS_PX = 3.0
POSITION_TOLERANCE = 0.01
PREDICT_CHUNK = 256


class ColorBlobDetector:
    """Palette-keyed centroid extraction for a known domain"""

    def __init__(self, domain: DomainConfig):
        self.domain = domain

    def detect(self, image: np.ndarray, role: str) -> Optional[np.ndarray]:
        """Continuous (col, row) centroid of pixels drawn in the role's colour, or None"""
        color = np.asarray(self.domain.color(role), dtype=np.uint8)
        mask = np.all(np.asarray(image) == color, axis=-1)
        if not mask.any():
            return None
        rows, cols = np.nonzero(mask)
        return np.array([cols.mean() + 0.5, rows.mean() + 0.5])

    def locate_on_plane(self, image: np.ndarray, role: str, height: float = 0.0) -> Optional[np.ndarray]:
        pixel = self.detect(image, role)
        if pixel is None:
            return None
        return unproject(pixel[0], pixel[1], height, self.domain.view, self.domain.image_size)

    def to_pixel(self, point: Sequence[float]) -> np.ndarray:
        pixels, _ = project(np.asarray(point, dtype=np.float64), self.domain.view, self.domain.image_size)
        return pixels[0]


class GripperStatePredictor(nn.Module):
    """Small keypoint CNN: image -> gripper (x, y, z) and an open/closed logit"""

    def __init__(self, image_size: int = 64, channels: Tuple[int, int, int] = (16, 32, 32)):
        super().__init__()
        self.image_size = image_size
        self.channels = tuple(channels)
        c0, c1, c2 = self.channels
        self.conv = nn.Sequential(
            nn.Conv2d(3, c0, 5, stride=2, padding=2),
            group_norm(c0, 8),
            nn.ReLU(),
            nn.Conv2d(c0, c1, 3, padding=1),
            group_norm(c1, 8),
            nn.ReLU(),
            nn.Conv2d(c1, c2, 3, padding=1),
        )
        size = (image_size - 1) // 2 + 1
        self.keypoints = SpatialSoftmax(size, size)
        self.out = nn.Linear(2 * c2, 4)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.keypoints(self.conv(x)))

    @torch.no_grad()
    def predict(self, images: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(N, 3) metric gripper positions and (N,) open flags for uint8 images"""
        array = np.asarray(images)
        if array.ndim == 3:
            array = array[None]
        was_training = self.training
        self.eval()
        outputs = [self(images_to_tensor(array[i:i + PREDICT_CHUNK])) for i in range(0, len(array), PREDICT_CHUNK)]
        self.train(was_training)
        out = torch.cat(outputs).numpy().astype(np.float64)
        return out[:, :3] * POSITION_SCALE, out[:, 3] > 0.0


@dataclass
class GripperPredictorReport:
    train_frames: int
    heldout_frames: int
    accuracy: float
    position_error: float

    def to_json(self) -> dict:
        return {
            'train_frames': self.train_frames,
            'heldout_frames': self.heldout_frames,
            'accuracy': self.accuracy,
            'position_error': self.position_error,
        }


def _gripper_targets(trajectories: Sequence[Trajectory]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    images = np.concatenate([t.images for t in trajectories])
    proprio = np.concatenate([np.stack([f.proprio for f in t.frames]) for t in trajectories]).astype(np.float64)
    return images, proprio[:, :3], proprio[:, 3] >= GRASP_THRESHOLD


def train_gripper_predictor(
    trajectories: Sequence[Trajectory],
    epochs: int = 10,
    seed: int = 0,
    holdout_fraction: float = 0.1,
    batch_size: int = 64,
    lr: float = 1e-3,
) -> Tuple[GripperStatePredictor, GripperPredictorReport]:
    """Fit the predictor on proprio-labelled frames; the last trajectories are held out for the report"""
    if len(trajectories) < 2:
        raise ValueError("need at least 2 trajectories to hold one out")
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    n_hold = min(max(1, int(round(len(trajectories) * holdout_fraction))), len(trajectories) - 1)
    train_set, held_set = trajectories[:-n_hold], trajectories[-n_hold:]

    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    images, positions, opened = _gripper_targets(train_set)
    predictor = GripperStatePredictor(image_size=images.shape[1])
    optimizer = torch.optim.Adam(predictor.parameters(), lr=lr)
    x_all = images_to_tensor(images)
    y_pos = torch.as_tensor(positions / POSITION_SCALE, dtype=torch.float32)
    y_open = torch.as_tensor(opened, dtype=torch.float32)

    predictor.train()
    for epoch in range(epochs):
        order = torch.randperm(len(x_all), generator=generator)
        total = 0.0
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            out = predictor(x_all[idx])
            loss = F.mse_loss(out[:, :3], y_pos[idx]) + F.binary_cross_entropy_with_logits(out[:, 3], y_open[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss) * len(idx)
        logger.debug(f"gripper predictor epoch {epoch + 1}/{epochs} loss {total / len(order):.5f}")

    held_images, held_positions, held_open = _gripper_targets(held_set)
    predicted_positions, predicted_open = predictor.predict(held_images)
    report = GripperPredictorReport(
        train_frames=len(x_all),
        heldout_frames=len(held_images),
        accuracy=float(np.mean(predicted_open == held_open)),
        position_error=float(np.mean(np.linalg.norm(predicted_positions - held_positions, axis=1))),
    )
    logger.info(f"Gripper predictor: held-out accuracy {report.accuracy:.3f}, "
                f"position error {report.position_error * 100:.2f} cm")
    return predictor, report


def save_gripper_predictor(path: Union[str, Path], predictor: GripperStatePredictor,
                           report: Optional[GripperPredictorReport] = None) -> Path:
    header = {
        'kind': 'gripper_predictor',
        'image_size': predictor.image_size,
        'channels': list(predictor.channels),
        'report': report.to_json() if report else None,
    }
    return save_checkpoint(path, header, module_tensors('predictor', predictor))


def load_gripper_predictor(path: Union[str, Path]) -> GripperStatePredictor:
    header, tensors = load_checkpoint(path)
    if header.get('kind') != 'gripper_predictor':
        raise ValueError(f"{path} is not a gripper predictor checkpoint")
    predictor = GripperStatePredictor(header['image_size'], tuple(header['channels']))
    load_module(predictor, 'predictor', tensors)
    return predictor


class _Replay:
    """Per-episode latch state mirroring the scripted controllers"""

    def __init__(self, task: TaskSpec, detector: ColorBlobDetector, dist_thresh: float, tolerance: float):
        self.task = task
        self.detector = detector
        self.reach = dist_thresh + tolerance
        size = detector.domain.image_size
        self.hold_px = HOLD_RADIUS_PX * size / 64.0
        self.vessel_px = CONTAINER_RADIUS * 0.8 * size / (2.0 * detector.domain.view.scale)
        self.place_attempted = False
        self.was_held = False
        self.phase = 0
        self.cache = {}
        self.swept = 0.0
        self.last_gripper: Optional[np.ndarray] = None

    def static(self, image: np.ndarray, role: str, height: float = 0.0) -> Optional[np.ndarray]:
        """Position of something that stays put until grasped; first sighting wins"""
        if role not in self.cache:
            found = self.detector.locate_on_plane(image, role, height)
            if found is None:
                return None
            self.cache[role] = found
        return self.cache[role]

    def held(self, image: np.ndarray, role: str, gripper: np.ndarray, opened: bool) -> Optional[bool]:
        pixel = self.detector.detect(image, role)
        if pixel is None:
            return None
        return (not opened) and bool(np.linalg.norm(pixel - self.detector.to_pixel(gripper)) <= self.hold_px)

    def approach(self, gripper: np.ndarray, pick: np.ndarray) -> int:
        if np.linalg.norm(gripper - pick) > self.reach:
            xy = float(np.hypot(*(pick[:2] - gripper[:2])))
            return PickPlaceStage.REACH if xy > HOVER_RADIUS else PickPlaceStage.DESCEND
        return PickPlaceStage.CLOSE

    def pick_place(self, image: np.ndarray, gripper: np.ndarray, opened: bool,
                   role: str, drop: np.ndarray) -> Optional[int]:
        held = self.held(image, role, gripper, opened)
        if held is None:
            return None
        if self.place_attempted:
            return PickPlaceStage.DONE
        if self.was_held and not held:
            self.place_attempted = True
            return PickPlaceStage.DONE
        if not held:
            pick = self.static(image, role)
            if pick is None:
                return None
            return self.approach(gripper, pick)
        self.was_held = True
        if gripper[2] < LIFT_HEIGHT:
            return PickPlaceStage.LIFT
        if np.linalg.norm(gripper - drop) > self.reach:
            return PickPlaceStage.CARRY
        self.place_attempted = True
        return PickPlaceStage.RELEASE

    def stack(self, image: np.ndarray, gripper: np.ndarray, opened: bool) -> Optional[int]:
        container = self.static(image, self.task.cont_name)
        if container is None:
            return None
        drop = container + np.array([0.0, 0.0, DROP_HEIGHT])
        return self.pick_place(image, gripper, opened, self.task.obj_name, drop)

    def two_step(self, image: np.ndarray, gripper: np.ndarray, opened: bool) -> Optional[int]:
        lift = np.array([0.0, 0.0, DROP_HEIGHT])
        vessel = self.static(image, self.task.vessel_name)
        plate = self.static(image, self.task.cont_name)
        if vessel is None or plate is None:
            return None
        phase = self.phase
        if phase == 0:
            stage = self.pick_place(image, gripper, opened, self.task.obj_name, vessel + lift)
        else:
            stage = self.pick_place(image, gripper, opened, self.task.vessel_name, plate + lift)
        if stage is None:
            return None
        if phase == 0 and self.was_held and opened and self._item_in_vessel(image):
            self.phase = 1
            self.place_attempted = False
            self.was_held = False
        return stage + PICK_PLACE_STAGES * phase

    def _item_in_vessel(self, image: np.ndarray) -> bool:
        item = self.detector.detect(image, self.task.obj_name)
        vessel = self.detector.detect(image, self.task.vessel_name)
        if item is None or vessel is None:
            return False
        return bool(np.linalg.norm(item - vessel) <= self.vessel_px)

    def wrap(self, image: np.ndarray, gripper: np.ndarray, opened: bool) -> Optional[int]:
        center = self.static(image, 'cylinder')
        if center is None:
            return None
        held = self.held(image, self.task.obj_name, gripper, opened)
        if held is None:
            return None
        sign = self.task.direction_sign
        if held and self.last_gripper is not None:
            self.swept += signed_angle(self.last_gripper, gripper, center)
        self.last_gripper = gripper if held else None

        wrapped = WrapStage.WRAPPED if self.swept * sign >= WRAPPED_ANGLE else WrapStage.UNWRAPPED
        if self.place_attempted:
            return wrapped
        if self.was_held and not held:
            self.place_attempted = True
            return wrapped
        if not held:
            pick = self.static(image, self.task.obj_name)
            if pick is None:
                return None
            return self.approach(gripper, pick)
        self.was_held = True
        if gripper[2] < LIFT_HEIGHT:
            return WrapStage.LIFT
        if self.swept * sign > WRAP_DONE_ANGLE:
            self.place_attempted = True
            return WrapStage.WRAPPED
        return quadrant_stage(gripper[:2] - center[:2])


def hindsight_label(
    images: np.ndarray,
    task: TaskSpec,
    domain: DomainConfig,
    predictor: GripperStatePredictor,
    detector: Optional[ColorBlobDetector] = None,
    dist_thresh: float = DIST_THRESH,
    position_tolerance: float = POSITION_TOLERANCE,
) -> np.ndarray:
    """Per-frame stages for one episode's images.

    A frame where a needed blob is not found keeps the previous frame's stage
    (stage 0 at the start of the episode).
    """
    detector = detector or ColorBlobDetector(domain)
    images = np.asarray(images)
    positions, opened = predictor.predict(images)
    replay = _Replay(task, detector, dist_thresh, position_tolerance)
    label = {Suite.STACK: replay.stack, Suite.TWO_STEP: replay.two_step, Suite.WRAP: replay.wrap}[task.suite]

    stages: List[int] = []
    previous = 0
    misses = 0
    for image, gripper, is_open in zip(images, positions, opened):
        stage = label(image, gripper, bool(is_open))
        if stage is None:
            misses += 1
            stage = previous
        stages.append(int(stage))
        previous = int(stage)
    if misses:
        logger.debug(f"{misses} of {len(images)} frames carried their stage forward")
    return np.array(stages, dtype=np.int32)


def relabel(trajectory: Trajectory, stages: Sequence[int], task: TaskSpec) -> Trajectory:
    """Copy of a trajectory with stages and descriptions replaced"""
    if len(stages) != len(trajectory):
        raise ValueError(f"{len(stages)} stages for {len(trajectory)} frames")
    frames = tuple(
        replace(frame, stage=int(stage), description=describe_stage(int(stage), task))
        for frame, stage in zip(trajectory.frames, stages)
    )
    return replace(trajectory, frames=frames)


def stage_agreement(predicted: Sequence[int], truth: Sequence[int]) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or truth.size == 0:
        raise ValueError("stage sequences must be non-empty and equally long")
    return float(np.mean(predicted == truth))
