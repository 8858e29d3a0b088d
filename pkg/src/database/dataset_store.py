# Standard library imports
import json
import logging
import os
import shutil
from datetime import datetime, timezone
UTC = timezone.utc  # datetime.UTC alias is 3.11+
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import (
    ACTION_DIM,
    DatasetFormatError,
    DatasetManifest,
    Domain,
    Frame,
    Suite,
    Trajectory,
    ValidationError,
    validate_trajectory,
)
from src.utils.file_helpers import resolve_path

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
RECORD_FILE = 'record.json'
FRAMES_FILE = 'frames.rgb8'
PROPRIO_FILE = 'proprio.f32le'
ACTIONS_FILE = 'actions.f32le'
STAGES_FILE = 'stages.i32le'
TRAJECTORY_FILES = (RECORD_FILE, FRAMES_FILE, PROPRIO_FILE, ACTIONS_FILE, STAGES_FILE)

PathLike = Union[str, os.PathLike]


def trajectory_dir_name(index: int) -> str:
    return f"traj_{index:05d}"


def _dump_json(data: dict) -> bytes:
    return (json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode('utf-8')


def check_manifest(dataset: Sequence[Trajectory], manifest: DatasetManifest) -> None:
    """Raise a ValidationError naming the first manifest field that disagrees with the data"""
    if manifest.trajectory_count != len(dataset):
        raise ValidationError(
            f"manifest says {manifest.trajectory_count}, dataset has {len(dataset)}",
            field='trajectory_count',
        )
    if manifest.format_version < 1:
        raise ValidationError("format_version starts at 1", field='format_version')

    for index, trajectory in enumerate(dataset):
        trajectory_id = trajectory_dir_name(index)
        if trajectory.domain != manifest.domain:
            raise ValidationError(f"{trajectory.domain.value} != {manifest.domain.value}", field='domain', trajectory_id=trajectory_id)
        if trajectory.suite != manifest.suite:
            raise ValidationError(f"{trajectory.suite.value} != {manifest.suite.value}", field='suite', trajectory_id=trajectory_id)
        if trajectory.task_id not in manifest.task_ids:
            raise ValidationError(f"task '{trajectory.task_id}' not listed", field='task_ids', trajectory_id=trajectory_id)
        if trajectory.frames:
            frame = trajectory.frames[0]
            if tuple(frame.image.shape) != tuple(manifest.image_shape):
                raise ValidationError(f"{frame.image.shape} != {tuple(manifest.image_shape)}", field='image_shape', trajectory_id=trajectory_id)
            if frame.proprio.shape[0] != manifest.proprio_dim:
                raise ValidationError(f"{frame.proprio.shape[0]} != {manifest.proprio_dim}", field='proprio_dim', trajectory_id=trajectory_id)


def save_dataset(dataset: Sequence[Trajectory], manifest: DatasetManifest, path: PathLike) -> None:
    """Write a dataset in the archive layout.

    Data files are pure functions of the trajectories; the only timestamp
    lives in manifest.json.
    """
    check_manifest(dataset, manifest)
    for index, trajectory in enumerate(dataset):
        violations = validate_trajectory(trajectory)
        if violations:
            raise ValidationError(str(violations[0]), field=violations[0].invariant, trajectory_id=trajectory_dir_name(index))

    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"Cannot write dataset to {root}: {e}") from e

    stale = [p for p in root.iterdir() if p.is_dir() and p.name.startswith('traj_')]
    for directory in stale:
        shutil.rmtree(directory)
    if stale:
        logger.info(f"Removed {len(stale)} trajectories of an earlier dataset in {root}")

    for index, trajectory in enumerate(dataset):
        _write_trajectory(root / trajectory_dir_name(index), trajectory)

    manifest_json = manifest.to_json()
    manifest_json['created_at'] = manifest.created_at or datetime.now(UTC).isoformat()
    (root / MANIFEST_FILE).write_bytes(_dump_json(manifest_json))
    logger.info(f"Saved {len(dataset)} trajectories to {root}")


def _write_trajectory(directory: Path, trajectory: Trajectory) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    length = len(trajectory.frames)

    if length:
        images = np.stack([f.image for f in trajectory.frames]).astype(np.uint8, copy=False)
        proprio = np.stack([f.proprio for f in trajectory.frames]).astype('<f4')
        actions = np.stack([
            f.action if f.action is not None else np.full(ACTION_DIM, np.nan)
            for f in trajectory.frames
        ]).astype('<f4')
        image_shape = list(images.shape[1:])
        proprio_dim = int(proprio.shape[1])
    else:
        images = np.zeros((0,), dtype=np.uint8)
        proprio = np.zeros((0,), dtype='<f4')
        actions = np.zeros((0,), dtype='<f4')
        image_shape = []
        proprio_dim = 0
    stages = np.array([f.stage for f in trajectory.frames], dtype='<i4')

    (directory / FRAMES_FILE).write_bytes(np.ascontiguousarray(images).tobytes())
    (directory / PROPRIO_FILE).write_bytes(np.ascontiguousarray(proprio).tobytes())
    (directory / ACTIONS_FILE).write_bytes(np.ascontiguousarray(actions).tobytes())
    (directory / STAGES_FILE).write_bytes(stages.tobytes())

    record = {
        'length': length,
        'image_shape': image_shape,
        'proprio_dim': proprio_dim,
        'task_id': trajectory.task_id,
        'instruction': trajectory.task_instruction,
        'domain': trajectory.domain.value,
        'suite': trajectory.suite.value,
        'seed': int(trajectory.seed),
        'success': bool(trajectory.success),
        'descriptions': [f.description for f in trajectory.frames],
    }
    (directory / RECORD_FILE).write_bytes(_dump_json(record))


def load_dataset(path: PathLike) -> Tuple[List[Trajectory], DatasetManifest]:
    """Read and re-validate a dataset written by save_dataset"""
    root = Path(path)
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.exists():
        raise DatasetFormatError(f"{manifest_path} not found", field=MANIFEST_FILE)
    manifest = DatasetManifest.from_json(json.loads(manifest_path.read_text(encoding='utf-8')))

    directories = sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith('traj_'))
    if len(directories) != manifest.trajectory_count:
        raise DatasetFormatError(
            f"manifest says {manifest.trajectory_count}, found {len(directories)} trajectory directories",
            field='trajectory_count',
        )

    dataset = []
    for index in range(manifest.trajectory_count):
        trajectory_id = trajectory_dir_name(index)
        directory = root / trajectory_id
        if not directory.is_dir():
            raise DatasetFormatError("trajectory directory missing", field=trajectory_id, trajectory_id=trajectory_id)
        trajectory = _read_trajectory(directory, trajectory_id)
        violations = validate_trajectory(trajectory)
        if violations:
            raise ValidationError(str(violations[0]), field=violations[0].invariant, trajectory_id=trajectory_id)
        dataset.append(trajectory)

    check_manifest(dataset, manifest)
    return dataset, manifest


def _read_array(directory: Path, name: str, dtype: str, expected: int, trajectory_id: str) -> np.ndarray:
    file_path = directory / name
    if not file_path.exists():
        raise DatasetFormatError("file missing", field=name, trajectory_id=trajectory_id)
    raw = file_path.read_bytes()
    array = np.frombuffer(raw, dtype=dtype)
    if array.size != expected or len(raw) != expected * np.dtype(dtype).itemsize:
        raise DatasetFormatError(
            f"length mismatch: expected {expected} values, found {len(raw) / np.dtype(dtype).itemsize:g}",
            field=name,
            trajectory_id=trajectory_id,
        )
    return array


def _read_trajectory(directory: Path, trajectory_id: str) -> Trajectory:
    record_path = directory / RECORD_FILE
    if not record_path.exists():
        raise DatasetFormatError("file missing", field=RECORD_FILE, trajectory_id=trajectory_id)
    record = json.loads(record_path.read_text(encoding='utf-8'))
    try:
        return _trajectory_from_record(directory, record, trajectory_id)
    except KeyError as e:
        raise DatasetFormatError("missing record entry", field=str(e.args[0]), trajectory_id=trajectory_id) from e


def _trajectory_from_record(directory: Path, record: dict, trajectory_id: str) -> Trajectory:
    length = int(record['length'])
    descriptions = record.get('descriptions') or [None] * length
    if len(descriptions) != length:
        raise DatasetFormatError("length mismatch", field='descriptions', trajectory_id=trajectory_id)

    frames: List[Frame] = []
    if length:
        height, width, channels = (int(v) for v in record['image_shape'])
        proprio_dim = int(record['proprio_dim'])
        images = _read_array(directory, FRAMES_FILE, 'u1', length * height * width * channels, trajectory_id)
        proprio = _read_array(directory, PROPRIO_FILE, '<f4', length * proprio_dim, trajectory_id)
        actions = _read_array(directory, ACTIONS_FILE, '<f4', length * ACTION_DIM, trajectory_id)
        stages = _read_array(directory, STAGES_FILE, '<i4', length, trajectory_id)

        images = images.reshape(length, height, width, channels)
        proprio = proprio.reshape(length, proprio_dim).astype(np.float32)
        actions = actions.reshape(length, ACTION_DIM).astype(np.float32)
        for t in range(length):
            action = None if np.all(np.isnan(actions[t])) else actions[t].copy()
            frames.append(Frame(
                image=images[t].copy(),
                proprio=proprio[t].copy(),
                action=action,
                stage=int(stages[t]),
                description=descriptions[t],
            ))
    else:
        for name in TRAJECTORY_FILES:
            if not (directory / name).exists():
                raise DatasetFormatError("file missing", field=name, trajectory_id=trajectory_id)

    return Trajectory(
        frames=tuple(frames),
        task_id=record['task_id'],
        task_instruction=record['instruction'],
        domain=Domain(record['domain']),
        suite=Suite(record['suite']),
        seed=int(record['seed']),
        success=bool(record['success']),
    )


class DatasetStore:
    """Resolves dataset paths against S2L_DATA_ROOT and reads/writes archives"""

    def __init__(self, data_root: Optional[str] = None):
        self.data_root = Path(data_root or os.getenv('S2L_DATA_ROOT', '.'))

    def resolve(self, path: PathLike) -> Path:
        return resolve_path(path, self.data_root)

    def save(self, dataset: Sequence[Trajectory], manifest: DatasetManifest, path: PathLike) -> Path:
        target = self.resolve(path)
        save_dataset(dataset, manifest, target)
        return target

    def load(self, path: PathLike) -> Tuple[List[Trajectory], DatasetManifest]:
        return load_dataset(self.resolve(path))
