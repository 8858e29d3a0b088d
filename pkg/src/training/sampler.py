"""Multitask batch composition: m tasks drawn uniformly, a fixed number of transitions from each."""
# Standard library imports
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import Domain, Trajectory
from src.services.embedding_service import EmbeddingService

logger = logging.getLogger(__name__)

DOMAIN_INDEX = {Domain.SOURCE: 0, Domain.TARGET: 1}


@dataclass(frozen=True)
class BatchSpec:
    tasks_per_batch: int = 4
    samples_per_task: int = 57

    def __post_init__(self):
        if self.tasks_per_batch < 1 or self.samples_per_task < 1:
            raise ValueError(f"batch spec entries must be positive, got {self}")

    @property
    def batch_size(self) -> int:
        return self.tasks_per_batch * self.samples_per_task


@dataclass
class TaskPool:
    """Every action-labelled frame of one (task, domain) pair"""
    task_id: str
    domain: Domain
    instruction: str
    images: np.ndarray
    proprio: np.ndarray
    actions: np.ndarray
    task_embedding: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def key(self) -> str:
        return f"{self.domain.value}/{self.task_id}"


@dataclass
class Batch:
    images: np.ndarray
    proprio: np.ndarray
    actions: np.ndarray
    task_embeddings: np.ndarray
    domains: np.ndarray
    task_indices: np.ndarray
    frame_indices: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


def build_task_pools(trajectories: Sequence[Trajectory], embedder: EmbeddingService) -> List[TaskPool]:
    """Group action-labelled frames by (domain, task) in first-seen order"""
    grouped: Dict[Tuple[Domain, str], List[Trajectory]] = {}
    for trajectory in trajectories:
        grouped.setdefault((trajectory.domain, trajectory.task_id), []).append(trajectory)

    pools = []
    for (domain, task_id), members in grouped.items():
        frames = [f for t in members for f in t.frames if f.action is not None]
        if not frames:
            logger.warning(f"Skipping {domain.value}/{task_id}: no action-labelled frames")
            continue
        instruction = members[0].task_instruction
        pools.append(TaskPool(
            task_id=task_id,
            domain=domain,
            instruction=instruction,
            images=np.stack([f.image for f in frames]),
            proprio=np.stack([f.proprio for f in frames]).astype(np.float32),
            actions=np.stack([f.action for f in frames]).astype(np.float32),
            task_embedding=embedder.embed(instruction),
        ))
    if not pools:
        raise ValueError("dataset has zero action-labelled frames")
    return pools


def sample_task_indices(n_tasks: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m task indices, uniform without replacement (with replacement when fewer than m tasks exist)"""
    if n_tasks < 1:
        raise ValueError("no tasks to sample from")
    return rng.choice(n_tasks, size=m, replace=n_tasks < m)


def sample_batch(pools: Sequence[TaskPool], spec: BatchSpec, rng: np.random.Generator) -> Batch:
    if not pools or all(len(p) == 0 for p in pools):
        raise ValueError("dataset has zero action-labelled frames")
    tasks = sample_task_indices(len(pools), spec.tasks_per_batch, rng)
    frames = [rng.integers(0, len(pools[t]), size=spec.samples_per_task) for t in tasks]

    def gather(attr: str) -> np.ndarray:
        return np.concatenate([getattr(pools[t], attr)[idx] for t, idx in zip(tasks, frames)])

    per_item_task = np.repeat(tasks, spec.samples_per_task)
    return Batch(
        images=gather('images'),
        proprio=gather('proprio'),
        actions=gather('actions'),
        task_embeddings=np.stack([pools[t].task_embedding for t in per_item_task]),
        domains=np.array([DOMAIN_INDEX[pools[t].domain] for t in per_item_task], dtype=np.int64),
        task_indices=per_item_task,
        frame_indices=np.concatenate(frames),
    )
