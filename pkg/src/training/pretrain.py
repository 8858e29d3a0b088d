"""Encoder pretraining: language regression, language distance, or stage classification."""
# Standard library imports
import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np
import torch
import torch.nn as nn

# Local application imports
from src.database.records import Domain, Trajectory
from src.language.granularity import GranularityLevel, merge_map, merged_count, reduce_granularity
from src.models.checkpoint import (
    IncompatibleEncoderError,
    load_checkpoint,
    load_module,
    module_tensors,
    save_checkpoint,
)
from src.models.encoder import Encoder, EncoderSpec, images_to_tensor
from src.models.losses import lang_distance_loss, lang_regression_loss, stage_classification_loss
from src.models.policy import LangPredictorSpec, make_lang_predictor, make_stage_head
from src.services.embedding_service import EmbeddingService
from src.services.similarity_service import SimilarityService
from src.sim.tasks import get_task
from src.training.errors import TrainingDivergedError
from src.training.sampler import DOMAIN_INDEX
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

DEFAULT_LR = 3e-4
ADAM_BETAS = (0.9, 0.999)
DEFAULT_BATCH_SIZE = 228


class PretrainVariant(Enum):
    REG = "reg"
    DIST = "dist"
    STAGE = "stage"


def resolve_device() -> torch.device:
    return torch.device(os.getenv('S2L_DEVICE', 'cpu'))


def optimizer_header(lr: float) -> dict:
    return {'name': 'adam', 'lr': lr, 'betas': list(ADAM_BETAS)}


@dataclass
class PretrainConfig:
    variant: PretrainVariant = PretrainVariant.REG
    lr: float = DEFAULT_LR
    epochs: int = 1
    max_steps: Optional[int] = None
    seed: int = 0
    granularity: GranularityLevel = GranularityLevel.ALL
    batch_size: int = DEFAULT_BATCH_SIZE
    encoder_spec: Optional[EncoderSpec] = None
    log_every: int = 50

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.epochs < 1 and not self.max_steps:
            raise ValueError("need at least one epoch or a positive max_steps")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be at least 2, got {self.batch_size}")


@dataclass
class PretrainFrames:
    images: np.ndarray
    descriptions: List[str]
    stage_labels: np.ndarray
    domains: np.ndarray
    n_stages: int

    def __len__(self) -> int:
        return len(self.descriptions)


@dataclass
class PretrainResult:
    encoder: Encoder
    head: Optional[nn.Module]
    header: dict
    losses: List[float] = field(default_factory=list)


def label_frames(trajectories: Sequence[Trajectory], level: GranularityLevel) -> PretrainFrames:
    """Flatten trajectories into images with descriptions and merged stage labels at a granularity"""
    if not trajectories:
        raise ValueError("pretraining needs at least one trajectory")
    shapes = {t.frames[0].image.shape for t in trajectories if len(t)}
    if len(shapes) != 1:
        raise ValueError(f"all pretraining images must share one shape, got {sorted(shapes)}")
    suites = {t.suite for t in trajectories}

    images, descriptions, labels, domains = [], [], [], []
    for trajectory in trajectories:
        task = get_task(trajectory.task_id)
        stages = trajectory.stages
        descriptions += reduce_granularity(stages, level, trajectory.suite, trajectory.domain, task)
        mapping = merge_map(trajectory.suite, level)
        offset = DOMAIN_INDEX[trajectory.domain] if level == GranularityLevel.ONE_PER_DOMAIN else 0
        labels += [mapping[int(s)] + offset for s in stages]
        domains += [DOMAIN_INDEX[trajectory.domain]] * len(trajectory)
        images.append(trajectory.images)

    if level == GranularityLevel.ONE_PER_DOMAIN:
        n_stages = len(DOMAIN_INDEX)
    else:
        n_stages = max(merged_count(suite, level) for suite in suites)
    return PretrainFrames(
        images=np.concatenate(images),
        descriptions=descriptions,
        stage_labels=np.array(labels, dtype=np.int64),
        domains=np.array(domains, dtype=np.int64),
        n_stages=n_stages,
    )


def steps_per_epoch(frame_count: int, batch_size: int) -> int:
    return max(1, math.ceil(frame_count / batch_size))


def pretrain(
    config: PretrainConfig,
    trajectories: Sequence[Trajectory],
    embedder: EmbeddingService,
    similarity: Optional[SimilarityService] = None,
    run_dir: Optional[Union[str, Path]] = None,
    out_path: Optional[Union[str, Path]] = None,
) -> PretrainResult:
    """Train an encoder from scratch with the configured objective and optionally save it"""
    variant = config.variant
    if variant == PretrainVariant.DIST and {t.domain for t in trajectories} != set(Domain):
        raise ValueError("dist requires both domains")
    if variant == PretrainVariant.STAGE and len({t.suite for t in trajectories}) > 1:
        raise ValueError("stage pretraining needs trajectories from a single suite")

    frames = label_frames(trajectories, config.granularity)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    device = resolve_device()

    spec = config.encoder_spec or EncoderSpec(input_shape=tuple(int(v) for v in frames.images.shape[1:]))
    if tuple(spec.input_shape) != tuple(frames.images.shape[1:]):
        raise IncompatibleEncoderError(f"encoder input {spec.input_shape} vs images {frames.images.shape[1:]}")
    encoder = Encoder(spec).to(device)

    head: Optional[nn.Module] = None
    targets = None
    normalized = None
    if variant == PretrainVariant.REG:
        head = make_lang_predictor(LangPredictorSpec(spec.d_cnn, embedder.dim)).to(device)
        corpus = sorted(set(frames.descriptions))
        table = torch.as_tensor(embedder.embed_many(corpus), dtype=torch.float32, device=device)
        lookup = {text: i for i, text in enumerate(corpus)}
        targets = (table, np.array([lookup[d] for d in frames.descriptions]))
    elif variant == PretrainVariant.STAGE:
        head = make_stage_head(spec.d_cnn, frames.n_stages).to(device)
    else:
        normalized = (similarity or SimilarityService(embedder=embedder)).fit(frames.descriptions)
        source_idx = np.flatnonzero(frames.domains == DOMAIN_INDEX[Domain.SOURCE])
        target_idx = np.flatnonzero(frames.domains == DOMAIN_INDEX[Domain.TARGET])

    parameters = list(encoder.parameters()) + (list(head.parameters()) if head is not None else [])
    optimizer = torch.optim.Adam(parameters, lr=config.lr, betas=ADAM_BETAS)
    total_steps = config.max_steps or config.epochs * steps_per_epoch(len(frames), config.batch_size)

    log_action(ActionType.PRETRAIN_STARTED, run_dir, metadata={
        'variant': variant.value, 'frames': len(frames), 'steps': total_steps, 'seed': config.seed})
    logger.info(f"Pretraining ({variant.value}) on {len(frames)} frames for {total_steps} steps")

    losses: List[float] = []
    encoder.train()
    for step in range(1, total_steps + 1):
        if variant == PretrainVariant.DIST:
            half = config.batch_size // 2
            src = rng.choice(source_idx, size=half)
            tgt = rng.choice(target_idx, size=half)
            features = encoder(images_to_tensor(frames.images[np.concatenate([src, tgt])], device))
            d = normalized.pairs([frames.descriptions[i] for i in src], [frames.descriptions[i] for i in tgt])
            loss = lang_distance_loss(features[:half], features[half:],
                                      torch.as_tensor(d, dtype=torch.float32, device=device))
        else:
            idx = rng.integers(0, len(frames), size=config.batch_size)
            features = encoder(images_to_tensor(frames.images[idx], device))
            if variant == PretrainVariant.REG:
                table, rows = targets
                loss = lang_regression_loss(features, head, table[torch.as_tensor(rows[idx], device=device)])
            else:
                labels = torch.as_tensor(frames.stage_labels[idx], device=device)
                loss = stage_classification_loss(features, head, labels)

        value = float(loss)
        if not math.isfinite(value):
            log_action(ActionType.TRAINING_DIVERGED, run_dir, metadata={'step': step}, status='failed')
            raise TrainingDivergedError(step, value)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(value)

        if step % config.log_every == 0 or step == total_steps:
            log_action(ActionType.PRETRAIN_STEP, run_dir, metadata={'step': step, 'loss': value})
            logger.info(f"pretrain step {step}/{total_steps} loss {value:.5f}")

    header = {
        'kind': 'encoder',
        'variant': variant.value,
        'encoder_spec': spec.to_json(),
        'granularity': config.granularity.value,
        'seed': config.seed,
        'step': total_steps,
        'optimizer': optimizer_header(config.lr),
        'embedding': embedder.spec.to_json(),
        'head': None if head is None else {'in': spec.d_cnn, 'out': head.out_features},
        'frames': len(frames),
        'final_loss': losses[-1],
    }
    result = PretrainResult(encoder=encoder.cpu(), head=head.cpu() if head is not None else None,
                            header=header, losses=losses)
    if out_path is not None:
        save_encoder(out_path, result)
        log_action(ActionType.CHECKPOINT_SAVED, run_dir, metadata={'path': str(out_path), 'step': total_steps})
    log_action(ActionType.PRETRAIN_COMPLETED, run_dir, metadata={'final_loss': losses[-1]})
    return result


def save_encoder(path: Union[str, Path], result: PretrainResult) -> Path:
    tensors = module_tensors('encoder', result.encoder)
    if result.head is not None:
        tensors.update(module_tensors('head', result.head))
    return save_checkpoint(path, result.header, tensors)


def load_encoder(path: Union[str, Path]) -> Tuple[Encoder, dict]:
    header, tensors = load_checkpoint(path)
    if header.get('kind') != 'encoder':
        raise IncompatibleEncoderError(f"{path} does not hold a pretrained encoder")
    encoder = Encoder(EncoderSpec.from_json(header['encoder_spec']))
    load_module(encoder, 'encoder', tensors)
    return encoder, header
