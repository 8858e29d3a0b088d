"""Multitask behaviour cloning of the FiLM-conditioned Gaussian policy."""
# Standard library imports
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np
import torch
import torch.nn.functional as F

# Local application imports
from src.models.checkpoint import (
    IncompatibleEncoderError,
    load_checkpoint,
    load_module,
    module_tensors,
    save_checkpoint,
)
from src.models.encoder import Encoder, EncoderSpec, images_to_tensor
from src.models.film import FiLMBlockSpec
from src.models.losses import bc_nll_loss, mmd_loss
from src.models.policy import FilmPolicy, PolicyHeadSpec
from src.training.errors import TrainingDivergedError
from src.training.pretrain import DEFAULT_LR, load_encoder, optimizer_header, resolve_device, steps_per_epoch
from src.training.sampler import BatchSpec, TaskPool, sample_batch
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

AUX_NONE = 'none'
AUX_MMD = 'mmd'
DEFAULT_AUX_WEIGHT = 0.1
CROP_PADDING = 4

EvalHook = Callable[[FilmPolicy, int], None]


@dataclass
class BCConfig:
    encoder_checkpoint: Optional[str] = None
    aux: str = AUX_NONE
    aux_weight: float = DEFAULT_AUX_WEIGHT
    crop_padding: int = CROP_PADDING
    epochs: int = 1
    max_steps: Optional[int] = None
    seed: int = 0
    lr: float = DEFAULT_LR
    batch_spec: BatchSpec = field(default_factory=BatchSpec)
    head_spec: PolicyHeadSpec = field(default_factory=PolicyHeadSpec)
    encoder_spec: Optional[EncoderSpec] = None
    eval_every: Optional[int] = None
    checkpoint_every: Optional[int] = None
    log_every: int = 50
    method: str = 'bc'

    def __post_init__(self):
        if self.aux not in (AUX_NONE, AUX_MMD):
            raise ValueError(f"aux must be '{AUX_NONE}' or '{AUX_MMD}', got '{self.aux}'")
        if self.aux_weight < 0:
            raise ValueError(f"aux_weight must be non-negative, got {self.aux_weight}")
        if self.crop_padding < 0:
            raise ValueError(f"crop_padding must be non-negative, got {self.crop_padding}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")


def freeze_for_transfer(policy: FilmPolicy) -> None:
    """Leave only the last conv block, the FiLM blocks and the policy head trainable"""
    for parameter in policy.parameters():
        parameter.requires_grad_(False)
    for module in (policy.encoder.last_layer, policy.encoder.film, policy.head):
        for parameter in module.parameters():
            parameter.requires_grad_(True)


def trainable_parameter_names(policy: FilmPolicy) -> List[str]:
    return [name for name, p in policy.named_parameters() if p.requires_grad]


def build_policy(
    encoder_checkpoint: Optional[Union[str, Path]],
    film_dim: int,
    proprio_dim: int,
    encoder_spec: Optional[EncoderSpec] = None,
    head_spec: PolicyHeadSpec = PolicyHeadSpec(),
) -> FilmPolicy:
    """Policy around a pretrained (partly frozen) encoder, or a fully trainable one from scratch"""
    if encoder_checkpoint is not None:
        encoder, _ = load_encoder(encoder_checkpoint)
        if encoder_spec is not None and encoder_spec != encoder.spec:
            raise IncompatibleEncoderError(
                f"checkpoint encoder {encoder.spec.to_json()} does not match requested {encoder_spec.to_json()}")
    else:
        encoder = Encoder(encoder_spec or EncoderSpec())
    encoder.attach_film(FiLMBlockSpec(cond_dim=film_dim))
    policy = FilmPolicy(encoder, proprio_dim, head_spec)
    if encoder_checkpoint is not None:
        freeze_for_transfer(policy)
    return policy


def random_crop(images: torch.Tensor, padding: int, generator: torch.Generator) -> torch.Tensor:
    """Pad by replicating edges, then crop back to the original size at a random offset per image"""
    if padding == 0:
        return images
    _, _, height, width = images.shape
    padded = F.pad(images, (padding, padding, padding, padding), mode='replicate')
    offsets = torch.randint(0, 2 * padding + 1, (images.shape[0], 2), generator=generator)
    return torch.stack([
        padded[i, :, int(dy):int(dy) + height, int(dx):int(dx) + width]
        for i, (dy, dx) in enumerate(offsets)
    ])


@dataclass
class BCResult:
    policy: FilmPolicy
    header: dict
    history: List[Dict[str, float]]


def _policy_header(config: BCConfig, policy: FilmPolicy, pools: Sequence[TaskPool], step: int,
                   extra: Optional[dict]) -> dict:
    header = {
        'kind': 'policy',
        'method': config.method,
        'encoder_spec': policy.encoder.spec.to_json(),
        'encoder_checkpoint': config.encoder_checkpoint,
        'head_spec': config.head_spec.to_json(),
        'film_dim': int(pools[0].task_embedding.shape[0]),
        'proprio_dim': policy.proprio_dim,
        'aux': config.aux,
        'aux_weight': config.aux_weight,
        'crop_padding': config.crop_padding,
        'seed': config.seed,
        'step': step,
        'optimizer': optimizer_header(config.lr),
        'batch_spec': {'tasks_per_batch': config.batch_spec.tasks_per_batch,
                       'samples_per_task': config.batch_spec.samples_per_task},
        'tasks': [{'key': p.key, 'task_id': p.task_id, 'domain': p.domain.value,
                   'instruction': p.instruction, 'frames': len(p)} for p in pools],
        'trainable': trainable_parameter_names(policy),
    }
    header.update(extra or {})
    return header


def save_policy(path: Union[str, Path], policy: FilmPolicy, header: dict, pools: Sequence[TaskPool]) -> Path:
    tensors = module_tensors('policy', policy)
    for pool in pools:
        tensors[f"task_embedding.{pool.key}"] = torch.as_tensor(pool.task_embedding, dtype=torch.float32)
    return save_checkpoint(path, header, tensors)


def load_policy(path: Union[str, Path]) -> Tuple[FilmPolicy, dict, Dict[str, np.ndarray]]:
    """Policy, header and the instruction embeddings it was trained with, keyed by domain/task_id"""
    header, tensors = load_checkpoint(path)
    if header.get('kind') != 'policy':
        raise IncompatibleEncoderError(f"{path} does not hold a policy")
    encoder = Encoder(EncoderSpec.from_json(header['encoder_spec']))
    encoder.attach_film(FiLMBlockSpec(cond_dim=header['film_dim']))
    policy = FilmPolicy(encoder, header['proprio_dim'], PolicyHeadSpec.from_json(header['head_spec']))
    load_module(policy, 'policy', tensors)
    policy.eval()
    prefix = 'task_embedding.'
    embeddings = {name[len(prefix):]: value.numpy() for name, value in tensors.items() if name.startswith(prefix)}
    return policy, header, embeddings


def bc_train(
    config: BCConfig,
    pools: Sequence[TaskPool],
    run_dir: Optional[Union[str, Path]] = None,
    out_path: Optional[Union[str, Path]] = None,
    eval_hook: Optional[EvalHook] = None,
    header_extra: Optional[dict] = None,
) -> BCResult:
    """Minimize the policy NLL (plus the weighted MMD term when aux is mmd) over multitask batches"""
    if not pools:
        raise ValueError("dataset has zero action-labelled frames")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    crop_generator = torch.Generator().manual_seed(config.seed)
    device = resolve_device()

    image_shape = tuple(int(v) for v in pools[0].images.shape[1:])
    encoder_spec = config.encoder_spec
    if encoder_spec is None and config.encoder_checkpoint is None:
        encoder_spec = EncoderSpec(input_shape=image_shape)
    policy = build_policy(config.encoder_checkpoint, int(pools[0].task_embedding.shape[0]),
                          int(pools[0].proprio.shape[1]), encoder_spec, config.head_spec).to(device)
    if tuple(policy.encoder.spec.input_shape) != image_shape:
        raise IncompatibleEncoderError(f"encoder input {policy.encoder.spec.input_shape} vs images {image_shape}")

    trainable = [p for p in policy.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=config.lr)
    frame_count = sum(len(p) for p in pools)
    total_steps = config.max_steps or config.epochs * steps_per_epoch(frame_count, config.batch_spec.batch_size)

    log_action(ActionType.BC_STARTED, run_dir, metadata={
        'method': config.method, 'tasks': [p.key for p in pools], 'frames': frame_count,
        'steps': total_steps, 'seed': config.seed})
    logger.info(f"BC ({config.method}) on {len(pools)} tasks / {frame_count} frames for {total_steps} steps")

    history: List[Dict[str, float]] = []
    for step in range(1, total_steps + 1):
        policy.train()
        batch = sample_batch(pools, config.batch_spec, rng)
        images = random_crop(images_to_tensor(batch.images, device), config.crop_padding, crop_generator)
        proprio = torch.as_tensor(batch.proprio, device=device)
        actions = torch.as_tensor(batch.actions, device=device)
        task_embeddings = torch.as_tensor(batch.task_embeddings, dtype=torch.float32, device=device)

        mu, sigma, features = policy.forward_with_features(images, proprio, task_embeddings)
        if not (torch.isfinite(mu).all() and torch.isfinite(sigma).all()):
            log_action(ActionType.TRAINING_DIVERGED, run_dir, metadata={'step': step}, status='failed')
            raise TrainingDivergedError(step)
        nll = bc_nll_loss(mu, sigma, actions)
        loss = nll
        record = {'step': step, 'nll': float(nll)}
        if config.aux == AUX_MMD:
            domains = torch.as_tensor(batch.domains, device=device)
            source, target = features[domains == 0], features[domains == 1]
            if len(source) and len(target):
                aux = mmd_loss(source, target)
                loss = loss + config.aux_weight * aux
                record['mmd'] = float(aux)

        value = float(loss)
        if not math.isfinite(value):
            log_action(ActionType.TRAINING_DIVERGED, run_dir, metadata={'step': step}, status='failed')
            raise TrainingDivergedError(step, value)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        record['loss'] = value
        history.append(record)

        if step % config.log_every == 0 or step == total_steps:
            log_action(ActionType.TRAIN_STEP, run_dir, metadata=record)
            logger.info(f"bc step {step}/{total_steps} loss {value:.4f}")
        if config.checkpoint_every and out_path is not None and step % config.checkpoint_every == 0:
            save_policy(out_path, policy, _policy_header(config, policy, pools, step, header_extra), pools)
            log_action(ActionType.CHECKPOINT_SAVED, run_dir, metadata={'path': str(out_path), 'step': step})
        if eval_hook is not None and config.eval_every and step % config.eval_every == 0:
            policy.eval()
            eval_hook(policy, step)

    policy.eval()
    header = _policy_header(config, policy, pools, total_steps, header_extra)
    if out_path is not None:
        save_policy(out_path, policy, header, pools)
        log_action(ActionType.CHECKPOINT_SAVED, run_dir, metadata={'path': str(out_path), 'step': total_steps})
    log_action(ActionType.BC_COMPLETED, run_dir, metadata={'final_loss': history[-1]['loss']})
    return BCResult(policy=policy.cpu(), header=header, history=history)
