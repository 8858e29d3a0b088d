# Standard library imports
from unittest.mock import MagicMock, patch

# Third-party imports
import numpy as np
import pytest
import torch

# Local application imports
from src.database.records import Domain
from src.models.policy import PolicyHeadSpec
from src.training.bc import (
    AUX_MMD,
    BCConfig,
    bc_train,
    build_policy,
    load_policy,
    random_crop,
    trainable_parameter_names,
)
from src.training.errors import TrainingDivergedError
from src.training.pretrain import PretrainConfig, load_encoder, pretrain
from src.training.sampler import BatchSpec, build_task_pools

TINY_HEAD = PolicyHeadSpec(hidden=(16,))
TINY_BATCH = BatchSpec(tasks_per_batch=2, samples_per_task=4)


@pytest.fixture
def pools(stack_source, stack_target, embedder):
    return build_task_pools(stack_source[0] + stack_target[0], embedder)


@pytest.fixture
def encoder_checkpoint(stack_source, embedder, tiny_encoder_spec, tmp_path):
    path = tmp_path / 'encoder.ckpt'
    pretrain(PretrainConfig(max_steps=1, batch_size=4, encoder_spec=tiny_encoder_spec), stack_source[0], embedder,
             out_path=path)
    return path


def tiny_config(**overrides) -> BCConfig:
    values = dict(max_steps=2, batch_spec=TINY_BATCH, head_spec=TINY_HEAD)
    values.update(overrides)
    return BCConfig(**values)


def test_pretrained_encoder_is_frozen_except_last_block(pools, encoder_checkpoint):
    """Only the last residual block, the FiLM layers and the head receive updates"""
    pretrained, _ = load_encoder(encoder_checkpoint)
    result = bc_train(tiny_config(encoder_checkpoint=str(encoder_checkpoint), max_steps=3), pools)
    trained = result.policy.encoder

    names = trainable_parameter_names(result.policy)
    assert any(name.startswith('head.') for name in names)
    assert any(name.startswith('encoder.film.') for name in names)
    assert any(name.startswith('encoder.blocks.3.') for name in names)
    assert not any(name.startswith('encoder.stem.') or name.startswith('encoder.blocks.0.') for name in names)

    for name, value in pretrained.stem.state_dict().items():
        assert value.numpy().tobytes() == trained.stem.state_dict()[name].numpy().tobytes()
    for name, value in pretrained.blocks[0].state_dict().items():
        assert value.numpy().tobytes() == trained.blocks[0].state_dict()[name].numpy().tobytes()


def test_scratch_policy_trains_everything(tiny_encoder_spec):
    policy = build_policy(None, film_dim=32, proprio_dim=4, encoder_spec=tiny_encoder_spec, head_spec=TINY_HEAD)
    assert all(p.requires_grad for p in policy.parameters())


def test_random_crop_keeps_shape():
    generator = torch.Generator().manual_seed(0)
    images = torch.rand(3, 3, 8, 8)

    cropped = random_crop(images, 2, generator)

    assert cropped.shape == images.shape
    assert torch.equal(random_crop(images, 0, generator), images)
    flat = torch.full((1, 3, 8, 8), 0.5)
    assert torch.equal(random_crop(flat, 3, generator), flat)


def test_policy_round_trip(pools, tiny_encoder_spec, tmp_path):
    result = bc_train(tiny_config(encoder_spec=tiny_encoder_spec), pools, out_path=tmp_path / 'policy.ckpt')
    policy, header, embeddings = load_policy(tmp_path / 'policy.ckpt')

    assert header['kind'] == 'policy'
    assert header['step'] == 2
    assert set(embeddings) == {p.key for p in pools}
    frame = pools[0]
    expected = result.policy.act(frame.images[0], frame.proprio[0], frame.task_embedding)
    np.testing.assert_allclose(policy.act(frame.images[0], frame.proprio[0], frame.task_embedding), expected,
                               atol=1e-5)


def test_mmd_term_is_recorded(pools, tiny_encoder_spec):
    """With one source and one target task every batch holds both domains"""
    pair = [next(p for p in pools if p.domain == Domain.SOURCE), next(p for p in pools if p.domain == Domain.TARGET)]
    result = bc_train(tiny_config(aux=AUX_MMD, encoder_spec=tiny_encoder_spec), pair)
    assert all('mmd' in record for record in result.history)
    assert result.header['aux'] == AUX_MMD


def test_eval_hook_runs_on_schedule(pools, tiny_encoder_spec):
    hook = MagicMock()
    bc_train(tiny_config(max_steps=4, eval_every=2, encoder_spec=tiny_encoder_spec), pools, eval_hook=hook)
    assert [call.args[1] for call in hook.call_args_list] == [2, 4]


def test_non_finite_loss_raises(pools, tiny_encoder_spec, tmp_path):
    # Mock a diverged objective
    nan_loss = torch.tensor(float('nan'), requires_grad=True)
    with patch('src.training.bc.bc_nll_loss', return_value=nan_loss):
        with pytest.raises(TrainingDivergedError) as e:
            bc_train(tiny_config(encoder_spec=tiny_encoder_spec), pools, run_dir=tmp_path)
    assert e.value.step == 1


def test_config_validation():
    with pytest.raises(ValueError):
        BCConfig(aux='coral')
    with pytest.raises(ValueError):
        BCConfig(aux_weight=-1.0)
    with pytest.raises(ValueError):
        BCConfig(crop_padding=-2)
