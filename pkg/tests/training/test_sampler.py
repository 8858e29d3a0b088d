# Third-party imports
import numpy as np
import pytest

# Local application imports
from src.database.records import Domain
from src.training.sampler import BatchSpec, build_task_pools, sample_batch, sample_task_indices


@pytest.fixture
def pools(stack_source, stack_target, embedder):
    return build_task_pools(stack_source[0] + stack_target[0], embedder)


def test_default_batch_is_four_tasks_of_57():
    assert BatchSpec().batch_size == 228


def test_pools_group_by_domain_and_task(pools, stack_source, stack_target):
    keys = [p.key for p in pools]
    assert len(keys) == len(set(keys))
    assert 'target/stack_can' in keys
    assert sum(len(p) for p in pools) == sum(len(t) for t in stack_source[0] + stack_target[0])
    for pool in pools:
        assert pool.task_embedding.shape == (32,)


def test_batch_is_blocked_by_task(pools):
    """Each sampled task contributes one contiguous block of samples"""
    spec = BatchSpec(tasks_per_batch=3, samples_per_task=5)
    batch = sample_batch(pools, spec, np.random.default_rng(0))

    assert len(batch) == 15
    assert batch.images.shape == (15, 32, 32, 3)
    blocks = batch.task_indices.reshape(3, 5)
    assert np.all(blocks == blocks[:, :1])
    assert len(set(blocks[:, 0])) == 3
    for index, task in enumerate(batch.task_indices):
        np.testing.assert_array_equal(batch.actions[index], pools[task].actions[batch.frame_indices[index]])
        expected_domain = 0 if pools[task].domain == Domain.SOURCE else 1
        assert batch.domains[index] == expected_domain


def test_fewer_tasks_than_batch_slots_samples_with_replacement():
    indices = sample_task_indices(2, 4, np.random.default_rng(0))
    assert len(indices) == 4
    assert set(indices) <= {0, 1}


def test_task_sampling_is_uniform():
    """Per-task draw counts stay within three standard deviations of uniform"""
    draws = 4000
    rng = np.random.default_rng(123)
    counts = np.bincount([sample_task_indices(4, 1, rng)[0] for _ in range(draws)], minlength=4)
    sigma = np.sqrt(draws * 0.25 * 0.75)
    assert np.all(np.abs(counts - draws / 4) <= 3 * sigma)


def test_empty_inputs_are_rejected(embedder):
    with pytest.raises(ValueError):
        sample_batch([], BatchSpec(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        build_task_pools([], embedder)
    with pytest.raises(ValueError):
        BatchSpec(tasks_per_batch=0)
