import os
import sys
import pytest

# Add project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.database.records import Domain, Suite
from src.models.encoder import EncoderSpec
from src.scripted.collect import collect
from src.services.embedding_service import EmbeddingProviderSpec, EmbeddingService
from src.services.similarity_service import TOKEN_F1, SimilarityService
from src.sim.domains import get_domain

TEST_IMAGE_SIZE = 32
TEST_EMBED_DIM = 32


@pytest.fixture(autouse=True)
def setup_test_env(tmp_path, monkeypatch):
    """Point every run at a temporary data root with the builtin embedder"""
    monkeypatch.setenv('S2L_DATA_ROOT', str(tmp_path / 'data'))
    monkeypatch.setenv('S2L_EMBED_PROVIDER', 'builtin')
    monkeypatch.setenv('S2L_EMBED_DIM', str(TEST_EMBED_DIM))
    monkeypatch.setenv('S2L_SIMILARITY_PROVIDER', 'token_f1')
    monkeypatch.setenv('S2L_DEVICE', 'cpu')
    monkeypatch.delenv('S2L_EMBED_COMMAND', raising=False)
    return tmp_path / 'data'


@pytest.fixture
def embedder():
    return EmbeddingService(EmbeddingProviderSpec(dim=TEST_EMBED_DIM))


@pytest.fixture
def similarity_service(embedder):
    return SimilarityService(TOKEN_F1, embedder=embedder)


@pytest.fixture
def tiny_encoder_spec():
    return EncoderSpec(input_shape=(TEST_IMAGE_SIZE, TEST_IMAGE_SIZE, 3), kernels=(4, 4, 4, 4), min_groups=2)


@pytest.fixture(scope="session")
def source_domain():
    return get_domain(Domain.SOURCE, TEST_IMAGE_SIZE)


@pytest.fixture(scope="session")
def target_domain():
    return get_domain(Domain.TARGET, TEST_IMAGE_SIZE)


@pytest.fixture(scope="session")
def stack_source(source_domain):
    """Eight noisy source-domain stack demos across the four source tasks"""
    return collect(Suite.STACK, source_domain, 8, seed=0)


@pytest.fixture(scope="session")
def stack_target(target_domain):
    """Four target-domain demos of the target task"""
    return collect(Suite.STACK, target_domain, 4, seed=1)
