# Third-party imports
import numpy as np
import pytest

# Local application imports
from src.services.errors import DegenerateNormalizationError
from src.services.similarity_service import (
    EMBEDDING_COSINE,
    NormalizedSimilarity,
    SimilarityService,
    pair_similarity,
    token_f1,
)

CORPUS = [
    "gripper open, reaching for milk, out of coaster",
    "gripper open, reaching for can, out of coaster",
    "gripper closed, moving up with can",
    "counterclockwise back",
]


def test_token_f1():
    assert token_f1("put milk on coaster", "put milk on coaster") == 1.0
    assert token_f1("put milk", "clockwise back") == 0.0
    assert token_f1("a b c d", "a b") == pytest.approx(2 * 1.0 * 0.5 / 1.5)


def test_normalized_similarity_spans_unit_interval():
    similarity = NormalizedSimilarity(CORPUS, token_f1)

    assert similarity.matrix.min() == 0.0
    assert similarity.matrix.max() == 1.0
    np.testing.assert_allclose(similarity.matrix, similarity.matrix.T)
    assert similarity(CORPUS[0], CORPUS[0]) == 1.0
    assert similarity(CORPUS[0], CORPUS[1]) > similarity(CORPUS[0], CORPUS[3])


def test_pairs_lookup_matches_scalar_calls():
    similarity = NormalizedSimilarity(CORPUS, token_f1)
    values = similarity.pairs(CORPUS[:2], CORPUS[2:])
    assert values.tolist() == [similarity(CORPUS[0], CORPUS[2]), similarity(CORPUS[1], CORPUS[3])]


def test_unknown_description_is_rejected():
    similarity = NormalizedSimilarity(CORPUS, token_f1)
    with pytest.raises(ValueError):
        similarity(CORPUS[0], "not in the corpus")


@pytest.mark.parametrize("corpus", [["only one"], ["same words", "words same"]])
def test_degenerate_corpus(corpus):
    """One description, or pairs with no spread, cannot be normalized"""
    with pytest.raises(DegenerateNormalizationError):
        NormalizedSimilarity(corpus, token_f1)


def test_pair_similarity_adds_pair_to_corpus():
    value = pair_similarity("reaching for milk", "reaching for can", CORPUS)
    assert 0.0 <= value <= 1.0


def test_embedding_cosine_provider(embedder):
    service = SimilarityService(EMBEDDING_COSINE, embedder=embedder)
    assert service.raw(CORPUS[0], CORPUS[0]) == pytest.approx(1.0, abs=1e-5)
    fitted = service.fit(CORPUS)
    assert fitted(CORPUS[0], CORPUS[0]) == pytest.approx(1.0)


def test_service_reads_kind_from_env(monkeypatch):
    monkeypatch.setenv('S2L_SIMILARITY_PROVIDER', 'jaccard')
    with pytest.raises(ValueError):
        SimilarityService()


def test_embedding_cosine_requires_embedder():
    with pytest.raises(ValueError):
        SimilarityService(EMBEDDING_COSINE)
