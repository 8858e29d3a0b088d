# Standard library imports
import logging
import os
import re
from collections import Counter
from typing import Callable, Dict, Iterable, List, Optional, Sequence

# Third-party imports
import numpy as np

# Local application imports
from src.services.embedding_service import EmbeddingService
from src.services.errors import DegenerateNormalizationError

logger = logging.getLogger(__name__)

TOKEN_F1 = 'token_f1'
EMBEDDING_COSINE = 'embedding_cosine'
_TOKEN_RE = re.compile(r"[a-z0-9]+")

RawSimilarity = Callable[[str, str], float]


def token_f1(a: str, b: str) -> float:
    """Token-overlap F1 between two strings (multiset overlap)"""
    tokens_a = Counter(_TOKEN_RE.findall(a.lower()))
    tokens_b = Counter(_TOKEN_RE.findall(b.lower()))
    overlap = sum((tokens_a & tokens_b).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(tokens_b.values())
    recall = overlap / sum(tokens_a.values())
    return 2.0 * precision * recall / (precision + recall)


class NormalizedSimilarity:
    """Symmetrized raw similarity, min-max normalized over every ordered pair of a corpus"""

    def __init__(self, corpus: Iterable[str], raw: RawSimilarity):
        self.corpus: List[str] = sorted(set(corpus))
        if len(self.corpus) < 2:
            raise DegenerateNormalizationError(
                f"similarity normalization needs at least 2 distinct descriptions, got {len(self.corpus)}")
        self.index: Dict[str, int] = {text: i for i, text in enumerate(self.corpus)}

        size = len(self.corpus)
        scores = np.array([[raw(a, b) for b in self.corpus] for a in self.corpus], dtype=np.float64)
        scores = 0.5 * (scores + scores.T)
        low, high = float(scores.min()), float(scores.max())
        if high - low <= 0.0:
            raise DegenerateNormalizationError("all corpus pairs have the same raw similarity")
        self.matrix = (scores - low) / (high - low)
        logger.debug(f"Normalized similarity over {size} descriptions (raw range {low:.4f}..{high:.4f})")

    def __call__(self, a: str, b: str) -> float:
        try:
            return float(self.matrix[self.index[a], self.index[b]])
        except KeyError as e:
            raise ValueError(f"description not in normalization corpus: {e.args[0]!r}")

    def pairs(self, left: Sequence[str], right: Sequence[str]) -> np.ndarray:
        rows = [self.index[text] for text in left]
        cols = [self.index[text] for text in right]
        return self.matrix[rows, cols]


class SimilarityService:
    """Pairwise language similarity configured by S2L_SIMILARITY_PROVIDER"""

    def __init__(self, kind: Optional[str] = None, embedder: Optional[EmbeddingService] = None):
        self.kind = kind or os.getenv('S2L_SIMILARITY_PROVIDER', TOKEN_F1)
        if self.kind not in (TOKEN_F1, EMBEDDING_COSINE):
            raise ValueError(f"Unknown similarity provider '{self.kind}'")
        if self.kind == EMBEDDING_COSINE and embedder is None:
            raise ValueError("embedding_cosine similarity needs an embedding service")
        self.embedder = embedder

    def raw(self, a: str, b: str) -> float:
        if self.kind == TOKEN_F1:
            return token_f1(a, b)
        vectors = self.embedder.embed_many([a, b]).astype(np.float64)
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            return 0.0
        return float(vectors[0] @ vectors[1] / (norms[0] * norms[1]))

    def fit(self, corpus: Iterable[str]) -> NormalizedSimilarity:
        return NormalizedSimilarity(corpus, self.raw)


def pair_similarity(l1: str, l2: str, corpus: Iterable[str], raw: RawSimilarity = token_f1) -> float:
    return NormalizedSimilarity(list(corpus) + [l1, l2], raw)(l1, l2)
