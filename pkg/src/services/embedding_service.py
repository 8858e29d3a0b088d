# Standard library imports
import hashlib
import logging
import os
import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Protocol, Sequence

# Third-party imports
import numpy as np

# Local application imports
from src.language.granularity import is_sentinel
from src.services.errors import EmbeddingProviderUnavailable
from src.services.external.subprocess_provider import SubprocessEmbeddingProvider

logger = logging.getLogger(__name__)

DEFAULT_EMBED_DIM = 384
DEFAULT_EMBED_MODEL = 'all-MiniLM-L6-v2'
_TOKEN_RE = re.compile(r"[a-z0-9]+")


class ProviderKind(Enum):
    BUILTIN = "builtin"
    EXTERNAL = "external"


class Backend(Enum):
    BUILTIN = "builtin"
    SENTENCE_TRANSFORMERS = "sentence_transformers"
    SUBPROCESS = "subprocess"


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    backend: Backend = Backend.BUILTIN
    dim: int = DEFAULT_EMBED_DIM
    seed: int = 0
    model: str = DEFAULT_EMBED_MODEL
    command: Optional[str] = None

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"embedding dim must be positive, got {self.dim}")

    @property
    def provider(self) -> ProviderKind:
        return ProviderKind.BUILTIN if self.backend == Backend.BUILTIN else ProviderKind.EXTERNAL

    @classmethod
    def from_env(cls) -> "EmbeddingProviderSpec":
        backend = os.getenv('S2L_EMBED_PROVIDER', Backend.BUILTIN.value)
        try:
            return cls(
                backend=Backend(backend),
                dim=int(os.getenv('S2L_EMBED_DIM', str(DEFAULT_EMBED_DIM))),
                seed=int(os.getenv('S2L_EMBED_SEED', '0')),
                model=os.getenv('S2L_EMBED_MODEL', DEFAULT_EMBED_MODEL),
                command=os.getenv('S2L_EMBED_COMMAND'),
            )
        except ValueError as e:
            raise ValueError(f"Invalid embedding configuration: {str(e)}")

    def to_json(self) -> dict:
        return {
            'provider': self.provider.value,
            'backend': self.backend.value,
            'dim': self.dim,
            'seed': self.seed,
            'model': self.model,
            'command': self.command,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EmbeddingProviderSpec":
        return cls(
            backend=Backend(data.get('backend', Backend.BUILTIN.value)),
            dim=int(data['dim']),
            seed=int(data.get('seed', 0)),
            model=data.get('model', DEFAULT_EMBED_MODEL),
            command=data.get('command'),
        )


class EmbeddingProvider(Protocol):
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        ...


def _digest(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode('utf-8'), digest_size=8).digest(), 'little')


def seeded_unit_vector(key: str, dim: int, seed: int) -> np.ndarray:
    """Fixed random unit vector for a string key"""
    vector = np.random.default_rng([seed, _digest(key)]).standard_normal(dim)
    return vector / np.linalg.norm(vector)


class HashingEmbeddingProvider:
    """Deterministic bag of unigrams and bigrams, each hashed to a seeded random direction"""

    def __init__(self, dim: int = DEFAULT_EMBED_DIM, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be > 0")
        self.dim = dim
        self.seed = seed
        self._features: Dict[str, np.ndarray] = {}

    def tokenize(self, text: str) -> List[str]:
        tokens = _TOKEN_RE.findall(text.lower())
        return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]

    def _feature(self, token: str) -> np.ndarray:
        if token not in self._features:
            self._features[token] = seeded_unit_vector(token, self.dim, self.seed)
        return self._features[token]

    def _embed_tokens(self, tokens: Iterable[str]) -> np.ndarray:
        raw = np.zeros(self.dim)
        for token in tokens:
            raw += self._feature(token)
        norm = np.linalg.norm(raw)
        return raw / norm if norm > 0 else raw

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self._embed_tokens(self.tokenize(t)) for t in texts]).astype(np.float32)


class SentenceTransformerProvider:
    """In-process sentence-transformers model behind the provider contract"""

    def __init__(self, model_name: str = DEFAULT_EMBED_MODEL, dim: int = DEFAULT_EMBED_DIM):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise EmbeddingProviderUnavailable(
                "sentence-transformers is not installed; install the 'language' extra") from e
        try:
            self.model = SentenceTransformer(model_name)
        except Exception as e:
            raise EmbeddingProviderUnavailable(f"Could not load model '{model_name}': {str(e)}") from e
        self.dim = dim

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self.model.encode(list(texts), convert_to_numpy=True, normalize_embeddings=True)
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.shape[1] != self.dim:
            raise EmbeddingProviderUnavailable(
                f"model returned {vectors.shape[1]}-dim vectors, configured dim is {self.dim}")
        return vectors


def make_provider(spec: EmbeddingProviderSpec) -> EmbeddingProvider:
    if spec.backend == Backend.BUILTIN:
        return HashingEmbeddingProvider(spec.dim, spec.seed)
    if spec.backend == Backend.SENTENCE_TRANSFORMERS:
        return SentenceTransformerProvider(spec.model, spec.dim)
    return SubprocessEmbeddingProvider(spec.command, spec.dim)


class EmbeddingService:
    """Text to fixed-size vectors with caching; pseudo-descriptions get stored random vectors"""

    def __init__(self, spec: Optional[EmbeddingProviderSpec] = None, provider: Optional[EmbeddingProvider] = None):
        self.spec = spec or EmbeddingProviderSpec.from_env()
        self._provider = provider
        self._cache: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def provider(self) -> EmbeddingProvider:
        if self._provider is None:
            logger.info(f"Initializing {self.spec.backend.value} embedding provider (dim {self.spec.dim})")
            self._provider = make_provider(self.spec)
        return self._provider

    @property
    def dim(self) -> int:
        return self.spec.dim

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        with self._lock:
            missing = sorted({t for t in texts if t not in self._cache})
            sentinels = [t for t in missing if is_sentinel(t)]
            plain = [t for t in missing if not is_sentinel(t)]
            for text in sentinels:
                self._cache[text] = seeded_unit_vector(text, self.dim, self.spec.seed).astype(np.float32)
            if plain:
                vectors = self.provider.embed_batch(plain)
                if vectors.shape != (len(plain), self.dim):
                    raise EmbeddingProviderUnavailable(
                        f"provider returned shape {vectors.shape}, expected {(len(plain), self.dim)}")
                for text, vector in zip(plain, vectors):
                    self._cache[text] = np.asarray(vector, dtype=np.float32)
            if not texts:
                return np.zeros((0, self.dim), dtype=np.float32)
            return np.stack([self._cache[t] for t in texts])

    def close(self) -> None:
        close = getattr(self._provider, 'close', None)
        if close:
            close()
