# Standard library imports
import json
import logging
import shlex
import shutil
import subprocess
from typing import List, Optional, Sequence

# Third-party imports
import numpy as np

# Local application imports
from src.services.errors import EmbeddingProviderUnavailable

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 300


class SubprocessEmbeddingProvider:
    """
    Runs an external embedding command once per batch.

    The command reads {"texts": [...]} as JSON on stdin and writes
    {"embeddings": [[...], ...]} as JSON on stdout.
    """

    def __init__(self, command: Optional[str], dim: int, timeout: int = DEFAULT_TIMEOUT):
        if not command:
            raise EmbeddingProviderUnavailable("S2L_EMBED_COMMAND is not set")
        self.command = shlex.split(command)
        self.dim = dim
        self.timeout = timeout
        self.executable = self.get_executable_path()

    def get_executable_path(self) -> str:
        """Get full path to the embedding executable"""
        path = shutil.which(self.command[0])
        if not path:
            raise EmbeddingProviderUnavailable(f"Embedding executable '{self.command[0]}' not found in PATH")
        return path

    def run_command(self, payload: str) -> subprocess.CompletedProcess:
        full_cmd = [self.executable] + self.command[1:]
        return subprocess.run(full_cmd, input=payload, capture_output=True, text=True, timeout=self.timeout)

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        try:
            result = self.run_command(json.dumps({'texts': list(texts)}))
        except (OSError, subprocess.TimeoutExpired) as e:
            raise EmbeddingProviderUnavailable(f"Embedding command failed: {str(e)}") from e

        if result.returncode != 0:
            logger.error(f"Embedding command stderr: {result.stderr.strip()}")
            raise EmbeddingProviderUnavailable(f"Embedding command exited with {result.returncode}")

        try:
            embeddings: List[List[float]] = json.loads(result.stdout)['embeddings']
        except (ValueError, KeyError) as e:
            raise EmbeddingProviderUnavailable(f"Malformed embedding command output: {str(e)}") from e

        vectors = np.asarray(embeddings, dtype=np.float32)
        if vectors.shape != (len(texts), self.dim):
            raise EmbeddingProviderUnavailable(f"Embedding command returned shape {vectors.shape}, expected {(len(texts), self.dim)}")
        return vectors
