class EmbeddingProviderUnavailable(RuntimeError):
    """Raised when a configured external embedding provider cannot be used"""


class DegenerateNormalizationError(ValueError):
    """Raised when min-max similarity normalization has no spread to work with"""
