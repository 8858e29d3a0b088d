"""Training objectives. Every loss averages over the batch."""
# Standard library imports
import math
from typing import Callable

# Third-party imports
import torch
import torch.nn.functional as F

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _require_finite(name: str, *tensors: torch.Tensor) -> None:
    for tensor in tensors:
        if not torch.isfinite(tensor).all():
            raise ValueError(f"{name}: inputs contain non-finite values")


def lang_regression_loss(features: torch.Tensor, predictor: Callable[[torch.Tensor], torch.Tensor],
                         lang_embeddings: torch.Tensor) -> torch.Tensor:
    """Mean squared L2 distance between g(features) and the frozen language embeddings"""
    predicted = predictor(features)
    if predicted.shape != lang_embeddings.shape:
        raise ValueError(f"predicted {tuple(predicted.shape)} vs target {tuple(lang_embeddings.shape)}")
    return ((predicted - lang_embeddings) ** 2).sum(dim=-1).mean()


def lang_distance_loss(features_source: torch.Tensor, features_target: torch.Tensor,
                       similarity: torch.Tensor) -> torch.Tensor:
    """Mean squared error between unit-feature dot products and normalized language similarity"""
    if features_source.shape != features_target.shape:
        raise ValueError(f"paired features differ: {tuple(features_source.shape)} vs {tuple(features_target.shape)}")
    if similarity.shape != features_source.shape[:1]:
        raise ValueError(f"expected {features_source.shape[0]} similarity values, got {tuple(similarity.shape)}")
    norms_s = features_source.norm(dim=-1, keepdim=True)
    norms_t = features_target.norm(dim=-1, keepdim=True)
    if (norms_s <= 1e-12).any() or (norms_t <= 1e-12).any():
        raise ValueError("cannot unit-normalize a zero-norm feature")
    dots = ((features_source / norms_s) * (features_target / norms_t)).sum(dim=-1)
    return ((dots - similarity) ** 2).mean()


def stage_classification_loss(features: torch.Tensor, head: Callable[[torch.Tensor], torch.Tensor],
                              stage_labels: torch.Tensor) -> torch.Tensor:
    logits = head(features)
    n_stages = logits.shape[-1]
    if stage_labels.numel() and (stage_labels.min() < 0 or stage_labels.max() >= n_stages):
        raise ValueError(f"stage labels must lie in [0, {n_stages})")
    return F.cross_entropy(logits, stage_labels.long())


def bc_nll_loss(mu: torch.Tensor, sigma: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
    """Mean isotropic-Gaussian negative log density of the demonstrated actions"""
    _require_finite('bc_nll_loss', mu, sigma, actions)
    if (sigma <= 0).any():
        raise ValueError("bc_nll_loss: sigma must be positive")
    z = (actions - mu) / sigma
    return (torch.log(sigma) + HALF_LOG_2PI + 0.5 * z ** 2).sum(dim=-1).mean()


def mmd_loss(embeddings_source: torch.Tensor, embeddings_target: torch.Tensor) -> torch.Tensor:
    """Squared distance between the batch means of the two domains"""
    if embeddings_source.shape[0] == 0 or embeddings_target.shape[0] == 0:
        raise ValueError("mmd_loss needs non-empty batches from both domains")
    return ((embeddings_source.mean(dim=0) - embeddings_target.mean(dim=0)) ** 2).sum()
