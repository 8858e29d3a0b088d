# Standard library imports
from dataclasses import dataclass
from typing import Optional, Tuple

# Third-party imports
import numpy as np
import torch
import torch.nn as nn

# Local application imports
from src.database.records import ACTION_DIM
from src.models.encoder import Encoder, images_to_tensor


@dataclass(frozen=True)
class PolicyHeadSpec:
    hidden: Tuple[int, ...] = (1024, 512, 256)
    action_dim: int = ACTION_DIM
    log_std_bounds: Tuple[float, float] = (-5.0, 2.0)

    def to_json(self) -> dict:
        return {'hidden': list(self.hidden), 'action_dim': self.action_dim, 'log_std_bounds': list(self.log_std_bounds)}

    @classmethod
    def from_json(cls, data: dict) -> "PolicyHeadSpec":
        return cls(hidden=tuple(data['hidden']), action_dim=int(data['action_dim']),
                   log_std_bounds=tuple(data['log_std_bounds']))


@dataclass(frozen=True)
class LangPredictorSpec:
    d_cnn: int = 256
    d_lang: int = 384


def make_lang_predictor(spec: LangPredictorSpec) -> nn.Linear:
    """g: a single affine map from image features to language-embedding space"""
    return nn.Linear(spec.d_cnn, spec.d_lang)


def make_stage_head(d_cnn: int, n_stages: int) -> nn.Linear:
    return nn.Linear(d_cnn, n_stages)


class GaussianHead(nn.Module):
    """MLP emitting the mean and standard deviation of an isotropic Gaussian over actions"""

    def __init__(self, input_dim: int, spec: PolicyHeadSpec = PolicyHeadSpec()):
        super().__init__()
        self.spec = spec
        layers = []
        width = input_dim
        for hidden in spec.hidden:
            layers += [nn.Linear(width, hidden), nn.ReLU()]
            width = hidden
        self.trunk = nn.Sequential(*layers)
        self.mean = nn.Linear(width, spec.action_dim)
        # one scale shared by every action dimension
        self.log_std = nn.Linear(width, 1)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        hidden = self.trunk(x)
        mu = self.mean(hidden)
        log_std = torch.clamp(self.log_std(hidden), *self.spec.log_std_bounds)
        return mu, torch.exp(log_std).expand_as(mu)


class FilmPolicy(nn.Module):
    """Encoder with FiLM conditioning on the task embedding, proprio concatenated at the head"""

    def __init__(self, encoder: Encoder, proprio_dim: int, head_spec: PolicyHeadSpec = PolicyHeadSpec()):
        super().__init__()
        if encoder.film is None:
            raise ValueError("encoder needs FiLM blocks attached before building a policy")
        self.encoder = encoder
        self.proprio_dim = proprio_dim
        self.head = GaussianHead(encoder.d_cnn + proprio_dim, head_spec)

    def features(self, images: torch.Tensor, task_embeddings: torch.Tensor) -> torch.Tensor:
        return self.encoder(images, task_embeddings)

    def forward(self, images: torch.Tensor, proprio: torch.Tensor,
                task_embeddings: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.head(torch.cat([self.features(images, task_embeddings), proprio], dim=-1))

    def forward_with_features(self, images: torch.Tensor, proprio: torch.Tensor, task_embeddings: torch.Tensor):
        features = self.features(images, task_embeddings)
        mu, sigma = self.head(torch.cat([features, proprio], dim=-1))
        return mu, sigma, features

    @torch.no_grad()
    def act(self, image: np.ndarray, proprio: np.ndarray, task_embedding: np.ndarray,
            device: Optional[torch.device] = None) -> np.ndarray:
        """Gaussian mean for a single observation"""
        device = device or next(self.parameters()).device
        images = images_to_tensor(image, device)
        proprio_t = torch.as_tensor(np.asarray(proprio, dtype=np.float32), device=device).reshape(1, -1)
        task_t = torch.as_tensor(np.asarray(task_embedding, dtype=np.float32), device=device).reshape(1, -1)
        mu, _ = self(images, proprio_t, task_t)
        return mu[0].cpu().numpy()
