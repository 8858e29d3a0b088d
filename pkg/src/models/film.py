# Standard library imports
from dataclasses import dataclass

# Third-party imports
import torch
import torch.nn as nn


@dataclass(frozen=True)
class FiLMBlockSpec:
    cond_dim: int = 384
    hidden_layers: int = 0

    def __post_init__(self):
        if self.cond_dim <= 0:
            raise ValueError(f"cond_dim must be positive, got {self.cond_dim}")
        if self.hidden_layers != 0:
            raise ValueError("FiLM generators are single linear projections (hidden_layers = 0)")


class FilmConditioning(nn.Module):
    """Per-channel affine modulation (1 + gamma) * x + beta from a conditioning vector"""

    def __init__(self, num_channels: int, cond_dim: int = 384):
        super().__init__()
        self.projection_add = nn.Linear(cond_dim, num_channels)
        self.projection_mult = nn.Linear(cond_dim, num_channels)

        # Zero init makes the block an exact identity until trained
        nn.init.constant_(self.projection_add.weight, 0)
        nn.init.constant_(self.projection_add.bias, 0)
        nn.init.constant_(self.projection_mult.weight, 0)
        nn.init.constant_(self.projection_mult.bias, 0)

    def forward(self, conv_filters: torch.Tensor, conditioning: torch.Tensor) -> torch.Tensor:
        beta = self.projection_add(conditioning).unsqueeze(2).unsqueeze(3)  # (B, C, 1, 1)
        gamma = self.projection_mult(conditioning).unsqueeze(2).unsqueeze(3)
        return (1 + gamma) * conv_filters + beta
