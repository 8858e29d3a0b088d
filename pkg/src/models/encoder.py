"""Residual convolutional image encoder ending in a spatial soft-argmax."""
# Standard library imports
from dataclasses import dataclass
from typing import List, Optional, Tuple

# Third-party imports
import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

# Local application imports
from src.models.film import FiLMBlockSpec, FilmConditioning


@dataclass(frozen=True)
class EncoderSpec:
    input_shape: Tuple[int, int, int] = (64, 64, 3)
    kernels: Tuple[int, ...] = (16, 32, 64, 128)
    kernel_sizes: Tuple[int, ...] = (7, 3, 3, 3, 3)
    conv_strides: Tuple[int, ...] = (2, 2, 1, 1, 1)
    maxpool_stride: int = 2
    softmax_temperature: float = 1.0
    min_groups: int = 8

    def __post_init__(self):
        if len(self.kernel_sizes) != len(self.kernels) + 1 or len(self.conv_strides) != len(self.kernels) + 1:
            raise ValueError("kernel_sizes and conv_strides need one entry for the stem plus one per block")
        if self.input_shape[2] != 3:
            raise ValueError(f"input must have 3 channels, got {self.input_shape}")
        if self.softmax_temperature <= 0:
            raise ValueError("softmax_temperature must be positive")
        self.feature_map_size()

    @staticmethod
    def _conv_out(size: int, kernel: int, stride: int) -> int:
        return (size + 2 * (kernel // 2) - kernel) // stride + 1

    def feature_map_size(self) -> Tuple[int, int]:
        """Spatial size entering the soft-argmax; raises when any stage collapses to zero"""
        height, width = self.input_shape[:2]
        sizes = []
        height = self._conv_out(height, self.kernel_sizes[0], self.conv_strides[0])
        width = self._conv_out(width, self.kernel_sizes[0], self.conv_strides[0])
        sizes.append((height, width))
        height = self._conv_out(height, 3, self.maxpool_stride)
        width = self._conv_out(width, 3, self.maxpool_stride)
        sizes.append((height, width))
        for kernel, stride in zip(self.kernel_sizes[1:], self.conv_strides[1:]):
            height = self._conv_out(height, kernel, stride)
            width = self._conv_out(width, kernel, stride)
            sizes.append((height, width))
        if any(h <= 0 or w <= 0 for h, w in sizes):
            raise ValueError(f"input {self.input_shape[:2]} collapses to zero size: {sizes}")
        return height, width

    @property
    def d_cnn(self) -> int:
        return 2 * self.kernels[-1]

    def to_json(self) -> dict:
        return {
            'input_shape': list(self.input_shape),
            'kernels': list(self.kernels),
            'kernel_sizes': list(self.kernel_sizes),
            'conv_strides': list(self.conv_strides),
            'maxpool_stride': self.maxpool_stride,
            'softmax_temperature': self.softmax_temperature,
            'min_groups': self.min_groups,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EncoderSpec":
        return cls(
            input_shape=tuple(data['input_shape']),
            kernels=tuple(data['kernels']),
            kernel_sizes=tuple(data['kernel_sizes']),
            conv_strides=tuple(data['conv_strides']),
            maxpool_stride=int(data['maxpool_stride']),
            softmax_temperature=float(data['softmax_temperature']),
            min_groups=int(data.get('min_groups', 8)),
        )


def group_norm(channels: int, min_groups: int) -> nn.GroupNorm:
    groups = min(min_groups, channels)
    while channels % groups:
        groups -= 1
    return nn.GroupNorm(groups, channels)


class SpatialSoftmax(nn.Module):
    """Soft-argmax (x, y) per channel: (B, C, H, W) -> (B, 2C)"""

    def __init__(self, height: int, width: int, temperature: float = 1.0) -> None:
        super().__init__()
        self.height = height
        self.width = width
        self.temperature = temperature

        pos_y, pos_x = torch.meshgrid(
            torch.linspace(-1.0, 1.0, height), torch.linspace(-1.0, 1.0, width), indexing="ij"
        )
        self.register_buffer("pos_x", pos_x.reshape(-1))
        self.register_buffer("pos_y", pos_y.reshape(-1))

    def attention(self, features: torch.Tensor) -> torch.Tensor:
        b, c, _, _ = features.shape
        return F.softmax(features.reshape(b, c, -1) / self.temperature, dim=-1)  # (B, C, H*W)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        b = features.shape[0]
        attention = self.attention(features)
        x_exp = torch.sum(self.pos_x * attention, dim=-1, keepdim=True)  # (B, C, 1)
        y_exp = torch.sum(self.pos_y * attention, dim=-1, keepdim=True)
        return torch.cat([x_exp, y_exp], dim=-1).reshape(b, -1)  # (B, C*2)


class BasicBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int, min_groups: int):
        super().__init__()
        pad = kernel // 2
        self.conv1 = nn.Conv2d(in_channels, out_channels, kernel, stride=stride, padding=pad, bias=False)
        self.norm1 = group_norm(out_channels, min_groups)
        self.conv2 = nn.Conv2d(out_channels, out_channels, kernel, stride=1, padding=pad, bias=False)
        self.norm2 = group_norm(out_channels, min_groups)
        self.shortcut = nn.Identity()
        if stride != 1 or in_channels != out_channels:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, stride=stride, bias=False),
                group_norm(out_channels, min_groups),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return F.relu(out + self.shortcut(x))


def images_to_tensor(images: np.ndarray, device: Optional[torch.device] = None) -> torch.Tensor:
    """uint8 (B, H, W, 3) or (H, W, 3) to float (B, 3, H, W) in [0, 1]"""
    array = np.asarray(images)
    if array.ndim == 3:
        array = array[None]
    tensor = torch.from_numpy(np.ascontiguousarray(array)).to(device=device)
    return tensor.permute(0, 3, 1, 2).float() / 255.0


class Encoder(nn.Module):
    def __init__(self, spec: EncoderSpec = EncoderSpec()):
        super().__init__()
        self.spec = spec
        kernels = spec.kernels
        self.stem = nn.Sequential(
            nn.Conv2d(3, kernels[0], spec.kernel_sizes[0], stride=spec.conv_strides[0],
                      padding=spec.kernel_sizes[0] // 2, bias=False),
            group_norm(kernels[0], spec.min_groups),
            nn.ReLU(),
            nn.MaxPool2d(3, stride=spec.maxpool_stride, padding=1),
        )
        blocks: List[nn.Module] = []
        in_channels = kernels[0]
        for out_channels, kernel, stride in zip(kernels, spec.kernel_sizes[1:], spec.conv_strides[1:]):
            blocks.append(BasicBlock(in_channels, out_channels, kernel, stride, spec.min_groups))
            in_channels = out_channels
        self.blocks = nn.ModuleList(blocks)
        self.film: Optional[nn.ModuleList] = None
        height, width = spec.feature_map_size()
        self.spatial_softmax = SpatialSoftmax(height, width, spec.softmax_temperature)

    @property
    def d_cnn(self) -> int:
        return self.spec.d_cnn

    @property
    def last_layer(self) -> nn.Module:
        return self.blocks[-1]

    def attach_film(self, film_spec: FiLMBlockSpec = FiLMBlockSpec()) -> None:
        """Insert identity-initialized FiLM blocks after every residual block"""
        self.film = nn.ModuleList(FilmConditioning(c, film_spec.cond_dim) for c in self.spec.kernels)

    def feature_maps(self, x: torch.Tensor, conditioning: Optional[torch.Tensor] = None) -> torch.Tensor:
        expected = (3, self.spec.input_shape[0], self.spec.input_shape[1])
        if x.dim() != 4 or tuple(x.shape[1:]) != expected:
            raise ValueError(f"expected images of shape (B, {expected[0]}, {expected[1]}, {expected[2]}), got {tuple(x.shape)}")
        x = self.stem(x)
        for index, block in enumerate(self.blocks):
            x = block(x)
            if self.film is not None and conditioning is not None:
                x = self.film[index](x, conditioning)
        return x

    def forward(self, x: torch.Tensor, conditioning: Optional[torch.Tensor] = None) -> torch.Tensor:
        return self.spatial_softmax(self.feature_maps(x, conditioning))

    @torch.no_grad()
    def encode(self, images: np.ndarray) -> np.ndarray:
        """Eval-mode features for uint8 images matching the spec's input shape"""
        array = np.asarray(images)
        single = array.ndim == 3
        if array.shape[-3:] != tuple(self.spec.input_shape):
            raise ValueError(f"image shape {array.shape[-3:]} does not match encoder input {self.spec.input_shape}")
        was_training = self.training
        self.eval()
        device = next(self.parameters()).device
        features = self(images_to_tensor(array, device)).cpu().numpy()
        self.train(was_training)
        return features[0] if single else features
