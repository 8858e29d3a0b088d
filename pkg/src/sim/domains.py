# Standard library imports
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

# Local application imports
from src.database.records import Domain

Color = Tuple[int, int, int]

# Template horizons of the slow (target) controller; other domains rescale into their own band
BASE_HORIZON_BAND = (18, 45)


@dataclass(frozen=True)
class View:
    """Orthographic camera: eye position, look-at point and half-width of the view in world units"""
    eye: Tuple[float, float, float]
    target: Tuple[float, float, float]
    scale: float

    def to_json(self) -> dict:
        return {'eye': list(self.eye), 'target': list(self.target), 'scale': self.scale}

    @classmethod
    def from_json(cls, data: dict) -> "View":
        return cls(eye=tuple(data['eye']), target=tuple(data['target']), scale=float(data['scale']))


@dataclass(frozen=True)
class Randomization:
    """Ranges for the domain-randomization baseline"""
    palette_jitter: int = 0
    lag_range: Optional[Tuple[float, float]] = None

    def to_json(self) -> dict:
        return {
            'palette_jitter': self.palette_jitter,
            'lag_range': list(self.lag_range) if self.lag_range else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Randomization":
        lag_range = data.get('lag_range')
        return cls(
            palette_jitter=int(data.get('palette_jitter', 0)),
            lag_range=tuple(lag_range) if lag_range else None,
        )


@dataclass(frozen=True)
class DomainConfig:
    name: Domain
    view: View
    palette: Dict[str, Color]
    lag: float
    action_scale: float
    control_hz: float
    horizon: Tuple[int, int]
    randomization: Optional[Randomization] = None
    aperture_rate: float = 1.0
    image_size: int = 64
    proprio_dim: int = 4

    def __post_init__(self):
        if not (0.0 < self.lag <= 1.0):
            raise ValueError(f"lag must be in (0, 1], got {self.lag}")
        if self.horizon[0] > self.horizon[1]:
            raise ValueError(f"horizon min {self.horizon[0]} exceeds max {self.horizon[1]}")
        if self.action_scale <= 0:
            raise ValueError(f"action_scale must be positive, got {self.action_scale}")
        if not (0.0 < self.aperture_rate <= 1.0):
            raise ValueError(f"aperture_rate must be in (0, 1], got {self.aperture_rate}")
        if not (16 <= self.image_size <= 128):
            raise ValueError(f"image_size must be within [16, 128], got {self.image_size}")
        if self.proprio_dim not in (4, 22):
            raise ValueError(f"proprio_dim must be 4 or 22, got {self.proprio_dim}")
        if 'background' not in self.palette or 'gripper' not in self.palette:
            raise ValueError("palette needs 'background' and 'gripper' entries")

    def color(self, role: str) -> Color:
        return self.palette.get(role, self.palette.get('object', (128, 128, 128)))

    def suite_horizon(self, base_steps: int) -> int:
        """Map a controller horizon from the base band into this domain's horizon band"""
        low, high = BASE_HORIZON_BAND
        span = (self.horizon[1] - self.horizon[0]) / (high - low)
        return int(round(self.horizon[0] + (base_steps - low) * span))

    def with_image_size(self, image_size: int) -> "DomainConfig":
        return replace(self, image_size=image_size)

    def to_json(self) -> dict:
        return {
            'name': self.name.value,
            'view': self.view.to_json(),
            'palette': {role: list(rgb) for role, rgb in sorted(self.palette.items())},
            'lag': self.lag,
            'action_scale': self.action_scale,
            'control_hz': self.control_hz,
            'horizon': list(self.horizon),
            'randomization': self.randomization.to_json() if self.randomization else None,
            'aperture_rate': self.aperture_rate,
            'image_size': self.image_size,
            'proprio_dim': self.proprio_dim,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DomainConfig":
        randomization = data.get('randomization')
        return cls(
            name=Domain(data['name']),
            view=View.from_json(data['view']),
            palette={role: tuple(int(c) for c in rgb) for role, rgb in data['palette'].items()},
            lag=float(data['lag']),
            action_scale=float(data['action_scale']),
            control_hz=float(data['control_hz']),
            horizon=tuple(int(v) for v in data['horizon']),
            randomization=Randomization.from_json(randomization) if randomization else None,
            aperture_rate=float(data.get('aperture_rate', 1.0)),
            image_size=int(data.get('image_size', 64)),
            proprio_dim=int(data.get('proprio_dim', 4)),
        )


SOURCE_PALETTE: Dict[str, Color] = {
    'background': (196, 184, 160),
    'gripper': (30, 30, 30),
    'container': (120, 72, 36),
    'vessel': (96, 96, 112),
    'cylinder': (160, 160, 168),
    'chain': (210, 60, 60),
    'object': (128, 128, 128),
    'milk': (245, 245, 245),
    'bread': (205, 150, 80),
    'can': (200, 30, 40),
    'cereal': (230, 200, 40),
    'carrot': (240, 120, 20),
    'last bead': (50, 60, 220),
    'white plug': (250, 250, 235),
}

TARGET_PALETTE: Dict[str, Color] = {
    'background': (84, 104, 128),
    'gripper': (250, 240, 110),
    'container': (40, 150, 90),
    'vessel': (170, 60, 150),
    'cylinder': (60, 40, 30),
    'chain': (40, 200, 210),
    'object': (100, 100, 100),
    'milk': (210, 225, 255),
    'bread': (150, 90, 40),
    'can': (250, 90, 120),
    'cereal': (140, 210, 60),
    'carrot': (255, 160, 70),
    'last bead': (20, 20, 120),
    'white plug': (235, 235, 250),
}

# Third-person view looking at the workspace from the front
SOURCE_VIEW = View(eye=(0.0, -0.9, 0.7), target=(0.0, 0.0, 0.0), scale=0.4)
# Over-the-shoulder first-person view from the back left
TARGET_VIEW = View(eye=(-0.45, 0.55, 0.6), target=(0.0, 0.0, 0.05), scale=0.42)

DEFAULT_DOMAINS: Dict[Domain, DomainConfig] = {
    Domain.SOURCE: DomainConfig(
        name=Domain.SOURCE,
        view=SOURCE_VIEW,
        palette=SOURCE_PALETTE,
        lag=1.0,
        action_scale=0.008,
        control_hz=50.0,
        horizon=(200, 320),
        randomization=Randomization(palette_jitter=40, lag_range=(0.5, 1.0)),
        aperture_rate=0.1,
    ),
    Domain.TARGET: DomainConfig(
        name=Domain.TARGET,
        view=TARGET_VIEW,
        palette=TARGET_PALETTE,
        lag=0.6,
        action_scale=0.15,
        control_hz=2.0,
        horizon=(18, 45),
        aperture_rate=1.0,
    ),
}


def get_domain(domain: Domain, image_size: Optional[int] = None, config_path: Optional[str] = None) -> DomainConfig:
    """Return the default config for a domain, or the JSON override at config_path; an explicit image_size wins"""
    config = DEFAULT_DOMAINS[domain]
    if config_path:
        config = DomainConfig.from_json(json.loads(Path(config_path).read_text(encoding='utf-8')))
        if config.name != domain:
            raise ValueError(f"domain config {config_path} describes {config.name.value}, expected {domain.value}")
    return config if image_size is None else config.with_image_size(image_size)
