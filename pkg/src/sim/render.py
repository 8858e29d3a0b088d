# Standard library imports
from typing import List, Tuple

# Third-party imports
import numpy as np

# Local application imports
from src.sim.domains import DomainConfig, View
from src.sim.world import CONTAINER_RADIUS, CYLINDER_RADIUS, ROLE_VESSEL, WorldState

OBJECT_RADIUS = 0.025
LINK_RADIUS = 0.012
UP = np.array([0.0, 0.0, 1.0])


def view_basis(view: View) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forward, right and up unit vectors of an orthographic camera"""
    forward = np.asarray(view.target, dtype=np.float64) - np.asarray(view.eye, dtype=np.float64)
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, UP)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)
    return forward, right, up


def project(points: np.ndarray, view: View, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """World points (N, 3) to continuous pixel coordinates (col, row) and camera depth"""
    forward, right, up = view_basis(view)
    rel = np.atleast_2d(points) - np.asarray(view.target, dtype=np.float64)
    px = rel @ right / view.scale
    py = rel @ up / view.scale
    cols = (px + 1.0) * size / 2.0
    rows = (1.0 - py) * size / 2.0
    return np.stack([cols, rows], axis=1), rel @ forward


def unproject(col: float, row: float, height: float, view: View, size: int) -> np.ndarray:
    """Intersect the pixel's viewing ray with the horizontal plane z = height"""
    forward, right, up = view_basis(view)
    px = 2.0 * col / size - 1.0
    py = 1.0 - 2.0 * row / size
    origin = np.asarray(view.target, dtype=np.float64) + px * view.scale * right + py * view.scale * up
    if abs(forward[2]) < 1e-9:
        return np.array([origin[0], origin[1], height])
    travel = (height - origin[2]) / forward[2]
    return origin + travel * forward


def _pixel_centres(size: int) -> Tuple[np.ndarray, np.ndarray]:
    centres = np.arange(size) + 0.5
    return np.meshgrid(centres, centres)


def _disc(image: np.ndarray, centre: np.ndarray, radius_px: float, color, grid) -> None:
    cols, rows = grid
    mask = (cols - centre[0]) ** 2 + (rows - centre[1]) ** 2 <= radius_px ** 2
    image[mask] = color


def _box(image: np.ndarray, col0: float, col1: float, row0: float, row1: float, color, grid) -> None:
    cols, rows = grid
    mask = (cols >= col0) & (cols <= col1) & (rows >= row0) & (rows <= row1)
    image[mask] = color


def render(state: WorldState, domain: DomainConfig) -> np.ndarray:
    """Rasterize a state into an HxWx3 uint8 image from the domain's view"""
    size = domain.image_size
    view = domain.view
    px_per_m = size / (2.0 * view.scale)
    grid = _pixel_centres(size)
    image = np.empty((size, size, 3), dtype=np.uint8)
    image[:] = domain.color('background')

    # Flat mats first, then everything else far-to-near
    for cont in state.containers:
        centre, _ = project(cont.pos, view, size)
        _disc(image, centre[0], CONTAINER_RADIUS * px_per_m, domain.color(cont.name), grid)

    drawables: List[tuple] = []
    if state.center_pos is not None:
        drawables.append((state.center_pos, CYLINDER_RADIUS, domain.color('cylinder')))
    if state.chain is not None:
        drawables.extend((link, LINK_RADIUS, domain.color('chain')) for link in state.chain[1:])
    for obj in state.objects:
        radius = CONTAINER_RADIUS * 0.8 if obj.role == ROLE_VESSEL else OBJECT_RADIUS
        drawables.append((obj.pos, radius, domain.color(obj.name)))

    points = np.stack([d[0] for d in drawables])
    centres, depth = project(points, view, size)
    for index in np.argsort(-depth, kind='stable'):
        _, radius, color = drawables[index]
        _disc(image, centres[index], radius * px_per_m, color, grid)

    _draw_gripper(image, state, domain, grid)
    return image


def _draw_gripper(image: np.ndarray, state: WorldState, domain: DomainConfig, grid) -> None:
    """Palm bar above two fingers whose separation encodes the aperture"""
    size = domain.image_size
    unit = size / 64.0
    centre, _ = project(state.gripper_pos, domain.view, size)
    col, row = centre[0]
    color = domain.color('gripper')
    half_gap = unit * (1.0 + 3.0 * float(np.clip(state.gripper_aperture, 0.0, 1.0)))
    finger = unit
    _box(image, col - half_gap - finger, col + half_gap + finger, row - 3.0 * unit, row - 2.0 * unit, color, grid)
    _box(image, col - half_gap - finger, col - half_gap, row - 2.0 * unit, row + 2.0 * unit, color, grid)
    _box(image, col + half_gap, col + half_gap + finger, row - 2.0 * unit, row + 2.0 * unit, color, grid)
