"""
WaveGAN Data - Attribut-Renderer

Zentrale Registry der Attribut-Renderer. Jeder Renderer zeichnet ein
lokalisiertes Merkmal in die glatte Basis eines synthetischen Gesichts;
neue Attribute werden registriert, ohne den Generator anzupassen.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ConfigError


# =============================================================================
# ZEICHENHILFEN
# =============================================================================

@dataclass
class Grid:
    """Pixelkoordinaten (Zeile, Spalte) eines quadratischen Bilds."""
    size: int
    rows: np.ndarray
    cols: np.ndarray

    @classmethod
    def make(cls, size: int) -> "Grid":
        rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
        return cls(size=size, rows=rows, cols=cols)

    def at(self, fraction: float) -> float:
        """Position als Anteil der Bildgröße -> Pixelkoordinate."""
        return fraction * self.size - 0.5


def soft_step(signed_distance: np.ndarray, edge: float = 0.6) -> np.ndarray:
    """≈1 innerhalb (negative Distanz), ≈0 außerhalb, weicher Rand."""
    return 0.5 * (1.0 - np.tanh(signed_distance / edge))


def ellipse_mask(grid: Grid, center: Tuple[float, float], radii: Tuple[float, float], edge: float = 0.8) -> np.ndarray:
    r = np.sqrt(((grid.rows - center[0]) / radii[0]) ** 2 + ((grid.cols - center[1]) / radii[1]) ** 2)
    return soft_step((r - 1.0) * min(radii), edge)


def rect_mask(grid: Grid, top: float, bottom: float, left: float, right: float, edge: float = 0.5) -> np.ndarray:
    vertical = soft_step(np.maximum(top - grid.rows, grid.rows - bottom), edge)
    horizontal = soft_step(np.maximum(left - grid.cols, grid.cols - right), edge)
    return vertical * horizontal


def blend(canvas: np.ndarray, mask: np.ndarray, color) -> None:
    """canvas ← (1 − mask)·canvas + mask·color, in-place."""
    m = mask[..., None]
    canvas *= 1.0 - m
    canvas += m * np.asarray(color, dtype=canvas.dtype)


# =============================================================================
# REGISTRY
# =============================================================================

RenderFunc = Callable[[np.ndarray, bool, np.random.Generator, Grid], None]


@dataclass
class AttributeRenderer:
    """Definition eines Attributs für die Registry"""
    id: str
    name: str
    description: str
    region: str
    render: RenderFunc


_RENDERER_REGISTRY: Dict[str, AttributeRenderer] = {}


def register_renderer(renderer: AttributeRenderer) -> None:
    _RENDERER_REGISTRY[renderer.id] = renderer


def get_renderer(renderer_id: str) -> Optional[AttributeRenderer]:
    return _RENDERER_REGISTRY.get(renderer_id)


def list_renderers() -> List[str]:
    return list(_RENDERER_REGISTRY)


def resolve_renderers(names: List[str]) -> List[AttributeRenderer]:
    """
    Raises:
        ConfigError: unbekanntes Attribut
    """
    missing = [n for n in names if n not in _RENDERER_REGISTRY]
    if missing:
        raise ConfigError(f"Unbekannte Attribute: {missing}. Verfügbar: {list_renderers()}")
    return [_RENDERER_REGISTRY[n] for n in names]


# =============================================================================
# RENDERER
# =============================================================================

def render_eyeglasses(canvas: np.ndarray, present: bool, rng: np.random.Generator, grid: Grid) -> None:
    """Zwei dunkle Gläser mit Steg über der Augenregion."""
    if not present:
        return
    shade = -0.85 + 0.1 * rng.random()
    top, bottom = grid.at(0.38), grid.at(0.52)
    for center in (0.36, 0.64):
        lens = rect_mask(grid, top, bottom, grid.at(center - 0.1), grid.at(center + 0.1))
        blend(canvas, lens, (shade, shade, shade))
    bridge = rect_mask(grid, grid.at(0.42), grid.at(0.45), grid.at(0.46), grid.at(0.54))
    blend(canvas, bridge, (shade, shade, shade))


def render_smile(canvas: np.ndarray, present: bool, rng: np.random.Generator, grid: Grid) -> None:
    """Mund als Bogen; Krümmungsvorzeichen = Lächeln ja/nein."""
    center_row = grid.at(0.72)
    center_col = grid.at(0.5)
    half_width = 0.16 * grid.size
    depth = (0.09 + 0.02 * rng.random()) * grid.size
    sign = 1.0 if present else -1.0
    t = (grid.cols - center_col) / half_width
    curve = center_row + sign * depth * (1.0 - t ** 2) - sign * depth / 2
    thickness = 0.05 * grid.size
    outside = np.maximum(np.abs(grid.rows - curve) - thickness / 2, (np.abs(t) - 1.0) * half_width)
    blend(canvas, soft_step(outside, 0.5), (-0.2, -0.85, -0.75))


def render_dark_hair(canvas: np.ndarray, present: bool, rng: np.random.Generator, grid: Grid) -> None:
    """Haarkappe im oberen Band; dunkel oder hell."""
    jitter = 0.08 * rng.random()
    color = (-0.8 + jitter, -0.85 + jitter, -0.9 + jitter) if present else (0.55 + jitter, 0.4 + jitter, 0.0)
    cap = ellipse_mask(grid, (grid.at(0.26), grid.at(0.5)), (0.2 * grid.size, 0.3 * grid.size))
    band = soft_step(grid.rows - grid.at(0.3), 0.8)
    blend(canvas, cap * band, color)


register_renderer(AttributeRenderer(
    id="eyeglasses",
    name="Brille",
    description="dunkle Rechtecke über der Augenregion",
    region="eyes",
    render=render_eyeglasses,
))

register_renderer(AttributeRenderer(
    id="smile",
    name="Lächeln",
    description="Krümmungsvorzeichen des Mundbogens",
    region="mouth",
    render=render_smile,
))

register_renderer(AttributeRenderer(
    id="dark_hair",
    name="Dunkles Haar",
    description="Intensität des oberen Bands",
    region="hair",
    render=render_dark_hair,
))
