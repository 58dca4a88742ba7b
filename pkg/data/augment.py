"""
WaveGAN Data - Augmentierung

Operatoren A für den augmentierten Zyklusverlust: horizontaler Flip,
additives Rauschen, Farb-Jitter und affine Transformation. Parameter
werden einmal gezogen (sample_params) und können dann auf x und auf
G(x, Δ) identisch angewendet werden; augment_tensor ist differenzierbar.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig
from errors import AugmentError, ShapeError
from engine.tensor import Tensor, as_tensor, no_grad
from engine.ops import add, clamp, flip, grid_sample_bilinear, mean, scale, sub
from engine.conv import conv2d

AUGMENT_KINDS = ("hflip", "noise", "color_jitter", "affine")

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class AugmentOp:
    """
    Ein Augmentierungs-Operator mit seinen Bereichen.

    Jitter-Faktoren werden aus [1 − j, 1 + j] gezogen, Winkel aus
    ±rotation Grad, Verschiebung aus ±translation Pixel, Zoom aus
    [1 − scale, 1 + scale].
    """
    kind: str
    noise_sigma: float = 0.05
    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2
    rotation: float = 15.0
    translation: float = 2.0
    scale: float = 0.1
    seed: int = 0

    def validate(self):
        if self.kind not in AUGMENT_KINDS:
            raise AugmentError(f"Unbekannte Augmentierung: {self.kind}. Verfügbar: {list(AUGMENT_KINDS)}")
        if self.noise_sigma < 0:
            raise AugmentError("noise_sigma darf nicht negativ sein")
        for name in ("brightness", "contrast", "saturation"):
            if not 0 <= getattr(self, name) < 1:
                raise AugmentError(f"{name} muss in [0, 1) liegen")
        if self.scale >= 1:
            raise AugmentError(f"Zoom-Bereich ±{self.scale} enthält 0 (nicht invertierbar)")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class AugmentParams:
    """Konkret gezogene Parameter eines Operators."""
    kind: str
    noise: Optional[np.ndarray] = None
    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0
    angle: float = 0.0
    shift: Tuple[float, float] = (0.0, 0.0)
    zoom: float = 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "noise_std": float(self.noise.std()) if self.noise is not None else 0.0,
            "brightness": self.brightness,
            "contrast": self.contrast,
            "saturation": self.saturation,
            "angle": self.angle,
            "shift": list(self.shift),
            "zoom": self.zoom,
        }


def sample_params(op: AugmentOp, shape: Tuple[int, ...], rng: Optional[np.random.Generator] = None) -> AugmentParams:
    """Zieht Parameter für einen Batch der Form (N, 3, H, W)."""
    op.validate()
    rng = rng if rng is not None else op.rng()
    if op.kind == "hflip":
        return AugmentParams(kind="hflip")
    if op.kind == "noise":
        return AugmentParams(kind="noise", noise=rng.normal(0.0, 1.0, size=shape) * op.noise_sigma)
    if op.kind == "color_jitter":
        b, c, s = (float(rng.uniform(1 - j, 1 + j)) for j in (op.brightness, op.contrast, op.saturation))
        return AugmentParams(kind="color_jitter", brightness=b, contrast=c, saturation=s)
    return AugmentParams(
        kind="affine",
        angle=float(rng.uniform(-op.rotation, op.rotation)),
        shift=(float(rng.uniform(-op.translation, op.translation)),
               float(rng.uniform(-op.translation, op.translation))),
        zoom=float(rng.uniform(1 - op.scale, 1 + op.scale)),
    )


# =============================================================================
# TRANSFORMATIONEN
# =============================================================================

def affine_source_grid(height: int, width: int, angle: float, shift: Tuple[float, float],
                       zoom: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quellkoordinaten für jedes Zielpixel: Rotation um die Bildmitte
    ((H−1)/2, (W−1)/2), Zoom und Verschiebung, invertiert.
    """
    if zoom == 0 or not math.isfinite(zoom):
        raise AugmentError(f"Degenerierter Zoom {zoom}: affine Abbildung nicht invertierbar")
    cr, cc = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    dr = (rows - cr - shift[0]) / zoom
    dc = (cols - cc - shift[1]) / zoom
    theta = math.radians(angle)
    cos, sin = math.cos(theta), math.sin(theta)
    src_r = cr + cos * dr + sin * dc
    src_c = cc - sin * dr + cos * dc
    return src_r, src_c


def _grayscale(u: Tensor) -> Tensor:
    """Luma als 1x1-Faltung, (N, 3, H, W) -> (N, 1, H, W)."""
    weight = as_tensor(_LUMA.reshape(1, 3, 1, 1), like=u)
    return conv2d(u, weight)


def _color_jitter(x: Tensor, params: AugmentParams) -> Tensor:
    # Jitter im [0, 1]-Raum
    u = scale(add(x, as_tensor(1.0, like=x)), 0.5)
    u = scale(u, params.brightness)
    gray_mean = mean(_grayscale(u), axes=(1, 2, 3), keepdims=True)
    u = add(scale(sub(u, gray_mean), params.contrast), gray_mean)
    gray = _grayscale(u)
    u = add(scale(sub(u, gray), params.saturation), gray)
    return sub(scale(u, 2.0), as_tensor(1.0, like=x))


def augment_tensor(x: Tensor, params: AugmentParams) -> Tensor:
    """
    Differenzierbare Anwendung auf einen NCHW-Tensor, Ergebnis auf
    [−1, 1] begrenzt.

    Raises:
        AugmentError: degenerierte affine Abbildung
        ShapeError: Rauschfeld passt nicht
    """
    if x.ndim != 4:
        raise ShapeError(f"Augmentierung erwartet NCHW, nicht {x.shape}")
    if params.kind == "hflip":
        out = flip(x, axis=3)
    elif params.kind == "noise":
        if params.noise is None or params.noise.shape != x.shape:
            raise ShapeError(f"Rauschfeld {None if params.noise is None else params.noise.shape} statt {x.shape}")
        out = add(x, as_tensor(params.noise, like=x))
    elif params.kind == "color_jitter":
        out = _color_jitter(x, params)
    elif params.kind == "affine":
        rows, cols = affine_source_grid(x.shape[2], x.shape[3], params.angle, params.shift, params.zoom)
        out = grid_sample_bilinear(x, rows, cols)
    else:
        raise AugmentError(f"Unbekannte Augmentierung: {params.kind}")
    return clamp(out, -1.0, 1.0)


def apply_augment(op: AugmentOp, image: np.ndarray, params: Optional[AugmentParams] = None) -> np.ndarray:
    """
    Augmentiert ein Bild H×W×3 (oder einen Batch N×3×H×W) ohne Tape.

    Args:
        params: bereits gezogene Parameter; sonst aus op.seed
    """
    image = np.asarray(image)
    single = image.ndim == 3
    batch = image.transpose(2, 0, 1)[None] if single else image
    if params is None:
        params = sample_params(op, batch.shape)
    with no_grad():
        out = augment_tensor(Tensor(np.ascontiguousarray(batch)), params).data
    return np.ascontiguousarray(out[0].transpose(1, 2, 0)) if single else out


def augment_from_config(config: RunConfig, kind: Optional[str] = None, seed: int = 0) -> Optional[AugmentOp]:
    """AugmentOp für den Zyklusverlust; None wenn cycle_augment = none."""
    kind = kind or config.cycle_augment
    if kind == "none":
        return None
    op = AugmentOp(
        kind=kind,
        noise_sigma=config.aug_noise_sigma,
        brightness=config.aug_jitter,
        contrast=config.aug_jitter,
        saturation=config.aug_jitter,
        rotation=config.aug_rotation,
        translation=config.aug_translation,
        scale=config.aug_scale,
        seed=seed,
    )
    op.validate()
    return op
