"""
WaveGAN Wavelet - Haar-Pooling

Vier feste 2x2-Kernel (LL, LH, HL, HH) als depthwise Faltungen mit
Schrittweite 2; Unpooling über die transponierte Faltung je Band und
anschließende Summe. Erster Buchstabe = Zeilenfilter, zweiter =
Spaltenfilter.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ShapeError
from engine.tensor import Tensor
from engine.ops import add, concat
from engine.conv import conv2d, transposed_conv2d


# =============================================================================
# KERNEL
# =============================================================================

_LOW = np.array([1.0, 1.0])
_HIGH = np.array([-1.0, 1.0])

# k_AB[i][j] = A[i]·B[j] / 2  (Filter jeweils 1/√2-normiert)
HAAR_KERNELS: Dict[str, np.ndarray] = {
    "ll": 0.5 * np.outer(_LOW, _LOW),
    "lh": 0.5 * np.outer(_LOW, _HIGH),
    "hl": 0.5 * np.outer(_HIGH, _LOW),
    "hh": 0.5 * np.outer(_HIGH, _HIGH),
}
BAND_NAMES = ("ll", "lh", "hl", "hh")
HIGH_BANDS = ("lh", "hl", "hh")


def band_kernel(name: str, channels: int, dtype=np.float32) -> Tensor:
    """Depthwise-Gewicht (C, 1, 2, 2) für ein Band."""
    if name not in HAAR_KERNELS:
        raise ValueError(f"Unbekanntes Band: {name}")
    k = np.broadcast_to(HAAR_KERNELS[name], (channels, 1, 2, 2))
    return Tensor(np.array(k, dtype=dtype))


# =============================================================================
# BÄNDER
# =============================================================================

@dataclass
class WaveletBands:
    """Die vier Teilbänder einer Pooling-Stufe, je N×C×(H/2)×(W/2)."""
    ll: Tensor
    lh: Tensor
    hl: Tensor
    hh: Tensor
    level: int = 1

    def __post_init__(self):
        shapes = {b.shape for b in self.as_list()}
        if len(shapes) != 1:
            raise ShapeError(f"Bänder haben unterschiedliche Formen: {sorted(shapes)}")
        if self.ll.ndim != 4:
            raise ShapeError(f"Bänder müssen NCHW sein, nicht {self.ll.shape}")
        if self.level < 1:
            raise ShapeError(f"Stufe muss >= 1 sein, nicht {self.level}")

    def as_list(self) -> List[Tensor]:
        return [self.ll, self.lh, self.hl, self.hh]

    def band(self, name: str) -> Tensor:
        return getattr(self, name)

    def high(self) -> List[Tensor]:
        return [self.lh, self.hl, self.hh]

    def energies(self) -> Dict[str, float]:
        """Quadratsumme pro Band."""
        return {name: float(np.sum(self.band(name).data.astype(np.float64) ** 2)) for name in BAND_NAMES}


# =============================================================================
# POOLING / UNPOOLING
# =============================================================================

def haar_pool(x: Tensor, level: int = 1) -> WaveletBands:
    if x.ndim != 4:
        raise ShapeError(f"haar_pool erwartet NCHW, nicht {x.shape}")
    H, W = x.shape[2:]
    if H % 2 or W % 2 or H < 2 or W < 2:
        raise ShapeError(f"haar_pool braucht gerade Ausdehnung, nicht {H}x{W}")
    C = x.shape[1]
    bands = {
        name: conv2d(x, band_kernel(name, C, x.dtype), stride=2, groups=C)
        for name in BAND_NAMES
    }
    return WaveletBands(level=level, **bands)


def unpool_band(band: Tensor, name: str) -> Tensor:
    """Volle-Auflösung-Komponente eines einzelnen Bands (ohne Summation)."""
    C = band.shape[1]
    return transposed_conv2d(band, band_kernel(name, C, band.dtype), stride=2, groups=C)


def _unpool_sum(bands: WaveletBands, names: Sequence[str]) -> Tensor:
    parts = [unpool_band(bands.band(n), n) for n in names]
    out = parts[0]
    for p in parts[1:]:
        out = add(out, p)
    return out


def haar_unpool(bands: WaveletBands) -> Tensor:
    """Exakte Inverse von haar_pool."""
    return _unpool_sum(bands, BAND_NAMES)


def high_freq_reconstruct(bands: WaveletBands) -> Tensor:
    """haar_unpool mit LL = 0: der Hochfrequenzanteil der Quelle."""
    return _unpool_sum(bands, HIGH_BANDS)


def low_freq_reconstruct(bands: WaveletBands) -> Tensor:
    """Nur LL entpoolt; x = low_freq_reconstruct + high_freq_reconstruct."""
    return unpool_band(bands.ll, "ll")


def multi_level_pool(x: Tensor, levels: int) -> List[WaveletBands]:
    """Stufe i+1 zerlegt das LL-Band von Stufe i."""
    if levels < 1:
        raise ShapeError(f"levels muss >= 1 sein, nicht {levels}")
    if x.ndim != 4:
        raise ShapeError(f"multi_level_pool erwartet NCHW, nicht {x.shape}")
    factor = 2 ** levels
    if x.shape[2] % factor or x.shape[3] % factor:
        raise ShapeError(f"Ausdehnung {x.shape[2]}x{x.shape[3]} nicht durch {factor} teilbar")
    result = []
    current = x
    for level in range(1, levels + 1):
        bands = haar_pool(current, level=level)
        result.append(bands)
        current = bands.ll
    return result


def high_band_stack(bands: WaveletBands) -> Tensor:
    """LH | HL | HH kanalweise verkettet (3C Kanäle, halbe Auflösung)."""
    return concat(bands.high(), axis=1)


def band_components(x: Tensor, names: Sequence[str]) -> List[Tensor]:
    """
    Zerlegt x und entpoolt die gewählten Bänder einzeln auf volle Auflösung.
    Grundlage der Wavelet-Skip-Verbindungen im Generator.
    """
    bands = haar_pool(x)
    return [unpool_band(bands.band(n), n) for n in names]
