"""
WaveGAN Netzwerke - Diskriminatoren

Vier Skalen: I0 (Bild, volle Auflösung), I1 (Bild, halbe Auflösung),
H0 (LH/HL/HH der ersten Zerlegungsstufe), H1 (LH/HL/HH der zweiten Stufe).
Alle Faltungen sind spektral normalisiert.
"""

from typing import Dict, List, Optional

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ConfigError, ShapeError
from engine.tensor import Tensor
from engine.ops import leaky_relu
from engine.conv import avg_downsample
from wavelet.haar import haar_pool, high_band_stack, multi_level_pool
from networks.layers import LRELU_SLOPE, Conv2d, Layer


# scale_id -> (Eingangskanäle, Auflösungsteiler, Startindex der Kanalbreite)
SCALES: Dict[str, tuple] = {
    "I0": (3, 1, 0),
    "I1": (3, 2, 0),
    "H0": (9, 2, 0),
    "H1": (9, 4, 1),
}
IMAGE_SCALES = ("I0", "I1")
HIGH_SCALES = ("H0", "H1")


def prepare_input(scale_id: str, image: Tensor) -> Tensor:
    """Bild -> Eingang der jeweiligen Skala."""
    if scale_id == "I0":
        return image
    if scale_id == "I1":
        return avg_downsample(image)
    if scale_id == "H0":
        return high_band_stack(haar_pool(image))
    if scale_id == "H1":
        return high_band_stack(multi_level_pool(image, 2)[1])
    raise ConfigError(f"Unbekannte Diskriminator-Skala: {scale_id}")


class DiscriminatorNet(Layer):
    """
    Conv(k4, s2, p1)-LReLU solange die Ausdehnung > 4 ist, danach eine
    Faltung über die Restausdehnung auf N×1×1×1-Logits.
    """

    def __init__(self, scale_id: str, image_size: int, base_width: int = 16, sn_iters: int = 1,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(f"d_{scale_id.lower()}")
        if scale_id not in SCALES:
            raise ConfigError(f"Unbekannte Diskriminator-Skala: {scale_id}. Verfügbar: {list(SCALES)}")
        rng = rng or np.random.default_rng(0)
        self.scale_id = scale_id
        in_channels, divisor, start = SCALES[scale_id]
        self.in_channels = in_channels
        extent = image_size // divisor
        if extent < 1 or image_size % divisor:
            raise ShapeError(f"Bildgröße {image_size} passt nicht zu Skala {scale_id}")

        self.stack: List[Conv2d] = []
        channels, i = in_channels, start
        while extent > 4:
            out = min(base_width * 2 ** i, 16 * base_width)
            conv = Conv2d(channels, out, 4, stride=2, padding=1, spectral=True, sn_iters=sn_iters, rng=rng)
            self.stack.append(self.add_child(f"conv{len(self.stack)}", conv))
            channels, extent, i = out, extent // 2, i + 1
        self.head = self.add_child(
            "head", Conv2d(channels, 1, extent, spectral=True, sn_iters=sn_iters, rng=rng))

    def forward_prepared(self, h: Tensor) -> Tensor:
        if h.ndim != 4 or h.shape[1] != self.in_channels:
            raise ShapeError(f"{self.scale_id} erwartet {self.in_channels} Eingangskanäle, nicht {h.shape}")
        for conv in self.stack:
            h = leaky_relu(conv(h), LRELU_SLOPE)
        return self.head(h)

    def forward(self, image: Tensor) -> Tensor:
        if image.ndim != 4 or image.shape[1] != 3:
            raise ShapeError(f"Diskriminator erwartet N×3×H×W, nicht {image.shape}")
        return self.forward_prepared(prepare_input(self.scale_id, image))
