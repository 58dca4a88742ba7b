"""
WaveGAN Netzwerke - Generator

Encoder-Decoder mit AdaIN-Bottleneck und Wavelet-Skip-Verbindungen:
Encoder-Abgriff i wird Haar-zerlegt, LL verworfen, LH/HL/HH einzeln auf
volle Auflösung entpoolt und an die Decoder-Aktivierung der Stufe n−i
angehängt (Decoder-Eingang = 4x Nennbreite).
"""

from typing import Dict, List, Optional

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ConfigError, ShapeError
from engine.tensor import Tensor
from engine.ops import concat, tanh
from wavelet.haar import band_components
from networks.layers import (
    AdaINResBlock, Conv2d, DownResBlock, Layer, ResBlock, UpResBlock, as_condition, zero_layer,
)


# Skip-Modus -> zerlegte Bänder (None = roher Abgriff)
SKIP_MODES: Dict[str, Optional[tuple]] = {
    "high": ("lh", "hl", "hh"),
    "low": ("ll",),
    "all": ("ll", "lh", "hl", "hh"),
    "vanilla": None,
    "none": (),
}


def skip_multiplier(mode: str) -> int:
    """Zusätzliche Kanäle pro Decoder-Stufe als Vielfaches der Nennbreite."""
    if mode not in SKIP_MODES:
        raise ConfigError(f"Unbekannter Skip-Modus: {mode}. Verfügbar: {list(SKIP_MODES)}")
    bands = SKIP_MODES[mode]
    return 1 if bands is None else len(bands)


class GeneratorNet(Layer):
    """
    G(x, α·Δ): from_rgb, 2x DownResBlock, Bottleneck (3x Res, AdaIN-Res, 2x Res),
    2x UpResBlock, to_rgb, tanh.
    """

    def __init__(self, width: int = 16, num_attributes: int = 3, skip_mode: str = "high",
                 rng: Optional[np.random.Generator] = None):
        super().__init__("generator")
        rng = rng or np.random.default_rng(0)
        self.width = width
        self.num_attributes = num_attributes
        self.skip_mode = skip_mode
        m = skip_multiplier(skip_mode)
        w = width

        self.from_rgb = self.add_child("from_rgb", Conv2d(3, w, 3, padding=1, rng=rng))
        self.down1 = self.add_child("down1", DownResBlock(w, 2 * w, rng))
        self.down2 = self.add_child("down2", DownResBlock(2 * w, 4 * w, rng))

        self.bottleneck: List[Layer] = []
        for i in range(6):
            block = AdaINResBlock(4 * w, num_attributes, rng) if i == 3 else ResBlock(4 * w, rng)
            self.bottleneck.append(self.add_child(f"bottleneck{i}", block))

        self.up1 = self.add_child("up1", UpResBlock(4 * w * (1 + m), 4 * w, 2 * w, rng))
        self.up2 = self.add_child("up2", UpResBlock(2 * w * (1 + m), 2 * w, w, rng))
        self.to_rgb = self.add_child("to_rgb", Conv2d(w * (1 + m), 3, 3, padding=1, rng=rng))

    # -------------------------------------------------------------------------
    # Skip-Verbindungen
    # -------------------------------------------------------------------------

    def skip_transform(self, tap: Tensor) -> List[Tensor]:
        """Kanalblöcke, die aus einem Encoder-Abgriff an den Decoder gehen."""
        bands = SKIP_MODES[self.skip_mode]
        if bands is None:
            return [tap]
        if not bands:
            return []
        return band_components(tap, bands)

    def _join(self, activation: Tensor, tap: Tensor, drop_skips: bool) -> Tensor:
        parts = self.skip_transform(tap)
        if not parts:
            return activation
        if drop_skips:
            parts = [Tensor(np.zeros_like(p.data)) for p in parts]
        return concat([activation] + parts, axis=1)

    # -------------------------------------------------------------------------
    # Forward
    # -------------------------------------------------------------------------

    def forward(self, x: Tensor, condition, drop_skips: bool = False) -> Tensor:
        """
        Args:
            x: Bild N×3×H×W in [−1, 1], H und W durch 4 teilbar
            condition: α·Δ als (N, K) oder (K,)
            drop_skips: Skip-Kanäle durch Nullen ersetzen (Ablationstests)
        """
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"Generator erwartet N×3×H×W, nicht {x.shape}")
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ShapeError(f"Bildgröße {x.shape[2]}x{x.shape[3]} nicht durch 4 teilbar")
        cond = as_condition(condition, x)
        if cond.shape != (x.shape[0], self.num_attributes):
            raise ShapeError(f"Bedingung {cond.shape} passt nicht zu ({x.shape[0]}, {self.num_attributes})")

        e1 = self.from_rgb(x)
        e2 = self.down1(e1)
        e3 = self.down2(e2)

        h = e3
        for block in self.bottleneck:
            h = block(h, cond) if isinstance(block, AdaINResBlock) else block(h)

        h = self.up1(self._join(h, e3, drop_skips))
        h = self.up2(self._join(h, e2, drop_skips))
        out = self.to_rgb(self._join(h, e1, drop_skips))
        return tanh(out)

    # -------------------------------------------------------------------------
    # Konstruktion
    # -------------------------------------------------------------------------

    def identity_init(self) -> "GeneratorNet":
        """
        Durchleitungsgewichte: die Ausgabe vor tanh ist exakt das Eingabebild.

        RGB läuft über die Kanäle 0–2 der Shortcut-Pfade; alle Residualzweige
        enden in Null-Faltungen. up1 liefert den LL-Anteil von E², up2 ergänzt
        dessen LH/HL/HH-Anteile, to_rgb ergänzt die von E¹.
        """
        if self.skip_mode != "high":
            raise ConfigError("identity_init nur für skip_mode=high")
        w = self.width

        for conv in [self.from_rgb, self.to_rgb, self.down1.shortcut, self.down2.shortcut,
                     self.up1.shortcut, self.up2.shortcut]:
            zero_layer(conv)
        for block in [self.down1, self.down2, self.up1, self.up2] + self.bottleneck:
            zero_layer(block.residual_out())

        for c in range(3):
            self.from_rgb.weight.data[c, c, 1, 1] = 1.0
            self.down1.shortcut.weight.data[c, c, 0, 0] = 1.0
            self.down2.shortcut.weight.data[c, c, 0, 0] = 1.0
            self.up1.shortcut.weight.data[c, c, 0, 0] = 1.0
            for block in range(4):
                self.up2.shortcut.weight.data[c, block * 2 * w + c, 0, 0] = 1.0
                self.to_rgb.weight.data[c, block * w + c, 1, 1] = 1.0
        return self
