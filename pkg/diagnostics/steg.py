"""
WaveGAN Diagnostics - Steganographie-Probe

ȳ = G(x, 0), x̄ = G(ȳ, 0), h = ȳ − x̄. Ein Generator, der Information
versteckt statt Details zu erhalten, hinterlässt ein h ≠ 0; SRE ist das
mittlere |h|.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ConfigError
from image_io import make_panel
from diagnostics.metrics import GeneratorFn, as_batch, band_energy_report, run_generator

REPORT_HEADER = "index\tsre\tsre_unit\tx_high\ty_bar_high\th_high\thigh_ratio"


@dataclass
class StegReport:
    """
    Ergebnis der Probe für ein Bild (H×W×3-Arrays).

    sre ist mean|h| in Bildeinheiten [−1, 1]; sre_unit dasselbe in
    Pixeleinheiten [0, 1].
    """
    x: np.ndarray
    y_bar: np.ndarray
    x_bar: np.ndarray
    h: np.ndarray
    sre: float
    band_energy: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def sre_unit(self) -> float:
        return self.sre / 2.0

    def high_ratio(self) -> float:
        x_high = sum(self.band_energy["x"][b] for b in ("lh", "hl", "hh"))
        y_high = sum(self.band_energy["y_bar"][b] for b in ("lh", "hl", "hh"))
        return y_high / x_high if x_high > 0 else float("nan")

    def tsv_row(self, index: int) -> str:
        highs = [sum(self.band_energy[key][b] for b in ("lh", "hl", "hh")) for key in ("x", "y_bar", "h")]
        values = [self.sre, self.sre_unit] + highs + [self.high_ratio()]
        return "\t".join([str(index)] + [f"{v:.6g}" for v in values])

    def to_dict(self) -> Dict:
        return {"sre": self.sre, "sre_unit": self.sre_unit, "band_energy": self.band_energy}


def _num_attributes(g: GeneratorFn, num_attributes: Optional[int]) -> int:
    K = num_attributes if num_attributes is not None else getattr(g, "num_attributes", None)
    if K is None:
        raise ConfigError("Anzahl der Attribute unbekannt; num_attributes angeben")
    return K


def steg_probe(g: GeneratorFn, x, num_attributes: Optional[int] = None, levels: int = 1) -> StegReport:
    """
    Probe mit Δ = 0 für ein einzelnes Bild (H×W×3 oder 1×3×H×W).

    Raises:
        ShapeError: Geometrie passt nicht zum Generator
    """
    batch = as_batch(x)
    if batch.shape[0] != 1:
        raise ConfigError(f"steg_probe erwartet genau ein Bild, nicht {batch.shape[0]}")
    zero = np.zeros((1, _num_attributes(g, num_attributes)), dtype=batch.dtype)
    y_bar = run_generator(g, batch, zero)
    x_bar = run_generator(g, y_bar, zero)
    h = y_bar - x_bar

    def image(arr):
        return np.ascontiguousarray(arr[0].transpose(1, 2, 0))

    return StegReport(
        x=image(batch),
        y_bar=image(y_bar),
        x_bar=image(x_bar),
        h=image(h),
        sre=float(np.mean(np.abs(h))),
        band_energy={
            "x": band_energy_report(batch, levels).levels[0],
            "y_bar": band_energy_report(y_bar, levels).levels[0],
            "h": band_energy_report(h, levels).levels[0],
        },
    )


def probe_dataset(g: GeneratorFn, images, num_attributes: Optional[int] = None) -> List[StegReport]:
    batch = as_batch(images)
    if batch.shape[0] == 0:
        raise ConfigError("SRE braucht mindestens ein Bild")
    return [steg_probe(g, batch[i:i + 1], num_attributes) for i in range(batch.shape[0])]


def sre(g: GeneratorFn, images, num_attributes: Optional[int] = None) -> float:
    """
    Mittel der Proben-SRE über alle Bilder, in Pixeleinheiten [0, 1].

    Raises:
        ConfigError: leere Bildmenge
    """
    reports = probe_dataset(g, images, num_attributes)
    return float(np.mean([r.sre_unit for r in reports]))


def steg_panel(report: StegReport, amplify: float = 5.0) -> np.ndarray:
    """x | ȳ | x̄ | h·amplify (auf [−1, 1] begrenzt)."""
    h = np.clip(report.h * amplify, -1.0, 1.0)
    return make_panel([report.x, report.y_bar, report.x_bar, h])


def write_probe_report(path: str, reports: Sequence[StegReport]) -> str:
    """report.tsv: SRE und Hochband-Energien pro Bild."""
    lines = ["# sre in Bildeinheiten [-1, 1], sre_unit in Pixeleinheiten [0, 1]", REPORT_HEADER]
    lines += [r.tsv_row(i) for i, r in enumerate(reports)]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path
