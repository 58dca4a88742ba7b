"""
WaveGAN Diagnostics - Metriken

Band-Energien, Attribut-Edit-Genauigkeit und Monotonie der
Interpolation über α.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ConfigError, NumericalError, ShapeError
from engine.tensor import Tensor, no_grad
from wavelet.haar import BAND_NAMES, HIGH_BANDS, multi_level_pool
from networks.classifier import ClassifierNet
from data.pseudo_label import check_gate

# (x: N×3×H×W, Bedingung (N, K)) -> Bild; GeneratorNet oder Ersatz
GeneratorFn = Callable[[Tensor, np.ndarray], Tensor]


def as_batch(images) -> np.ndarray:
    """H×W×3, Liste davon oder N×3×H×W -> N×3×H×W float."""
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = arr.transpose(2, 0, 1)[None]
    elif arr.ndim == 4 and arr.shape[1] != 3 and arr.shape[-1] == 3:
        arr = arr.transpose(0, 3, 1, 2)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise ShapeError(f"Bilder müssen N×3×H×W oder H×W×3 sein, nicht {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return np.ascontiguousarray(arr)


def run_generator(g: GeneratorFn, images: np.ndarray, condition: np.ndarray) -> np.ndarray:
    """G(x, c) ohne Tape."""
    with no_grad():
        return g(Tensor(images), condition).data


# =============================================================================
# BAND-ENERGIEN
# =============================================================================

@dataclass
class BandEnergyReport:
    """Quadratsummen pro Band und Stufe; Stufe i+1 zerlegt LL von Stufe i."""
    levels: List[Dict[str, float]] = field(default_factory=list)
    total: float = 0.0

    def high_energy(self, level: Optional[int] = None) -> float:
        """LH + HL + HH einer Stufe (1-basiert) oder aller Stufen."""
        chosen = self.levels if level is None else [self.levels[level - 1]]
        return sum(e[b] for e in chosen for b in HIGH_BANDS)

    def parseval_sum(self) -> float:
        """Hochbänder aller Stufen + LL der letzten Stufe = Gesamtenergie."""
        return self.high_energy() + self.levels[-1]["ll"]

    def fractions(self, level: int = 1) -> Dict[str, float]:
        if self.total <= 0:
            return {b: 0.0 for b in BAND_NAMES}
        return {b: v / self.total for b, v in self.levels[level - 1].items()}

    def to_dict(self) -> Dict:
        return {"total": self.total, "levels": self.levels}


def band_energy_report(x, levels: int = 1) -> BandEnergyReport:
    """
    Raises:
        ShapeError: Ausdehnung nicht durch 2^levels teilbar
    """
    batch = as_batch(x).astype(np.float64)
    bands = multi_level_pool(Tensor(batch), levels)
    return BandEnergyReport(levels=[b.energies() for b in bands], total=float(np.sum(batch ** 2)))


def high_band_ratio(generated, source, levels: int = 1) -> float:
    """
    Hochband-Energie generiert / Quelle; ≈ 1 wenn Details erhalten bleiben.

    Raises:
        NumericalError: Quelle ohne Hochband-Energie
    """
    src = band_energy_report(source, levels).high_energy()
    if src <= 0:
        raise NumericalError("Quelle hat keine Hochband-Energie; Verhältnis undefiniert")
    return band_energy_report(generated, levels).high_energy() / src


# =============================================================================
# KLASSIFIKATION
# =============================================================================

def predict_probabilities(classifier: ClassifierNet, images, batch_size: int = 64) -> np.ndarray:
    """p (N, K) für eine Bildmenge, Klassifikator im Eval-Modus."""
    batch = as_batch(images).astype(np.float32)
    was_training = classifier.training
    classifier.eval()
    try:
        with no_grad():
            out = [classifier.probabilities(Tensor(batch[s:s + batch_size]))
                   for s in range(0, batch.shape[0], batch_size)]
    finally:
        classifier.train(was_training)
    return np.concatenate(out, axis=0)


def edit_delta(labels: np.ndarray, k: int, flip: bool = True) -> np.ndarray:
    """Δ, das nur Attribut k kippt (oder 0 für flip=False)."""
    labels = np.asarray(labels, dtype=np.float32)
    delta = np.zeros_like(labels)
    if flip:
        delta[:, k] = 1.0 - 2.0 * labels[:, k]
    return delta


def attribute_edit_accuracy(g: GeneratorFn, classifier: ClassifierNet, images, labels: np.ndarray,
                            k: int, flip: bool = True, classifier_accuracy: Optional[float] = None,
                            gate: float = 0.95, override: bool = False, batch_size: int = 32) -> float:
    """
    Anteil der Bilder, deren bearbeitete Version G(x, Δ_k) vom Klassifikator
    mit dem Zielwert von Attribut k vorhergesagt wird.

    Das Gate gilt immer; ohne bekannte Klassifikator-Genauigkeit nur mit
    override=True.

    Raises:
        GateError: Klassifikator unter dem Gate
        ConfigError: leere Bildmenge oder ungültiges k
    """
    check_gate(classifier_accuracy, gate, override)
    batch = as_batch(images).astype(np.float32)
    labels = np.asarray(labels, dtype=np.float32)
    if batch.shape[0] == 0:
        raise ConfigError("Edit-Genauigkeit braucht mindestens ein Bild")
    if not 0 <= k < labels.shape[1]:
        raise ConfigError(f"Attribut-Index {k} außerhalb von [0, {labels.shape[1]})")
    delta = edit_delta(labels, k, flip)
    target = labels[:, k] + delta[:, k]
    hits = 0
    for s in range(0, batch.shape[0], batch_size):
        edited = run_generator(g, batch[s:s + batch_size], delta[s:s + batch_size])
        probs = predict_probabilities(classifier, edited)
        hits += int(np.sum((probs[:, k] > 0.5) == (target[s:s + batch_size] > 0.5)))
    return hits / batch.shape[0]


def mean_edit_accuracy(g: GeneratorFn, classifier: ClassifierNet, images, labels: np.ndarray,
                       **kwargs) -> Dict[str, float]:
    """Edit-Genauigkeit pro Attribut und Mittel über K."""
    K = np.asarray(labels).shape[1]
    per = {f"acc_{k}": attribute_edit_accuracy(g, classifier, images, labels, k, **kwargs) for k in range(K)}
    per["acc_mean"] = float(np.mean(list(per.values())))
    return per


# =============================================================================
# INTERPOLATION
# =============================================================================

def alpha_sweep(start: float, stop: float, step: float) -> List[float]:
    """Inklusive Sweep; 0.4:2.0:0.2 ergibt 9 Werte."""
    if step <= 0:
        raise ConfigError(f"Schrittweite muss positiv sein, nicht {step}")
    if stop < start:
        raise ConfigError(f"Sweep-Ende {stop} vor Anfang {start}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


DEFAULT_SWEEP = alpha_sweep(0.4, 2.0, 0.2)


def interpolation_monotonicity(g: GeneratorFn, classifier: ClassifierNet, images, labels: np.ndarray,
                               k: int, alphas: Sequence[float] = DEFAULT_SWEEP, tol: float = 0.0) -> float:
    """
    Anteil der Bilder, deren Klassifikator-Wahrscheinlichkeit für den
    Zielwert von Attribut k über den α-Sweep nicht fällt.
    """
    batch = as_batch(images).astype(np.float32)
    labels = np.asarray(labels, dtype=np.float32)
    if batch.shape[0] == 0:
        raise ConfigError("Monotonie braucht mindestens ein Bild")
    delta = edit_delta(labels, k)
    target = labels[:, k] + delta[:, k]
    curves = []
    for alpha in alphas:
        probs = predict_probabilities(classifier, run_generator(g, batch, alpha * delta))[:, k]
        curves.append(np.where(target > 0.5, probs, 1.0 - probs))
    curves = np.stack(curves, axis=1)
    monotone = np.all(np.diff(curves, axis=1) >= -tol, axis=1)
    return float(np.mean(monotone))
