"""
WaveGAN Tensor-Engine - Gradienten-Check

Vergleicht analytische Gradienten (backward) mit zentralen finiten
Differenzen. Gedacht für den 64-Bit-Modus (Tensor.astype(np.float64)).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from engine.tensor import Tensor, backward, no_grad

GRAD_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    """Maximaler relativer Fehler pro Blatt."""
    errors: Dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tol

    def to_dict(self) -> Dict:
        return {"errors": dict(self.errors), "tol": self.tol, "passed": self.passed}


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = GRAD_FLOOR) -> np.ndarray:
    """
    |a − n| / max(floor, |a|, |n|), elementweise.

    Unterhalb von `floor` liegt das Rundungsrauschen der finiten Differenzen;
    dort gilt die Schranke absolut (tol · floor).
    """
    denom = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / denom


def numerical_gradient(f: Callable[[], Tensor], leaf: Tensor, step: float = 1e-4,
                       indices: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Zentrale Differenzen (f(x+h) − f(x−h)) / 2h für die Einträge `indices`
    (flache Indizes; alle, falls None). Nicht ausgewertete Einträge bleiben 0.
    """
    grad = np.zeros(leaf.data.size, dtype=np.float64)
    if not leaf.data.flags.c_contiguous:
        leaf.data = np.ascontiguousarray(leaf.data)
    flat = leaf.data.reshape(-1)
    if indices is None:
        indices = np.arange(flat.size)
    with no_grad():
        for i in indices:
            original = flat[i]
            flat[i] = original + step
            plus = f().item()
            flat[i] = original - step
            minus = f().item()
            flat[i] = original
            grad[i] = (plus - minus) / (2 * step)
    return grad.reshape(leaf.shape)


def check_gradients(f: Callable[[], Tensor], leaves: Sequence[Tensor], step: float = 1e-4,
                    tol: float = 1e-4, max_entries_per_leaf: Optional[int] = None,
                    rng: Optional[np.random.Generator] = None, floor: float = GRAD_FLOOR) -> GradCheckReport:
    """
    Analytischer vs. numerischer Gradient für jedes Blatt.

    Args:
        f: parameterlose Funktion, die den skalaren Verlust aus den Blättern berechnet
        leaves: Blätter mit requires_grad=True (Daten werden in-place gestört)
        max_entries_per_leaf: Stichprobe pro Blatt (große Netze); None = alle
        floor: Betrag, ab dem der Fehler relativ gemessen wird
    """
    for leaf in leaves:
        leaf.zero_grad()
    loss = f()
    backward(loss)

    rng = rng or np.random.default_rng(0)
    report = GradCheckReport(tol=tol)
    for n, leaf in enumerate(leaves):
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
        if max_entries_per_leaf is not None and leaf.size > max_entries_per_leaf:
            indices = rng.choice(leaf.size, size=max_entries_per_leaf, replace=False)
        else:
            indices = np.arange(leaf.size)
        numeric = numerical_gradient(f, leaf, step, indices)
        err = relative_error(analytic.reshape(-1)[indices], numeric.reshape(-1)[indices], floor)
        report.errors[leaf.name or f"leaf_{n}"] = float(err.max()) if err.size else 0.0
    return report
