"""
WaveGAN Training - Verluste

Adversarial (Bild und Hochfrequenz), Zyklus, Attribut-Klassifikation,
Attribut-Regression und die gewichtete Summe.
"""

from typing import Optional, Sequence, Union

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import NumericalError, ShapeError
from engine.tensor import Tensor, as_tensor
from engine.ops import (
    abs, add, div, mean, mean_abs_error, mul, reduce, reshape, scale, softplus, sqrt, sub,
)
from training.models import AttributeDelta, LossComponents, LossWeights

Logits = Union[Tensor, Sequence[Tensor]]

# Glättung in d(a, b) = sqrt(Σ(a−b)² + ε); hält den Gradienten bei a = b endlich
DISTANCE_EPS = 1e-18


# =============================================================================
# ADVERSARIAL
# =============================================================================

def _average_scales(logits: Logits) -> Tensor:
    """Mittel der Logits über die Skalen (jeweils N×1×1×1)."""
    if isinstance(logits, Tensor):
        return logits
    logits = list(logits)
    if not logits:
        raise ShapeError("Keine Logits übergeben")
    total = logits[0]
    for item in logits[1:]:
        total = add(total, item)
    return scale(total, 1.0 / len(logits))


def _adversarial(real: Optional[Logits], fake: Logits, side: str) -> Tensor:
    fake_avg = _average_scales(fake)
    if side == "generator":
        # nicht-saturierend: −log σ(fake)
        return mean(softplus(-fake_avg))
    if side == "discriminator":
        if real is None:
            raise ValueError("Diskriminator-Seite braucht Logits realer Bilder")
        real_avg = _average_scales(real)
        # −log σ(real) − log(1 − σ(fake))
        return add(mean(softplus(-real_avg)), mean(softplus(fake_avg)))
    raise ValueError(f"Unbekannte Seite: {side}")


def adv_loss_image(d_real_logits: Optional[Logits], d_fake_logits: Logits, side: str) -> Tensor:
    """Adversarialer Verlust der Bild-Diskriminatoren D_I0/D_I1."""
    return _adversarial(d_real_logits, d_fake_logits, side)


def adv_loss_highfreq(dh_real_logits: Optional[Logits], dh_fake_logits: Logits, side: str) -> Tensor:
    """Adversarialer Verlust der Hochfrequenz-Diskriminatoren D_H0/D_H1."""
    return _adversarial(dh_real_logits, dh_fake_logits, side)


# =============================================================================
# ZYKLUS
# =============================================================================

def cycle_loss(x: Tensor, x_cyc: Tensor) -> Tensor:
    """
    Mittlerer absoluter Fehler pro Element. Mit Augmentierung übergibt der
    Aufrufer A(x) und G(A(G(x, Δ)), −Δ).
    """
    if x.shape != x_cyc.shape:
        raise ShapeError(f"cycle_loss: Formen ungleich {x.shape} vs {x_cyc.shape}")
    return mean_abs_error(x, x_cyc)


# =============================================================================
# ATTRIBUTE
# =============================================================================

def attr_classification_loss(logits: Tensor, targets: np.ndarray, delta: AttributeDelta) -> Tensor:
    """
    Binäre Kreuzentropie auf Logits, maskiert mit 𝟙{|Δ^k| = 1},
    summiert über K und gemittelt über den Batch.
    """
    if logits.ndim != 2:
        raise ShapeError(f"Logits müssen (N, K) sein, nicht {logits.shape}")
    y = as_tensor(np.broadcast_to(np.asarray(targets, dtype=logits.dtype), logits.shape), like=logits)
    mask = as_tensor(np.broadcast_to(delta.mask, logits.shape), like=logits)
    # softplus(z) − y·z = −[y log σ(z) + (1−y) log(1−σ(z))]
    per_element = sub(softplus(logits), mul(logits, y))
    return scale(reduce("sum", mul(per_element, mask)), 1.0 / logits.shape[0])


def _normalize_rows(f: Tensor) -> Tensor:
    norms_sq = reduce("l2_norm_sq", f, axes=1, keepdims=True)
    if np.any(norms_sq.data <= 0):
        raise NumericalError("Feature-Vektor mit Norm 0 ist nicht normierbar")
    return div(f, sqrt(norms_sq))


def _distance(a: Tensor, b: Tensor) -> Tensor:
    sq = reduce("l2_norm_sq", sub(a, b), axes=1)
    return sqrt(add(sq, as_tensor(DISTANCE_EPS, like=sq)))


def attr_regression_loss(f0: Tensor, f1: Tensor, f_alpha: Tensor, alpha: float) -> Tensor:
    """
    |(d(f̂0, f̂α) − d(f̂1, f̂0)) − (α − 1)| gemittelt über den Batch,
    f̂ = f / ∥f∥₂.
    """
    feats = []
    for f in (f0, f1, f_alpha):
        if f.ndim == 1:
            f = reshape(f, (1, f.shape[0]))
        feats.append(f)
    f0, f1, f_alpha = feats
    if not f0.shape == f1.shape == f_alpha.shape:
        raise ShapeError(f"Feature-Formen ungleich: {f0.shape}, {f1.shape}, {f_alpha.shape}")
    n0, n1, na = (_normalize_rows(f) for f in (f0, f1, f_alpha))
    residual = sub(sub(_distance(n0, na), _distance(n1, n0)), as_tensor(alpha - 1.0, like=f0))
    return mean(abs(residual))


# =============================================================================
# GESAMTZIEL
# =============================================================================

def total_loss(components: LossComponents, weights: LossWeights) -> Tensor:
    """λ-gewichtete Summe; deaktivierte Terme (None oder λ = 0) fallen heraus."""
    terms = [
        (components.gan_i, weights.lambda_gan_i),
        (components.gan_h, weights.lambda_gan_h),
        (components.cyc, weights.lambda_cyc),
        (components.ac, weights.lambda_ac),
        (components.ar, weights.lambda_ar),
    ]
    total: Optional[Tensor] = None
    for value, weight in terms:
        if value is None or weight == 0:
            continue
        term = scale(value, weight)
        total = term if total is None else add(total, term)
    return total if total is not None else Tensor(np.zeros((), dtype=np.float32))
