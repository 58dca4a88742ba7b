"""
WaveGAN Training - Optimierung

Adam mit Bias-Korrektur (TTUR über getrennte Lernraten je Optimierer),
EMA des Generators und der gestufte Lernraten-Zeitplan.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Union

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import NumericalError, ShapeError
from engine.tensor import Tensor
from networks.layers import Layer
from training.models import LearningRates, TrainConfig

Params = Union[Layer, Mapping[str, Tensor]]


def _named(params: Params) -> Dict[str, Tensor]:
    return dict(params.named_parameters()) if isinstance(params, Layer) else dict(params)


def param_group(nets: Mapping[str, Layer]) -> Dict[str, Tensor]:
    """Parameter mehrerer Netze unter "netz.param"-Namen (ein Optimierer für D_I0 + D_I1)."""
    return {f"{key}.{name}": p for key, net in nets.items() for name, p in net.named_parameters()}


# =============================================================================
# ADAM
# =============================================================================

@dataclass
class OptimState:
    """Momente pro Parameter (nach Name), Schrittzähler und Hyperparameter."""
    lr: float
    beta1: float = 0.0
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Params, lr: float, beta1: float = 0.0, beta2: float = 0.999,
                   eps: float = 1e-8) -> "OptimState":
        named = _named(params)
        return cls(
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
            m={name: np.zeros_like(p.data) for name, p in named.items()},
            v={name: np.zeros_like(p.data) for name, p in named.items()},
        )

    def arrays(self) -> Dict[str, np.ndarray]:
        """Momente für den Checkpoint."""
        out = {f"m.{name}": value for name, value in self.m.items()}
        out.update({f"v.{name}": value for name, value in self.v.items()})
        return out

    def load_arrays(self, arrays: Mapping[str, np.ndarray]):
        for name in self.m:
            self.m[name] = np.array(arrays[f"m.{name}"], dtype=self.m[name].dtype)
            self.v[name] = np.array(arrays[f"v.{name}"], dtype=self.v[name].dtype)


def adam_step(state: OptimState, params: Params, grads: Optional[Mapping[str, np.ndarray]] = None,
              lr: Optional[float] = None):
    """
    Ein Adam-Schritt in-place auf `params`.

    Args:
        grads: Gradienten nach Parametername; fehlt er, wird `param.grad`
            verwendet (None = 0)
        lr: überschreibt state.lr (Zeitplan)

    Raises:
        NumericalError: nicht-endlicher Gradient; es wird nichts verändert
    """
    named = _named(params)
    resolved: Dict[str, np.ndarray] = {}
    for name, p in named.items():
        g = grads.get(name) if grads is not None else p.grad
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape:
            raise ShapeError(f"Gradient {name}: Form {g.shape} statt {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"Nicht-endlicher Gradient für {name}")
        resolved[name] = g

    if lr is not None:
        state.lr = lr
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in named.items():
        g = resolved[name].astype(p.dtype)
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m.astype(p.dtype), v.astype(p.dtype)
        m_hat = m / c1
        v_hat = v / c2
        p.data = (p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)


# =============================================================================
# EMA
# =============================================================================

def ema_update(shadow: Params, live: Params, decay: float):
    """shadow ← decay·shadow + (1 − decay)·live; der Schatten bekommt nie Gradienten."""
    shadow_named, live_named = _named(shadow), _named(live)
    if set(shadow_named) != set(live_named):
        raise ShapeError("EMA: Parameternamen von Schatten und Live-Netz verschieden")
    for name, s in shadow_named.items():
        l = live_named[name]
        if s.shape != l.shape:
            raise ShapeError(f"EMA {name}: Form {s.shape} statt {l.shape}")
        s.data = (decay * s.data + (1.0 - decay) * l.data).astype(s.dtype)
        s.grad = None


# =============================================================================
# LERNRATEN
# =============================================================================

def lr_schedule(epoch: int, config: TrainConfig) -> LearningRates:
    """
    Konstant für epoch < epochs, danach ×decay_rate je volle decay_every
    Epochen der Abklingphase.
    """
    if epoch < 0:
        raise ValueError(f"Epoche muss >= 0 sein, nicht {epoch}")
    base = config.base_lrs
    if epoch < config.epochs:
        return LearningRates(base.g, base.d_i, base.d_h)
    factor = config.decay_rate ** math.floor((epoch - config.epochs) / config.decay_every)
    return LearningRates(base.g * factor, base.d_i * factor, base.d_h * factor)


def grad_norm(params: Params) -> float:
    """Globale L2-Norm der aktuellen Gradienten."""
    total = 0.0
    for p in _named(params).values():
        if p.grad is not None:
            total += float(np.sum(p.grad.astype(np.float64) ** 2))
    return math.sqrt(total)
