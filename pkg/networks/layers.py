"""
WaveGAN Netzwerke - Layer

Basisklasse mit expliziter Registrierung von Parametern, Puffern und
Kind-Layern sowie die Bausteine der Netze: Conv2d (optional spektral
normalisiert), Linear, AdaIN und die Residual-Blöcke.
"""

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import NumericalError, ShapeError
from engine.tensor import Tensor, as_tensor, parameter
from engine.ops import (
    add, instance_norm, leaky_relu, linear, mul, reduce, reshape, slice_axis, div,
)
from engine.conv import avg_downsample, conv2d, upsample_nearest

LRELU_SLOPE = 0.2


def he_std(fan_in: int) -> float:
    """Streuung der Initialisierung für LeakyReLU(0.2)."""
    return float(np.sqrt(2.0 / ((1.0 + LRELU_SLOPE ** 2) * fan_in)))


# =============================================================================
# BASISKLASSE
# =============================================================================

class Layer:
    """
    Basisklasse aller Netze.

    Parameter sind Tensor-Blätter mit requires_grad; Puffer sind reine
    numpy-Arrays (z.B. Power-Iteration-Vektoren der Spektralnorm) und
    erhalten nie Gradienten.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.training = True
        self._params: Dict[str, Tensor] = {}
        self._buffers: Dict[str, np.ndarray] = {}
        self._children: Dict[str, "Layer"] = {}

    # -------------------------------------------------------------------------
    # Registrierung
    # -------------------------------------------------------------------------

    def add_param(self, key: str, data: np.ndarray) -> Tensor:
        p = parameter(np.asarray(data, dtype=np.float32), name=key)
        self._params[key] = p
        return p

    def add_buffer(self, key: str, data: np.ndarray) -> np.ndarray:
        self._buffers[key] = np.asarray(data, dtype=np.float32)
        return self._buffers[key]

    def add_child(self, key: str, layer: "Layer") -> "Layer":
        layer.name = key
        self._children[key] = layer
        return layer

    def buffer(self, key: str) -> np.ndarray:
        return self._buffers[key]

    def set_buffer(self, key: str, value: np.ndarray):
        self._buffers[key] = value

    # -------------------------------------------------------------------------
    # Aufzählung
    # -------------------------------------------------------------------------

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for key, p in self._params.items():
            yield prefix + key, p
        for key, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{key}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for key, b in self._buffers.items():
            yield prefix + key, b
        for key, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{key}.")

    def modules(self) -> Iterator["Layer"]:
        yield self
        for child in self._children.values():
            yield from child.modules()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    # -------------------------------------------------------------------------
    # Zustand
    # -------------------------------------------------------------------------

    def train(self, mode: bool = True) -> "Layer":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Layer":
        return self.train(False)

    def set_requires_grad(self, flag: bool):
        for p in self.parameters():
            p.requires_grad = flag

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def to_dtype(self, dtype) -> "Layer":
        """Wandelt alle Parameter und Puffer in-place um (64 Bit für Gradienten-Checks)."""
        for m in self.modules():
            for p in m._params.values():
                p.data = p.data.astype(dtype)
            for key in list(m._buffers):
                m._buffers[key] = m._buffers[key].astype(dtype)
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True):
        own = dict(self.named_parameters())
        buffers = {prefix + key: (m, key) for m, prefix in self._with_prefixes() for key in m._buffers}
        if strict:
            missing = (set(own) | set(buffers)) - set(state)
            unexpected = set(state) - (set(own) | set(buffers))
            if missing or unexpected:
                raise KeyError(f"state_dict passt nicht: fehlend={sorted(missing)}, unerwartet={sorted(unexpected)}")
        for name, value in state.items():
            if name in own:
                p = own[name]
                if p.shape != value.shape:
                    raise ShapeError(f"{name}: Form {value.shape} statt {p.shape}")
                p.data = np.array(value, dtype=p.dtype)
            elif name in buffers:
                m, key = buffers[name]
                if m._buffers[key].shape != value.shape:
                    raise ShapeError(f"{name}: Form {value.shape} statt {m._buffers[key].shape}")
                m._buffers[key] = np.array(value, dtype=m._buffers[key].dtype)

    def copy_from(self, other: "Layer"):
        self.load_state_dict(other.state_dict())

    def _with_prefixes(self, prefix: str = "") -> Iterator[Tuple["Layer", str]]:
        yield self, prefix
        for key, child in self._children.items():
            yield from child._with_prefixes(f"{prefix}{key}.")

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


# =============================================================================
# SPEKTRALNORM
# =============================================================================

def _l2normalize(v: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    return v / (np.linalg.norm(v) + eps)


def spectral_normalize(weight: Tensor, u: np.ndarray, v: np.ndarray, iters: int = 1,
                       update: bool = True) -> Tuple[Tensor, np.ndarray, np.ndarray]:
    """
    weight / σ̂ mit σ̂ = uᵀ W v aus `iters` Power-Iterationen auf W als
    (out × rest)-Matrix. Die Iteration selbst läuft ohne Gradient; σ̂
    geht über das Tape in den Gradienten ein.

    Returns:
        (normalisiertes Gewicht, neues u, neues v)
    """
    w2 = weight.data.reshape(weight.shape[0], -1)
    if not np.any(w2):
        raise NumericalError("Spektralnorm einer Null-Gewichtsmatrix")
    if update:
        for _ in range(iters):
            v = _l2normalize(w2.T @ u)
            u = _l2normalize(w2 @ v)
    outer = Tensor(np.outer(u, v).astype(weight.dtype))
    sigma = reduce("sum", mul(reshape(weight, w2.shape), outer))
    return div(weight, sigma), u, v


# =============================================================================
# BAUSTEINE
# =============================================================================

class Conv2d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                 padding: int = 0, groups: int = 1, bias: bool = True, spectral: bool = False,
                 sn_iters: int = 1, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.stride, self.padding, self.groups = stride, padding, groups
        self.spectral, self.sn_iters = spectral, sn_iters
        fan_in = (in_channels // groups) * kernel * kernel
        self.weight = self.add_param(
            "weight", rng.normal(0.0, he_std(fan_in), (out_channels, in_channels // groups, kernel, kernel)))
        self.bias = self.add_param("bias", np.zeros(out_channels)) if bias else None
        if spectral:
            self.add_buffer("sn_u", _l2normalize(rng.normal(size=out_channels)))
            self.add_buffer("sn_v", _l2normalize(rng.normal(size=fan_in)))

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def effective_weight(self) -> Tensor:
        if not self.spectral:
            return self.weight
        w, u, v = spectral_normalize(self.weight, self.buffer("sn_u"), self.buffer("sn_v"),
                                     self.sn_iters, update=self.training)
        if self.training:
            self.set_buffer("sn_u", u.astype(self.weight.dtype))
            self.set_buffer("sn_v", v.astype(self.weight.dtype))
        return w

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.effective_weight(), self.bias, self.stride, self.padding, self.groups)


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, bias: bool = True,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.weight = self.add_param("weight", rng.normal(0.0, he_std(in_features), (out_features, in_features)))
        self.bias = self.add_param("bias", np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)


def adain_modulate(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    """γ · instance_norm(x) + β mit γ, β der Form (N, C)."""
    N, C = x.shape[:2]
    if gamma.shape != (N, C) or beta.shape != (N, C):
        raise ShapeError(f"AdaIN: γ/β {gamma.shape}/{beta.shape} passen nicht zu {x.shape}")
    g = reshape(gamma, (N, C, 1, 1))
    b = reshape(beta, (N, C, 1, 1))
    return add(mul(instance_norm(x), g), b)


class AdaIN(Layer):
    """
    Adaptive Instance Normalization mit linearer Abbildung K -> 2C.
    Initialisiert auf γ=1, β=0 (Gewicht 0), also Identitätsmodulation.
    """

    def __init__(self, channels: int, cond_dim: int):
        super().__init__()
        self.channels, self.cond_dim = channels, cond_dim
        self.weight = self.add_param("weight", np.zeros((2 * channels, cond_dim)))
        self.bias = self.add_param("bias", np.concatenate([np.ones(channels), np.zeros(channels)]))

    def forward(self, x: Tensor, condition: Tensor) -> Tensor:
        if condition.ndim != 2 or condition.shape[1] != self.cond_dim:
            raise ShapeError(f"Bedingung hat Form {condition.shape}, erwartet (N, {self.cond_dim})")
        if condition.shape[0] != x.shape[0]:
            raise ShapeError(f"Batchgrößen ungleich: {condition.shape[0]} vs {x.shape[0]}")
        gb = linear(condition, self.weight, self.bias)
        C = self.channels
        return adain_modulate(x, slice_axis(gb, 1, 0, C), slice_axis(gb, 1, C, 2 * C))


def _norm_act(x: Tensor) -> Tensor:
    return leaky_relu(instance_norm(x), LRELU_SLOPE)


class ResBlock(Layer):
    """IN-LReLU-Conv-IN-LReLU-Conv + Identität."""

    def __init__(self, channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = self.add_child("conv1", Conv2d(channels, channels, 3, padding=1, rng=rng))
        self.conv2 = self.add_child("conv2", Conv2d(channels, channels, 3, padding=1, rng=rng))

    def residual_out(self) -> Conv2d:
        return self.conv2

    def forward(self, x: Tensor) -> Tensor:
        h = self.conv1(_norm_act(x))
        h = self.conv2(_norm_act(h))
        return add(x, h)


class AdaINResBlock(Layer):
    """AdaIN-LReLU-Conv-AdaIN-LReLU-Conv + Identität; AdaIN getrieben von α·Δ."""

    def __init__(self, channels: int, cond_dim: int, rng: np.random.Generator):
        super().__init__()
        self.norm1 = self.add_child("norm1", AdaIN(channels, cond_dim))
        self.conv1 = self.add_child("conv1", Conv2d(channels, channels, 3, padding=1, rng=rng))
        self.norm2 = self.add_child("norm2", AdaIN(channels, cond_dim))
        self.conv2 = self.add_child("conv2", Conv2d(channels, channels, 3, padding=1, rng=rng))

    def residual_out(self) -> Conv2d:
        return self.conv2

    def forward(self, x: Tensor, condition: Tensor) -> Tensor:
        h = self.conv1(leaky_relu(self.norm1(x, condition), LRELU_SLOPE))
        h = self.conv2(leaky_relu(self.norm2(h, condition), LRELU_SLOPE))
        return add(x, h)


class DownResBlock(Layer):
    """IN-LReLU-Conv(Cin)-Downsample-IN-LReLU-Conv(Cout) + Downsample(Conv1x1)."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = self.add_child("conv1", Conv2d(in_channels, in_channels, 3, padding=1, rng=rng))
        self.conv2 = self.add_child("conv2", Conv2d(in_channels, out_channels, 3, padding=1, rng=rng))
        self.shortcut = self.add_child("shortcut", Conv2d(in_channels, out_channels, 1, rng=rng))

    def residual_out(self) -> Conv2d:
        return self.conv2

    def forward(self, x: Tensor) -> Tensor:
        h = avg_downsample(self.conv1(_norm_act(x)))
        h = self.conv2(_norm_act(h))
        return add(avg_downsample(self.shortcut(x)), h)


class UpResBlock(Layer):
    """IN-LReLU-Conv(mid)-Upsample-IN-LReLU-Conv(Cout) + Upsample(Conv1x1)."""

    def __init__(self, in_channels: int, mid_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = self.add_child("conv1", Conv2d(in_channels, mid_channels, 3, padding=1, rng=rng))
        self.conv2 = self.add_child("conv2", Conv2d(mid_channels, out_channels, 3, padding=1, rng=rng))
        self.shortcut = self.add_child("shortcut", Conv2d(in_channels, out_channels, 1, rng=rng))

    def residual_out(self) -> Conv2d:
        return self.conv2

    def forward(self, x: Tensor) -> Tensor:
        h = upsample_nearest(self.conv1(_norm_act(x)))
        h = self.conv2(_norm_act(h))
        return add(upsample_nearest(self.shortcut(x)), h)


def zero_layer(layer: Layer):
    """Setzt alle Parameter eines Layers auf 0."""
    for p in layer.parameters():
        p.data = np.zeros_like(p.data)


def as_condition(condition, like: Tensor) -> Tensor:
    """Bedingung α·Δ als (N, K)-Tensor im Datentyp von `like`."""
    data = condition.data if isinstance(condition, Tensor) else condition
    cond = as_tensor(np.asarray(data), like=like)
    if cond.ndim == 1:
        cond = Tensor(np.broadcast_to(cond.data, (like.shape[0], cond.shape[0])).copy())
    return cond
