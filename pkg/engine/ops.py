"""
WaveGAN Tensor-Engine - Operationen

Elementweise Operationen, Reduktionen und strukturelle Operationen,
jeweils mit analytischer Rückwärtsfunktion.

Broadcasting ist bewusst eingeschränkt: gleiche Formen, Skalare, oder
Tensoren gleichen Rangs mit Ausdehnung 1 (z.B. ein Vektor pro Kanal
als (N|1, C, 1, 1) über NCHW). Ein Vektor der Länge C wird über
NCHW automatisch als (1, C, 1, 1) gelesen.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import NumericalError, ShapeError
from engine.tensor import Tensor, as_tensor, make_result

Axes = Optional[Union[int, Tuple[int, ...]]]

ELEMENTWISE_KINDS = (
    "add", "sub", "mul", "div", "scale", "leaky_relu", "sigmoid", "tanh",
    "log", "abs", "sqrt", "softplus", "clamp", "neg",
)
REDUCE_KINDS = ("mean", "sum", "l1_norm", "l2_norm_sq")


# =============================================================================
# BROADCASTING
# =============================================================================

def _broadcast_shape(a: Tensor, b: Tensor) -> Tuple[int, ...]:
    if a.shape == b.shape:
        return a.shape
    if b.ndim == 0:
        return a.shape
    if a.ndim == 0:
        return b.shape
    if a.ndim != b.ndim:
        raise ShapeError(f"Formen nicht kompatibel: {a.shape} vs {b.shape}")
    out = []
    for da, db in zip(a.shape, b.shape):
        if da == db or db == 1 or da == 1:
            out.append(max(da, db))
        else:
            raise ShapeError(f"Formen nicht kompatibel: {a.shape} vs {b.shape}")
    return tuple(out)


def _align_channel_vector(a: Tensor, b: Tensor) -> Tensor:
    """Liest einen Vektor der Länge C als (1, C, 1, 1) über einem NCHW-Tensor."""
    if a.ndim == 4 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return reshape(b, (1, b.shape[0], 1, 1))
    return b


# =============================================================================
# ELEMENTWEISE OPERATIONEN
# =============================================================================

def add(a: Tensor, b: Tensor) -> Tensor:
    b = _align_channel_vector(a, b)
    _broadcast_shape(a, b)
    return make_result("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    b = _align_channel_vector(a, b)
    _broadcast_shape(a, b)
    return make_result("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    b = _align_channel_vector(a, b)
    _broadcast_shape(a, b)
    ad, bd = a.data, b.data
    return make_result("mul", ad * bd, (a, b), lambda g: (g * bd, g * ad))


def div(a: Tensor, b: Tensor) -> Tensor:
    b = _align_channel_vector(a, b)
    _broadcast_shape(a, b)
    if np.any(b.data == 0):
        raise NumericalError("Division durch 0")
    ad, bd = a.data, b.data
    return make_result("div", ad / bd, (a, b), lambda g: (g / bd, -g * ad / (bd * bd)))


def scale(a: Tensor, factor: float) -> Tensor:
    f = a.dtype.type(factor)
    return make_result("scale", a.data * f, (a,), lambda g: (g * f,))


def neg(a: Tensor) -> Tensor:
    return make_result("neg", -a.data, (a,), lambda g: (-g,))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    s = a.dtype.type(slope)
    positive = a.data > 0
    out = np.where(positive, a.data, a.data * s)
    return make_result("leaky_relu", out, (a,), lambda g: (np.where(positive, g, g * s),))


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _stable_sigmoid(a.data)
    return make_result("sigmoid", s, (a,), lambda g: (g * s * (1 - s),))


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    return make_result("tanh", t, (a,), lambda g: (g * (1 - t * t),))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NumericalError("Logarithmus eines nicht-positiven Werts")
    ad = a.data
    return make_result("log", np.log(ad), (a,), lambda g: (g / ad,))


def abs(a: Tensor) -> Tensor:  # noqa: A001 - Name folgt der Operationsart
    sign = np.sign(a.data)
    return make_result("abs", np.abs(a.data), (a,), lambda g: (g * sign,))


def sqrt(a: Tensor) -> Tensor:
    if np.any(a.data < 0):
        raise NumericalError("Wurzel eines negativen Werts")
    r = np.sqrt(a.data)

    def _backward(g):
        if np.any(r == 0):
            raise NumericalError("Gradient der Wurzel bei 0 ist unendlich")
        return (g * 0.5 / r,)

    return make_result("sqrt", r, (a,), _backward)


def softplus(a: Tensor) -> Tensor:
    """log(1 + exp(a)), numerisch stabil."""
    out = np.logaddexp(a.dtype.type(0), a.data)
    s = _stable_sigmoid(a.data)
    return make_result("softplus", out, (a,), lambda g: (g * s,))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data >= lo) & (a.data <= hi)
    out = np.clip(a.data, lo, hi)
    return make_result("clamp", out, (a,), lambda g: (g * inside,))


def elementwise(op_kind: str, a: Tensor, b: Optional[Tensor] = None, **kwargs) -> Tensor:
    """
    Einheitlicher Einstieg für alle elementweisen Operationen.

    Args:
        op_kind: eine aus ELEMENTWISE_KINDS
        a, b: Operanden (b nur für binäre Operationen)
        kwargs: factor (scale), slope (leaky_relu), lo/hi (clamp)
    """
    binary = {"add": add, "sub": sub, "mul": mul, "div": div}
    unary = {
        "sigmoid": sigmoid, "tanh": tanh, "log": log, "abs": abs,
        "sqrt": sqrt, "softplus": softplus, "neg": neg,
    }
    if op_kind in binary:
        if b is None:
            raise ShapeError(f"Operation '{op_kind}' braucht zwei Operanden")
        return binary[op_kind](a, as_tensor(b, like=a))
    if op_kind in unary:
        return unary[op_kind](a)
    if op_kind == "scale":
        return scale(a, kwargs["factor"])
    if op_kind == "leaky_relu":
        return leaky_relu(a, kwargs.get("slope", 0.2))
    if op_kind == "clamp":
        return clamp(a, kwargs.get("lo", -1.0), kwargs.get("hi", 1.0))
    raise ValueError(f"Unbekannte Operation: {op_kind}")


# =============================================================================
# REDUKTIONEN
# =============================================================================

def _normalize_axes(a: Tensor, axes: Axes) -> Tuple[int, ...]:
    if axes is None:
        return tuple(range(a.ndim))
    if isinstance(axes, int):
        axes = (axes,)
    normalized = []
    for ax in axes:
        if not -a.ndim <= ax < a.ndim:
            raise ShapeError(f"Achse {ax} ungültig für Form {a.shape}")
        normalized.append(ax % a.ndim)
    return tuple(sorted(set(normalized)))


def _expand(g: np.ndarray, a: Tensor, axes: Tuple[int, ...], keepdims: bool) -> np.ndarray:
    if not keepdims:
        for ax in axes:
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, a.shape)


def reduce(op_kind: str, a: Tensor, axes: Axes = None, keepdims: bool = False) -> Tensor:
    """
    Reduktion über `axes` (alle Achsen, falls None).

    l1_norm(x - y) / Elementanzahl ist der mittlere absolute Fehler pro
    Pixel, der für den Zyklusverlust und den SRE verwendet wird.
    """
    if a.size == 0:
        raise ShapeError("Reduktion eines leeren Tensors")
    ax = _normalize_axes(a, axes)
    count = int(np.prod([a.shape[i] for i in ax])) if ax else 1

    if op_kind == "sum":
        out = a.data.sum(axis=ax, keepdims=keepdims)
        backward_fn = lambda g: (_expand(g, a, ax, keepdims),)
    elif op_kind == "mean":
        out = a.data.mean(axis=ax, keepdims=keepdims)
        inv = a.dtype.type(1.0 / count)
        backward_fn = lambda g: (_expand(g, a, ax, keepdims) * inv,)
    elif op_kind == "l1_norm":
        sign = np.sign(a.data)
        out = np.abs(a.data).sum(axis=ax, keepdims=keepdims)
        backward_fn = lambda g: (_expand(g, a, ax, keepdims) * sign,)
    elif op_kind == "l2_norm_sq":
        ad = a.data
        out = (ad * ad).sum(axis=ax, keepdims=keepdims)
        backward_fn = lambda g: (_expand(g, a, ax, keepdims) * 2 * ad,)
    else:
        raise ValueError(f"Unbekannte Reduktion: {op_kind}")
    return make_result(op_kind, np.asarray(out, dtype=a.dtype), (a,), backward_fn)


def mean(a: Tensor, axes: Axes = None, keepdims: bool = False) -> Tensor:
    return reduce("mean", a, axes, keepdims)


def sum(a: Tensor, axes: Axes = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return reduce("sum", a, axes, keepdims)


def mean_abs_error(a: Tensor, b: Tensor) -> Tensor:
    """Mittlerer absoluter Fehler pro Element."""
    if a.shape != b.shape:
        raise ShapeError(f"Formen ungleich: {a.shape} vs {b.shape}")
    return scale(reduce("l1_norm", sub(a, b)), 1.0 / a.size)


# =============================================================================
# STRUKTURELLE OPERATIONEN
# =============================================================================

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape {a.shape} -> {shape} unmöglich") from e
    return make_result("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat braucht mindestens einen Tensor")
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(s != r for i, (s, r) in enumerate(zip(t.shape, ref)) if i != axis % len(ref)):
            raise ShapeError(f"concat: Formen {t.shape} und {ref} passen nicht")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    return make_result("concat", out, tuple(tensors), lambda g: tuple(np.split(g, bounds, axis=axis)))


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= a.shape[axis]:
        raise ShapeError(f"Ausschnitt [{start}:{stop}] ungültig für Achse {axis} von {a.shape}")
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def _backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return make_result("slice", a.data[index].copy(), (a,), _backward)


def flip(a: Tensor, axis: int) -> Tensor:
    out = np.flip(a.data, axis=axis).copy()
    return make_result("flip", out, (a,), lambda g: (np.flip(g, axis=axis).copy(),))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x (N, F) @ weight (O, F)^T + bias (O,)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear: Eingabe {x.shape} passt nicht zu Gewicht {weight.shape}")
    xd, wd = x.data, weight.data
    out = xd @ wd.T
    parents = (x, weight)
    if bias is not None:
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"linear: Bias {bias.shape} passt nicht zu {weight.shape}")
        out = out + bias.data
        parents = (x, weight, bias)

    def _backward(g):
        grads = [g @ wd, g.T @ xd]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    return make_result("linear", out, parents, _backward)


def instance_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Standardisierung pro Sample und Kanal über H, W; ohne lernbare Affine.
    """
    if x.ndim != 4:
        raise ShapeError(f"instance_norm erwartet NCHW, nicht {x.shape}")
    if x.shape[2] * x.shape[3] < 2:
        raise ShapeError("instance_norm: räumliche Größe 1x1 ist degeneriert")
    xd = x.data
    mu = xd.mean(axis=(2, 3), keepdims=True)
    var = xd.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = (xd - mu) * inv

    def _backward(g):
        g_mean = g.mean(axis=(2, 3), keepdims=True)
        gx_mean = (g * xhat).mean(axis=(2, 3), keepdims=True)
        return (inv * (g - g_mean - xhat * gx_mean),)

    return make_result("instance_norm", xhat, (x,), _backward)


def grid_sample_bilinear(x: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """
    Bilineares Abtasten eines NCHW-Tensors an Quellkoordinaten (rows, cols)
    der Form (H_out, W_out); Ränder werden repliziert.
    """
    if x.ndim != 4:
        raise ShapeError(f"grid_sample erwartet NCHW, nicht {x.shape}")
    if rows.shape != cols.shape or rows.ndim != 2:
        raise ShapeError("grid_sample: Koordinatenfelder müssen gleiche 2-D-Form haben")
    N, C, H, W = x.shape
    r = np.clip(rows, 0, H - 1)
    c = np.clip(cols, 0, W - 1)
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    r1 = np.minimum(r0 + 1, H - 1)
    c1 = np.minimum(c0 + 1, W - 1)
    wr = (r - r0).astype(x.dtype)
    wc = (c - c0).astype(x.dtype)
    corners = [
        (r0, c0, (1 - wr) * (1 - wc)),
        (r0, c1, (1 - wr) * wc),
        (r1, c0, wr * (1 - wc)),
        (r1, c1, wr * wc),
    ]
    xd = x.data
    out = np.zeros((N, C) + rows.shape, dtype=x.dtype)
    for ri, ci, w in corners:
        out += xd[:, :, ri, ci] * w

    def _backward(g):
        flat = np.zeros((H * W, N * C), dtype=x.dtype)
        for ri, ci, w in corners:
            idx = (ri * W + ci).ravel()
            vals = (g * w).reshape(N * C, -1).T
            np.add.at(flat, idx, vals)
        return (flat.T.reshape(N, C, H, W),)

    return make_result("grid_sample", out, (x,), _backward)
