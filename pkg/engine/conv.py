"""
WaveGAN Tensor-Engine - Faltungen

conv2d (Kreuzkorrelation, ohne Kernel-Spiegelung) und transposed_conv2d
als exakt adjungierte Operation. Fensterbildung über
numpy.lib.stride_tricks.sliding_window_view, Produkt über einsum.
"""

from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ShapeError
from engine.tensor import Tensor, make_result


# =============================================================================
# GEOMETRIE
# =============================================================================

def conv_output_extent(size: int, kernel: int, stride: int, padding: int) -> int:
    """⌊(H + 2p − k) / s⌋ + 1"""
    return (size + 2 * padding - kernel) // stride + 1


def tconv_output_extent(size: int, kernel: int, stride: int, padding: int) -> int:
    """(H − 1)·s − 2p + k"""
    return (size - 1) * stride - 2 * padding + kernel


def _check_geometry(in_channels: int, weight_shape: Tuple[int, ...], stride: int, padding: int, groups: int):
    if len(weight_shape) != 4 or weight_shape[2] != weight_shape[3]:
        raise ShapeError(f"Gewicht muss (O, C/groups, k, k) sein, nicht {weight_shape}")
    if stride < 1 or padding < 0 or groups < 1:
        raise ShapeError(f"Ungültige Geometrie: stride={stride}, padding={padding}, groups={groups}")
    out_channels, cg = weight_shape[0], weight_shape[1]
    if in_channels % groups != 0 or out_channels % groups != 0:
        raise ShapeError(f"Kanäle ({in_channels} -> {out_channels}) nicht durch groups={groups} teilbar")
    if cg * groups != in_channels:
        raise ShapeError(f"Gewicht erwartet {cg * groups} Eingangskanäle, erhalten {in_channels}")


# =============================================================================
# NUMPY-KERNE
# =============================================================================

def _windows(x: np.ndarray, k: int, stride: int, padding: int, groups: int, out_hw: Tuple[int, int]) -> np.ndarray:
    """Fenster (N, G, Cg, Ho, Wo, k, k) über dem gepolsterten Eingang."""
    N, C = x.shape[:2]
    Ho, Wo = out_hw
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, : (Ho - 1) * stride + 1 : stride, : (Wo - 1) * stride + 1 : stride]
    return win.reshape(N, groups, C // groups, Ho, Wo, k, k)


def _correlate(x: np.ndarray, w: np.ndarray, stride: int, padding: int, groups: int) -> np.ndarray:
    N, _, H, W = x.shape
    O, cg, k, _ = w.shape
    Ho = conv_output_extent(H, k, stride, padding)
    Wo = conv_output_extent(W, k, stride, padding)
    win = _windows(x, k, stride, padding, groups, (Ho, Wo))
    wg = w.reshape(groups, O // groups, cg, k, k)
    out = np.einsum("ngchwij,gocij->ngohw", win, wg, optimize=True)
    return np.ascontiguousarray(out.reshape(N, O, Ho, Wo))


def _scatter(v: np.ndarray, w: np.ndarray, stride: int, padding: int, groups: int, out_hw: Tuple[int, int]) -> np.ndarray:
    """Adjungierte der Korrelation: verteilt v (N, O, Ho, Wo) zurück auf (N, C, H, W)."""
    N, O, Ho, Wo = v.shape
    _, cg, k, _ = w.shape
    H, W = out_hw
    vg = v.reshape(N, groups, O // groups, Ho, Wo)
    wg = w.reshape(groups, O // groups, cg, k, k)
    cols = np.einsum("ngohw,gocij->ngchwij", vg, wg, optimize=True).reshape(N, groups * cg, Ho, Wo, k, k)
    Hp = max(H + 2 * padding, (Ho - 1) * stride + k)
    Wp = max(W + 2 * padding, (Wo - 1) * stride + k)
    full = np.zeros((N, groups * cg, Hp, Wp), dtype=v.dtype)
    for i in range(k):
        for j in range(k):
            full[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += cols[..., i, j]
    return np.ascontiguousarray(full[:, :, padding : padding + H, padding : padding + W])


def _weight_grad(x: np.ndarray, g: np.ndarray, k: int, stride: int, padding: int, groups: int) -> np.ndarray:
    N, O, Ho, Wo = g.shape
    win = _windows(x, k, stride, padding, groups, (Ho, Wo))
    gg = g.reshape(N, groups, O // groups, Ho, Wo)
    dw = np.einsum("ngchwij,ngohw->gocij", win, gg, optimize=True)
    return dw.reshape(O, x.shape[1] // groups, k, k)


# =============================================================================
# OPERATIONEN
# =============================================================================

def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0, groups: int = 1) -> Tensor:
    """
    Kreuzkorrelation NCHW x (O, C/groups, k, k). groups=C ergibt eine
    depthwise Faltung (Wavelet-Pooling).
    """
    if x.ndim != 4:
        raise ShapeError(f"conv2d erwartet NCHW, nicht {x.shape}")
    _check_geometry(x.shape[1], weight.shape, stride, padding, groups)
    k = weight.shape[2]
    H, W = x.shape[2:]
    if conv_output_extent(H, k, stride, padding) < 1 or conv_output_extent(W, k, stride, padding) < 1:
        raise ShapeError(f"conv2d: Kernel {k} passt nicht in {H}x{W} (padding {padding})")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"Bias {bias.shape} passt nicht zu {weight.shape[0]} Ausgangskanälen")

    xd, wd = x.data, weight.data
    out = _correlate(xd, wd, stride, padding, groups)
    parents = (x, weight)
    if bias is not None:
        out = out + bias.data.reshape(1, -1, 1, 1)
        parents = (x, weight, bias)

    def _backward(g):
        grads = [
            _scatter(g, wd, stride, padding, groups, (H, W)) if x.requires_grad else None,
            _weight_grad(xd, g, k, stride, padding, groups) if weight.requires_grad else None,
        ]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    return make_result("conv2d", out, parents, _backward)


def transposed_conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0,
                      groups: int = 1, output_hw: Optional[Tuple[int, int]] = None) -> Tensor:
    """
    Adjungierte von conv2d mit demselben Gewicht (Layout (O, C/groups, k, k)):
    Eingang hat O Kanäle, Ausgang C Kanäle der Ausdehnung (H − 1)·s − 2p + k.
    """
    if x.ndim != 4:
        raise ShapeError(f"transposed_conv2d erwartet NCHW, nicht {x.shape}")
    if weight.ndim != 4:
        raise ShapeError(f"Gewicht muss Rang 4 haben, nicht {weight.shape}")
    out_channels = weight.shape[1] * groups
    _check_geometry(out_channels, weight.shape, stride, padding, groups)
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f"transposed_conv2d: {x.shape[1]} Eingangskanäle, Gewicht erwartet {weight.shape[0]}")
    k = weight.shape[2]
    Hi, Wi = x.shape[2:]
    if output_hw is None:
        output_hw = (tconv_output_extent(Hi, k, stride, padding), tconv_output_extent(Wi, k, stride, padding))
    Ho, Wo = output_hw
    if Ho < 1 or Wo < 1 or conv_output_extent(Ho, k, stride, padding) != Hi \
            or conv_output_extent(Wo, k, stride, padding) != Wi:
        raise ShapeError(f"transposed_conv2d: Ausgabe {output_hw} passt nicht zu Eingabe {Hi}x{Wi}")

    vd, wd = x.data, weight.data
    out = _scatter(vd, wd, stride, padding, groups, (Ho, Wo))

    def _backward(g):
        return (
            _correlate(g, wd, stride, padding, groups) if x.requires_grad else None,
            _weight_grad(g, vd, k, stride, padding, groups) if weight.requires_grad else None,
        )

    return make_result("transposed_conv2d", out, (x, weight), _backward)


# =============================================================================
# RESAMPLING
# =============================================================================

def avg_downsample(x: Tensor) -> Tensor:
    """2x2-Mittelwert-Pooling als depthwise Faltung."""
    C = x.shape[1]
    kernel = Tensor(np.full((C, 1, 2, 2), 0.25, dtype=x.dtype))
    return conv2d(x, kernel, stride=2, groups=C)


def upsample_nearest(x: Tensor) -> Tensor:
    """Nearest-Neighbor x2 als depthwise transponierte Faltung."""
    C = x.shape[1]
    kernel = Tensor(np.ones((C, 1, 2, 2), dtype=x.dtype))
    return transposed_conv2d(x, kernel, stride=2, groups=C)
