"""
WaveGAN Tensor-Engine

Dichte NCHW-Tensoren mit tape-basiertem Reverse-Mode-Autodiff.
"""

from .tensor import (
    Tensor, Tape, as_tensor, parameter, backward, no_grad,
    is_grad_enabled, current_tape, DEFAULT_DTYPE,
)
from .ops import (
    elementwise, reduce, add, sub, mul, div, scale, neg, leaky_relu, sigmoid, tanh,
    log, sqrt, softplus, clamp, mean, mean_abs_error, reshape, concat,
    slice_axis, flip, linear, instance_norm, grid_sample_bilinear,
)
from .conv import conv2d, transposed_conv2d, avg_downsample, upsample_nearest
from .gradcheck import check_gradients, numerical_gradient, relative_error, GradCheckReport, GRAD_FLOOR

__all__ = [
    "Tensor", "Tape", "as_tensor", "parameter", "backward", "no_grad",
    "is_grad_enabled", "current_tape", "DEFAULT_DTYPE",
    "elementwise", "reduce", "add", "sub", "mul", "div", "scale", "neg", "leaky_relu",
    "sigmoid", "tanh", "log", "sqrt", "softplus", "clamp", "mean",
    "mean_abs_error", "reshape", "concat", "slice_axis", "flip", "linear",
    "instance_norm", "grid_sample_bilinear",
    "conv2d", "transposed_conv2d", "avg_downsample", "upsample_nearest",
    "check_gradients", "numerical_gradient", "relative_error", "GradCheckReport", "GRAD_FLOOR",
]
