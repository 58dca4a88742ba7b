"""
WaveGAN Wavelet

Haar-Wavelet-Pooling und -Unpooling auf Bild- und Feature-Ebene.
"""

from .haar import (
    HAAR_KERNELS, BAND_NAMES, HIGH_BANDS, WaveletBands, band_kernel,
    haar_pool, haar_unpool, unpool_band, high_freq_reconstruct,
    low_freq_reconstruct, multi_level_pool, high_band_stack, band_components,
)

__all__ = [
    "HAAR_KERNELS", "BAND_NAMES", "HIGH_BANDS", "WaveletBands", "band_kernel",
    "haar_pool", "haar_unpool", "unpool_band", "high_freq_reconstruct",
    "low_freq_reconstruct", "multi_level_pool", "high_band_stack", "band_components",
]
