"""
WaveGAN Netzwerke

Generator mit Wavelet-Skips, Bild- und Hochfrequenz-Diskriminatoren,
Attribut-Klassifikator.
"""

from .layers import (
    Layer, Conv2d, Linear, AdaIN, ResBlock, AdaINResBlock, DownResBlock, UpResBlock,
    spectral_normalize, adain_modulate, zero_layer,
)
from .generator import GeneratorNet, SKIP_MODES, skip_multiplier
from .discriminator import DiscriminatorNet, SCALES, IMAGE_SCALES, HIGH_SCALES, prepare_input
from .classifier import ClassifierNet
from .models import ModelSet, build_models

__all__ = [
    "Layer", "Conv2d", "Linear", "AdaIN", "ResBlock", "AdaINResBlock", "DownResBlock",
    "UpResBlock", "spectral_normalize", "adain_modulate", "zero_layer",
    "GeneratorNet", "SKIP_MODES", "skip_multiplier",
    "DiscriminatorNet", "SCALES", "IMAGE_SCALES", "HIGH_SCALES", "prepare_input",
    "ClassifierNet", "ModelSet", "build_models",
]
