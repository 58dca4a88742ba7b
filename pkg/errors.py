"""
WaveGAN Fehlerklassen

Alle fachlichen Fehler erben von WaveGANError, damit die CLI sie
auf Exit-Codes abbilden kann (siehe cli.EXIT_CODES).
"""


class WaveGANError(Exception):
    """Basisklasse für alle WaveGAN-Fehler."""


class ShapeError(WaveGANError, ValueError):
    """Ungültige Tensor-Form oder Geometrie (Kanäle, Kernel, Stride, Padding)."""


class NumericalError(WaveGANError, ArithmeticError):
    """NaN/Inf, Logarithmus nicht-positiver Werte, Null-Normen."""


class GradientError(WaveGANError, RuntimeError):
    """backward() auf einem abgekoppelten oder nicht-skalaren Tensor."""


class ConfigError(WaveGANError, ValueError):
    """Ungültige oder unbekannte Konfigurationswerte."""


class AugmentError(WaveGANError, ValueError):
    """Degenerierte Augmentierung (z.B. Skalierung 0)."""


class GateError(WaveGANError):
    """Klassifikator liegt unter der geforderten Genauigkeit."""


class CheckpointError(WaveGANError, IOError):
    """Defekter Checkpoint: Manifest, Offsets, Version oder Blob-Länge."""


class ImageIOError(WaveGANError, IOError):
    """Bild kann nicht gelesen oder geschrieben werden."""
