"""
WaveGAN Bild-I/O

8-Bit-RGB-PNG (Pillow) mit Abbildung pixel = round((v + 1) · 127.5).
Endung .ppm schreibt PPM, .pgm ein Graustufenbild (Luma).
"""

import os
from typing import List, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from errors import ImageIOError, ShapeError

_FORMATS = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM"}
_LUMA = np.array([0.299, 0.587, 0.114])


def encode_image(image: np.ndarray) -> np.ndarray:
    """H×W×3 in [−1, 1] -> uint8."""
    image = np.asarray(image, dtype=np.float64)
    return np.clip(np.round((image + 1.0) * 127.5), 0, 255).astype(np.uint8)


def decode_image(pixels: np.ndarray) -> np.ndarray:
    """uint8 -> float32 in [−1, 1]."""
    return (np.asarray(pixels, dtype=np.float64) / 127.5 - 1.0).astype(np.float32)


def _format_for(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext not in _FORMATS:
        raise ImageIOError(f"Nicht unterstütztes Bildformat: {ext or path}")
    return _FORMATS[ext]


def save_image(path: str, image: np.ndarray) -> str:
    """Schreibt ein H×W×3-Bild; gibt den Pfad zurück."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"Bild muss H×W×3 sein, nicht {image.shape}")
    fmt = _format_for(path)
    pixels = encode_image(image)
    if path.lower().endswith(".pgm"):
        gray = np.clip(np.round(pixels.astype(np.float64) @ _LUMA), 0, 255).astype(np.uint8)
        img = Image.fromarray(gray)
    else:
        img = Image.fromarray(pixels)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        img.save(path, format=fmt)
    except OSError as e:
        raise ImageIOError(f"Bild nicht schreibbar: {path} ({e})") from e
    return path


def load_image(path: str) -> np.ndarray:
    """Liest ein Bild als H×W×3 float32 in [−1, 1]."""
    try:
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as e:
        raise ImageIOError(f"Bild nicht lesbar: {path} ({e})") from e
    return decode_image(pixels)


def image_to_batch(image: np.ndarray) -> np.ndarray:
    """H×W×3 -> 1×3×H×W"""
    return np.ascontiguousarray(np.asarray(image, dtype=np.float32).transpose(2, 0, 1)[None])


def batch_to_images(batch: np.ndarray) -> List[np.ndarray]:
    """N×3×H×W -> Liste von H×W×3"""
    return [np.ascontiguousarray(b.transpose(1, 2, 0)) for b in np.asarray(batch)]


def make_panel(images: Sequence[np.ndarray], gap: int = 1) -> np.ndarray:
    """Bilder nebeneinander, getrennt durch weiße Spalten."""
    images = [np.asarray(i, dtype=np.float32) for i in images]
    if not images:
        raise ShapeError("Panel braucht mindestens ein Bild")
    h = images[0].shape[0]
    if any(i.shape[0] != h for i in images):
        raise ShapeError("Panel-Bilder müssen gleich hoch sein")
    spacer = np.ones((h, gap, 3), dtype=np.float32)
    parts: List[np.ndarray] = []
    for n, img in enumerate(images):
        if n:
            parts.append(spacer)
        parts.append(img)
    return np.concatenate(parts, axis=1)
