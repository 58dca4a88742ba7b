"""
WaveGAN Data - Synthetischer Attribut-Datensatz

Jedes Bild: glatte Basis (Hintergrundverlauf, Gesichtsellipse,
Attribut-Striche, Gauß-Weichzeichnung) plus ein sample-eigenes
Hochfrequenz-Detailfeld (Sprenkel und Streifen), das in der ersten
Haar-Stufe reines LH/HL/HH ist.
"""

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

import sys
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig, get_worker_threads
from errors import ConfigError, ImageIOError
from data.renderers import Grid, blend, ellipse_mask, resolve_renderers
from image_io import load_image, save_image

BLUR_SIGMA = 1.2
MANIFEST_NAME = "manifest.tsv"


class Provenance(Enum):
    """Herkunft der Labels"""
    GROUND_TRUTH = "ground_truth"
    PSEUDO = "pseudo"


@dataclass
class SynthSample:
    """Bild H×W×3 in [−1, 1], K Labels, Herkunft, Seed."""
    image: np.ndarray
    labels: np.ndarray
    provenance: Provenance = Provenance.GROUND_TRUTH
    seed: int = 0
    index: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "labels": [int(v) for v in self.labels],
            "provenance": self.provenance.value,
        }


@dataclass
class DatasetConfig:
    count: int
    size: int = 32
    attributes: List[str] = field(default_factory=lambda: ["eyeglasses", "smile", "dark_hair"])
    detail_texture_amp: float = 0.35

    @classmethod
    def from_run_config(cls, config: RunConfig, count: int) -> "DatasetConfig":
        return cls(count=count, size=config.image_size, attributes=config.attribute_names,
                   detail_texture_amp=config.detail_texture_amp)

    def validate(self):
        if self.count < 0:
            raise ConfigError(f"count muss >= 0 sein, nicht {self.count}")
        if self.size < 4 or self.size % 4:
            raise ConfigError(f"Bildgröße {self.size} muss durch 4 teilbar sein")
        if self.detail_texture_amp < 0:
            raise ConfigError("detail_texture_amp darf nicht negativ sein")
        resolve_renderers(self.attributes)


# =============================================================================
# BILDAUFBAU
# =============================================================================

def gaussian_blur(image: np.ndarray, sigma: float = BLUR_SIGMA) -> np.ndarray:
    """Gauß-Weichzeichnung über H und W (nicht über Kanäle), Randpixel repliziert."""
    sigmas = (sigma, sigma) + (0.0,) * (image.ndim - 2)
    return gaussian_filter(image, sigma=sigmas, mode="nearest", truncate=3.0)


def detail_field(size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Sprenkel (Rauschen minus 2x2-Blockmittel, Einheitsvarianz) plus
    Streifen der Periode 2; jeder 2x2-Block summiert zu 0.
    """
    noise = rng.normal(size=(size, size))
    block = noise.reshape(size // 2, 2, size // 2, 2).mean(axis=(1, 3))
    speckle = (noise - np.repeat(np.repeat(block, 2, axis=0), 2, axis=1)) / np.sqrt(0.75)
    parity = np.arange(size) % 2 * 2 - 1.0
    stripes = parity[None, :] if rng.random() < 0.5 else parity[:, None]
    stripes = np.broadcast_to(stripes * rng.choice((-1.0, 1.0)), (size, size))
    return 0.5 * speckle + 0.25 * stripes


def render_base(size: int, labels: Sequence[bool], renderers, rng: np.random.Generator) -> np.ndarray:
    grid = Grid.make(size)
    top = np.array([-0.4, -0.2, 0.2]) + 0.3 * rng.uniform(-1, 1, 3)
    bottom = np.array([0.1, -0.3, -0.5]) + 0.3 * rng.uniform(-1, 1, 3)
    t = (grid.rows / max(size - 1, 1))[..., None]
    canvas = (1 - t) * top + t * bottom

    skin = np.array([0.6, 0.2, -0.05]) + 0.1 * rng.uniform(-1, 1, 3)
    face = ellipse_mask(grid, (grid.at(0.55), grid.at(0.5)), (0.34 * size, 0.28 * size))
    blend(canvas, face, skin)
    for col in (0.36, 0.64):
        eye = ellipse_mask(grid, (grid.at(0.45), grid.at(col)), (0.035 * size, 0.045 * size), edge=0.5)
        blend(canvas, eye, (-0.6, -0.6, -0.5))

    for renderer, present in zip(renderers, labels):
        renderer.render(canvas, bool(present), rng, grid)
    return gaussian_blur(canvas)


def render_sample(config: DatasetConfig, dataset_seed: int, index: int) -> SynthSample:
    """Ein Sample mit Seed dataset_seed ⊕ index; Labels werden zuerst gezogen."""
    seed = int(dataset_seed) ^ int(index)
    rng = np.random.default_rng(seed)
    labels = rng.random(len(config.attributes)) < 0.5
    base_rng, texture_rng = rng.spawn(2)
    image = render_base(config.size, labels, resolve_renderers(config.attributes), base_rng)
    if config.detail_texture_amp > 0:
        image = image + config.detail_texture_amp * detail_field(config.size, texture_rng)[..., None]
    image = np.clip(image, -1.0, 1.0).astype(np.float32)
    return SynthSample(image=image, labels=labels, seed=seed, index=index)


def generate_dataset(config: DatasetConfig, seed: int, start_index: int = 0) -> List[SynthSample]:
    """
    Deterministischer Datensatz; parallelisiert über WAVEGAN_THREADS ohne
    Einfluss auf das Ergebnis.
    """
    config.validate()
    indices = range(start_index, start_index + config.count)
    threads = get_worker_threads()
    if threads == 1 or config.count < 2:
        return [render_sample(config, seed, i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: render_sample(config, seed, i), indices))


def generate_splits(config: RunConfig) -> Tuple[List[SynthSample], List[SynthSample], List[SynthSample]]:
    """(train, test, unlabeled) mit disjunkten Indexbereichen."""
    seed = config.dataset_seed
    train = generate_dataset(DatasetConfig.from_run_config(config, config.train_count), seed, 0)
    test = generate_dataset(DatasetConfig.from_run_config(config, config.test_count), seed, config.train_count)
    unlabeled = generate_dataset(DatasetConfig.from_run_config(config, config.unlabeled_count), seed,
                                 config.train_count + config.test_count)
    return train, test, unlabeled


# =============================================================================
# BATCHES
# =============================================================================

def dataset_to_batch(samples: Sequence[SynthSample]) -> Tuple[np.ndarray, np.ndarray]:
    """-> (Bilder N×3×H×W float32, Labels N×K float32)"""
    if not samples:
        raise ConfigError("Leerer Datensatz")
    images = np.stack([s.image for s in samples]).transpose(0, 3, 1, 2)
    labels = np.stack([np.asarray(s.labels, dtype=np.float32) for s in samples])
    return np.ascontiguousarray(images, dtype=np.float32), labels


def iterate_batches(count: int, batch_size: int, rng: Optional[np.random.Generator] = None,
                    drop_last: bool = True) -> Iterator[np.ndarray]:
    """Index-Batches über eine (optional gemischte) Reihenfolge."""
    order = rng.permutation(count) if rng is not None else np.arange(count)
    if count < batch_size:
        if count:
            yield order
        return
    stop = count - count % batch_size if drop_last else count
    for start in range(0, stop, batch_size):
        yield order[start:start + batch_size]


# =============================================================================
# DATEIEN
# =============================================================================

def write_dataset(directory: str, samples: Sequence[SynthSample], attributes: Sequence[str]) -> str:
    """manifest.tsv (index, seed, Labels, Herkunft) + ein PNG pro Sample."""
    os.makedirs(directory, exist_ok=True)
    manifest = os.path.join(directory, MANIFEST_NAME)
    with open(manifest, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(["index", "seed"] + list(attributes) + ["provenance", "file"])
        for s in samples:
            filename = f"sample_{s.index:06d}.png"
            save_image(os.path.join(directory, filename), s.image)
            writer.writerow([s.index, s.seed] + [int(v) for v in s.labels] + [s.provenance.value, filename])
    return manifest


def read_dataset(directory: str) -> Tuple[List[SynthSample], List[str]]:
    """Liest einen mit write_dataset geschriebenen Datensatz."""
    manifest = os.path.join(directory, MANIFEST_NAME)
    try:
        with open(manifest, "r", encoding="utf-8") as f:
            rows = list(csv.reader(f, delimiter="\t"))
    except OSError as e:
        raise ImageIOError(f"Manifest nicht lesbar: {manifest} ({e})") from e
    if not rows:
        raise ImageIOError(f"Manifest leer: {manifest}")
    header = rows[0]
    attributes = header[2:-2]
    samples = []
    for row in rows[1:]:
        labels = np.array([v == "1" for v in row[2:2 + len(attributes)]])
        samples.append(SynthSample(
            image=load_image(os.path.join(directory, row[-1])),
            labels=labels,
            provenance=Provenance(row[-2]),
            seed=int(row[1]),
            index=int(row[0]),
        ))
    return samples, attributes
