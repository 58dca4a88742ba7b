"""
WaveGAN Checkpoint

Textuelles Manifest + ein Little-Endian-float32-Blob:

    WAVEGAN-CHECKPOINT 1
    meta <key> <value>
    tensor <name> <shape> f32 <offset> <length>
    end
    <blob>

Offsets sind relativ zum Blob-Anfang, aufsteigend und lückenlos.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from config import RunConfig, build_config
from errors import CheckpointError
from networks.models import ModelSet, build_models
from training.optim import OptimState

MAGIC = "WAVEGAN-CHECKPOINT"
VERSION = 1
_DTYPE = np.dtype("<f4")
_END = b"end\n"


@dataclass
class TensorEntry:
    name: str
    shape: Tuple[int, ...]
    offset: int
    length: int

    def manifest_line(self) -> str:
        shape = ",".join(str(s) for s in self.shape) if self.shape else "-"
        return f"tensor {self.name} {shape} f32 {self.offset} {self.length}"


@dataclass
class Checkpoint:
    """Geladener Checkpoint: Meta-Einträge und Tensoren in Manifest-Reihenfolge."""
    meta: Dict[str, str] = field(default_factory=dict)
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    entries: List[TensorEntry] = field(default_factory=list)

    def run_config(self) -> RunConfig:
        """Die aufgelöste Konfiguration des Laufs (meta config.*)."""
        values = {k[len("config."):]: v for k, v in self.meta.items() if k.startswith("config.")}
        if not values:
            raise CheckpointError("Checkpoint enthält keine Konfiguration")
        return build_config(values)

    def section(self, prefix: str) -> Dict[str, np.ndarray]:
        return {k[len(prefix) + 1:]: v for k, v in self.tensors.items() if k.startswith(prefix + ".")}


# =============================================================================
# SCHREIBEN
# =============================================================================

def config_meta(config: RunConfig) -> Dict[str, str]:
    meta = {"config_hash": config.config_hash(), "seed": str(config.seed)}
    meta.update({f"config.{k}": v for k, v in config.as_flat_dict().items()})
    return meta


def _check_token(kind: str, value: str):
    if not value or any(c.isspace() for c in value):
        raise CheckpointError(f"{kind} '{value}' darf keine Leerzeichen enthalten")


def write_checkpoint(path: str, tensors: Iterable[Tuple[str, np.ndarray]], meta: Mapping[str, str]) -> str:
    """Schreibt Manifest und Blob; Reihenfolge der Tensoren bleibt erhalten."""
    entries: List[TensorEntry] = []
    chunks: List[bytes] = []
    offset = 0
    seen = set()
    for name, value in tensors:
        _check_token("Tensorname", name)
        if name in seen:
            raise CheckpointError(f"Tensor doppelt: {name}")
        seen.add(name)
        raw = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
        entries.append(TensorEntry(name, tuple(np.shape(value)), offset, len(raw)))
        chunks.append(raw)
        offset += len(raw)

    lines = [f"{MAGIC} {VERSION}"]
    for key, value in meta.items():
        _check_token("Meta-Key", key)
        text = str(value)
        if "\n" in text:
            raise CheckpointError(f"Meta-Wert für {key} enthält einen Zeilenumbruch")
        lines.append(f"meta {key} {text}")
    lines += [e.manifest_line() for e in entries]
    header = ("\n".join(lines) + "\n").encode("utf-8") + _END

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    try:
        with open(path, "wb") as f:
            f.write(header)
            for chunk in chunks:
                f.write(chunk)
    except OSError as e:
        raise CheckpointError(f"Checkpoint nicht schreibbar: {path} ({e})") from e
    return path


def checkpoint_save(path: str, models: ModelSet, optimizers: Optional[Mapping[str, OptimState]] = None,
                    meta: Optional[Mapping[str, str]] = None) -> str:
    """
    Alle Netze (inkl. SN-Vektoren und EMA-Schatten) plus Adam-Momente.

    Tensor-Namen: "<Netz>.<Parameter>" und "<Optimierer>.m|v.<Parameter>".
    """
    all_meta: Dict[str, str] = dict(meta or {})
    tensors: List[Tuple[str, np.ndarray]] = list(models.named_state())
    for opt_name, opt in (optimizers or {}).items():
        all_meta[f"{opt_name}.step"] = str(opt.step)
        all_meta[f"{opt_name}.lr"] = repr(float(opt.lr))
        tensors += [(f"{opt_name}.{k}", v) for k, v in opt.arrays().items()]
    return write_checkpoint(path, tensors, all_meta)


# =============================================================================
# LESEN
# =============================================================================

def _parse_shape(text: str) -> Tuple[int, ...]:
    if text == "-":
        return ()
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError as e:
        raise CheckpointError(f"Ungültige Form: {text}") from e


def read_checkpoint(path: str) -> Checkpoint:
    """
    Raises:
        CheckpointError: falsche Version, kaputtes Manifest, abgeschnittener Blob
    """
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise CheckpointError(f"Checkpoint nicht lesbar: {path} ({e})") from e

    marker = b"\n" + _END
    end = raw.find(marker)
    if end < 0:
        raise CheckpointError(f"Manifest ohne 'end': {path}")
    header = raw[:end].decode("utf-8", errors="replace").split("\n")
    blob = raw[end + len(marker):]

    first = header[0].split()
    if len(first) != 2 or first[0] != MAGIC:
        raise CheckpointError(f"Kein WaveGAN-Checkpoint: {path}")
    if first[1] != str(VERSION):
        raise CheckpointError(f"Checkpoint-Version {first[1]} nicht unterstützt (erwartet {VERSION})")

    ckpt = Checkpoint()
    expected_offset = 0
    for lineno, line in enumerate(header[1:], start=2):
        if line.startswith("meta "):
            parts = line.split(" ", 2)
            ckpt.meta[parts[1]] = parts[2] if len(parts) > 2 else ""
            continue
        parts = line.split()
        if len(parts) != 6 or parts[0] != "tensor" or parts[3] != "f32":
            raise CheckpointError(f"Manifest-Zeile {lineno} ungültig: {line}")
        name, shape = parts[1], _parse_shape(parts[2])
        offset, length = int(parts[4]), int(parts[5])
        count = int(np.prod(shape)) if shape else 1
        if offset != expected_offset:
            raise CheckpointError(f"Tensor {name}: Offset {offset} statt {expected_offset}")
        if length != count * _DTYPE.itemsize:
            raise CheckpointError(f"Tensor {name}: Länge {length} passt nicht zu Form {shape}")
        if offset + length > len(blob):
            raise CheckpointError(f"Blob abgeschnitten bei Tensor {name} "
                                  f"(braucht {offset + length} Bytes, vorhanden {len(blob)})")
        data = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=offset).astype(np.float32)
        ckpt.tensors[name] = data.reshape(shape)
        ckpt.entries.append(TensorEntry(name, shape, offset, length))
        expected_offset = offset + length
    if expected_offset != len(blob):
        raise CheckpointError(f"Blob hat {len(blob) - expected_offset} überzählige Bytes")
    return ckpt


def checkpoint_load(path: str, models: ModelSet, optimizers: Optional[Mapping[str, OptimState]] = None) -> Checkpoint:
    """
    Lädt Netze (strikt) und optional Optimierer-Zustände in-place.

    Raises:
        CheckpointError: Tensoren fehlen oder passen nicht
    """
    ckpt = read_checkpoint(path)
    try:
        models.load_named_state(ckpt.tensors)
        for opt_name, opt in (optimizers or {}).items():
            opt.load_arrays(ckpt.section(opt_name))
            opt.step = int(ckpt.meta[f"{opt_name}.step"])
            opt.lr = float(ckpt.meta[f"{opt_name}.lr"])
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"Checkpoint passt nicht zu den Modellen: {e}") from e
    return ckpt


def load_models(path: str) -> Tuple[RunConfig, ModelSet, Checkpoint]:
    """Baut die Modelle aus der gespeicherten Konfiguration und lädt die Gewichte."""
    ckpt = read_checkpoint(path)
    config = ckpt.run_config()
    models = build_models(config)
    try:
        models.load_named_state(ckpt.tensors)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"Checkpoint passt nicht zur gespeicherten Konfiguration: {e}") from e
    models.classifier.set_requires_grad(False)
    models.classifier.eval()
    return config, models, ckpt
