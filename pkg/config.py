"""
WaveGAN - Konfiguration für Geometrie, Training und System-Einstellungen

Lauf-Konfigurationen sind flache `key = value`-Dateien; unbekannte Keys
werden abgelehnt, jeder Lauf schreibt seine vollständig aufgelöste
Konfiguration mit.
"""

import hashlib
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import ConfigError

# Lade Umgebungsvariablen aus .env
load_dotenv()

# =============================================================================
# Geometrie-Presets
# =============================================================================

@dataclass
class GeometryPreset:
    """Bildgröße und Basisbreiten der Netze."""
    name: str
    image_size: int
    gen_width: int
    disc_width: int
    cls_width: int
    description: str


GEOMETRY_PRESETS: Dict[str, GeometryPreset] = {
    "toy": GeometryPreset(
        name="toy",
        image_size=32,
        gen_width=16,
        disc_width=16,
        cls_width=16,
        description="32x32, Minuten auf einem Laptop",
    ),
    "full": GeometryPreset(
        name="full",
        image_size=256,
        gen_width=64,
        disc_width=32,
        cls_width=64,
        description="256x256, Architekturbreiten in voller Größe",
    ),
}


def get_geometry(name: str) -> GeometryPreset:
    """
    Gibt ein Geometrie-Preset zurück.

    Raises:
        ConfigError: unbekanntes Preset
    """
    if name not in GEOMETRY_PRESETS:
        raise ConfigError(f"Unbekannte Geometrie: {name}. Verfügbar: {list(GEOMETRY_PRESETS)}")
    return GEOMETRY_PRESETS[name]


# =============================================================================
# Lauf-Konfiguration
# =============================================================================

class RunConfig(BaseModel):
    """Alle Defaults eines Laufs; Werte aus Datei, --set und CLI-Flags."""
    model_config = ConfigDict(extra="forbid")

    # Geometrie
    geometry: str = "toy"
    image_size: Optional[int] = None
    gen_width: Optional[int] = None
    disc_width: Optional[int] = None
    cls_width: Optional[int] = None
    attributes: str = "eyeglasses,smile,dark_hair"

    # Verlustgewichte
    lambda_gan_i: float = Field(1.0, ge=0)
    lambda_gan_h: float = Field(1.0, ge=0)
    lambda_cyc: float = Field(10.0, ge=0)
    lambda_ac: float = Field(1.0, ge=0)
    lambda_ar: float = Field(1.0, ge=0)

    # Optimierer (TTUR)
    lr_g: float = Field(5e-4, gt=0)
    lr_d_i: float = Field(2e-3, gt=0)
    lr_d_h: float = Field(2e-3, gt=0)
    beta1: float = Field(0.0, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)

    # Zeitplan
    epochs: int = Field(20, ge=0)
    decay_epochs: int = Field(20, ge=0)
    decay_rate: float = Field(0.999, gt=0, le=1)
    decay_every: int = Field(10, ge=1)
    ema_decay: float = Field(0.999, ge=0, le=1)
    batch_size: int = Field(16, ge=1)
    seed: int = 0
    max_steps_per_epoch: int = Field(0, ge=0)
    ckpt_every: int = Field(1, ge=0)

    # Ablationen
    disable_wavelet_skip: bool = False
    vanilla_skip: bool = False
    skip_band_mode: Literal["high", "low", "all"] = "high"
    disable_dh: bool = False
    cycle_augment: Literal["none", "hflip", "noise", "color_jitter", "affine"] = "none"
    disable_ar_loss: bool = False
    dh_real_from_input: bool = False

    # Spektralnorm
    sn_iters: int = Field(1, ge=1)

    # Datensatz
    dataset_seed: int = 1
    train_count: int = Field(4096, ge=0)
    test_count: int = Field(512, ge=0)
    unlabeled_count: int = Field(4096, ge=0)
    detail_texture_amp: float = Field(0.35, ge=0)

    # Augmentierung (Zyklusverlust mit A)
    aug_noise_sigma: float = Field(0.05, ge=0)
    aug_jitter: float = Field(0.2, ge=0, lt=1)
    aug_rotation: float = Field(15.0, ge=0)
    aug_translation: float = Field(2.0, ge=0)
    aug_scale: float = Field(0.1, ge=0, lt=1)

    # Klassifikator
    cls_epochs: int = Field(5, ge=0)
    cls_lr: float = Field(1e-3, gt=0)
    cls_batch_size: int = Field(32, ge=1)
    cls_accuracy_gate: float = Field(0.95, ge=0, le=1)
    gate_override: bool = False
    use_pseudo_labels: bool = True

    @model_validator(mode="after")
    def _resolve_geometry(self) -> "RunConfig":
        if self.geometry not in GEOMETRY_PRESETS:
            raise ValueError(f"Unbekannte Geometrie: {self.geometry}")
        preset = GEOMETRY_PRESETS[self.geometry]
        for key in ("image_size", "gen_width", "disc_width", "cls_width"):
            if getattr(self, key) is None:
                setattr(self, key, getattr(preset, key))
            if getattr(self, key) < 1:
                raise ValueError(f"{key} muss positiv sein")
        if self.image_size % 16:
            raise ValueError(f"image_size {self.image_size} muss durch 16 teilbar sein")
        if self.disable_wavelet_skip and self.vanilla_skip:
            raise ValueError("disable_wavelet_skip und vanilla_skip schließen sich aus")
        if not self.attribute_names:
            raise ValueError("Mindestens ein Attribut nötig")
        return self

    # -------------------------------------------------------------------------
    # Abgeleitete Werte
    # -------------------------------------------------------------------------

    @property
    def attribute_names(self) -> List[str]:
        return [a.strip() for a in self.attributes.split(",") if a.strip()]

    @property
    def num_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def skip_mode(self) -> str:
        if self.disable_wavelet_skip:
            return "none"
        if self.vanilla_skip:
            return "vanilla"
        return self.skip_band_mode

    @property
    def total_epochs(self) -> int:
        return self.epochs + self.decay_epochs

    # -------------------------------------------------------------------------
    # Serialisierung
    # -------------------------------------------------------------------------

    def as_flat_dict(self) -> Dict[str, str]:
        return {key: _format_value(value) for key, value in sorted(self.model_dump().items())}

    def resolved_text(self) -> str:
        lines = ["# WaveGAN - aufgelöste Konfiguration"]
        lines += [f"{key} = {value}" for key, value in self.as_flat_dict().items()]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: Dict[str, object]) -> "RunConfig":
        data = self.model_dump()
        data.update(overrides)
        return build_config(data)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def build_config(values: Dict[str, object]) -> RunConfig:
    """RunConfig aus Rohwerten; Validierungsfehler werden zu ConfigError."""
    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                             for err in e.errors())
        raise ConfigError(f"Ungültige Konfiguration: {problems}") from e


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parst `key = value`-Zeilen; `#` leitet Kommentare ein, keine Sektionen.

    Raises:
        ConfigError: fehlerhafte Zeile oder doppelter Key
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Zeile {lineno}: erwartet 'key = value', erhalten '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"Zeile {lineno}: leerer Key")
        if key in values:
            raise ConfigError(f"Zeile {lineno}: Key '{key}' doppelt")
        values[key] = value
    return values


def parse_set_overrides(items: Optional[Iterable[str]]) -> Dict[str, str]:
    """--set key=value Paare."""
    overrides: Dict[str, str] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set erwartet key=value, erhalten '{item}'")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Datei (optional) + Overrides -> RunConfig."""
    values: Dict[str, object] = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                values.update(parse_config_text(f.read()))
        except OSError as e:
            raise ConfigError(f"Konfiguration nicht lesbar: {path} ({e})") from e
    values.update(overrides or {})
    return build_config(values)


# =============================================================================
# System-Einstellungen
# =============================================================================

# Log-Level: DEBUG, INFO, WARNING, ERROR
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Ausgabeverzeichnis für Läufe
RUNS_DIR = os.getenv("WAVEGAN_RUNS_DIR", os.path.join(os.path.dirname(__file__), "runs"))

_LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}


def get_worker_threads() -> int:
    """WAVEGAN_THREADS (Default 1, deterministisch)."""
    raw = os.getenv("WAVEGAN_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigError(f"WAVEGAN_THREADS ist keine Zahl: {raw}") from e
    return max(1, threads)


def console(message: str, level: str = "INFO"):
    """Ausgabe auf der Konsole, gefiltert nach LOG_LEVEL."""
    if _LEVELS.get(level, 20) >= _LEVELS.get(LOG_LEVEL.upper(), 20):
        print(message)
