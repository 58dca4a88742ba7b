"""
WaveGAN Diagnostics - Ablations-Läufe

Trainiert jede Variante (Konfigurations-Overrides) für mehrere Seeds auf
Desk-Größe, misst SRE, Edit-Genauigkeit und α-Monotonie mit den EMA-Gewichten
und fasst pro Variante den Median über die Seeds zusammen.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig, console
from errors import ConfigError, NumericalError
from networks.models import ModelSet, build_models
from data.synth import dataset_to_batch, generate_splits
from training.trainer import EventType, Trainer, build_training_pool
from diagnostics.metrics import interpolation_monotonicity, mean_edit_accuracy
from diagnostics.steg import sre

EXPERIMENTS_HEADER = "variant\tseeds\tfailed\tSRE\tAcc.\tMono."
RUNS_HEADER = "variant\tseed\tSRE\tAcc.\tMono."


# =============================================================================
# VARIANTEN-REGISTRY
# =============================================================================

@dataclass
class AblationVariant:
    """Benannte Abweichung von der Basiskonfiguration."""
    id: str
    description: str
    overrides: Dict[str, object] = field(default_factory=dict)

    def apply(self, base: RunConfig, seed: int) -> RunConfig:
        return base.with_overrides({**self.overrides, "seed": seed})


_VARIANT_REGISTRY: Dict[str, AblationVariant] = {}


def register_variant(variant: AblationVariant) -> None:
    _VARIANT_REGISTRY[variant.id] = variant


def get_variant(variant_id: str) -> Optional[AblationVariant]:
    return _VARIANT_REGISTRY.get(variant_id)


def list_variants() -> List[str]:
    return list(_VARIANT_REGISTRY)


def resolve_variants(names: Sequence[str]) -> List[AblationVariant]:
    """
    "all" wählt alle registrierten Varianten in Registrierungsreihenfolge.

    Raises:
        ConfigError: unbekannte oder leere Auswahl
    """
    if list(names) == ["all"]:
        return list(_VARIANT_REGISTRY.values())
    missing = [n for n in names if n not in _VARIANT_REGISTRY]
    if missing:
        raise ConfigError(f"Unbekannte Variante(n): {missing}. Verfügbar: {list_variants()}")
    if not names:
        raise ConfigError("Mindestens eine Variante nötig")
    return [_VARIANT_REGISTRY[n] for n in names]


for _variant in (
    AblationVariant("full", "Wavelet-Skip (Hochbänder), D_I + D_H, L_ar"),
    AblationVariant("vanilla_skip", "rohe Encoder-Features statt Bänder", {"vanilla_skip": True}),
    AblationVariant("no_wavelet_skip", "ohne Skip-Verbindung", {"disable_wavelet_skip": True}),
    AblationVariant("no_dh", "ohne Hochfrequenz-Diskriminator", {"disable_dh": True}),
    AblationVariant("skip_low", "Skip nur mit LL", {"skip_band_mode": "low"}),
    AblationVariant("skip_all", "Skip mit LL + LH + HL + HH", {"skip_band_mode": "all"}),
    AblationVariant("aug_hflip", "Zyklusverlust mit Spiegelung", {"cycle_augment": "hflip"}),
    AblationVariant("aug_noise", "Zyklusverlust mit Rauschen", {"cycle_augment": "noise"}),
    AblationVariant("aug_color_jitter", "Zyklusverlust mit Farbjitter", {"cycle_augment": "color_jitter"}),
    AblationVariant("aug_affine", "Zyklusverlust mit affiner Transformation", {"cycle_augment": "affine"}),
    AblationVariant("no_ar", "ohne Attribut-Regressionsverlust", {"disable_ar_loss": True}),
):
    register_variant(_variant)


def parse_seeds(text: str) -> List[int]:
    """
    "0,1,2" -> [0, 1, 2]

    Raises:
        ConfigError: leere Liste oder kein Integer
    """
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Seeds müssen ganze Zahlen sein: '{text}'") from e
    if not seeds:
        raise ConfigError("Mindestens ein Seed nötig")
    return seeds


# =============================================================================
# EVALUATION
# =============================================================================

def evaluate_models(config: RunConfig, models: ModelSet, count: int,
                    classifier_accuracy: Optional[float] = None, label: str = "Modell") -> Dict[str, float]:
    """
    SRE, Edit-Genauigkeit (Mittel über K) und α-Monotonie auf `count`
    Testbildern des Datensatz-Seeds.

    Ohne bekannte Klassifikator-Genauigkeit (Lauf ohne Vortraining) wird
    das Gate mit Warnung übersprungen.

    Raises:
        GateError: Klassifikator unter dem Gate (ohne gate_override)
    """
    split = config.with_overrides({"train_count": 0, "test_count": count, "unlabeled_count": 0})
    _, test, _ = generate_splits(split)
    images, labels = dataset_to_batch(test)
    g = models.generator_ema
    override = config.gate_override
    if classifier_accuracy is None:
        console(f"⚠️ {label}: keine Klassifikator-Genauigkeit, Edit-Genauigkeit ohne Gate", "WARNING")
        override = True
    acc = mean_edit_accuracy(g, models.classifier, images, labels, classifier_accuracy=classifier_accuracy,
                             gate=config.cls_accuracy_gate, override=override)
    mono = [interpolation_monotonicity(g, models.classifier, images, labels, k)
            for k in range(config.num_attributes)]
    return {"sre": sre(g, images), "acc": acc["acc_mean"], "monotonicity": float(np.mean(mono))}


def train_models(config: RunConfig) -> Tuple[ModelSet, Optional[float]]:
    """Ein vollständiger Lauf ohne Checkpoints; liefert Modelle und Gate-Genauigkeit."""
    models = build_models(config)
    samples = []
    accuracy = None
    if config.total_epochs > 0:
        pool = build_training_pool(config, models)
        samples = pool.samples
        accuracy = pool.classifier_report.gate_accuracy
    for event in Trainer(config, models, samples).run():
        if event.event_type == EventType.EPOCH:
            console(event.content, "DEBUG")
    return models, accuracy


# =============================================================================
# ERGEBNISSE
# =============================================================================

def _median(values: Sequence[float]) -> float:
    finite = [v for v in values if np.isfinite(v)]
    return float(np.median(finite)) if finite else float("nan")


@dataclass
class ExperimentRow:
    """Werte einer Variante pro Seed; NaN für numerisch abgebrochene Läufe."""
    variant: str
    seeds: List[int] = field(default_factory=list)
    runs: List[Dict[str, float]] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(1 for r in self.runs if not np.isfinite(r["sre"]))

    def median(self, key: str) -> float:
        return _median([r[key] for r in self.runs])

    def to_dict(self) -> Dict[str, object]:
        return {
            "variant": self.variant,
            "seeds": self.seeds,
            "failed": self.failed,
            "sre": self.median("sre"),
            "acc": self.median("acc"),
            "monotonicity": self.median("monotonicity"),
        }

    def tsv_row(self) -> str:
        seeds = ",".join(str(s) for s in self.seeds)
        return (f"{self.variant}\t{seeds}\t{self.failed}\t{self.median('sre'):.4f}"
                f"\t{self.median('acc'):.4f}\t{self.median('monotonicity'):.4f}")

    def run_rows(self) -> List[str]:
        return [f"{self.variant}\t{seed}\t{r['sre']:.4f}\t{r['acc']:.4f}\t{r['monotonicity']:.4f}"
                for seed, r in zip(self.seeds, self.runs)]


FAILED_RUN = {"sre": float("nan"), "acc": float("nan"), "monotonicity": float("nan")}


def run_experiments(base: RunConfig, variants: Sequence[AblationVariant], seeds: Sequence[int],
                    count: int, on_row: Optional[Callable[[ExperimentRow], None]] = None) -> List[ExperimentRow]:
    """
    Variante × Seed: trainieren, auswerten, pro Variante zusammenfassen.

    Ein numerischer Abbruch zählt als fehlgeschlagener Lauf (NaN) und fällt
    aus dem Median heraus; Konfigurations- und Gate-Fehler brechen ab.
    """
    rows: List[ExperimentRow] = []
    for variant in variants:
        row = ExperimentRow(variant=variant.id)
        for seed in seeds:
            config = variant.apply(base, seed)
            console(f"🧪 {variant.id} / Seed {seed}: {config.total_epochs} Epochen")
            try:
                models, accuracy = train_models(config)
            except NumericalError as e:
                console(f"⚠️ {variant.id} / Seed {seed} abgebrochen: {e}", "WARNING")
                row.seeds.append(seed)
                row.runs.append(dict(FAILED_RUN))
                continue
            row.seeds.append(seed)
            row.runs.append(evaluate_models(config, models, count, accuracy, label=f"{variant.id}/{seed}"))
        console(f"📊 {row.tsv_row()}", "DEBUG")
        if on_row:
            on_row(row)
        rows.append(row)
    return rows


def write_experiments(out_dir: str, rows: Sequence[ExperimentRow]) -> List[str]:
    """experiments.tsv (Median pro Variante) und experiments_runs.tsv (pro Seed)."""
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, "experiments.tsv")
    with open(summary, "w", encoding="utf-8") as f:
        f.write("\n".join([EXPERIMENTS_HEADER] + [r.tsv_row() for r in rows]) + "\n")
    runs = os.path.join(out_dir, "experiments_runs.tsv")
    with open(runs, "w", encoding="utf-8") as f:
        f.write("\n".join([RUNS_HEADER] + [line for r in rows for line in r.run_rows()]) + "\n")
    return [summary, runs]
