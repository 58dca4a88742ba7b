"""
WaveGAN Diagnostics

Steganographie-Probe, SRE, Edit-Genauigkeit, Band-Energien und Ablations-Läufe.
"""

from .metrics import (
    GeneratorFn, BandEnergyReport, band_energy_report, high_band_ratio, predict_probabilities,
    edit_delta, attribute_edit_accuracy, mean_edit_accuracy, alpha_sweep, DEFAULT_SWEEP,
    interpolation_monotonicity,
)
from .steg import StegReport, steg_probe, probe_dataset, sre, steg_panel, write_probe_report
from .experiments import (
    AblationVariant, register_variant, get_variant, list_variants, resolve_variants, parse_seeds,
    ExperimentRow, evaluate_models, train_models, run_experiments, write_experiments,
)

__all__ = [
    "GeneratorFn",
    "BandEnergyReport",
    "band_energy_report",
    "high_band_ratio",
    "predict_probabilities",
    "edit_delta",
    "attribute_edit_accuracy",
    "mean_edit_accuracy",
    "alpha_sweep",
    "DEFAULT_SWEEP",
    "interpolation_monotonicity",
    "StegReport",
    "steg_probe",
    "probe_dataset",
    "sre",
    "steg_panel",
    "write_probe_report",
    "AblationVariant",
    "register_variant",
    "get_variant",
    "list_variants",
    "resolve_variants",
    "parse_seeds",
    "ExperimentRow",
    "evaluate_models",
    "train_models",
    "run_experiments",
    "write_experiments",
]
