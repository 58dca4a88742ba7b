"""
Experiments-Test - Varianten-Registry, Median über Seeds, TSV-Ausgabe
"""

import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import build_config
from errors import ConfigError, NumericalError
from cli import EXIT_CONFIG, EXIT_OK, main
from diagnostics.experiments import (
    EXPERIMENTS_HEADER, RUNS_HEADER, ExperimentRow, get_variant, list_variants, parse_seeds,
    resolve_variants, run_experiments, write_experiments,
)
import diagnostics.experiments as experiments


def _tiny_config(**overrides):
    values = {
        "image_size": 16, "gen_width": 4, "disc_width": 4, "cls_width": 4,
        "train_count": 4, "test_count": 2, "unlabeled_count": 2,
        "batch_size": 2, "epochs": 0, "decay_epochs": 0, "max_steps_per_epoch": 1,
        "cls_epochs": 1, "cls_batch_size": 2, "gate_override": True,
    }
    values.update(overrides)
    return build_config(values)


# =============================================================================
# REGISTRY
# =============================================================================

def test_grid_covers_every_ablation_switch():
    ids = list_variants()
    assert ids[0] == "full"
    assert {"vanilla_skip", "no_wavelet_skip", "no_dh", "skip_low", "skip_all", "no_ar"} <= set(ids)
    assert {"aug_hflip", "aug_noise", "aug_color_jitter", "aug_affine"} <= set(ids)
    assert get_variant("full").overrides == {}


def test_every_variant_builds_a_valid_config():
    base = _tiny_config()
    for variant in resolve_variants(["all"]):
        config = variant.apply(base, seed=7)
        assert config.seed == 7
        for key, value in variant.overrides.items():
            assert getattr(config, key) == value


def test_unknown_variant_is_rejected():
    with pytest.raises(ConfigError):
        resolve_variants(["full", "no_cycle"])
    with pytest.raises(ConfigError):
        resolve_variants([])


def test_parse_seeds():
    assert parse_seeds("0,1, 2") == [0, 1, 2]
    with pytest.raises(ConfigError):
        parse_seeds("")
    with pytest.raises(ConfigError):
        parse_seeds("a,b")


# =============================================================================
# LÄUFE
# =============================================================================

def test_medians_per_variant_at_tiny_scale():
    rows = run_experiments(_tiny_config(), resolve_variants(["full", "no_dh"]), seeds=[0, 1], count=2)
    assert [r.variant for r in rows] == ["full", "no_dh"]
    for row in rows:
        assert row.seeds == [0, 1]
        assert row.failed == 0
        for key in ("sre", "acc", "monotonicity"):
            values = [r[key] for r in row.runs]
            assert row.median(key) == pytest.approx(float(np.median(values)))
            assert 0.0 <= row.median(key) <= 1.0


def test_short_training_run_is_evaluated():
    rows = run_experiments(_tiny_config(epochs=1), resolve_variants(["skip_low"]), seeds=[3], count=2)
    assert rows[0].failed == 0
    assert np.isfinite(rows[0].median("sre"))


def test_diverged_seed_is_left_out_of_median(monkeypatch):
    original = experiments.train_models

    def diverging(config):
        if config.seed == 1:
            raise NumericalError("NaN im Verlust")
        return original(config)

    monkeypatch.setattr(experiments, "train_models", diverging)
    row = run_experiments(_tiny_config(), resolve_variants(["full"]), seeds=[0, 1], count=2)[0]
    assert row.seeds == [0, 1]
    assert row.failed == 1
    assert row.median("sre") == pytest.approx(row.runs[0]["sre"])
    assert "nan" in row.run_rows()[1]


def test_write_experiments(tmp_path):
    row = ExperimentRow("full", [0, 1], [
        {"sre": 0.02, "acc": 0.9, "monotonicity": 0.8},
        {"sre": 0.04, "acc": 0.7, "monotonicity": 0.6},
    ])
    summary, runs = write_experiments(str(tmp_path), [row])
    lines = open(summary, encoding="utf-8").read().splitlines()
    assert lines == [EXPERIMENTS_HEADER, "full\t0,1\t0\t0.0300\t0.8000\t0.7000"]
    lines = open(runs, encoding="utf-8").read().splitlines()
    assert lines[0] == RUNS_HEADER
    assert lines[1:] == ["full\t0\t0.0200\t0.9000\t0.8000", "full\t1\t0.0400\t0.7000\t0.6000"]


# =============================================================================
# CLI
# =============================================================================

TINY = ["--set", "image_size=16", "--set", "gen_width=4", "--set", "disc_width=4", "--set", "cls_width=4",
        "--set", "gate_override=true"]


def test_experiments_command_writes_tables(tmp_path, capsys):
    out = tmp_path / "exp"
    code = main(["experiments", "--epochs", "0", "--variants", "full,vanilla_skip", "--seeds", "0,1",
                 "--count", "2", "--out", str(out)] + TINY)
    assert code == EXIT_OK
    lines = (out / "experiments.tsv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == EXPERIMENTS_HEADER
    assert [line.split("\t")[:3] for line in lines[1:]] == [["full", "0,1", "0"], ["vanilla_skip", "0,1", "0"]]
    assert len((out / "experiments_runs.tsv").read_text(encoding="utf-8").splitlines()) == 5
    manifest = (out / "MANIFEST").read_text(encoding="utf-8").splitlines()
    assert [line.split("\t")[0] for line in manifest] == ["experiments.tsv", "experiments_runs.tsv"]
    assert any(name.startswith("session_") for name in os.listdir(out))
    assert EXPERIMENTS_HEADER in capsys.readouterr().out


def test_experiments_command_rejects_unknown_variant(tmp_path):
    code = main(["experiments", "--epochs", "0", "--variants", "no_cycle", "--out", str(tmp_path)] + TINY)
    assert code == EXIT_CONFIG
