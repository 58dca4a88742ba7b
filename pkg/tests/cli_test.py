"""
CLI-Test - Unterbefehle, Artefakte und Exit-Codes
"""

import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import ConfigError
from cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main, parse_alpha_range, parse_delta
from checkpoint import read_checkpoint
from image_io import load_image, save_image
from training.models import METRICS_HEADER

TINY = ["--set", "image_size=16", "--set", "gen_width=4", "--set", "disc_width=4", "--set", "cls_width=4"]
TINY_DATA = ["--set", "train_count=4", "--set", "test_count=2", "--set", "unlabeled_count=2",
             "--set", "batch_size=2", "--set", "max_steps_per_epoch=1", "--set", "cls_epochs=1",
             "--set", "cls_batch_size=2", "--set", "gate_override=true"]


@pytest.fixture(scope="module")
def untrained_run(tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("run")
    assert main(["train", "--epochs", "0", "--seed", "2", "--run-dir", str(run_dir)] + TINY) == EXIT_OK
    return run_dir


def _input_image(path, size=16, seed=0):
    image = np.random.default_rng(seed).uniform(-0.5, 0.5, (size, size, 3))
    return save_image(str(path), image)


def _manifest(directory):
    return (directory / "MANIFEST").read_text(encoding="utf-8").splitlines()


# =============================================================================
# PARSER-HILFEN
# =============================================================================

def test_parse_delta():
    names = ["eyeglasses", "smile", "dark_hair"]
    np.testing.assert_array_equal(parse_delta("eyeglasses=+1,smile=-1", names), [1.0, -1.0, 0.0])
    np.testing.assert_array_equal(parse_delta("2:1", names), [0.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        parse_delta("beard=+1", names)
    with pytest.raises(ConfigError):
        parse_delta("smile=+2", names)


def test_parse_alpha_range():
    alphas = parse_alpha_range("0.4:2.0:0.2")
    assert len(alphas) == 9
    assert alphas[0] == pytest.approx(0.4) and alphas[-1] == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        parse_alpha_range("0.4:2.0")
    with pytest.raises(ConfigError):
        parse_alpha_range("0:3:1")


# =============================================================================
# TRAIN
# =============================================================================

def test_zero_epochs_writes_header_and_final_checkpoint(untrained_run):
    lines = (untrained_run / "metrics.tsv").read_text(encoding="utf-8").splitlines()
    assert lines == [METRICS_HEADER]
    assert (untrained_run / "ckpt_final").exists()
    assert (untrained_run / "config_resolved.cfg").exists()
    manifest = _manifest(untrained_run)
    assert [line.split("\t")[0] for line in manifest] == ["config_resolved.cfg", "metrics.tsv", "ckpt_final"]
    assert len({line.split("\t")[1] for line in manifest}) == 1
    assert any(name.startswith("session_") for name in os.listdir(untrained_run))


def test_checkpoint_meta_matches_run(untrained_run):
    ckpt = read_checkpoint(str(untrained_run / "ckpt_final"))
    assert ckpt.meta["seed"] == "2"
    assert ckpt.meta["epoch"] == "0"
    assert ckpt.meta["step"] == "0"
    assert ckpt.meta["config_hash"] == _manifest(untrained_run)[0].split("\t")[1]


def test_short_training_run_is_reproducible(tmp_path):
    outputs = []
    for name in ("a", "b"):
        run_dir = tmp_path / name
        args = ["train", "--epochs", "1", "--seed", "4", "--run-dir", str(run_dir)] + TINY + TINY_DATA
        assert main(args) == EXIT_OK
        outputs.append(run_dir)

    a = (outputs[0] / "metrics.tsv").read_text(encoding="utf-8")
    b = (outputs[1] / "metrics.tsv").read_text(encoding="utf-8")
    assert a == b
    # konstante Phase + Abklingphase, je ein Schritt
    assert len(a.splitlines()) == 3
    assert [line.split("\t")[0] for line in _manifest(outputs[0])] == [
        "config_resolved.cfg", "metrics.tsv", "ckpt_001", "ckpt_002", "ckpt_final",
    ]
    assert (outputs[0] / "ckpt_final").read_bytes() == (outputs[1] / "ckpt_final").read_bytes()


# =============================================================================
# EDIT / PROBE / METRICS
# =============================================================================

def test_edit_single_image(untrained_run, tmp_path):
    image = _input_image(tmp_path / "in.png")
    out = tmp_path / "out" / "edited.png"
    code = main(["edit", "--ckpt", str(untrained_run / "ckpt_final"), "--image", image,
                 "--delta", "eyeglasses=+1", "--out", str(out)])
    assert code == EXIT_OK
    assert load_image(str(out)).shape == (16, 16, 3)


def test_edit_alpha_range_writes_nine_images(untrained_run, tmp_path):
    image = _input_image(tmp_path / "in.png")
    out = tmp_path / "sweep"
    code = main(["edit", "--ckpt", str(untrained_run / "ckpt_final"), "--image", image,
                 "--delta", "smile=-1", "--alpha-range", "0.4:2.0:0.2", "--out", str(out)])
    assert code == EXIT_OK
    pngs = sorted(p for p in os.listdir(out) if p.endswith(".png"))
    assert len(pngs) == 9
    assert pngs[0] == "edit_alpha_0.40.png"
    assert len(_manifest(out)) == 9


def test_edit_rejects_wrong_image_size(untrained_run, tmp_path):
    image = _input_image(tmp_path / "big.png", size=32)
    code = main(["edit", "--ckpt", str(untrained_run / "ckpt_final"), "--image", image,
                 "--delta", "smile=+1", "--out", str(tmp_path / "x.png")])
    assert code == EXIT_CONFIG


def test_probe_writes_panels_and_report(untrained_run, tmp_path, capsys):
    out = tmp_path / "probe"
    assert main(["probe", "--ckpt", str(untrained_run / "ckpt_final"), "--count", "2", "--out", str(out)]) == EXIT_OK
    assert (out / "probe_000.png").exists()
    assert (out / "probe_001.png").exists()
    report = (out / "report.tsv").read_text(encoding="utf-8").splitlines()
    assert len(report) == 4
    assert "SRE" in capsys.readouterr().out


def test_metrics_prints_one_row_per_checkpoint(untrained_run, capsys):
    ckpt = str(untrained_run / "ckpt_final")
    assert main(["metrics", "--ckpt", ckpt, "--count", "2"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    lines = out[next(i for i, line in enumerate(out) if line.startswith("checkpoint")):]
    assert lines[0].split("\t")[1:] == ["SRE", "Acc.", "Mono."]
    assert lines[1].startswith(ckpt)
    assert all(np.isfinite(float(v)) for v in lines[1].split("\t")[1:])


# =============================================================================
# WAVELET / DATASET
# =============================================================================

def test_wavelet_decompose_writes_five_images(tmp_path):
    image = _input_image(tmp_path / "face.png")
    out = tmp_path / "bands"
    assert main(["wavelet", "decompose", image, "--out", str(out), "--amplify", "4"]) == EXIT_OK
    for band in ("ll", "lh", "hl", "hh"):
        assert load_image(str(out / f"face_{band}.png")).shape == (8, 8, 3)
    assert load_image(str(out / "face_high.png")).shape == (16, 16, 3)
    assert len(_manifest(out)) == 5


def test_dataset_seeds_differ_but_share_schema(tmp_path):
    for seed in ("1", "2"):
        assert main(["dataset", "gen", "--count", "2", "--seed", seed, "--size", "16",
                     "--out", str(tmp_path / seed)]) == EXIT_OK
    header_1 = (tmp_path / "1" / "manifest.tsv").read_text(encoding="utf-8").splitlines()[0]
    header_2 = (tmp_path / "2" / "manifest.tsv").read_text(encoding="utf-8").splitlines()[0]
    assert header_1 == header_2
    a = load_image(str(tmp_path / "1" / "sample_000000.png"))
    b = load_image(str(tmp_path / "2" / "sample_000000.png"))
    assert not np.array_equal(a, b)
    assert len(_manifest(tmp_path / "1")) == 3


# =============================================================================
# EXIT-CODES
# =============================================================================

def test_unknown_config_key_exits_with_config_code(tmp_path):
    code = main(["train", "--epochs", "0", "--run-dir", str(tmp_path), "--set", "lamda_cyc=5"])
    assert code == EXIT_CONFIG


def test_missing_config_file_exits_with_config_code(tmp_path):
    code = main(["train", "--config", str(tmp_path / "missing.cfg"), "--run-dir", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_missing_checkpoint_exits_with_io_code(tmp_path):
    image = _input_image(tmp_path / "in.png")
    code = main(["edit", "--ckpt", str(tmp_path / "nope"), "--image", image, "--delta", "smile=+1",
                 "--out", str(tmp_path / "x.png")])
    assert code == EXIT_IO


def test_unsupported_image_format_exits_with_io_code(tmp_path):
    code = main(["wavelet", "decompose", str(tmp_path / "face.gif"), "--out", str(tmp_path)])
    assert code == EXIT_IO
