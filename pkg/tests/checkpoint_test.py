"""
Checkpoint-Test - Manifest + Blob, Versionsprüfung, Optimierer-Zustand
"""

import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import build_config
from errors import CheckpointError
from checkpoint import (
    checkpoint_load, checkpoint_save, config_meta, load_models, read_checkpoint, write_checkpoint,
)
from networks.models import build_models
from training.models import TrainConfig
from training.trainer import TrainState


def _tiny_config(**overrides):
    values = {"image_size": 16, "gen_width": 4, "disc_width": 4, "cls_width": 4, "seed": 5}
    values.update(overrides)
    return build_config(values)


def _save(tmp_path, config, name="ckpt", seed=None):
    models = build_models(config, seed=seed)
    state = TrainState.create(models, TrainConfig.from_run_config(config))
    path = checkpoint_save(str(tmp_path / name), models, state.optimizers(), config_meta(config))
    return path, models, state


# =============================================================================
# FORMAT
# =============================================================================

def test_manifest_layout(tmp_path):
    path = write_checkpoint(str(tmp_path / "small"), [("a", np.ones((2, 3))), ("b", np.float32(4.0))],
                            {"seed": "1"})
    raw = open(path, "rb").read()
    header, blob = raw.split(b"\nend\n", 1)
    lines = header.decode("utf-8").split("\n")
    assert lines == ["WAVEGAN-CHECKPOINT 1", "meta seed 1", "tensor a 2,3 f32 0 24", "tensor b - f32 24 4"]
    assert len(blob) == 28
    ckpt = read_checkpoint(path)
    np.testing.assert_array_equal(ckpt.tensors["a"], np.ones((2, 3), dtype=np.float32))
    assert ckpt.tensors["b"].shape == ()


def test_save_load_save_is_byte_identical(tmp_path):
    config = _tiny_config()
    first, _, _ = _save(tmp_path, config, "first")

    models = build_models(config, seed=99)
    state = TrainState.create(models, TrainConfig.from_run_config(config))
    ckpt = checkpoint_load(first, models, state.optimizers())
    second = checkpoint_save(str(tmp_path / "second"), models, state.optimizers(), ckpt.meta)
    assert open(first, "rb").read() == open(second, "rb").read()


def test_optimizer_state_round_trip(tmp_path):
    config = _tiny_config()
    models = build_models(config)
    state = TrainState.create(models, TrainConfig.from_run_config(config))
    state.opt_g.step = 7
    state.opt_g.lr = 1.25e-4
    for arr in state.opt_g.m.values():
        arr[...] = 0.5
    path = checkpoint_save(str(tmp_path / "ckpt"), models, state.optimizers(), config_meta(config))

    fresh = TrainState.create(build_models(config), TrainConfig.from_run_config(config))
    checkpoint_load(path, fresh.models, fresh.optimizers())
    assert fresh.opt_g.step == 7
    assert fresh.opt_g.lr == 1.25e-4
    for arr in fresh.opt_g.m.values():
        np.testing.assert_array_equal(arr, 0.5)


def test_ablation_has_no_highfreq_tensors(tmp_path):
    path, _, _ = _save(tmp_path, _tiny_config(disable_dh=True))
    names = read_checkpoint(path).tensors
    assert not any(name.startswith(("D_H0.", "D_H1.", "opt_D_H.")) for name in names)
    assert any(name.startswith("D_I0.") for name in names)


def test_ema_and_sn_vectors_are_stored(tmp_path):
    path, _, _ = _save(tmp_path, _tiny_config())
    names = read_checkpoint(path).tensors
    assert any(name.startswith("G_ema.") for name in names)
    assert any(name.endswith("sn_u") for name in names)


# =============================================================================
# FEHLERFÄLLE
# =============================================================================

def test_truncated_blob_names_tensor(tmp_path):
    path = write_checkpoint(str(tmp_path / "ckpt"), [("a", np.ones(4)), ("b", np.ones(4))], {})
    raw = open(path, "rb").read()
    with open(path, "wb") as f:
        f.write(raw[:-3])
    with pytest.raises(CheckpointError, match="Blob abgeschnitten bei Tensor b"):
        read_checkpoint(path)


def test_trailing_bytes_are_rejected(tmp_path):
    path = write_checkpoint(str(tmp_path / "ckpt"), [("a", np.ones(2))], {})
    with open(path, "ab") as f:
        f.write(b"\x00\x00")
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_version_mismatch(tmp_path):
    path = write_checkpoint(str(tmp_path / "ckpt"), [("a", np.ones(2))], {})
    raw = open(path, "rb").read().replace(b"WAVEGAN-CHECKPOINT 1", b"WAVEGAN-CHECKPOINT 2", 1)
    with open(path, "wb") as f:
        f.write(raw)
    with pytest.raises(CheckpointError, match="Version 2"):
        read_checkpoint(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "bogus"
    path.write_bytes(b"PNG 1\nend\n")
    with pytest.raises(CheckpointError):
        read_checkpoint(str(path))


def test_missing_file():
    with pytest.raises(CheckpointError):
        read_checkpoint("/nonexistent/ckpt")


def test_names_with_spaces_are_rejected(tmp_path):
    with pytest.raises(CheckpointError):
        write_checkpoint(str(tmp_path / "ckpt"), [("a b", np.ones(1))], {})
    with pytest.raises(CheckpointError):
        write_checkpoint(str(tmp_path / "ckpt"), [("a", np.ones(1)), ("a", np.ones(1))], {})


def test_wrong_model_is_rejected(tmp_path):
    path, _, _ = _save(tmp_path, _tiny_config(disable_dh=True))
    with pytest.raises(CheckpointError):
        checkpoint_load(path, build_models(_tiny_config()))


# =============================================================================
# LOAD_MODELS
# =============================================================================

def test_load_models_rebuilds_from_stored_config(tmp_path):
    config = _tiny_config(disable_dh=True)
    path, models, _ = _save(tmp_path, config)
    loaded_config, loaded, ckpt = load_models(path)
    assert loaded_config == config
    assert ckpt.meta["config_hash"] == config.config_hash()
    assert loaded.d_high == {}
    for (name, a), (_, b) in zip(models.generator_ema.named_parameters(),
                                 loaded.generator_ema.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    assert not loaded.classifier.training
    assert all(not p.requires_grad for _, p in loaded.classifier.named_parameters())


def test_load_models_needs_config(tmp_path):
    path = write_checkpoint(str(tmp_path / "ckpt"), [("a", np.ones(1))], {})
    with pytest.raises(CheckpointError):
        load_models(path)
