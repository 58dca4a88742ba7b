"""
Netzwerk-Test - Generator, Diskriminatoren, Klassifikator und ModelSet
"""

import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import build_config
from errors import ConfigError, NumericalError, ShapeError
from engine import Tensor, no_grad, reduce, mul, check_gradients
from networks.layers import AdaIN, Conv2d, spectral_normalize
from networks.generator import GeneratorNet, skip_multiplier
from networks.discriminator import DiscriminatorNet, prepare_input
from networks.classifier import ClassifierNet
from networks.models import build_models


def _images(n=2, size=16, seed=0, amplitude=1.0):
    return Tensor(np.random.default_rng(seed).uniform(-amplitude, amplitude, (n, 3, size, size)).astype(np.float32))


# =============================================================================
# GENERATOR
# =============================================================================

@pytest.mark.parametrize("mode", ["high", "low", "all", "vanilla", "none"])
def test_generator_output_shape_and_range(mode):
    g = GeneratorNet(width=4, num_attributes=3, skip_mode=mode, rng=np.random.default_rng(1))
    with no_grad():
        y = g(_images(), np.array([1.0, 0.0, -1.0]))
    assert y.shape == (2, 3, 16, 16)
    assert np.all(np.abs(y.data) <= 1.0)


def test_skip_multiplier():
    assert skip_multiplier("high") == 3
    assert skip_multiplier("all") == 4
    assert skip_multiplier("vanilla") == 1
    assert skip_multiplier("none") == 0
    with pytest.raises(ConfigError):
        skip_multiplier("mid")


def test_generator_rejects_bad_condition():
    g = GeneratorNet(width=4, num_attributes=3, rng=np.random.default_rng(2))
    with pytest.raises(ShapeError):
        g(_images(), np.zeros((2, 2)))


def test_generator_rejects_size_not_divisible_by_four():
    g = GeneratorNet(width=4, num_attributes=3, rng=np.random.default_rng(3))
    with pytest.raises(ShapeError):
        g(_images(size=18), np.zeros(3))


def test_identity_init_passes_image_through():
    x = _images(seed=4)
    g = GeneratorNet(width=4, num_attributes=3, rng=np.random.default_rng(5)).identity_init()
    with no_grad():
        y = g(x, np.array([2.0, -2.0, 1.0]))
    np.testing.assert_allclose(y.data, np.tanh(x.data), atol=1e-5)


def test_identity_init_small_amplitude_edit_at_alpha_zero():
    x = _images(seed=6, amplitude=0.02)
    g = GeneratorNet(width=4, num_attributes=3, rng=np.random.default_rng(7)).identity_init()
    with no_grad():
        y = g(x, np.zeros(3))
    np.testing.assert_allclose(y.data, x.data, atol=1e-3)


def test_dropping_skips_removes_fine_detail():
    x = _images(seed=8)
    g = GeneratorNet(width=4, num_attributes=3, rng=np.random.default_rng(9)).identity_init()
    with no_grad():
        y = g(x, np.zeros(3), drop_skips=True).data
    # nur der LL-Anteil der 4x4-Blöcke bleibt
    blocks = np.arctanh(y).reshape(2, 3, 4, 4, 4, 4)
    np.testing.assert_allclose(blocks, blocks[:, :, :, :1, :, :1].repeat(4, 3).repeat(4, 5), atol=1e-4)


def test_identity_init_requires_high_mode():
    g = GeneratorNet(width=4, num_attributes=3, skip_mode="vanilla", rng=np.random.default_rng(10))
    with pytest.raises(ConfigError):
        g.identity_init()


def test_adain_starts_as_identity_modulation():
    layer = AdaIN(channels=2, cond_dim=3)
    x = Tensor(np.random.default_rng(11).normal(size=(1, 2, 4, 4)))
    with no_grad():
        out = layer(x, Tensor(np.array([[1.0, -1.0, 0.0]])))
    xd = x.data
    expected = (xd - xd.mean(axis=(2, 3), keepdims=True)) / np.sqrt(xd.var(axis=(2, 3), keepdims=True) + 1e-5)
    np.testing.assert_allclose(out.data, expected, atol=1e-5)


def test_gradcheck_small_generator():
    g = GeneratorNet(width=2, num_attributes=2, rng=np.random.default_rng(12)).to_dtype(np.float64)
    x = Tensor(np.random.default_rng(13).uniform(-1, 1, (1, 3, 8, 8)))
    cond = np.array([[0.7, -1.3]])
    target = Tensor(np.random.default_rng(14).normal(size=(1, 3, 8, 8)))
    params = dict(g.named_parameters())
    leaves = [params["from_rgb.weight"], params["bottleneck3.norm1.weight"], params["to_rgb.bias"]]
    report = check_gradients(lambda: reduce("sum", mul(g(x, cond), target)), leaves, step=1e-6,
                             max_entries_per_leaf=4, rng=np.random.default_rng(15))
    assert report.passed, report.errors


# =============================================================================
# DISKRIMINATOREN
# =============================================================================

@pytest.mark.parametrize("scale_id, channels, extent", [("I0", 3, 16), ("I1", 3, 8), ("H0", 9, 8), ("H1", 9, 4)])
def test_prepare_input_shapes(scale_id, channels, extent):
    with no_grad():
        h = prepare_input(scale_id, _images())
    assert h.shape == (2, channels, extent, extent)


@pytest.mark.parametrize("scale_id", ["I0", "I1", "H0", "H1"])
def test_discriminator_emits_one_logit(scale_id):
    d = DiscriminatorNet(scale_id, image_size=16, base_width=4, rng=np.random.default_rng(16))
    with no_grad():
        out = d(_images())
    assert out.shape == (2, 1, 1, 1)


def test_unknown_scale_rejected():
    with pytest.raises(ConfigError):
        DiscriminatorNet("X2", image_size=16)


def test_spectral_norm_converges_to_unit_sigma():
    conv = Conv2d(4, 6, 3, spectral=True, sn_iters=100, rng=np.random.default_rng(17))
    with no_grad():
        w = conv.effective_weight().data
    sigma = np.linalg.svd(w.reshape(6, -1), compute_uv=False)[0]
    assert sigma == pytest.approx(1.0, abs=1e-3)


def test_spectral_norm_of_zero_weight_fails():
    w = Tensor(np.zeros((2, 2, 1, 1)))
    with pytest.raises(NumericalError):
        spectral_normalize(w, np.ones(2), np.ones(2))


def test_spectral_vectors_frozen_in_eval():
    conv = Conv2d(2, 3, 3, spectral=True, rng=np.random.default_rng(18)).eval()
    before = conv.buffer("sn_u").copy()
    with no_grad():
        conv.effective_weight()
    np.testing.assert_array_equal(conv.buffer("sn_u"), before)


def test_gradcheck_discriminator_eval_mode():
    d = DiscriminatorNet("H0", image_size=16, base_width=2, rng=np.random.default_rng(19))
    d.to_dtype(np.float64).eval()
    x = Tensor(np.random.default_rng(20).uniform(-1, 1, (2, 3, 16, 16)))
    params = dict(d.named_parameters())
    leaves = [params["conv0.weight"], params["head.weight"]]
    report = check_gradients(lambda: reduce("sum", d(x)), leaves, step=1e-6, max_entries_per_leaf=5,
                             rng=np.random.default_rng(21))
    assert report.passed, report.errors


# =============================================================================
# KLASSIFIKATOR / MODELSET
# =============================================================================

def test_classifier_shapes():
    c = ClassifierNet(num_attributes=3, width=4, rng=np.random.default_rng(22))
    with no_grad():
        logits, f = c(_images())
        probs = c.probabilities(_images())
    assert logits.shape == (2, 3)
    assert f.shape == (2, 32)
    assert probs.shape == (2, 3)
    assert np.all((probs > 0) & (probs < 1))


def _tiny_config(**overrides):
    values = dict(image_size=16, gen_width=4, disc_width=4, cls_width=4)
    values.update(overrides)
    return build_config(values)


def test_build_models_is_deterministic():
    a = build_models(_tiny_config(seed=3))
    b = build_models(_tiny_config(seed=3))
    for (name_a, va), (name_b, vb) in zip(a.named_state(), b.named_state()):
        assert name_a == name_b
        np.testing.assert_array_equal(va, vb)


def test_ema_starts_as_copy_without_grad():
    models = build_models(_tiny_config())
    for (_, live), (_, shadow) in zip(models.generator.named_parameters(), models.generator_ema.named_parameters()):
        np.testing.assert_array_equal(live.data, shadow.data)
        assert not shadow.requires_grad


def test_disable_dh_has_no_high_frequency_discriminators():
    models = build_models(_tiny_config(disable_dh=True))
    assert set(models.networks()) == {"G", "G_ema", "D_I0", "D_I1", "C"}
    assert not any(name.startswith("D_H") for name, _ in models.named_state())


def test_full_model_set_names():
    models = build_models(_tiny_config())
    assert set(models.networks()) == {"G", "G_ema", "D_I0", "D_I1", "D_H0", "D_H1", "C"}


def test_load_state_rejects_missing_tensor():
    models = build_models(_tiny_config())
    state = dict(models.named_state())
    state.pop(next(iter(state)))
    with pytest.raises(KeyError):
        models.load_named_state(state)
