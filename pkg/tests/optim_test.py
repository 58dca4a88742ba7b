"""
Optimierungs-Test - Adam, EMA und Lernraten-Zeitplan
"""

import math
import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import NumericalError, ShapeError
from engine import parameter
from networks.layers import Linear
from training.models import LearningRates, TrainConfig
from training.optim import OptimState, adam_step, ema_update, lr_schedule, grad_norm, param_group


def _scalar(value=1.0):
    return {"w": parameter(np.array([value], dtype=np.float64), name="w")}


# =============================================================================
# ADAM
# =============================================================================

def test_first_step_moves_by_lr():
    params = _scalar(1.0)
    state = OptimState.for_params(params, lr=5e-4)
    adam_step(state, params, {"w": np.array([0.3])})
    assert params["w"].data[0] == pytest.approx(1.0 - 5e-4, abs=1e-9)
    assert state.step == 1


def test_zero_gradient_leaves_parameters():
    params = _scalar(2.0)
    state = OptimState.for_params(params, lr=1e-2)
    for _ in range(3):
        adam_step(state, params, {"w": np.array([0.0])})
    assert params["w"].data[0] == 2.0


def test_matches_reference_scalar_trace():
    lr, b1, b2, eps = 1e-2, 0.5, 0.999, 1e-8
    grads = [0.4, -0.1, 0.25, 0.0, -0.7]

    theta, m, v = 0.8, 0.0, 0.0
    expected = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        expected.append(theta)

    params = _scalar(0.8)
    state = OptimState.for_params(params, lr=lr, beta1=b1, beta2=b2, eps=eps)
    for g, want in zip(grads, expected):
        adam_step(state, params, {"w": np.array([g])})
        assert params["w"].data[0] == pytest.approx(want, abs=1e-7)


def test_uses_param_grad_when_no_map_given():
    params = _scalar(0.0)
    params["w"].grad = np.array([-1.0])
    state = OptimState.for_params(params, lr=0.1)
    adam_step(state, params)
    assert params["w"].data[0] == pytest.approx(0.1, abs=1e-6)


def test_non_finite_gradient_aborts_without_change():
    params = _scalar(1.0)
    state = OptimState.for_params(params, lr=0.1)
    with pytest.raises(NumericalError):
        adam_step(state, params, {"w": np.array([np.nan])})
    assert params["w"].data[0] == 1.0
    assert state.step == 0


def test_gradient_shape_mismatch():
    params = _scalar(1.0)
    state = OptimState.for_params(params, lr=0.1)
    with pytest.raises(ShapeError):
        adam_step(state, params, {"w": np.zeros(2)})


def test_lr_override_is_stored():
    params = _scalar(1.0)
    state = OptimState.for_params(params, lr=0.1)
    adam_step(state, params, {"w": np.array([1.0])}, lr=0.05)
    assert state.lr == 0.05
    assert params["w"].data[0] == pytest.approx(0.95, abs=1e-6)


def test_moments_shaped_like_parameters():
    layer = Linear(3, 2, rng=np.random.default_rng(0))
    state = OptimState.for_params(layer, lr=0.1)
    for name, p in layer.named_parameters():
        assert state.m[name].shape == p.shape
        assert state.v[name].shape == p.shape
    assert set(state.arrays()) == {"m.weight", "m.bias", "v.weight", "v.bias"}


def test_param_group_prefixes_names():
    nets = {"I0": Linear(2, 2), "I1": Linear(2, 1)}
    group = param_group(nets)
    assert set(group) == {"I0.weight", "I0.bias", "I1.weight", "I1.bias"}


def test_grad_norm():
    params = {"a": parameter(np.zeros(2)), "b": parameter(np.zeros(1))}
    params["a"].grad = np.array([3.0, 0.0])
    params["b"].grad = np.array([4.0])
    assert grad_norm(params) == pytest.approx(5.0)


# =============================================================================
# EMA
# =============================================================================

def test_ema_decay_zero_copies_live():
    shadow, live = _scalar(0.0), _scalar(3.0)
    ema_update(shadow, live, 0.0)
    assert shadow["w"].data[0] == 3.0


def test_ema_decay_one_keeps_shadow():
    shadow, live = _scalar(-1.0), _scalar(3.0)
    ema_update(shadow, live, 1.0)
    assert shadow["w"].data[0] == -1.0


def test_ema_converges_geometrically():
    shadow, live = _scalar(5.0), _scalar(1.0)
    decay = 0.9
    for _ in range(10):
        ema_update(shadow, live, decay)
    assert abs(shadow["w"].data[0] - 1.0) == pytest.approx(decay ** 10 * 4.0, rel=1e-9)


def test_ema_never_sets_gradient():
    shadow, live = _scalar(0.0), _scalar(1.0)
    shadow["w"].grad = np.array([1.0])
    ema_update(shadow, live, 0.5)
    assert shadow["w"].grad is None


def test_ema_rejects_mismatched_names():
    with pytest.raises(ShapeError):
        ema_update({"a": parameter(np.zeros(1))}, {"b": parameter(np.zeros(1))}, 0.5)


# =============================================================================
# LERNRATEN
# =============================================================================

def _schedule_config():
    return TrainConfig(epochs=100, decay_epochs=100, base_lrs=LearningRates(5e-4, 2e-3, 2e-3))


def test_schedule_constant_in_first_phase():
    config = _schedule_config()
    assert lr_schedule(0, config).as_tuple() == (5e-4, 2e-3, 2e-3)
    assert lr_schedule(99, config).as_tuple() == (5e-4, 2e-3, 2e-3)


def test_schedule_decays_every_ten_epochs():
    config = _schedule_config()
    assert lr_schedule(109, config).g == pytest.approx(5e-4)
    assert lr_schedule(110, config).g == pytest.approx(5e-4 * 0.999)
    lrs = lr_schedule(125, config)
    assert lrs.g == pytest.approx(5e-4 * 0.999 ** 2)
    assert lrs.d_h == pytest.approx(2e-3 * 0.999 ** 2)


def test_schedule_rejects_negative_epoch():
    with pytest.raises(ValueError):
        lr_schedule(-1, _schedule_config())
