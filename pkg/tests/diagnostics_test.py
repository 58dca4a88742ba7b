"""
Diagnostics-Test - Steganographie-Probe, SRE, Band-Energien, Edit-Genauigkeit
"""

import math
import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import ConfigError, GateError, NumericalError
from engine import Tensor
from networks.classifier import ClassifierNet
from networks.generator import GeneratorNet
from networks.layers import zero_layer
from diagnostics import (
    band_energy_report, high_band_ratio, edit_delta, attribute_edit_accuracy, mean_edit_accuracy,
    alpha_sweep, DEFAULT_SWEEP, interpolation_monotonicity, steg_probe, probe_dataset, sre,
    steg_panel, write_probe_report,
)


def identity_generator(x, condition):
    return x


def shift_generator(x, condition):
    return Tensor(x.data + 0.1)


def tanh_generator(x, condition):
    return Tensor(np.tanh(x.data))


def _images(n=3, size=8, seed=0, amplitude=0.5):
    return np.random.default_rng(seed).uniform(-amplitude, amplitude, (n, 3, size, size))


def _constant_classifier(bias):
    """Klassifikator mit festen Logits `bias` (einer pro Attribut)."""
    classifier = ClassifierNet(num_attributes=len(bias), width=4, rng=np.random.default_rng(0))
    for head, b in zip(classifier.heads, bias):
        zero_layer(head.fc2)
        head.fc2.bias.data[:] = b
    return classifier


# =============================================================================
# STEGANOGRAPHIE-PROBE / SRE
# =============================================================================

def test_identity_generator_has_zero_sre():
    assert sre(identity_generator, _images(), num_attributes=3) == 0.0


def test_constant_shift_gives_half_in_pixel_units():
    assert sre(shift_generator, _images(), num_attributes=3) == pytest.approx(0.05, abs=1e-9)
    report = steg_probe(shift_generator, _images(n=1), num_attributes=3)
    assert report.sre == pytest.approx(0.1, abs=1e-9)
    np.testing.assert_allclose(report.h, -0.1, atol=1e-12)


def test_sre_matches_scalar_loop():
    images = _images(n=2, seed=1, amplitude=1.0)
    total, count = 0.0, 0
    for value in images.ravel():
        y_bar = math.tanh(value)
        x_bar = math.tanh(y_bar)
        total += abs(y_bar - x_bar)
        count += 1
    expected = total / count / 2.0
    assert sre(tanh_generator, images, num_attributes=3) == pytest.approx(expected, abs=1e-12)


def test_sre_is_mean_of_per_image_probes():
    images = _images(n=4, seed=2, amplitude=1.0)
    reports = probe_dataset(tanh_generator, images, num_attributes=3)
    assert len(reports) == 4
    assert sre(tanh_generator, images, num_attributes=3) == pytest.approx(np.mean([r.sre_unit for r in reports]))


def test_empty_image_set_is_rejected():
    with pytest.raises(ConfigError):
        sre(identity_generator, np.zeros((0, 3, 8, 8)), num_attributes=3)


def test_probe_needs_attribute_count_for_plain_callables():
    with pytest.raises(ConfigError):
        steg_probe(identity_generator, _images(n=1))


def test_probe_reads_attribute_count_from_generator():
    g = GeneratorNet(width=2, num_attributes=2, rng=np.random.default_rng(3)).identity_init()
    report = steg_probe(g, _images(n=1, amplitude=0.5).astype(np.float32))
    # tanh ist nicht idempotent: h = tanh(x) − tanh(tanh(x)) ≠ 0
    assert report.sre > 0
    assert report.x.shape == (8, 8, 3)


def test_probe_band_energy_and_panel(tmp_path):
    report = steg_probe(shift_generator, _images(n=1, seed=4), num_attributes=3)
    assert report.high_ratio() == pytest.approx(1.0)
    assert steg_panel(report).shape == (8, 4 * 8 + 3, 3)
    path = write_probe_report(str(tmp_path / "report.tsv"), [report])
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[1].startswith("index\tsre")
    assert lines[2].split("\t")[0] == "0"


# =============================================================================
# BAND-ENERGIEN
# =============================================================================

def test_band_energy_parseval_over_levels():
    images = _images(n=2, size=16, seed=5, amplitude=1.0)
    report = band_energy_report(images, levels=3)
    assert len(report.levels) == 3
    assert report.parseval_sum() == pytest.approx(report.total, rel=1e-10)


def test_band_energy_accepts_single_hwc_image():
    image = _images(n=1, seed=6)[0].transpose(1, 2, 0)
    report = band_energy_report(image)
    assert report.total == pytest.approx(float(np.sum(image ** 2)))


def test_high_band_ratio():
    images = _images(seed=7)
    assert high_band_ratio(images, images) == pytest.approx(1.0)
    assert high_band_ratio(0.5 * images, images) == pytest.approx(0.25)
    with pytest.raises(NumericalError):
        high_band_ratio(images, np.full((1, 3, 8, 8), 0.2))


# =============================================================================
# EDIT-GENAUIGKEIT / MONOTONIE
# =============================================================================

def test_edit_delta_flips_only_one_attribute():
    labels = np.array([[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(edit_delta(labels, 0), [[-1.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(edit_delta(labels, 1, flip=False), np.zeros((2, 2)))


def test_identity_edit_accuracy_with_constant_classifier():
    # Klassifikator sagt für Attribut 0 immer "vorhanden"
    classifier = _constant_classifier([6.0, -6.0])
    labels = np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    images = _images(n=4, seed=8)
    # Ziel = gekipptes Label: vorhanden für die drei Bilder ohne Attribut 0
    assert attribute_edit_accuracy(identity_generator, classifier, images, labels, 0,
                                   override=True) == pytest.approx(0.75)
    # Ziel für Attribut 1 = abwesend für die drei Bilder mit Attribut 1
    assert attribute_edit_accuracy(identity_generator, classifier, images, labels, 1,
                                   override=True) == pytest.approx(0.75)
    # ohne Kippen ist das Ziel das Quell-Label
    assert attribute_edit_accuracy(identity_generator, classifier, images, labels, 0, flip=False,
                                   override=True) == pytest.approx(0.25)


def test_mean_edit_accuracy_has_all_keys():
    classifier = _constant_classifier([6.0, -6.0])
    labels = np.array([[0.0, 1.0], [1.0, 0.0]])
    result = mean_edit_accuracy(identity_generator, classifier, _images(n=2, seed=9), labels, override=True)
    assert set(result) == {"acc_0", "acc_1", "acc_mean"}
    assert result["acc_mean"] == pytest.approx((result["acc_0"] + result["acc_1"]) / 2)


def test_edit_accuracy_respects_gate():
    classifier = _constant_classifier([0.0])
    with pytest.raises(GateError):
        attribute_edit_accuracy(identity_generator, classifier, _images(n=1), np.array([[0.0]]), 0,
                                classifier_accuracy=0.5, gate=0.95)


def test_edit_accuracy_without_known_classifier_needs_override():
    classifier = _constant_classifier([0.0])
    with pytest.raises(GateError):
        attribute_edit_accuracy(identity_generator, classifier, _images(n=1), np.array([[0.0]]), 0)
    with pytest.raises(GateError):
        mean_edit_accuracy(identity_generator, classifier, _images(n=1), np.array([[0.0]]))
    value = attribute_edit_accuracy(identity_generator, classifier, _images(n=1), np.array([[0.0]]), 0,
                                    override=True)
    assert 0.0 <= value <= 1.0


def test_edit_accuracy_rejects_bad_index():
    with pytest.raises(ConfigError):
        attribute_edit_accuracy(identity_generator, _constant_classifier([0.0]), _images(n=1),
                                np.array([[0.0]]), 1, override=True)


def test_alpha_sweep():
    assert DEFAULT_SWEEP == [0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]
    assert alpha_sweep(0.0, 1.0, 0.5) == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        alpha_sweep(1.0, 0.0, 0.1)
    with pytest.raises(ConfigError):
        alpha_sweep(0.0, 1.0, 0.0)


def test_constant_classifier_is_trivially_monotone():
    classifier = _constant_classifier([1.0, -1.0])
    labels = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert interpolation_monotonicity(identity_generator, classifier, _images(n=2), labels, 0) == 1.0


class BrightnessClassifier(ClassifierNet):
    """p = σ(10 · mittlere Helligkeit) für jedes Attribut."""

    def probabilities(self, x):
        score = 10.0 * x.data.mean(axis=(1, 2, 3))
        p = 1.0 / (1.0 + np.exp(-score))
        return np.repeat(p[:, None], self.num_attributes, axis=1)


def _brightening(step):
    def generator(x, condition):
        return Tensor(x.data + step * np.abs(condition).sum(axis=1).reshape(-1, 1, 1, 1))
    return generator


def test_monotonicity_follows_curve_direction():
    classifier = BrightnessClassifier(num_attributes=1, width=4)
    labels = np.array([[0.0], [0.0]])
    images = np.zeros((2, 3, 8, 8))
    assert interpolation_monotonicity(_brightening(0.05), classifier, images, labels, 0) == 1.0
    assert interpolation_monotonicity(_brightening(-0.05), classifier, images, labels, 0) == 0.0
