"""
Daten-Test - Synthetischer Datensatz, Augmentierung und Pseudo-Labels
"""

import os
import sys

import numpy as np
import pytest

# Projektroot zum Path hinzufügen
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import build_config
from errors import AugmentError, ConfigError, GateError
from engine import Tensor
from networks.classifier import ClassifierNet
from networks.layers import zero_layer
from wavelet import haar_pool
from data import (
    DatasetConfig, Provenance, generate_dataset, generate_splits, dataset_to_batch,
    iterate_batches, write_dataset, read_dataset,
    AugmentOp, AugmentParams, sample_params, apply_augment, augment_from_config,
    labels_from_probabilities, pseudo_label, merge_pools, label_agreement,
    AttributeRenderer, register_renderer, get_renderer, list_renderers, resolve_renderers,
)
from data.synth import detail_field, gaussian_blur, render_sample
from data.pseudo_label import check_gate


def _energies(image_hwc):
    batch = Tensor(image_hwc.transpose(2, 0, 1)[None].astype(np.float64))
    return haar_pool(batch).energies()


def _high_fraction(image_hwc):
    e = _energies(image_hwc)
    return (e["lh"] + e["hl"] + e["hh"]) / sum(e.values())


# =============================================================================
# SYNTHETISCHER DATENSATZ
# =============================================================================

def test_count_zero_gives_empty_dataset():
    assert generate_dataset(DatasetConfig(count=0), seed=1) == []


def test_sample_shape_range_and_labels():
    sample = render_sample(DatasetConfig(count=1), dataset_seed=1, index=0)
    assert sample.image.shape == (32, 32, 3)
    assert sample.image.dtype == np.float32
    assert sample.image.min() >= -1.0 and sample.image.max() <= 1.0
    assert sample.labels.shape == (3,)
    assert sample.provenance == Provenance.GROUND_TRUTH


def test_generation_is_deterministic():
    config = DatasetConfig(count=4, size=16)
    a = generate_dataset(config, seed=5)
    b = generate_dataset(config, seed=5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.image, y.image)
        np.testing.assert_array_equal(x.labels, y.labels)


def test_threads_do_not_change_result(monkeypatch):
    config = DatasetConfig(count=4, size=16)
    serial = generate_dataset(config, seed=2)
    monkeypatch.setenv("WAVEGAN_THREADS", "3")
    parallel = generate_dataset(config, seed=2)
    for x, y in zip(serial, parallel):
        np.testing.assert_array_equal(x.image, y.image)


def test_different_seeds_differ():
    config = DatasetConfig(count=2, size=16)
    a = generate_dataset(config, seed=1)
    b = generate_dataset(config, seed=2)
    assert not np.array_equal(a[0].image, b[0].image)


def test_without_texture_high_bands_are_weak():
    plain = render_sample(DatasetConfig(count=1, detail_texture_amp=0.0), 1, 3)
    textured = render_sample(DatasetConfig(count=1, detail_texture_amp=0.35), 1, 3)
    np.testing.assert_array_equal(plain.labels, textured.labels)
    assert _high_fraction(plain.image) < 0.10
    assert _high_fraction(textured.image) > _high_fraction(plain.image)


def test_blur_keeps_channels_and_flat_regions():
    image = np.zeros((12, 12, 3))
    image[:, :, 0] = 0.7
    image[5, 5, 1] = 1.0
    out = gaussian_blur(image)
    np.testing.assert_allclose(out[..., 0], 0.7)
    np.testing.assert_allclose(out[..., 2], 0.0)
    # Impuls wird verteilt, Summe bleibt erhalten
    assert out[5, 5, 1] < 0.2
    assert out[..., 1].sum() == pytest.approx(1.0)


def test_detail_field_is_pure_high_frequency():
    field = detail_field(16, np.random.default_rng(0))
    blocks = field.reshape(8, 2, 8, 2).sum(axis=(1, 3))
    np.testing.assert_allclose(blocks, 0.0, atol=1e-12)


def test_labels_are_balanced():
    samples = generate_dataset(DatasetConfig(count=200, size=16), seed=3)
    rates = np.stack([s.labels for s in samples]).mean(axis=0)
    assert np.all((rates > 0.3) & (rates < 0.7))


def test_invalid_config():
    with pytest.raises(ConfigError):
        generate_dataset(DatasetConfig(count=-1), seed=0)
    with pytest.raises(ConfigError):
        generate_dataset(DatasetConfig(count=1, size=18), seed=0)


def test_splits_use_disjoint_indices():
    config = build_config({"image_size": 16, "train_count": 3, "test_count": 2, "unlabeled_count": 2})
    train, test, unlabeled = generate_splits(config)
    assert [s.index for s in train] == [0, 1, 2]
    assert [s.index for s in test] == [3, 4]
    assert [s.index for s in unlabeled] == [5, 6]


def test_dataset_to_batch_layout():
    samples = generate_dataset(DatasetConfig(count=3, size=16), seed=1)
    images, labels = dataset_to_batch(samples)
    assert images.shape == (3, 3, 16, 16)
    assert labels.shape == (3, 3)
    np.testing.assert_array_equal(images[1].transpose(1, 2, 0), samples[1].image)
    with pytest.raises(ConfigError):
        dataset_to_batch([])


def test_iterate_batches():
    assert [b.tolist() for b in iterate_batches(5, 2)] == [[0, 1], [2, 3]]
    assert [b.tolist() for b in iterate_batches(5, 2, drop_last=False)] == [[0, 1], [2, 3], [4]]
    assert [b.tolist() for b in iterate_batches(1, 4)] == [[0]]
    assert list(iterate_batches(0, 4)) == []
    shuffled = np.concatenate(list(iterate_batches(6, 3, rng=np.random.default_rng(0))))
    assert sorted(shuffled.tolist()) == list(range(6))


def test_write_and_read_dataset(tmp_path):
    samples = generate_dataset(DatasetConfig(count=3, size=16), seed=4)
    write_dataset(str(tmp_path), samples, ["eyeglasses", "smile", "dark_hair"])
    header = (tmp_path / "manifest.tsv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "index\tseed\teyeglasses\tsmile\tdark_hair\tprovenance\tfile"
    loaded, attributes = read_dataset(str(tmp_path))
    assert attributes == ["eyeglasses", "smile", "dark_hair"]
    for original, back in zip(samples, loaded):
        np.testing.assert_array_equal(original.labels, back.labels)
        assert back.seed == original.seed
        # 8-Bit-Quantisierung
        np.testing.assert_allclose(back.image, original.image, atol=1.0 / 255 + 1e-6)


# =============================================================================
# AUGMENTIERUNG
# =============================================================================

def _image(seed=0, size=16):
    return render_sample(DatasetConfig(count=1, size=size), seed, 0).image


def test_hflip_is_an_involution():
    image = _image()
    op = AugmentOp(kind="hflip")
    twice = apply_augment(op, apply_augment(op, image))
    np.testing.assert_array_equal(twice, image)
    np.testing.assert_array_equal(apply_augment(op, image), image[:, ::-1])


def test_zero_noise_is_identity():
    image = _image(1)
    np.testing.assert_allclose(apply_augment(AugmentOp(kind="noise", noise_sigma=0.0), image), image)


def test_noise_is_seeded():
    image = _image(2)
    op = AugmentOp(kind="noise", noise_sigma=0.1, seed=7)
    np.testing.assert_array_equal(apply_augment(op, image), apply_augment(op, image))


def test_neutral_color_jitter_is_identity():
    image = _image(3)
    params = AugmentParams(kind="color_jitter")
    np.testing.assert_allclose(apply_augment(AugmentOp(kind="color_jitter"), image, params), image, atol=1e-5)


def test_color_jitter_sampled_within_range():
    params = sample_params(AugmentOp(kind="color_jitter", brightness=0.1), (1, 3, 8, 8), np.random.default_rng(0))
    assert 0.9 <= params.brightness <= 1.1


def test_affine_identity_parameters():
    image = _image(4)
    params = AugmentParams(kind="affine")
    np.testing.assert_allclose(apply_augment(AugmentOp(kind="affine"), image, params), image, atol=1e-6)


def test_affine_rotation_swaps_lh_and_hl():
    image = np.full((32, 32, 3), -1.0, dtype=np.float32)
    image[7:9, 4:28] = 1.0
    rotated = apply_augment(AugmentOp(kind="affine"), image, AugmentParams(kind="affine", angle=90.0))
    before, after = _energies(image), _energies(rotated)
    assert before["hl"] > before["lh"]
    assert after["lh"] > after["hl"]


def test_zoom_range_containing_zero_is_rejected():
    with pytest.raises(AugmentError):
        AugmentOp(kind="affine", scale=1.0).validate()


def test_degenerate_zoom_is_rejected():
    with pytest.raises(AugmentError):
        apply_augment(AugmentOp(kind="affine"), _image(5), AugmentParams(kind="affine", zoom=0.0))


def test_unknown_kind():
    with pytest.raises(AugmentError):
        AugmentOp(kind="blur").validate()


def test_augment_from_config():
    assert augment_from_config(build_config({})) is None
    op = augment_from_config(build_config({"cycle_augment": "noise", "aug_noise_sigma": 0.2}))
    assert op.kind == "noise"
    assert op.noise_sigma == 0.2


# =============================================================================
# PSEUDO-LABELS
# =============================================================================

def _undecided_classifier():
    classifier = ClassifierNet(num_attributes=3, width=4, rng=np.random.default_rng(0))
    for head in classifier.heads:
        zero_layer(head.fc2)
    return classifier


def test_threshold_ties_map_to_zero():
    labels = labels_from_probabilities(np.array([[0.5, 0.51, 0.49]]))
    assert labels.tolist() == [[False, True, False]]


def test_all_half_outputs_give_zero_labels():
    unlabeled = generate_dataset(DatasetConfig(count=3, size=16), seed=9)
    pseudo = pseudo_label(_undecided_classifier(), unlabeled, classifier_accuracy=0.99)
    assert len(pseudo) == 3
    for sample, source in zip(pseudo, unlabeled):
        assert sample.provenance == Provenance.PSEUDO
        assert not sample.labels.any()
        assert sample.index == source.index


def test_empty_pool_gives_empty_result():
    assert pseudo_label(_undecided_classifier(), [], classifier_accuracy=0.99) == []


def test_gate_blocks_weak_classifier():
    unlabeled = generate_dataset(DatasetConfig(count=1, size=16), seed=9)
    with pytest.raises(GateError):
        pseudo_label(_undecided_classifier(), unlabeled, classifier_accuracy=0.9, gate=0.95)
    assert len(pseudo_label(_undecided_classifier(), unlabeled, classifier_accuracy=0.9, gate=0.95,
                            override=True)) == 1


def test_gate_requires_known_accuracy():
    with pytest.raises(GateError):
        check_gate(None, 0.95)
    check_gate(None, 0.95, override=True)
    check_gate(0.95, 0.95)


def test_merge_and_agreement():
    labeled = generate_dataset(DatasetConfig(count=2, size=16), seed=1)
    pseudo = pseudo_label(_undecided_classifier(), labeled, classifier_accuracy=1.0)
    merged = merge_pools(labeled, pseudo)
    assert len(merged) == 4
    expected = float(np.mean(~np.stack([s.labels for s in labeled])))
    assert label_agreement(pseudo, labeled) == pytest.approx(expected)


# =============================================================================
# RENDERER-REGISTRY
# =============================================================================

def test_default_renderers_are_registered():
    assert {"eyeglasses", "smile", "dark_hair"} <= set(list_renderers())
    assert get_renderer("smile").id == "smile"
    assert get_renderer("beard") is None


def test_unknown_attribute_is_rejected():
    with pytest.raises(ConfigError):
        resolve_renderers(["eyeglasses", "beard"])
    with pytest.raises(ConfigError):
        generate_dataset(DatasetConfig(count=1, attributes=["beard"]), seed=0)


def test_registered_renderer_drives_labels():
    def stripe(canvas, present, rng, grid):
        if present:
            canvas[grid.size // 2] = 1.0

    register_renderer(AttributeRenderer(id="stripe", name="Streifen", description="Testattribut",
                                        region="mitte", render=stripe))
    samples = generate_dataset(DatasetConfig(count=8, size=16, attributes=["stripe"],
                                             detail_texture_amp=0.0), seed=3)
    assert all(s.labels.shape == (1,) for s in samples)
    assert "stripe" in list_renderers()
