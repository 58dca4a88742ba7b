"""
WaveGAN Training - Klassifikator-Vortraining

Der Klassifikator wird ausschließlich auf dem gelabelten Pool trainiert
(BCE über alle K Köpfe, Adam) und danach eingefroren.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig, console
from errors import ConfigError, NumericalError
from engine.tensor import Tensor, backward, current_tape, no_grad
from networks.classifier import ClassifierNet
from data.synth import SynthSample, dataset_to_batch, iterate_batches
from data.pseudo_label import labels_from_probabilities
from training.losses import attr_classification_loss
from training.models import AttributeDelta
from training.optim import OptimState, adam_step

CLS_BETAS = (0.9, 0.999)


@dataclass
class ClassifierReport:
    """Ergebnis des Vortrainings."""
    epochs: int
    train_accuracy: float
    test_accuracy: Optional[float]
    per_attribute: List[float] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)

    @property
    def gate_accuracy(self) -> float:
        """Genauigkeit für das Gate: Test, falls vorhanden."""
        return self.test_accuracy if self.test_accuracy is not None else self.train_accuracy

    def to_dict(self) -> Dict:
        return {
            "epochs": self.epochs,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "per_attribute": self.per_attribute,
            "final_loss": self.losses[-1] if self.losses else None,
        }


def predict_labels(classifier: ClassifierNet, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Bool-Vorhersagen (N, K) für N×3×H×W-Bilder."""
    out = []
    with no_grad():
        for start in range(0, images.shape[0], batch_size):
            probs = classifier.probabilities(Tensor(images[start:start + batch_size]))
            out.append(labels_from_probabilities(probs))
    return np.concatenate(out, axis=0)


def evaluate_classifier(classifier: ClassifierNet, samples: Sequence[SynthSample],
                        batch_size: int = 64) -> np.ndarray:
    """
    Genauigkeit pro Attribut.

    Raises:
        ConfigError: leerer Datensatz
    """
    images, labels = dataset_to_batch(samples)
    was_training = classifier.training
    classifier.eval()
    try:
        predictions = predict_labels(classifier, images, batch_size)
    finally:
        classifier.train(was_training)
    return np.mean(predictions == labels.astype(bool), axis=0)


def freeze_classifier(classifier: ClassifierNet) -> ClassifierNet:
    classifier.set_requires_grad(False)
    classifier.zero_grad()
    classifier.eval()
    return classifier


def pretrain_classifier(classifier: ClassifierNet, train: Sequence[SynthSample],
                        config: RunConfig, test: Optional[Sequence[SynthSample]] = None,
                        rng: Optional[np.random.Generator] = None) -> ClassifierReport:
    """
    Trainiert C auf dem gelabelten Pool und friert ihn ein.

    Raises:
        ConfigError: leerer Trainingspool
        NumericalError: nicht-endlicher Verlust
    """
    if not train:
        raise ConfigError("Klassifikator-Vortraining braucht gelabelte Samples")
    rng = rng if rng is not None else np.random.default_rng([config.seed, 0xC1A5])
    images, labels = dataset_to_batch(train)
    state = OptimState.for_params(classifier, lr=config.cls_lr, beta1=CLS_BETAS[0],
                                  beta2=CLS_BETAS[1], eps=config.adam_eps)
    all_ones = np.ones_like(labels)
    classifier.train()
    classifier.set_requires_grad(True)
    losses: List[float] = []

    for epoch in range(config.cls_epochs):
        epoch_losses = []
        for idx in iterate_batches(len(train), config.cls_batch_size, rng):
            classifier.zero_grad()
            try:
                logits, _ = classifier(Tensor(images[idx]))
                loss = attr_classification_loss(logits, labels[idx], AttributeDelta(all_ones[idx]))
                backward(loss)
            except NumericalError:
                current_tape().clear()
                raise
            adam_step(state, classifier)
            epoch_losses.append(loss.item())
        losses.append(float(np.mean(epoch_losses)) if epoch_losses else 0.0)
        console(f"   🎯 Klassifikator Epoche {epoch + 1}/{config.cls_epochs}: Verlust {losses[-1]:.4f}", "DEBUG")

    freeze_classifier(classifier)
    train_acc = evaluate_classifier(classifier, train)
    per_attribute = evaluate_classifier(classifier, test) if test else train_acc
    report = ClassifierReport(
        epochs=config.cls_epochs,
        train_accuracy=float(np.mean(train_acc)),
        test_accuracy=float(np.mean(per_attribute)) if test else None,
        per_attribute=[float(a) for a in per_attribute],
        losses=losses,
    )
    console(f"✅ Klassifikator: Train {report.train_accuracy:.3f}, Test {report.test_accuracy}", "INFO")
    return report
