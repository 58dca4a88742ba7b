"""
WaveGAN Data - Pseudo-Labels

Der vortrainierte Klassifikator labelt den unlabeled Pool; gelabelte und
pseudo-gelabelte Samples werden gemeinsam für das GAN-Training genutzt.
"""

from typing import List, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import console
from errors import GateError
from engine.tensor import Tensor, no_grad
from networks.classifier import ClassifierNet
from data.synth import Provenance, SynthSample

DEFAULT_THRESHOLD = 0.5


def labels_from_probabilities(probs: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """label_k = p_k > threshold; p = threshold ergibt 0."""
    return np.asarray(probs) > threshold


def check_gate(classifier_accuracy: Optional[float], gate: float, override: bool = False):
    """
    Raises:
        GateError: Genauigkeit unter dem Gate (ohne Override)
    """
    if classifier_accuracy is None:
        if override:
            return
        raise GateError("Klassifikator-Genauigkeit unbekannt; Gate kann nicht geprüft werden")
    if classifier_accuracy < gate:
        if override:
            console(f"⚠️ Klassifikator-Gate übersteuert: {classifier_accuracy:.3f} < {gate:.3f}", "WARNING")
            return
        raise GateError(f"Klassifikator-Genauigkeit {classifier_accuracy:.3f} unter Gate {gate:.3f}")


def pseudo_label(classifier: ClassifierNet, unlabeled: Sequence[SynthSample],
                 classifier_accuracy: Optional[float], gate: float = 0.95, override: bool = False,
                 threshold: float = DEFAULT_THRESHOLD, batch_size: int = 64) -> List[SynthSample]:
    """
    Versieht unlabeled Samples mit den Vorhersagen des Klassifikators.

    Returns:
        neue SynthSample-Objekte mit provenance = pseudo

    Raises:
        GateError: Klassifikator unter dem Genauigkeits-Gate
    """
    check_gate(classifier_accuracy, gate, override)
    if not unlabeled:
        return []
    was_training = classifier.training
    classifier.eval()
    out: List[SynthSample] = []
    try:
        for start in range(0, len(unlabeled), batch_size):
            chunk = unlabeled[start:start + batch_size]
            images = np.stack([s.image for s in chunk]).transpose(0, 3, 1, 2)
            with no_grad():
                probs = classifier.probabilities(Tensor(np.ascontiguousarray(images, dtype=np.float32)))
            for sample, labels in zip(chunk, labels_from_probabilities(probs, threshold)):
                out.append(SynthSample(image=sample.image, labels=labels, provenance=Provenance.PSEUDO,
                                       seed=sample.seed, index=sample.index))
    finally:
        if was_training:
            classifier.train()
    return out


def merge_pools(labeled: Sequence[SynthSample], pseudo: Sequence[SynthSample]) -> List[SynthSample]:
    """Gelabelter Pool gefolgt vom pseudo-gelabelten."""
    return list(labeled) + list(pseudo)


def label_agreement(pseudo: Sequence[SynthSample], reference: Sequence[SynthSample]) -> float:
    """Anteil übereinstimmender Labels (über alle Samples und Attribute)."""
    if not pseudo:
        return 1.0
    a = np.stack([s.labels for s in pseudo])
    b = np.stack([s.labels for s in reference])
    return float(np.mean(a == b))
