"""
WaveGAN Data

Synthetischer Attribut-Datensatz, Augmentierung und Pseudo-Labels.
"""

from .renderers import (
    AttributeRenderer, register_renderer, get_renderer, list_renderers, resolve_renderers,
)
from .synth import (
    Provenance, SynthSample, DatasetConfig, generate_dataset, generate_splits,
    dataset_to_batch, iterate_batches, write_dataset, read_dataset,
)
from .augment import (
    AUGMENT_KINDS, AugmentOp, AugmentParams, sample_params, augment_tensor,
    apply_augment, augment_from_config,
)
from .pseudo_label import pseudo_label, merge_pools, label_agreement, labels_from_probabilities

__all__ = [
    "AttributeRenderer",
    "register_renderer",
    "get_renderer",
    "list_renderers",
    "resolve_renderers",
    "Provenance",
    "SynthSample",
    "DatasetConfig",
    "generate_dataset",
    "generate_splits",
    "dataset_to_batch",
    "iterate_batches",
    "write_dataset",
    "read_dataset",
    "AUGMENT_KINDS",
    "AugmentOp",
    "AugmentParams",
    "sample_params",
    "augment_tensor",
    "apply_augment",
    "augment_from_config",
    "pseudo_label",
    "merge_pools",
    "label_agreement",
    "labels_from_probabilities",
]
