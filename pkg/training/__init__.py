"""
WaveGAN Training

Verluste, Optimierung, Klassifikator-Vortraining und die Trainingsschleife.
"""

from .models import (
    METRICS_HEADER, AttributeDelta, LossWeights, LossComponents, LearningRates,
    TrainConfig, StepMetrics,
)
from .losses import (
    adv_loss_image, adv_loss_highfreq, cycle_loss, attr_classification_loss,
    attr_regression_loss, total_loss,
)
from .optim import OptimState, adam_step, ema_update, lr_schedule, grad_norm, param_group
from .classifier_training import (
    ClassifierReport, pretrain_classifier, evaluate_classifier, freeze_classifier,
)
from .trainer import (
    EventType, TrainEvent, TrainState, TrainingPool, Trainer, train_step,
    sample_target_delta, sample_alpha, build_training_pool,
)

__all__ = [
    "METRICS_HEADER",
    "AttributeDelta",
    "LossWeights",
    "LossComponents",
    "LearningRates",
    "TrainConfig",
    "StepMetrics",
    "adv_loss_image",
    "adv_loss_highfreq",
    "cycle_loss",
    "attr_classification_loss",
    "attr_regression_loss",
    "total_loss",
    "OptimState",
    "adam_step",
    "ema_update",
    "lr_schedule",
    "grad_norm",
    "param_group",
    "ClassifierReport",
    "pretrain_classifier",
    "evaluate_classifier",
    "freeze_classifier",
    "EventType",
    "TrainEvent",
    "TrainState",
    "TrainingPool",
    "Trainer",
    "train_step",
    "sample_target_delta",
    "sample_alpha",
    "build_training_pool",
]
