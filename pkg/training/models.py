"""
WaveGAN Training - Datenmodelle

Attribut-Deltas, Verlustgewichte und -komponenten, Lernraten und die
Metriken eines Trainingsschritts.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig
from errors import ShapeError
from engine.tensor import Tensor

METRICS_HEADER = "step\tL_GAN_I\tL_GAN_H\tL_cyc\tL_ac\tL_ar\ttotal\tlr_G\tlr_D"
ALPHA_RANGE = (0.0, 2.0)


# =============================================================================
# ATTRIBUT-DELTA
# =============================================================================

@dataclass
class AttributeDelta:
    """Bedingung α·Δ mit Δ ∈ {−1, 0, +1}^K (pro Sample eine Zeile) und α ∈ [0, 2]."""
    delta: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        self.delta = np.atleast_2d(np.asarray(self.delta, dtype=np.float32))
        if self.delta.ndim != 2:
            raise ShapeError(f"Δ muss (N, K) sein, nicht {self.delta.shape}")
        if not np.all(np.isin(self.delta, (-1.0, 0.0, 1.0))):
            raise ValueError("Δ darf nur −1, 0, +1 enthalten")
        if not ALPHA_RANGE[0] <= self.alpha <= ALPHA_RANGE[1]:
            raise ValueError(f"α = {self.alpha} außerhalb von [0, 2]")

    @property
    def mask(self) -> np.ndarray:
        """𝟙{|Δ^k| = 1}"""
        return (np.abs(self.delta) == 1).astype(np.float32)

    def condition(self) -> np.ndarray:
        return (self.alpha * self.delta).astype(np.float32)

    def negated(self) -> "AttributeDelta":
        return AttributeDelta(-self.delta, self.alpha)

    def with_alpha(self, alpha: float) -> "AttributeDelta":
        return AttributeDelta(self.delta, alpha)

    def target_labels(self, source_labels: np.ndarray) -> np.ndarray:
        """a_y = a_x + Δ"""
        return np.clip(np.asarray(source_labels, dtype=np.float32) + self.delta, 0.0, 1.0)

    def to_dict(self) -> Dict:
        return {"delta": self.delta.tolist(), "alpha": self.alpha}


# =============================================================================
# VERLUSTE
# =============================================================================

@dataclass
class LossWeights:
    """λ-Gewichte des Gesamtziels."""
    lambda_gan_i: float = 1.0
    lambda_gan_h: float = 1.0
    lambda_cyc: float = 10.0
    lambda_ac: float = 1.0
    lambda_ar: float = 1.0

    def __post_init__(self):
        for key, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{key} darf nicht negativ sein ({value})")

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "LossWeights":
        return cls(
            lambda_gan_i=config.lambda_gan_i,
            lambda_gan_h=0.0 if config.disable_dh else config.lambda_gan_h,
            lambda_cyc=config.lambda_cyc,
            lambda_ac=config.lambda_ac,
            lambda_ar=0.0 if config.disable_ar_loss else config.lambda_ar,
        )


@dataclass
class LossComponents:
    """Die fünf Generator-Terme eines Minibatches; None = Term deaktiviert."""
    gan_i: Optional[Tensor] = None
    gan_h: Optional[Tensor] = None
    cyc: Optional[Tensor] = None
    ac: Optional[Tensor] = None
    ar: Optional[Tensor] = None

    def values(self) -> Dict[str, float]:
        return {
            key: (0.0 if value is None else value.item())
            for key, value in (("gan_i", self.gan_i), ("gan_h", self.gan_h), ("cyc", self.cyc),
                               ("ac", self.ac), ("ar", self.ar))
        }


# =============================================================================
# OPTIMIERUNG
# =============================================================================

@dataclass
class LearningRates:
    g: float = 5e-4
    d_i: float = 2e-3
    d_h: float = 2e-3

    def as_tuple(self):
        return (self.g, self.d_i, self.d_h)


@dataclass
class TrainConfig:
    """Trainingsrelevanter Ausschnitt der RunConfig."""
    epochs: int = 20
    decay_epochs: int = 20
    decay_rate: float = 0.999
    decay_every: int = 10
    ema_decay: float = 0.999
    batch_size: int = 16
    seed: int = 0
    base_lrs: LearningRates = field(default_factory=LearningRates)
    beta1: float = 0.0
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weights: LossWeights = field(default_factory=LossWeights)
    disable_dh: bool = False
    disable_ar_loss: bool = False
    cycle_augment: str = "none"
    dh_real_from_input: bool = False
    max_steps_per_epoch: int = 0
    ckpt_every: int = 1

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "TrainConfig":
        return cls(
            epochs=config.epochs,
            decay_epochs=config.decay_epochs,
            decay_rate=config.decay_rate,
            decay_every=config.decay_every,
            ema_decay=config.ema_decay,
            batch_size=config.batch_size,
            seed=config.seed,
            base_lrs=LearningRates(config.lr_g, config.lr_d_i, config.lr_d_h),
            beta1=config.beta1,
            beta2=config.beta2,
            adam_eps=config.adam_eps,
            weights=LossWeights.from_run_config(config),
            disable_dh=config.disable_dh,
            disable_ar_loss=config.disable_ar_loss,
            cycle_augment=config.cycle_augment,
            dh_real_from_input=config.dh_real_from_input,
            max_steps_per_epoch=config.max_steps_per_epoch,
            ckpt_every=config.ckpt_every,
        )

    @property
    def total_epochs(self) -> int:
        return self.epochs + self.decay_epochs


@dataclass
class StepMetrics:
    """Ergebnis eines train_step: Verlustterme, Gesamtverlust, Lernraten, Gradientennormen."""
    step: int
    epoch: int
    components: Dict[str, float]
    total: float
    lr_g: float
    lr_d: float
    d_loss_i: float = 0.0
    d_loss_h: float = 0.0
    grad_norms: Dict[str, float] = field(default_factory=dict)

    def tsv_row(self) -> str:
        c = self.components
        values = [c["gan_i"], c["gan_h"], c["cyc"], c["ac"], c["ar"], self.total, self.lr_g, self.lr_d]
        return "\t".join([str(self.step)] + [f"{v:.6g}" for v in values])

    def to_dict(self) -> Dict:
        return asdict(self)
