"""
WaveGAN Training - Trainer

Abwechselnde D/G-Updates (1:1) mit TTUR, EMA des Generators und
gestuftem Lernraten-Zeitplan. Trainer.run() ist ein Generator von
TrainEvents; Metriken, Konsole und Session-Log hängen am Event-Strom.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Generator, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig, console
from errors import NumericalError
from engine.tensor import Tensor, backward, current_tape, no_grad
from networks.models import ModelSet
from data.synth import SynthSample, dataset_to_batch, generate_splits, iterate_batches
from data.augment import AugmentOp, augment_from_config, augment_tensor, sample_params
from data.pseudo_label import merge_pools, pseudo_label
from training.models import AttributeDelta, LearningRates, LossComponents, StepMetrics, TrainConfig
from training.losses import (
    adv_loss_highfreq, adv_loss_image, attr_classification_loss, attr_regression_loss,
    cycle_loss, total_loss,
)
from training.optim import OptimState, adam_step, ema_update, grad_norm, lr_schedule, param_group
from training.classifier_training import ClassifierReport, pretrain_classifier


class EventType(Enum):
    """Typen von Trainings-Events"""
    STATUS = "status"
    STEP = "step"
    EPOCH = "epoch"
    CHECKPOINT = "checkpoint"
    ERROR = "error"


@dataclass
class TrainEvent:
    """Ein Event, das der Trainer während der Ausführung erzeugt"""
    event_type: EventType
    content: str
    data: Dict[str, Any] = field(default_factory=dict)
    metrics: Optional[StepMetrics] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.event_type.value,
            "content": self.content,
            "data": self.data,
            "metrics": self.metrics.to_dict() if self.metrics else None,
        }


@dataclass
class TrainState:
    """Modelle, Optimierer und Zähler eines Laufs."""
    models: ModelSet
    opt_g: OptimState
    opt_d_image: OptimState
    opt_d_high: Optional[OptimState]
    step: int = 0
    epoch: int = 0

    @classmethod
    def create(cls, models: ModelSet, config: TrainConfig) -> "TrainState":
        lrs = config.base_lrs
        betas = dict(beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
        return cls(
            models=models,
            opt_g=OptimState.for_params(models.generator, lrs.g, **betas),
            opt_d_image=OptimState.for_params(param_group(models.d_image), lrs.d_i, **betas),
            opt_d_high=(OptimState.for_params(param_group(models.d_high), lrs.d_h, **betas)
                        if models.d_high else None),
        )

    def optimizers(self) -> Dict[str, OptimState]:
        """Optimierer mit stabilem Namen (Checkpoint-Präfixe)."""
        opts = {"opt_G": self.opt_g, "opt_D_I": self.opt_d_image}
        if self.opt_d_high is not None:
            opts["opt_D_H"] = self.opt_d_high
        return opts


# =============================================================================
# ZIELATTRIBUTE
# =============================================================================

def sample_target_delta(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Δ = a_y − a_x: jedes Bit kippt unabhängig mit p = 0.5; Zeilen ohne
    gekipptes Bit werden neu gezogen.
    """
    labels = np.asarray(labels, dtype=np.float32)
    flips = rng.random(labels.shape) < 0.5
    empty = ~flips.any(axis=1)
    while empty.any():
        flips[empty] = rng.random((int(empty.sum()), labels.shape[1])) < 0.5
        empty = ~flips.any(axis=1)
    target = np.where(flips, 1.0 - labels, labels)
    return (target - labels).astype(np.float32)


def sample_alpha(rng: np.random.Generator) -> float:
    """α ~ U[0, 2], ein Wert pro Minibatch."""
    return float(rng.uniform(0.0, 2.0))


# =============================================================================
# TRAININGSSCHRITT
# =============================================================================

def _set_requires_grad(nets, flag: bool):
    for net in nets.values():
        net.set_requires_grad(flag)


def _discriminator_step(state: TrainState, x: Tensor, real: Tensor, cond: np.ndarray,
                        config: TrainConfig, lrs: LearningRates) -> Tuple[float, float, Dict[str, float]]:
    models = state.models
    with no_grad():
        fake = models.generator(x, cond).detach()
    for d in models.discriminators().values():
        d.zero_grad()

    d_loss_i = adv_loss_image([d(real) for d in models.d_image.values()],
                              [d(fake) for d in models.d_image.values()], "discriminator")
    loss = d_loss_i
    d_loss_h = None
    if models.d_high:
        real_h = x if config.dh_real_from_input else real
        d_loss_h = adv_loss_highfreq([d(real_h) for d in models.d_high.values()],
                                     [d(fake) for d in models.d_high.values()], "discriminator")
        # disjunkte Parameter: ein Rückwärtsdurchlauf über die Summe
        loss = loss + d_loss_h
    backward(loss)

    norms = {"D_I": grad_norm(param_group(models.d_image))}
    adam_step(state.opt_d_image, param_group(models.d_image), lr=lrs.d_i)
    if models.d_high:
        norms["D_H"] = grad_norm(param_group(models.d_high))
        adam_step(state.opt_d_high, param_group(models.d_high), lr=lrs.d_h)
    return d_loss_i.item(), (d_loss_h.item() if d_loss_h is not None else 0.0), norms


def _generator_losses(models: ModelSet, x: Tensor, labels: np.ndarray, delta: AttributeDelta,
                      config: TrainConfig, augment: Optional[AugmentOp],
                      rng: np.random.Generator) -> LossComponents:
    g, w = models.generator, config.weights
    cond = delta.condition()
    y_alpha = g(x, cond)
    comps = LossComponents()

    if w.lambda_gan_i > 0:
        comps.gan_i = adv_loss_image(None, [d(y_alpha) for d in models.d_image.values()], "generator")
    if w.lambda_gan_h > 0 and models.d_high:
        comps.gan_h = adv_loss_highfreq(None, [d(y_alpha) for d in models.d_high.values()], "generator")

    if w.lambda_cyc > 0:
        if augment is not None:
            params = sample_params(augment, x.shape, rng)
            target = augment_tensor(x, params)
            comps.cyc = cycle_loss(target, g(augment_tensor(y_alpha, params), -cond))
        else:
            comps.cyc = cycle_loss(x, g(y_alpha, -cond))

    if w.lambda_ac > 0 or w.lambda_ar > 0:
        y1 = y_alpha if delta.alpha == 1.0 else g(x, delta.with_alpha(1.0).condition())
        logits1, f1 = models.classifier(y1)
        if w.lambda_ac > 0:
            comps.ac = attr_classification_loss(logits1, delta.target_labels(labels), delta)
        if w.lambda_ar > 0:
            _, f_alpha = models.classifier(y_alpha)
            _, f0 = models.classifier(g(x, delta.with_alpha(0.0).condition()))
            comps.ar = attr_regression_loss(f0, f1, f_alpha, delta.alpha)
    return comps


def _snapshot_discriminators(state: TrainState) -> Tuple[Dict[str, Dict[str, np.ndarray]], Dict[str, tuple]]:
    """Gewichte, SN-Vektoren und Adam-Zustand aller Diskriminatoren."""
    nets = {name: net.state_dict() for name, net in state.models.discriminators().items()}
    opts = {name: (opt.step, opt.lr, {k: v.copy() for k, v in opt.arrays().items()})
            for name, opt in state.optimizers().items() if name != "opt_G"}
    return nets, opts


def _restore_discriminators(state: TrainState, snapshot):
    nets, opts = snapshot
    for name, net in state.models.discriminators().items():
        net.load_state_dict(nets[name])
    current = state.optimizers()
    for name, (step, lr, arrays) in opts.items():
        current[name].load_arrays(arrays)
        current[name].step, current[name].lr = step, lr


def train_step(state: TrainState, x: np.ndarray, labels: np.ndarray, real: np.ndarray,
               config: TrainConfig, lrs: LearningRates, augment: Optional[AugmentOp] = None) -> StepMetrics:
    """
    Ein D-Update, dann ein G-Update gegen das Gesamtziel mit neu gezogenem
    Δ und α, dann EMA.

    Die Zufälligkeit (Δ, α, Augmentierung) hängt nur von (seed, step) ab.

    Raises:
        NumericalError: NaN/Inf in Verlust oder Gradient; das Tape wird
            freigegeben, Diskriminatoren und ihre Optimierer werden auf den
            Stand vor dem Schritt zurückgesetzt, G bleibt unverändert
    """
    models = state.models
    step = state.step + 1
    rng = np.random.default_rng([config.seed, step])
    d_delta = AttributeDelta(sample_target_delta(labels, rng), sample_alpha(rng))
    xt, real_t = Tensor(x), Tensor(real)
    snapshot = _snapshot_discriminators(state)

    try:
        d_loss_i, d_loss_h, norms = _discriminator_step(state, xt, real_t, d_delta.condition(), config, lrs)
        delta = AttributeDelta(sample_target_delta(labels, rng), sample_alpha(rng))

        discriminators = models.discriminators()
        _set_requires_grad(discriminators, False)
        try:
            models.generator.zero_grad()
            comps = _generator_losses(models, xt, labels, delta, config, augment, rng)
            total = total_loss(comps, config.weights)
            if total.requires_grad:
                backward(total)
            else:
                # alle Gewichte 0: kein Rückwärtsdurchlauf, Tape trotzdem freigeben
                current_tape().clear()
        finally:
            _set_requires_grad(discriminators, True)
    except NumericalError:
        current_tape().clear()
        _restore_discriminators(state, snapshot)
        raise

    norms["G"] = grad_norm(models.generator)
    adam_step(state.opt_g, models.generator, lr=lrs.g)
    ema_update(models.generator_ema, models.generator, config.ema_decay)
    state.step = step

    return StepMetrics(
        step=step,
        epoch=state.epoch,
        components=comps.values(),
        total=total.item(),
        lr_g=lrs.g,
        lr_d=lrs.d_i,
        d_loss_i=d_loss_i,
        d_loss_h=d_loss_h,
        grad_norms=norms,
    )


# =============================================================================
# DATEN-PIPELINE
# =============================================================================

@dataclass
class TrainingPool:
    """Gelabelter + pseudo-gelabelter Pool, Test-Split und Klassifikator-Bericht."""
    samples: List[SynthSample]
    test: List[SynthSample]
    classifier_report: ClassifierReport
    pseudo_count: int = 0


def build_training_pool(config: RunConfig, models: ModelSet) -> TrainingPool:
    """
    Datensatz erzeugen, Klassifikator vortrainieren und einfrieren,
    unlabeled Pool pseudo-labeln.

    Raises:
        GateError: Klassifikator unter dem Genauigkeits-Gate
    """
    train, test, unlabeled = generate_splits(config)
    report = pretrain_classifier(models.classifier, train, config, test=test)
    pseudo: List[SynthSample] = []
    if config.use_pseudo_labels and unlabeled:
        pseudo = pseudo_label(models.classifier, unlabeled, report.gate_accuracy,
                              gate=config.cls_accuracy_gate, override=config.gate_override)
    return TrainingPool(samples=merge_pools(train, pseudo), test=test, classifier_report=report,
                        pseudo_count=len(pseudo))


# =============================================================================
# TRAINER
# =============================================================================

class Trainer:
    """
    Epochenschleife über den Pool. Checkpoints schreibt der Aufrufer über
    `checkpoint_fn(state, name)`; ohne Callback entfallen sie.
    """

    def __init__(self, config: RunConfig, models: ModelSet, pool: Sequence[SynthSample],
                 checkpoint_fn=None):
        self.run_config = config
        self.config = TrainConfig.from_run_config(config)
        self.state = TrainState.create(models, self.config)
        self.images, self.labels = dataset_to_batch(pool) if pool else (None, None)
        self.augment = augment_from_config(config, seed=config.seed)
        self.checkpoint_fn = checkpoint_fn

    def _checkpoint(self, name: str) -> Optional[TrainEvent]:
        if self.checkpoint_fn is None:
            return None
        path = self.checkpoint_fn(self.state, name)
        return TrainEvent(EventType.CHECKPOINT, f"💾 Checkpoint {name}", {"name": name, "path": path})

    def run_epoch(self, epoch: int) -> Generator[TrainEvent, None, None]:
        cfg = self.config
        lrs = lr_schedule(epoch, cfg)
        count = self.images.shape[0]
        order_rng = np.random.default_rng([cfg.seed, epoch, 1])
        real_rng = np.random.default_rng([cfg.seed, epoch, 2])
        for n, idx in enumerate(iterate_batches(count, cfg.batch_size, order_rng)):
            if cfg.max_steps_per_epoch and n >= cfg.max_steps_per_epoch:
                break
            real_idx = real_rng.choice(count, size=len(idx), replace=False)
            metrics = train_step(self.state, self.images[idx], self.labels[idx], self.images[real_idx],
                                 cfg, lrs, self.augment)
            yield TrainEvent(EventType.STEP, f"Schritt {metrics.step}", metrics=metrics)

    def run(self) -> Generator[TrainEvent, None, None]:
        """
        Führt das Training aus und liefert Events.

        Raises:
            NumericalError: nach ERROR-Event und Dump (ckpt_nan_dump)
        """
        cfg = self.config
        yield TrainEvent(EventType.STATUS, "🚀 Training startet", {
            "epochs": cfg.total_epochs,
            "pool": 0 if self.images is None else int(self.images.shape[0]),
            "config_hash": self.run_config.config_hash(),
        })
        for epoch in range(cfg.total_epochs):
            if self.images is None:
                break
            self.state.epoch = epoch
            losses: List[float] = []
            try:
                for event in self.run_epoch(epoch):
                    losses.append(event.metrics.total)
                    yield event
            except NumericalError as e:
                console(f"❌ Numerischer Abbruch in Epoche {epoch + 1}: {e}", "ERROR")
                dump = self._checkpoint("ckpt_nan_dump")
                yield TrainEvent(EventType.ERROR, f"Numerischer Abbruch: {e}", {
                    "epoch": epoch + 1,
                    "step": self.state.step,
                    "dump": dump.data["path"] if dump else None,
                })
                raise

            mean_loss = float(np.mean(losses)) if losses else 0.0
            yield TrainEvent(EventType.EPOCH, f"✅ Epoche {epoch + 1}/{cfg.total_epochs}", {
                "epoch": epoch + 1,
                "steps": len(losses),
                "mean_total": mean_loss,
                "lrs": list(lr_schedule(epoch, cfg).as_tuple()),
            })
            if cfg.ckpt_every and (epoch + 1) % cfg.ckpt_every == 0:
                event = self._checkpoint(f"ckpt_{epoch + 1:03d}")
                if event:
                    yield event

        self.state.epoch = cfg.total_epochs if self.images is not None else 0
        event = self._checkpoint("ckpt_final")
        if event:
            yield event
        yield TrainEvent(EventType.STATUS, "🏁 Training abgeschlossen", {"steps": self.state.step})
