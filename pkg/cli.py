"""
WaveGAN CLI

Unterbefehle: train, edit, probe, wavelet decompose, metrics, experiments, dataset gen.
Exit-Codes: 0 Erfolg, 2 Konfiguration, 3 numerischer Abbruch, 4 I/O.
"""

import argparse
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import RUNS_DIR, RunConfig, console, load_run_config, parse_set_overrides
from errors import (
    AugmentError, CheckpointError, ConfigError, GateError, ImageIOError, NumericalError,
    ShapeError, WaveGANError,
)
from checkpoint import checkpoint_save, config_meta, load_models
from image_io import batch_to_images, image_to_batch, load_image, save_image
from session_logger import SessionLogger
from engine.tensor import Tensor, no_grad
from wavelet.haar import BAND_NAMES, haar_pool, high_freq_reconstruct
from networks.models import build_models
from data.synth import DatasetConfig, generate_dataset, generate_splits, dataset_to_batch, write_dataset
from training.models import METRICS_HEADER
from training.trainer import EventType, Trainer, TrainState, build_training_pool
from diagnostics.metrics import alpha_sweep
from diagnostics.experiments import (
    EXPERIMENTS_HEADER, evaluate_models, list_variants, parse_seeds, resolve_variants, run_experiments,
    write_experiments,
)
from diagnostics.steg import probe_dataset, steg_panel, write_probe_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

MANIFEST_NAME = "MANIFEST"


# =============================================================================
# HILFSFUNKTIONEN
# =============================================================================

def write_manifest(run_dir: str, files: Sequence[str], config_hash: str) -> str:
    """MANIFEST: eine Zeile pro erzeugter Datei mit dem Konfigurations-Hash."""
    path = os.path.join(run_dir, MANIFEST_NAME)
    lines = [f"{os.path.relpath(f, run_dir)}\t{config_hash}" for f in files]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    return path


def config_from_args(args) -> RunConfig:
    overrides: Dict[str, object] = parse_set_overrides(getattr(args, "set", None))
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
        overrides["decay_epochs"] = args.epochs
    return load_run_config(getattr(args, "config", None), overrides)


def parse_alpha_range(text: str) -> List[float]:
    """'0.4:2.0:0.2' -> [0.4, 0.6, ..., 2.0]"""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--alpha-range erwartet start:stop:step, erhalten '{text}'")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"--alpha-range: keine Zahlen in '{text}'") from e
    alphas = alpha_sweep(start, stop, step)
    if alphas[0] < 0 or alphas[-1] > 2:
        raise ConfigError(f"α-Sweep {text} verlässt [0, 2]")
    return alphas


def parse_delta(text: str, attributes: Sequence[str]) -> np.ndarray:
    """
    'eyeglasses=+1,smile=-1' (oder 'name:+1', Index statt Name) -> Δ (K,)
    """
    delta = np.zeros(len(attributes), dtype=np.float32)
    for item in filter(None, (p.strip() for p in text.split(","))):
        sep = "=" if "=" in item else ":"
        if sep not in item:
            raise ConfigError(f"Δ-Eintrag '{item}' erwartet name=±1")
        name, value = (s.strip() for s in item.rsplit(sep, 1))
        if name in attributes:
            k = list(attributes).index(name)
        elif name.isdigit() and int(name) < len(attributes):
            k = int(name)
        else:
            raise ConfigError(f"Unbekanntes Attribut '{name}'. Verfügbar: {list(attributes)}")
        if value not in ("+1", "1", "-1", "0"):
            raise ConfigError(f"Δ für {name} muss −1, 0 oder +1 sein, nicht '{value}'")
        delta[k] = float(value)
    return delta


def load_input_image(path: str, size: int) -> np.ndarray:
    image = load_image(path)
    if image.shape[:2] != (size, size):
        raise ShapeError(f"Bild {path} hat {image.shape[1]}x{image.shape[0]}, Modell erwartet {size}x{size}")
    return image


# =============================================================================
# TRAIN
# =============================================================================

def cmd_train(args) -> int:
    config = config_from_args(args)
    run_dir = args.run_dir or os.path.join(RUNS_DIR, f"run_{config.config_hash()[:12]}")
    os.makedirs(run_dir, exist_ok=True)
    config_hash = config.config_hash()
    logger = SessionLogger(run_dir, "train", {"config_hash": config_hash, "seed": config.seed})
    outputs: List[str] = []

    resolved = os.path.join(run_dir, "config_resolved.cfg")
    with open(resolved, "w", encoding="utf-8") as f:
        f.write(config.resolved_text())
    outputs.append(resolved)
    console(f"📁 Run-Verzeichnis: {run_dir}")

    models = build_models(config)
    base_meta = config_meta(config)
    samples = []
    if config.total_epochs > 0:
        step = logger.start_step("data", "Datensatz + Klassifikator-Vortraining")
        try:
            pool = build_training_pool(config, models)
        except WaveGANError as e:
            logger.end_step(step, status="error", error=str(e))
            logger.error(str(e))
            raise
        report = pool.classifier_report
        logger.end_step(step, details={**report.to_dict(), "pool": len(pool.samples), "pseudo": pool.pseudo_count})
        base_meta["classifier_accuracy"] = repr(report.gate_accuracy)
        samples = pool.samples

    def save(state: TrainState, name: str) -> str:
        meta = dict(base_meta, epoch=str(state.epoch), step=str(state.step))
        path = checkpoint_save(os.path.join(run_dir, name), state.models, state.optimizers(), meta)
        if name != "ckpt_nan_dump":
            outputs.append(path)
        return path

    trainer = Trainer(config, models, samples, checkpoint_fn=save)
    metrics_path = os.path.join(run_dir, "metrics.tsv")
    outputs.insert(1, metrics_path)
    train_step_index = logger.start_step("train", f"{config.total_epochs} Epochen")
    with open(metrics_path, "w", encoding="utf-8") as metrics_file:
        metrics_file.write(METRICS_HEADER + "\n")
        try:
            for event in trainer.run():
                if event.event_type == EventType.STEP:
                    metrics_file.write(event.metrics.tsv_row() + "\n")
                    continue
                if event.event_type == EventType.EPOCH:
                    metrics_file.flush()
                    console(f"{event.content}: mittlerer Verlust {event.data['mean_total']:.4f}")
                elif event.event_type in (EventType.STATUS, EventType.CHECKPOINT):
                    console(event.content, "DEBUG" if event.event_type == EventType.CHECKPOINT else "INFO")
                logger.log_event(event.to_dict())
        except NumericalError as e:
            logger.abort(f"Numerischer Abbruch: {e}")
            write_manifest(run_dir, outputs, config_hash)
            raise
    logger.end_step(train_step_index, details={"steps": trainer.state.step})

    write_manifest(run_dir, outputs, config_hash)
    logger.complete(outputs=[os.path.basename(p) for p in outputs])
    console(f"✅ Training abgeschlossen: {trainer.state.step} Schritte")
    return EXIT_OK


# =============================================================================
# EDIT
# =============================================================================

def cmd_edit(args) -> int:
    config, models, _ = load_models(args.ckpt)
    image = load_input_image(args.image, config.image_size)
    delta = parse_delta(args.delta, config.attribute_names)
    alphas = parse_alpha_range(args.alpha_range) if args.alpha_range else [args.alpha]
    if not all(0.0 <= a <= 2.0 for a in alphas):
        raise ConfigError(f"α muss in [0, 2] liegen: {alphas}")

    g = models.generator_ema
    x = image_to_batch(image)
    outputs: List[str] = []
    for alpha in alphas:
        with no_grad():
            y = g(Tensor(x), (alpha * delta)[None]).data
        if args.alpha_range:
            path = os.path.join(args.out, f"edit_alpha_{alpha:.2f}.png")
        else:
            path = args.out
        outputs.append(save_image(path, batch_to_images(y)[0]))
    out_dir = args.out if args.alpha_range else (os.path.dirname(args.out) or ".")
    write_manifest(out_dir, outputs, config.config_hash())
    console(f"🖼️ {len(outputs)} Bild(er) geschrieben")
    return EXIT_OK


# =============================================================================
# PROBE
# =============================================================================

def _probe_images(config: RunConfig, paths: Optional[Sequence[str]], count: int) -> np.ndarray:
    if paths:
        return np.concatenate([image_to_batch(load_input_image(p, config.image_size)) for p in paths])
    _, test, _ = generate_splits(config.with_overrides({"train_count": 0, "test_count": count,
                                                        "unlabeled_count": 0}))
    return dataset_to_batch(test)[0]


def cmd_probe(args) -> int:
    config, models, _ = load_models(args.ckpt)
    images = _probe_images(config, args.image, args.count)
    reports = probe_dataset(models.generator_ema, images)
    os.makedirs(args.out, exist_ok=True)
    outputs = [save_image(os.path.join(args.out, f"probe_{i:03d}.png"), steg_panel(r))
               for i, r in enumerate(reports)]
    outputs.append(write_probe_report(os.path.join(args.out, "report.tsv"), reports))
    write_manifest(args.out, outputs, config.config_hash())
    mean_sre = float(np.mean([r.sre_unit for r in reports]))
    print(f"SRE [0,1]-Einheiten: {mean_sre:.6f} über {len(reports)} Bild(er)")
    return EXIT_OK


# =============================================================================
# WAVELET
# =============================================================================

def cmd_wavelet(args) -> int:
    image = load_image(args.image)
    x = Tensor(image_to_batch(image))
    with no_grad():
        bands = haar_pool(x)
        high = high_freq_reconstruct(bands)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.image))[0]
    outputs = []
    for name in BAND_NAMES:
        # Bänder liegen in [−2, 2]
        band = batch_to_images(bands.band(name).data)[0] / 2.0
        if name != "ll":
            band = np.clip(band * args.amplify, -1.0, 1.0)
        outputs.append(save_image(os.path.join(args.out, f"{stem}_{name}.png"), band))
    high_img = np.clip(batch_to_images(high.data)[0] * args.amplify, -1.0, 1.0)
    outputs.append(save_image(os.path.join(args.out, f"{stem}_high.png"), high_img))
    write_manifest(args.out, outputs, "-")
    console(f"🌊 {len(outputs)} Bilder nach {args.out}")
    return EXIT_OK


# =============================================================================
# METRICS
# =============================================================================

def evaluate_checkpoint(path: str, count: int) -> Dict[str, float]:
    """SRE, Edit-Genauigkeit (Mittel über K) und α-Monotonie eines Checkpoints."""
    config, models, ckpt = load_models(path)
    accuracy = ckpt.meta.get("classifier_accuracy")
    return evaluate_models(config, models, count, None if accuracy is None else float(accuracy), label=path)


def cmd_metrics(args) -> int:
    rows: List[Tuple[str, Dict[str, float]]] = [(p, evaluate_checkpoint(p, args.count)) for p in args.ckpt]
    width = max(len(p) for p, _ in rows)
    print(f"{'checkpoint'.ljust(width)}\tSRE\tAcc.\tMono.")
    for path, values in rows:
        print(f"{path.ljust(width)}\t{values['sre']:.4f}\t{values['acc']:.4f}\t{values['monotonicity']:.4f}")
    return EXIT_OK


# =============================================================================
# EXPERIMENTS
# =============================================================================

def cmd_experiments(args) -> int:
    base = config_from_args(args)
    variants = resolve_variants([v.strip() for v in args.variants.split(",") if v.strip()])
    seeds = parse_seeds(args.seeds)
    os.makedirs(args.out, exist_ok=True)
    logger = SessionLogger(args.out, "experiments", {
        "config_hash": base.config_hash(),
        "variants": [v.id for v in variants],
        "seeds": seeds,
    })
    step = logger.start_step("experiments", f"{len(variants)} Varianten x {len(seeds)} Seeds")

    def log_row(row):
        logger.log_event({"type": "variant", "content": row.variant, **row.to_dict()})

    try:
        rows = run_experiments(base, variants, seeds, args.count, on_row=log_row)
    except WaveGANError as e:
        logger.end_step(step, status="error", error=str(e))
        logger.error(str(e))
        raise
    logger.end_step(step, details={"variants": len(rows)})
    outputs = write_experiments(args.out, rows)
    write_manifest(args.out, outputs, base.config_hash())
    logger.complete(outputs=[os.path.basename(p) for p in outputs])
    print(EXPERIMENTS_HEADER)
    for row in rows:
        print(row.tsv_row())
    return EXIT_OK


# =============================================================================
# DATASET
# =============================================================================

def cmd_dataset(args) -> int:
    config = load_run_config(args.config, parse_set_overrides(args.set))
    ds_config = DatasetConfig(
        count=args.count,
        size=args.size or config.image_size,
        attributes=config.attribute_names,
        detail_texture_amp=config.detail_texture_amp,
    )
    seed = args.seed if args.seed is not None else config.dataset_seed
    samples = generate_dataset(ds_config, seed)
    manifest = write_dataset(args.out, samples, ds_config.attributes)
    files = [manifest] + [os.path.join(args.out, f"sample_{s.index:06d}.png") for s in samples]
    write_manifest(args.out, files, config.config_hash())
    console(f"🧪 {len(samples)} Samples nach {args.out}")
    return EXIT_OK


# =============================================================================
# PARSER
# =============================================================================

def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, default=None, help="key = value Konfigurationsdatei")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="einzelnen Konfigurationswert überschreiben (mehrfach)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavegan", description="WaveGAN: wavelet-basierte Attribut-Bearbeitung")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="GAN trainieren")
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="Epochen (konstant und Abklingphase)")
    p.add_argument("--run-dir", type=str, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("edit", help="Bild mit α·Δ bearbeiten (EMA-Gewichte)")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--delta", required=True, help="z.B. eyeglasses=+1,smile=-1")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--alpha-range", type=str, default=None, help="start:stop:step, z.B. 0.4:2.0:0.2")
    p.add_argument("--out", required=True, help="Bilddatei, bei --alpha-range Verzeichnis")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("probe", help="Steganographie-Probe")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", action="append", default=None)
    p.add_argument("--count", type=int, default=8, help="Testbilder, falls kein --image")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("wavelet", help="Haar-Zerlegung")
    wsub = p.add_subparsers(dest="action", required=True)
    w = wsub.add_parser("decompose")
    w.add_argument("image")
    w.add_argument("--out", default=".")
    w.add_argument("--amplify", type=float, default=1.0, help="Verstärkung der Hochbänder")
    w.set_defaults(func=cmd_wavelet)

    p = sub.add_parser("metrics", help="SRE / Acc. / Monotonie pro Checkpoint")
    p.add_argument("--ckpt", action="append", required=True)
    p.add_argument("--count", type=int, default=64)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("experiments", help="Ablations-Varianten x Seeds, Median pro Variante")
    _add_config_args(p)
    p.add_argument("--epochs", type=int, default=None, help="Epochen pro Lauf (konstant und Abklingphase)")
    p.add_argument("--variants", type=str, default="all", help=f"Komma-Liste aus {list_variants()} oder all")
    p.add_argument("--seeds", type=str, default="0,1,2")
    p.add_argument("--count", type=int, default=64, help="Testbilder pro Auswertung")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiments)

    p = sub.add_parser("dataset", help="synthetischer Datensatz")
    dsub = p.add_subparsers(dest="action", required=True)
    d = dsub.add_parser("gen")
    _add_config_args(d)
    d.add_argument("--count", type=int, required=True)
    d.add_argument("--seed", type=int, default=None, help="Datensatz-Seed (Default: dataset_seed)")
    d.add_argument("--size", type=int, default=None)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dataset)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GateError, AugmentError, ShapeError) as e:
        console(f"❌ Konfigurationsfehler: {e}", "ERROR")
        return EXIT_CONFIG
    except NumericalError as e:
        console(f"❌ Numerischer Abbruch: {e}", "ERROR")
        return EXIT_NUMERICAL
    except (CheckpointError, ImageIOError, OSError) as e:
        console(f"❌ I/O-Fehler: {e}", "ERROR")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
