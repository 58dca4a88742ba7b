"""
WaveGAN Netzwerke - ModelSet

Bündelt G, die EMA-Kopie von G, die Diskriminatoren und den Klassifikator
eines Laufs.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import RunConfig
from networks.layers import Layer
from networks.generator import GeneratorNet
from networks.discriminator import HIGH_SCALES, IMAGE_SCALES, DiscriminatorNet
from networks.classifier import ClassifierNet


@dataclass
class ModelSet:
    """Parameter-Sammlungen eines Laufs; D_H fehlt bei disable_dh."""
    generator: GeneratorNet
    generator_ema: GeneratorNet
    classifier: ClassifierNet
    d_image: Dict[str, DiscriminatorNet] = field(default_factory=dict)
    d_high: Dict[str, DiscriminatorNet] = field(default_factory=dict)

    def discriminators(self) -> Dict[str, DiscriminatorNet]:
        return {**self.d_image, **self.d_high}

    def networks(self) -> Dict[str, Layer]:
        """Alle Netze mit stabilem Namen (Checkpoint-Präfixe)."""
        nets: Dict[str, Layer] = {"G": self.generator, "G_ema": self.generator_ema}
        for scale_id, d in self.discriminators().items():
            nets[f"D_{scale_id}"] = d
        nets["C"] = self.classifier
        return nets

    def named_state(self) -> Iterator[Tuple[str, np.ndarray]]:
        for prefix, net in self.networks().items():
            for name, value in net.state_dict().items():
                yield f"{prefix}.{name}", value

    def load_named_state(self, state: Dict[str, np.ndarray]):
        for prefix, net in self.networks().items():
            sub = {k[len(prefix) + 1:]: v for k, v in state.items() if k.startswith(prefix + ".")}
            net.load_state_dict(sub)


def build_models(config: RunConfig, seed: Optional[int] = None) -> ModelSet:
    """Initialisiert alle Netze deterministisch aus (config, seed)."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    streams = rng.spawn(6)
    size, K = config.image_size, config.num_attributes

    generator = GeneratorNet(config.gen_width, K, config.skip_mode, rng=streams[0])
    generator_ema = GeneratorNet(config.gen_width, K, config.skip_mode, rng=streams[0])
    generator_ema.copy_from(generator)
    generator_ema.set_requires_grad(False)
    generator_ema.eval()

    d_image = {
        scale_id: DiscriminatorNet(scale_id, size, config.disc_width, config.sn_iters, rng=streams[1 + i])
        for i, scale_id in enumerate(IMAGE_SCALES)
    }
    d_high = {}
    if not config.disable_dh:
        d_high = {
            scale_id: DiscriminatorNet(scale_id, size, config.disc_width, config.sn_iters, rng=streams[3 + i])
            for i, scale_id in enumerate(HIGH_SCALES)
        }
    classifier = ClassifierNet(K, config.cls_width, rng=streams[5])
    return ModelSet(generator, generator_ema, classifier, d_image, d_high)
