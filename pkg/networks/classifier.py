"""
WaveGAN Netzwerke - Attribut-Klassifikator

Kleiner strided CNN-Rumpf mit globalem Average-Pooling und K binären
Köpfen aus je zwei Linear-Schichten.
"""

from typing import List, Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import ShapeError
from engine.tensor import Tensor
from engine.ops import concat, leaky_relu, mean, sigmoid
from networks.layers import LRELU_SLOPE, Conv2d, Layer, Linear


class ClassifierHead(Layer):
    def __init__(self, features: int, rng: np.random.Generator):
        super().__init__()
        self.fc1 = self.add_child("fc1", Linear(features, features // 2, rng=rng))
        self.fc2 = self.add_child("fc2", Linear(features // 2, 1, rng=rng))

    def forward(self, f: Tensor) -> Tensor:
        return self.fc2(leaky_relu(self.fc1(f), LRELU_SLOPE))


class ClassifierNet(Layer):
    """C(x) -> (Logits (N, K), Feature f (N, 8·width))."""

    def __init__(self, num_attributes: int = 3, width: int = 16, rng: Optional[np.random.Generator] = None):
        super().__init__("classifier")
        rng = rng or np.random.default_rng(0)
        self.num_attributes = num_attributes
        self.trunk: List[Conv2d] = []
        channels = 3
        for i in range(4):
            out = width * 2 ** i
            self.trunk.append(self.add_child(f"conv{i}", Conv2d(channels, out, 3, stride=2, padding=1, rng=rng)))
            channels = out
        self.feature_dim = channels
        self.heads: List[ClassifierHead] = [
            self.add_child(f"head{k}", ClassifierHead(channels, rng)) for k in range(num_attributes)
        ]

    def features(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"Klassifikator erwartet N×3×H×W, nicht {x.shape}")
        h = x
        for conv in self.trunk:
            h = leaky_relu(conv(h), LRELU_SLOPE)
        return mean(h, axes=(2, 3))

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        f = self.features(x)
        logits = concat([head(f) for head in self.heads], axis=1)
        return logits, f

    def probabilities(self, x: Tensor) -> np.ndarray:
        logits, _ = self.forward(x)
        return sigmoid(logits).data
