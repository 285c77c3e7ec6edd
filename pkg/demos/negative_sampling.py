"""
Negative Sampling Strategies
============================

Compare the three placements of negative samples on the same sequence: motion-driven
offsets pushed away from the target, a uniform annulus and target-proportional Gaussian
offsets. The stacked model is left untrained so the example stays fast; only the
classifier adapts online.

"""

import dataclasses

import numpy as np

from slowtrack import evaluation, tracker
from slowtrack.dataset import Frame
from slowtrack.obsmodel import NegativeSampling
from slowtrack.slowae import LayerWeights
from slowtrack.stack import StackedModel

rng = np.random.default_rng(7)
q, _ = np.linalg.qr(rng.normal(size=(64, 16)))
layer1 = LayerWeights(q.T, 8)
layer2 = LayerWeights(rng.normal(scale=0.1, size=(16, 32)), 14)
model = StackedModel(layer1, layer2)

texture = rng.uniform(0.3, 1.0, size=(24, 24))
background = rng.uniform(0.0, 0.3, size=(96, 96))
frames, truth = [], []
for i in range(30):
    img = background.copy()
    x, y = 20 + i, 30
    img[y : y + 24, x : x + 24] = texture
    frames.append(Frame(img, i + 1))
    truth.append(evaluation.Box(x, y, 24, 24))

base = tracker.TrackerConfig(n_particles=200)
for strategy in NegativeSampling:
    config = dataclasses.replace(base, negative_sampling=strategy)
    result = tracker.run(frames, (20, 30, 24, 24), config, model, seed=1)
    metrics = evaluation.evaluate(result, truth)
    print(f"{strategy.value:>12}: SR {metrics.success_rate:5.1f}%  COL {metrics.mean_col:6.2f} px")
