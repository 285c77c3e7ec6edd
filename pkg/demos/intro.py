"""
Getting Started
===============

Learn two slow feature layers from synthetic translating edges, then track a bright
square with the stacked model and score the run against its ground truth.

"""

import logging

import numpy as np

from slowtrack import dataset, evaluation, slowae, stack, tracker

logging.basicConfig(level=logging.INFO)

config = tracker.TrackerConfig(p1=16, p2=16, n_particles=200, max_iter=30)
rng = np.random.default_rng(2025)

# Layer 1: 8x8 patches following a random walk of small shifts and rotations.
bases = dataset.edge_patches(config.edge1, 300, rng)
sessions = dataset.standardize_sessions(
    dataset.generate_synthetic_sessions(bases, config.n_frames, 1.0, 5.0, rng)
)
layer1 = slowae.train_layer(
    sessions, config.p1, config.cost_config(1), config.optimizer, rng, edge=config.edge1
)

# Layer 2: 14x14 patches mapped through the dense layer-1 amplitude map.
bases = dataset.edge_patches(config.edge2, 300, rng)
large = dataset.standardize_sessions(
    dataset.generate_synthetic_sessions(bases, config.n_frames, 1.0, 5.0, rng)
)
vectors = stack.layer2_training_vectors(large, layer1, config.k1)
layer2 = slowae.train_layer(
    vectors, config.p2, config.cost_config(2), config.optimizer, rng, edge=config.edge2
)

model = stack.StackedModel(layer1, layer2, config.k1, config.k2)
print(model)

# A 20x20 square drifting right and down on a dark background.
frames, truth = [], []
for i in range(30):
    img = np.full((96, 96), 0.1)
    x, y = 10 + 2 * i, 20 + i
    img[y : y + 20, x : x + 20] = 0.9
    frames.append(dataset.Frame(img, i + 1))
    truth.append(evaluation.Box(x, y, 20, 20))

result = tracker.run(frames, (10, 20, 20, 20), config, model, seed=42)
metrics = evaluation.evaluate(result, truth)
print(f"success rate: {metrics.success_rate:.1f}%, mean COL: {metrics.mean_col:.2f} px")
