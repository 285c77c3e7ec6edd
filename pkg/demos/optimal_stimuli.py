"""
Optimal Stimuli
===============

Render phase-shifted optimal stimuli of a layer trained with a strong slowness penalty.
Moving along the phase of a pooled unit reveals the transformation it is invariant to.

"""

import tempfile

import numpy as np

from slowtrack import dataset, slowae, viz

rng = np.random.default_rng(0)
bases = dataset.edge_patches(8, 400, rng)
sessions = dataset.standardize_sessions(
    dataset.generate_synthetic_sessions(bases, 5, 1.0, 5.0, rng)
)
weights = slowae.train_layer(
    sessions,
    16,
    slowae.SlowCostConfig(alpha=100.0, gamma=20.0),
    slowae.OptimizerConfig(max_iter=50),
    rng,
)
print("slowness on the training sessions:", slowae.slowness_statistic(weights, sessions))

with tempfile.TemporaryDirectory() as tmpdir:
    grid = viz.render_grid(weights, 1, pair_indices=range(4), out_dir=tmpdir)
    print("phase steps (deg):", np.rad2deg(grid.thetas).round().astype(int).tolist())
    print("written:", grid.path, grid.to_image().size)
