# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from slowtrack import slowae, viz
from slowtrack.kernels.lib import InvalidInputError
from slowtrack.slowae import LayerWeights

from .test_kernels.utils import orthonormal_rows, random_model


def test_rescale() -> None:
    np.testing.assert_allclose(viz.rescale(np.array([1.0, 3.0, 2.0])), [0.0, 1.0, 0.5])
    np.testing.assert_array_equal(viz.rescale(np.full((2, 2), 7.0)), np.full((2, 2), 0.5))


def test_layer1_stimulus() -> None:
    layer1 = LayerWeights(orthonormal_rows(16, 64, 0), 8)
    W = layer1.W
    s0 = viz.optimal_stimulus_l1(layer1, 3, 0.0, normalize=False)
    np.testing.assert_allclose(s0.ravel(), W[6])
    s90 = viz.optimal_stimulus_l1(layer1, 3, np.pi / 2, normalize=False)
    np.testing.assert_allclose(s90.ravel(), W[7], atol=1e-15)
    scaled = viz.optimal_stimulus_l1(layer1, 3, 0.0)
    np.testing.assert_allclose(scaled, viz.rescale(W[6].reshape(8, 8)))
    with pytest.raises(InvalidInputError, match="index-out-of-range"):
        viz.optimal_stimulus_l1(layer1, 8, 0.0)


def test_pooled_amplitude_is_phase_invariant() -> None:
    cfg = slowae.SlowCostConfig(eps_pool=1e-12)
    layer1 = LayerWeights(orthonormal_rows(16, 64, 1), 8, cfg)
    for theta in np.deg2rad(np.arange(0, 360, 36)):
        stimulus = viz.optimal_stimulus_l1(layer1, 2, theta, normalize=False).ravel()
        h = slowae.pool(layer1, stimulus)
        assert h[2] == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(np.delete(h, 2), 1e-6, atol=1e-9)


def test_layer2_stimulus() -> None:
    layer1 = LayerWeights(orthonormal_rows(16, 64, 2), 8)
    n_pooled, cells = layer1.n_pooled, 2
    filters = layer1.W[0::2].reshape(n_pooled, 8, 8)

    # One-hot on (cell (1, 0), pair 5).
    W2 = np.zeros((4, cells * cells * n_pooled))
    W2[0, (1 * cells + 0) * n_pooled + 5] = 1.0
    W2[1] = 1e-3
    layer2 = LayerWeights(W2, 14)
    out = viz.optimal_stimulus_l2(layer1, layer2, 0, 0.0, normalize=False)
    expected = np.zeros((14, 14))
    expected[6:14, 0:8] = filters[5]
    np.testing.assert_allclose(out, expected, atol=1e-15)

    flat = viz.optimal_stimulus_l2(layer1, layer2, 1, 0.0, normalize=False)
    np.testing.assert_array_equal(flat, np.zeros((14, 14)))
    np.testing.assert_array_equal(viz.rescale(flat), np.full((14, 14), 0.5))

    rng = np.random.default_rng(3)
    layer2 = LayerWeights(rng.normal(size=(4, cells * cells * n_pooled)), 14)
    theta = 0.7
    coef = np.cos(theta) * layer2.W[2] + np.sin(theta) * layer2.W[3]
    oracle = np.zeros((14, 14))
    for y in range(14):
        for x in range(14):
            for ci in range(cells):
                for cj in range(cells):
                    dy, dx = y - 6 * ci, x - 6 * cj
                    if 0 <= dy < 8 and 0 <= dx < 8:
                        for j in range(n_pooled):
                            oracle[y, x] += coef[(ci * cells + cj) * n_pooled + j] * filters[j, dy, dx]
    out = viz.optimal_stimulus_l2(layer1, layer2, 1, theta, normalize=False)
    np.testing.assert_allclose(out, oracle, atol=1e-10)


def test_render_grid(tmp_path: Path) -> None:
    model = random_model(4)
    grid = viz.render_grid(model, 1, pair_indices=[0, 3], out_dir=tmp_path)
    assert grid.cells.shape == (2, 10, 8, 8)
    assert grid.pair_indices == (0, 3)
    assert grid.path == tmp_path / "stimuli_layer1.png"
    np.testing.assert_allclose(grid.thetas[1], np.deg2rad(36.0))
    with Image.open(grid.path) as img:
        assert img.mode == "L"
        assert img.size == (10 * (32 + 2) + 2, 2 * (32 + 2) + 2)

    grid2 = viz.render_grid(model, 2, theta_step_deg=90)
    assert grid2.cells.shape == (model.layer2.n_pooled, 4, 14, 14)
    assert grid2.path is None
    assert np.all((grid2.cells >= 0.0) & (grid2.cells <= 1.0))

    only1 = viz.render_grid(model.layer1, 1, theta_step_deg=120)
    assert only1.cells.shape == (model.layer1.n_pooled, 3, 8, 8)


def test_render_grid_invalid() -> None:
    model = random_model(5)
    with pytest.raises(InvalidInputError, match="invalid-theta-step"):
        viz.render_grid(model, 1, theta_step_deg=7)
    with pytest.raises(InvalidInputError, match="invalid-theta-step"):
        viz.render_grid(model, 1, theta_step_deg=0)
    with pytest.raises(InvalidInputError, match="index-out-of-range"):
        viz.render_grid(model, 2, pair_indices=[99])
    with pytest.raises(InvalidInputError, match="layer2-weights-missing"):
        viz.render_grid(model.layer1, 2)
    with pytest.raises(InvalidInputError, match="invalid-layer"):
        viz.render_grid(model, 3)
