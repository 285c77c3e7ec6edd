# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import dataclasses
import pickle
from pathlib import Path

import numpy as np
import pytest

from slowtrack import dataset, slowae
from slowtrack.kernels import autoencoder as ae
from slowtrack.kernels.lib import FormatError, InvalidInputError

from .test_kernels.utils import orthonormal_rows


def _edge_sessions(n: int, seed: int) -> list[dataset.TrackSession]:
    bases = dataset.edge_patches(8, n, rng=seed)
    raw = dataset.generate_synthetic_sessions(bases, 5, 1.0, 5.0, rng=seed + 1)
    return dataset.standardize_sessions(raw)


def test_layer_weights() -> None:
    W = orthonormal_rows(8, 64, 0)
    weights = slowae.LayerWeights(W, 8)
    assert weights.n_units == 8
    assert weights.n_pooled == 4
    assert weights.dim == 64
    assert weights.config == slowae.SlowCostConfig()
    with pytest.raises(ValueError):
        weights.W[0, 0] = 1.0

    with pytest.raises(InvalidInputError, match="odd-units"):
        slowae.LayerWeights(W[:7], 8)
    with pytest.raises(InvalidInputError, match="invalid-weights"):
        slowae.LayerWeights(W[0], 8)
    with pytest.raises(InvalidInputError, match="invalid-pool-arity"):
        slowae.LayerWeights(W, 8, pool_arity=3)
    with pytest.raises(InvalidInputError, match="invalid-eps_pool"):
        slowae.SlowCostConfig(eps_pool=0.0)
    with pytest.raises(InvalidInputError, match="invalid-alpha"):
        slowae.SlowCostConfig(alpha=-1.0)


def test_pool() -> None:
    cfg = slowae.SlowCostConfig(eps_pool=1e-12)
    weights = slowae.LayerWeights(np.eye(2), 1, cfg)
    np.testing.assert_allclose(slowae.pool(weights, np.array([3.0, 4.0])), [5.0])
    np.testing.assert_allclose(slowae.phase(weights, np.array([0.0, 2.0])), [np.pi / 2])
    np.testing.assert_allclose(slowae.pool(weights, np.zeros(2)), [1e-6])
    with pytest.raises(InvalidInputError, match="dimension-mismatch"):
        slowae.pool(weights, np.zeros(3))

    rng = np.random.default_rng(1)
    W = rng.normal(size=(8, 16))
    x = rng.normal(size=(5, 16))
    weights = slowae.LayerWeights(W, 4)
    z = x @ W.T
    expected = np.sqrt(z[:, 0::2] ** 2 + z[:, 1::2] ** 2 + weights.config.eps_pool)
    np.testing.assert_allclose(slowae.pool(weights, x), expected, rtol=1e-12)


def test_cost_with_sessions() -> None:
    sessions = _edge_sessions(6, 2)
    W = np.random.default_rng(3).normal(scale=0.1, size=(8, 64))
    cfg = slowae.SlowCostConfig()
    X = slowae.pack_sessions(sessions)
    assert X.shape == (len(sessions), 5, 64)
    assert slowae.cost(W, sessions, cfg) == pytest.approx(slowae.cost(W, X, cfg))
    assert slowae.gradient(W, sessions, cfg).shape == W.shape
    with pytest.raises(InvalidInputError, match="empty-dataset"):
        slowae.cost(W, [], cfg)
    with pytest.raises(InvalidInputError, match="session-shape-mismatch"):
        slowae.pack_sessions([sessions[0], dataset.TrackSession(np.ones((5, 4, 4)))])


def test_max_iter_zero_returns_initialization() -> None:
    sessions = _edge_sessions(4, 4)
    opt = slowae.OptimizerConfig(max_iter=0)
    result = slowae.fit_layer(sessions, 8, slowae.SlowCostConfig(), opt, rng=5)
    expected = slowae.init_weights(8, 64, rng=5)
    np.testing.assert_array_equal(result.weights.W, expected)
    assert result.status == slowae.FitStatus.MAX_ITER
    assert result.n_iter == 0
    assert result.final_cost == result.initial_cost
    assert result.weights.edge == 8


def test_descent() -> None:
    sessions = _edge_sessions(40, 6)
    cfg = slowae.SlowCostConfig(alpha=100.0, gamma=20.0)
    result = slowae.fit_layer(sessions, 16, cfg, slowae.OptimizerConfig(max_iter=50), rng=7)
    assert result.final_cost < result.initial_cost
    assert slowae.cost(result.weights, sessions, cfg) == pytest.approx(result.final_cost)
    assert result.weights.config == cfg

    again = slowae.train_layer(sessions, 16, cfg, slowae.OptimizerConfig(max_iter=50), rng=7)
    assert again == result.weights


@pytest.mark.slow
def test_slowness_reduces_temporal_variation() -> None:
    train = _edge_sessions(300, 8)
    held_out = _edge_sessions(100, 9)
    opt = slowae.OptimizerConfig(max_iter=200)

    def fit(alpha: float) -> slowae.LayerWeights:
        cfg = slowae.SlowCostConfig(alpha=alpha, gamma=20.0)
        return slowae.train_layer(train, 16, cfg, opt, rng=10)

    slow = fit(100.0)
    plain = fit(0.0)
    # Units of the plain layer stay above the eps_pool floor.
    H = slowae.pool(plain, slowae.pack_sessions(held_out))
    assert float(np.mean(np.sum(H, axis=-1))) > 1.0
    assert slowae.slowness_statistic(slow, held_out) <= 0.7 * slowae.slowness_statistic(
        plain, held_out
    )


def test_training_input_scale() -> None:
    sessions = _edge_sessions(6, 12)
    W = np.random.default_rng(13).normal(scale=0.1, size=(8, 64))
    X = slowae.pack_sessions(sessions)
    cfg = slowae.SlowCostConfig(alpha=100.0, gamma=20.0, input_scale=4.0)
    expected = ae.cost(W, 4.0 * X, 100.0, 20.0, cfg.eps_l1, cfg.eps_pool)
    assert slowae.cost(W, sessions, cfg) == pytest.approx(expected, rel=1e-12)
    _, grad = ae.cost_and_gradient(W, 4.0 * X, 100.0, 20.0, cfg.eps_l1, cfg.eps_pool)
    np.testing.assert_allclose(slowae.gradient(W, X, cfg), grad, rtol=1e-12)

    # Pooled amplitudes of unit-variance 8x8 patches never exceed 8, below gamma = 20, so
    # at unit gain the leading principal subspace still costs more than W = 0.
    unit = slowae.SlowCostConfig(alpha=0.0, gamma=20.0, input_scale=1.0)
    scaled = dataclasses.replace(unit, input_scale=10.0)
    _, _, Vt = np.linalg.svd(X.reshape(-1, 64), full_matrices=False)
    q = Vt[:8]
    zero = np.zeros_like(q)
    assert slowae.cost(q, X, unit) > slowae.cost(zero, X, unit)
    assert slowae.cost(q, X, scaled) < slowae.cost(zero, X, scaled)

    with pytest.raises(InvalidInputError, match="invalid-input_scale"):
        slowae.SlowCostConfig(input_scale=0.0)


def test_init_scale() -> None:
    W = slowae.init_weights(64, 256, rng=15)
    norms = np.linalg.norm(W, axis=1)
    assert 0.8 < float(np.mean(norms)) < 1.2
    np.testing.assert_array_equal(W, slowae.init_weights(64, 256, rng=15))


def test_fit_requires_edge_for_vectors() -> None:
    X = slowae.pack_sessions(_edge_sessions(4, 16))
    opt = slowae.OptimizerConfig(max_iter=0)
    cfg = slowae.SlowCostConfig()
    with pytest.raises(InvalidInputError, match="missing-edge"):
        slowae.fit_layer(X, 8, cfg, opt, rng=0)
    features = [dataset.TrackSession(x) for x in X]
    with pytest.raises(InvalidInputError, match="missing-edge"):
        slowae.fit_layer(features, 8, cfg, opt, rng=0)
    assert slowae.fit_layer(X, 8, cfg, opt, rng=0, edge=8).weights.edge == 8


def test_weights_io(tmp_path: Path) -> None:
    cfg = slowae.SlowCostConfig(alpha=300.0, gamma=20.0)
    weights = slowae.LayerWeights(orthonormal_rows(16, 64, 11), 8, cfg)
    path = tmp_path / "layer1.slwt"
    slowae.save_weights(weights, path)
    loaded = slowae.load_weights(path)
    assert loaded == weights
    assert loaded.config.alpha == 300.0

    copied = pickle.loads(pickle.dumps(weights))
    assert copied == weights
    assert not copied.W.flags.writeable

    raw = path.read_bytes()
    assert raw[:4] == b"SLWT"
    with pytest.raises(FormatError, match="trailing-bytes"):
        slowae.decode_weights(raw + b"\0")
    with pytest.raises(FormatError, match="bad-version"):
        slowae.decode_weights(raw[:4] + b"\x09\0\0\0" + raw[8:])
    legacy = slowae.decode_weights(raw[:4] + b"\x01\0\0\0" + raw[8:-8])
    assert legacy.config.input_scale == 1.0
    np.testing.assert_array_equal(legacy.W, weights.W)
    odd = bytearray(raw)
    odd[8:12] = (15).to_bytes(4, "little")
    with pytest.raises(FormatError):
        slowae.decode_weights(bytes(odd))
    with pytest.raises(FileNotFoundError):
        slowae.load_weights(tmp_path / "missing.slwt")
