# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import numpy as np
import pytest

from slowtrack.kernels import logistic
from slowtrack.kernels.lib import InvalidInputError, InvalidStateError


def _toy(n_pos: int, n_neg: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    pos = rng.normal(loc=(1.0, 0.5), size=(n_pos, 2))
    neg = rng.normal(loc=(-1.0, -0.5), size=(n_neg, 2))
    Z = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return Z, y


def test_class_weights() -> None:
    y = np.array([1, 1, -1, -1, -1, -1, -1, -1])
    w = logistic.class_weights(y)
    np.testing.assert_allclose(w[:2], 8 / 4)
    np.testing.assert_allclose(w[2:], 8 / 12)
    # Both classes carry the same total weight.
    np.testing.assert_allclose(w[y > 0].sum(), w[y < 0].sum())

    with pytest.raises(InvalidStateError, match="one-class-empty"):
        logistic.class_weights(np.ones(3))


def test_objective_gradient() -> None:
    Z, y = _toy(5, 7, 0)
    c = logistic.class_weights(y)
    w = np.array([0.3, -0.2])
    _, grad = logistic.objective(w, Z, y, c, 0.1)
    step = 1e-6
    numeric = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        numeric[i] = (
            logistic.objective(w + e, Z, y, c, 0.1)[0] - logistic.objective(w - e, Z, y, c, 0.1)[0]
        ) / (2 * step)
    np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-8)


def test_separable() -> None:
    Z = np.array([[2.0, 1.0], [1.5, 2.0], [3.0, 0.5], [-2.0, -1.0], [-1.0, -2.5], [-3.0, 0.1]])
    y = np.array([1, 1, 1, -1, -1, -1], dtype=np.float64)
    w = logistic.fit(Z, y, logistic.class_weights(y), 1e-4)
    pred = np.where(logistic.predict_proba(w, Z) > 0.5, 1, -1)
    assert np.all(pred == y)


def test_weighting_equals_duplication() -> None:
    Z, y = _toy(10, 100, 1)
    c = logistic.class_weights(y)
    lam = 1e-2
    weighted = logistic.fit(Z, y, c, lam, gtol=1e-10)

    # Duplicating each positive 10x balances the classes; the unweighted objective of the
    # duplicated set is the weighted objective scaled by 1 / c_neg.
    Zd = np.vstack([np.repeat(Z[:10], 10, axis=0), Z[10:]])
    yd = np.concatenate([np.ones(100), -np.ones(100)])
    c_neg = c[-1]
    duplicated = logistic.fit(Zd, yd, np.ones(200), lam / c_neg, gtol=1e-10)
    assert np.linalg.norm(weighted - duplicated) < 1e-5


def test_convexity() -> None:
    Z, y = _toy(20, 30, 2)
    c = logistic.class_weights(y)
    a = logistic.fit(Z, y, c, 1e-3, gtol=1e-10)
    b = logistic.fit(Z, y, c, 1e-3, w0=np.array([5.0, -5.0]), gtol=1e-10)
    fa = logistic.objective(a, Z, y, c, 1e-3)[0]
    fb = logistic.objective(b, Z, y, c, 1e-3)[0]
    assert abs(fa - fb) < 1e-8


def test_strong_regularization() -> None:
    Z, y = _toy(10, 10, 3)
    w = logistic.fit(Z, y, logistic.class_weights(y), 1e6)
    assert np.linalg.norm(w) < 1e-2


def test_predict_proba() -> None:
    w = np.array([1.0, -1.0])
    p = logistic.predict_proba(w, np.array([[1.0, 1.0], [1e3, 0.0], [2.0, 0.0], [1.0, 0.0]]))
    assert p[0] == 0.5
    assert p[1] == pytest.approx(1.0)
    assert p[2] > p[3]


def test_invalid_labels() -> None:
    Z = np.zeros((2, 2))
    with pytest.raises(InvalidInputError, match="invalid-label"):
        logistic.fit(Z, np.array([1.0, 0.0]), np.ones(2), 0.1)
