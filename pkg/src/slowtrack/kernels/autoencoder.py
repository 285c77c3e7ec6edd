# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Slow Autoencoder Kernels
========================

Cost and analytic gradient of the tied-weight linear autoencoder with two-unit subspace
pooling, temporal slowness and sparsity penalties.

Sessions are packed as a ``[n_sessions, n_frames, d]`` array ``X``; weights ``W`` have
shape ``[p, d]`` with ``p`` even. Hidden units ``2i`` and ``2i + 1`` (0-based) form pool
``i``.

"""

from __future__ import annotations

import numpy as np

from .lib import InvalidInputError, _check, _check_dim

__all__ = ["pool", "phase", "cost", "cost_and_gradient"]


def _pairs(a: np.ndarray) -> np.ndarray:
    _check(a.shape[-1] % 2 == 0, "odd-units", "Number of hidden units must be even.")
    return a.reshape(*a.shape[:-1], a.shape[-1] // 2, 2)


def pool(a: np.ndarray, eps_pool: float) -> np.ndarray:
    """L2 subspace pooling of hidden activations ``a`` (last axis ``p``) into ``p / 2``
    amplitudes, ``sqrt(a_{2i}^2 + a_{2i+1}^2 + eps_pool)``."""
    pairs = _pairs(np.asarray(a, dtype=np.float64))
    return np.sqrt(np.sum(pairs * pairs, axis=-1) + eps_pool)


def phase(a: np.ndarray) -> np.ndarray:
    """Angle ``atan2(a_{2i+1}, a_{2i})`` of each pooled pair. ``phase(0, 0) = 0``."""
    pairs = _pairs(np.asarray(a, dtype=np.float64))
    # Adding 0.0 turns negative zeros positive, keeping the range (-pi, pi].
    return np.arctan2(pairs[..., 1] + 0.0, pairs[..., 0] + 0.0)


def _validate(W: np.ndarray, X: np.ndarray) -> None:
    if X.ndim != 3:
        raise InvalidInputError(
            "invalid-sessions",
            f"Sessions must be packed as [n_sessions, n_frames, d], got {X.shape}.",
        )
    _check(X.shape[0] > 0 and X.shape[1] > 0, "empty-dataset", "Dataset is empty.")
    _check_dim(X, W.shape[1], "sessions")


def _forward(
    W: np.ndarray, X: np.ndarray, eps_pool: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = X @ W.T
    R = X - A @ W
    H = pool(A, eps_pool)
    return A, R, H


def cost(
    W: np.ndarray,
    X: np.ndarray,
    alpha: float,
    gamma: float,
    eps_l1: float,
    eps_pool: float,
) -> float:
    """Smoothed objective

    ``sum ||x - W^T W x||^2 + alpha * sum_t sum_f |h(t, f) - h(t, f + 1)|
    + gamma * sum |h|``

    where ``|u|`` in the slowness term is ``sqrt(u^2 + eps_l1)``. Pooled units are
    already bounded below by ``sqrt(eps_pool)``, so the sparsity term sums them directly.

    """
    W = np.asarray(W, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    _validate(W, X)
    _, R, H = _forward(W, X, eps_pool)
    value = float(np.sum(R * R))
    if alpha != 0.0:
        D = np.diff(H, axis=1)
        value += alpha * float(np.sum(np.sqrt(D * D + eps_l1)))
    if gamma != 0.0:
        value += gamma * float(np.sum(H))
    return value


def cost_and_gradient(
    W: np.ndarray,
    X: np.ndarray,
    alpha: float,
    gamma: float,
    eps_l1: float,
    eps_pool: float,
) -> tuple[float, np.ndarray]:
    """Objective of :py:func:`cost` and its gradient with respect to ``W``."""
    W = np.asarray(W, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    _validate(W, X)
    A, R, H = _forward(W, X, eps_pool)
    value = float(np.sum(R * R))

    n, d = X.shape[0] * X.shape[1], X.shape[2]
    Xf = X.reshape(n, d)
    Af = A.reshape(n, -1)
    Rf = R.reshape(n, d)
    # Tied weights: the residual depends on W through both the encoder and the decoder.
    grad = -2.0 * (Af.T @ Rf + W @ (Rf.T @ Xf))

    dH = np.zeros_like(H)
    if alpha != 0.0:
        D = np.diff(H, axis=1)
        smooth = np.sqrt(D * D + eps_l1)
        value += alpha * float(np.sum(smooth))
        s = alpha * D / smooth
        dH[:, 1:] += s
        dH[:, :-1] -= s
    if gamma != 0.0:
        value += gamma * float(np.sum(H))
        dH += gamma
    if alpha != 0.0 or gamma != 0.0:
        dA = np.repeat(dH / H, 2, axis=-1) * A
        grad += dA.reshape(n, -1).T @ Xf
    return value, grad
