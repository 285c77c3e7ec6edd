# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause

"""Utilities for testing."""

from __future__ import annotations

import math
from functools import cache as fcache
from typing import Callable

import numpy as np

from slowtrack.slowae import LayerWeights, SlowCostConfig
from slowtrack.stack import StackedModel


def random_sessions(n_sessions: int, n_frames: int, d: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(n_sessions, n_frames, d))


def plain_autoencoder_cost(W: np.ndarray, X: np.ndarray) -> float:
    """Tied-weight linear autoencoder without biases, sample by sample."""
    total = 0.0
    for x in X.reshape(-1, X.shape[-1]):
        hidden = W @ x
        recon = W.T @ hidden
        total += float(np.sum((x - recon) ** 2))
    return total


def scalar_cost(
    W: np.ndarray,
    X: np.ndarray,
    alpha: float,
    gamma: float,
    eps_l1: float,
    eps_pool: float,
) -> float:
    """Loop-based evaluation of the slow autoencoder cost."""
    p, d = W.shape
    n_sessions, n_frames, _ = X.shape

    def pooled(x: np.ndarray) -> list[float]:
        h = []
        for i in range(p // 2):
            a = sum(W[2 * i, k] * x[k] for k in range(d))
            b = sum(W[2 * i + 1, k] * x[k] for k in range(d))
            h.append(math.sqrt(a * a + b * b + eps_pool))
        return h

    recon = 0.0
    slow = 0.0
    sparse = 0.0
    for s in range(n_sessions):
        prev = None
        for f in range(n_frames):
            x = X[s, f]
            for k in range(d):
                r = x[k] - sum(W[j, k] * sum(W[j, m] * x[m] for m in range(d)) for j in range(p))
                recon += r * r
            h = pooled(x)
            sparse += sum(h)
            if prev is not None:
                slow += sum(math.sqrt((u - v) ** 2 + eps_l1) for u, v in zip(prev, h))
            prev = h
    return recon + alpha * slow + gamma * sparse


def finite_difference(f: Callable[[np.ndarray], float], W: np.ndarray, step: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(W)
    for idx in np.ndindex(*W.shape):
        Wp = W.copy()
        Wm = W.copy()
        Wp[idx] += step
        Wm[idx] -= step
        grad[idx] = (f(Wp) - f(Wm)) / (2.0 * step)
    return grad


def orthonormal_rows(p: int, d: int, seed: int) -> np.ndarray:
    """``p x d`` matrix with orthonormal rows, ``p <= d``."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(d, p)))
    return q.T.copy()


def random_model(seed: int = 0, p1: int = 16, p2: int = 16) -> StackedModel:
    """Untrained stacked model with the default geometry."""
    rng = np.random.default_rng(seed)
    cfg = SlowCostConfig()
    layer1 = LayerWeights(orthonormal_rows(p1, 64, seed), 8, cfg)
    layer2 = LayerWeights(rng.normal(scale=0.1, size=(p2, 4 * (p1 // 2))), 14, cfg)
    return StackedModel(layer1, layer2, 6, 2)


@fcache
def moving_square(
    n_frames: int = 100, size: int = 96, edge: int = 20, step: int = 2
) -> tuple[tuple[np.ndarray, ...], tuple[tuple[float, float, float, float], ...]]:
    """A white square moving diagonally on black, with its ground truth boxes."""
    frames = []
    boxes = []
    x, y = 10, 20
    dx, dy = step, step // 2
    for _ in range(n_frames):
        img = np.zeros((size, size))
        img[y : y + edge, x : x + edge] = 1.0
        frames.append(img)
        boxes.append((float(x), float(y), float(edge), float(edge)))
        if not 0 <= x + dx <= size - edge:
            dx = -dx
        if not 0 <= y + dy <= size - edge:
            dy = -dy
        x += dx
        y += dy
    return tuple(frames), tuple(boxes)
