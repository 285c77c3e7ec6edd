# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Weighted Logistic Regression Kernels
====================================

Labels are ``+1`` / ``-1``. The per-sample weights carry the class balancing; there is
no intercept.

"""

from __future__ import annotations

import logging

import numpy as np
from scipy import optimize, special

from .lib import InvalidStateError, NumericalError, _check, _check_non_negative

__all__ = ["class_weights", "objective", "fit", "log_odds", "predict_proba"]

_logger = logging.getLogger(__name__)


def class_weights(y: np.ndarray) -> np.ndarray:
    """Per-sample weights ``(D+ + D-) / (2 D+-)``, inversely proportional to the class
    sizes."""
    y = np.asarray(y)
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    if n_pos == 0 or n_neg == 0:
        raise InvalidStateError(
            "one-class-empty",
            f"Both classes are required, got {n_pos} positives and {n_neg} negatives.",
        )
    total = n_pos + n_neg
    return np.where(y > 0, total / (2.0 * n_pos), total / (2.0 * n_neg))


def objective(
    w: np.ndarray,
    Z: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray]:
    """``sum c_i log(1 + exp(-y_i w^T z_i)) + lam ||w||^2`` and its gradient."""
    margin = y * (Z @ w)
    loss = float(np.sum(sample_weight * np.logaddexp(0.0, -margin)))
    loss += lam * float(w @ w)
    coef = -sample_weight * y * special.expit(-margin)
    grad = Z.T @ coef + 2.0 * lam * w
    return loss, grad


def fit(
    Z: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    lam: float,
    *,
    w0: np.ndarray | None = None,
    gtol: float = 1e-6,
    max_iter: int = 1000,
) -> np.ndarray:
    """Minimize :py:func:`objective` with L-BFGS.

    Parameters
    ----------
    Z :
        ``[n, r]`` feature matrix.
    y :
        Labels in ``{+1, -1}``.
    sample_weight :
        Non-negative per-sample weights.
    lam :
        L2 weight decay.
    w0 :
        Initial weights, zeros by default.
    gtol :
        Stop once the largest gradient component falls below this value.

    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sample_weight = np.asarray(sample_weight, dtype=np.float64)
    _check_non_negative(lam, "lambda")
    _check(
        Z.ndim == 2 and Z.shape[0] == y.shape[0] == sample_weight.shape[0],
        "dimension-mismatch",
        "Features, labels and weights must agree on the number of samples.",
    )
    _check(bool(np.all(np.abs(y) == 1)), "invalid-label", "Labels must be +1 or -1.")
    if w0 is None:
        w0 = np.zeros(Z.shape[1])
    res = optimize.minimize(
        objective,
        np.asarray(w0, dtype=np.float64),
        args=(Z, y, sample_weight, lam),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": gtol, "ftol": 0.0, "maxcor": 10},
    )
    if not res.success:
        _logger.debug("Logistic regression stopped early: %s", res.message)
    w = np.asarray(res.x)
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite", "Logistic regression diverged.")
    return w


def log_odds(w: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Margin ``w^T z`` for each row of ``Z``."""
    return np.asarray(Z, dtype=np.float64) @ w


def predict_proba(w: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """``1 / (1 + exp(-w^T z))`` for each row of ``Z``."""
    return special.expit(log_odds(w, Z))
