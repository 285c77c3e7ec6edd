# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Slow Autoencoder Layers
=======================

One tied-weight linear autoencoder layer with two-unit L2 subspace pooling, trained on
tracked sessions with a temporal slowness penalty and a sparsity penalty. Layers are
trained greedily: the second layer is fitted on features produced by the first, see
:py:mod:`slowtrack.stack`.

.. code-block:: python

    from slowtrack import dataset, slowae

    sessions = dataset.import_sessions("street.sltk")
    layer1 = slowae.train_layer(
        sessions, 64, slowae.SlowCostConfig(alpha=100.0, gamma=20.0),
        slowae.OptimizerConfig(max_iter=200), rng=42,
    )
    slowae.save_weights(layer1, "layer1.slwt")

"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence, TypeAlias

import numpy as np
from scipy import optimize

from .dataset import TrackSession
from .kernels import autoencoder as _ae
from .kernels.codec import Reader, Writer
from .kernels.lib import (
    FormatError,
    InvalidInputError,
    NumericalError,
    _check,
    _check_finite,
    _check_non_negative,
)
from .utils import SeedLike, as_generator

__all__ = [
    "SlowCostConfig",
    "OptimizerConfig",
    "LayerWeights",
    "FitStatus",
    "FitResult",
    "pack_sessions",
    "pool",
    "phase",
    "cost",
    "gradient",
    "init_weights",
    "fit_layer",
    "train_layer",
    "slowness_statistic",
    "encode_weights",
    "decode_weights",
    "save_weights",
    "load_weights",
]

_logger = logging.getLogger(__name__)

WEIGHTS_MAGIC = b"SLWT"
WEIGHTS_VERSION = 2
POOL_ARITY = 2


@dataclass(frozen=True)
class SlowCostConfig:
    """Weights of the penalty terms.

    Parameters
    ----------
    alpha :
        Weight of the temporal slowness term.
    gamma :
        Weight of the sparsity term.
    eps_l1 :
        Smoothing constant of the L1 norms, ``|u| ~ sqrt(u^2 + eps_l1)``.
    eps_pool :
        Smoothing constant inside the pooling square root.
    input_scale :
        Gain applied to the standardized training vectors inside the cost. The
        reconstruction term grows with its square and the penalties linearly, so this
        sets the amplitude at which ``alpha`` and ``gamma`` start to switch pooled units
        off. With unit-variance patches and a gain of 1, ``gamma = 20`` alone drives
        every unit to zero. Features extracted at tracking time are not scaled.

    """

    alpha: float = 100.0
    gamma: float = 20.0
    eps_l1: float = 1e-6
    eps_pool: float = 1e-6
    input_scale: float = 10.0

    def __post_init__(self) -> None:
        _check_non_negative(self.alpha, "alpha")
        _check_non_negative(self.gamma, "gamma")
        _check(
            np.isfinite(self.input_scale) and self.input_scale > 0.0,
            "invalid-input_scale",
            f"`input_scale` must be positive, got {self.input_scale}.",
        )
        for name in ("eps_l1", "eps_pool"):
            value = getattr(self, name)
            _check(
                0.0 < value <= 1e-3,
                f"invalid-{name}",
                f"`{name}` must lie in (0, 1e-3], got {value}.",
            )


@dataclass(frozen=True)
class OptimizerConfig:
    """Limited-memory BFGS settings."""

    max_iter: int = 200
    history: int = 10
    gtol: float = 1e-7

    def __post_init__(self) -> None:
        _check_non_negative(self.max_iter, "max_iter")
        _check(self.history >= 1, "invalid-history", "History must be at least 1.")
        _check(self.gtol > 0, "invalid-gtol", "Gradient tolerance must be positive.")


class LayerWeights:
    """Weights of one autoencoder layer.

    Parameters
    ----------
    W :
        ``[p, d]`` encoder matrix, the decoder is its transpose. ``p`` must be even;
        rows ``2i`` and ``2i + 1`` form the ``i``-th pooled unit.
    edge :
        Edge of the square image patch the layer consumes. For the second layer this is
        the large patch the first-layer features are extracted from.
    config :
        Cost configuration the layer was trained with.

    """

    def __init__(
        self,
        W: np.ndarray,
        edge: int,
        config: SlowCostConfig | None = None,
        pool_arity: int = POOL_ARITY,
    ) -> None:
        W = np.array(W, dtype=np.float64)
        _check(W.ndim == 2, "invalid-weights", f"Weights must be 2-D, got {W.shape}.")
        p, d = W.shape
        _check(p >= 2 and d >= 2, "invalid-weights", f"Invalid weight shape {W.shape}.")
        _check(p % 2 == 0, "odd-units", f"Number of hidden units must be even, got {p}.")
        _check(
            pool_arity == POOL_ARITY,
            "invalid-pool-arity",
            f"Only pairs are pooled, got arity {pool_arity}.",
        )
        _check(edge >= 1, "invalid-edge", f"Invalid patch edge {edge}.")
        _check_finite(W, "W")
        self._W = W
        self._W.flags.writeable = False
        self.edge = int(edge)
        self.config = SlowCostConfig() if config is None else config
        self.pool_arity = pool_arity

    @property
    def W(self) -> np.ndarray:
        return self._W

    @property
    def n_units(self) -> int:
        """Number of hidden units ``p``."""
        return int(self._W.shape[0])

    @property
    def n_pooled(self) -> int:
        return self.n_units // 2

    @property
    def dim(self) -> int:
        """Input dimension ``d``."""
        return int(self._W.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerWeights):
            return NotImplemented
        return (
            self.edge == other.edge
            and self.config == other.config
            and np.array_equal(self._W, other._W)
        )

    def __repr__(self) -> str:
        return f"LayerWeights(p={self.n_units}, d={self.dim}, edge={self.edge})"

    def __getstate__(self) -> dict[str, Any]:
        return {"weights": encode_weights(self)}

    def __setstate__(self, state: dict[str, Any]) -> None:
        other = decode_weights(state["weights"])
        self.__dict__.update(other.__dict__)


WeightsLike: TypeAlias = LayerWeights | np.ndarray


def _matrix(weights: WeightsLike) -> np.ndarray:
    if isinstance(weights, LayerWeights):
        return weights.W
    return np.asarray(weights, dtype=np.float64)


def pack_sessions(sessions: Sequence[TrackSession] | np.ndarray) -> np.ndarray:
    """Stack sessions into the ``[n_sessions, n_frames, d]`` layout of the kernels."""
    if isinstance(sessions, np.ndarray):
        return sessions
    if len(sessions) == 0:
        raise InvalidInputError("empty-dataset", "Dataset is empty.")
    shape = sessions[0].flat().shape
    for s in sessions:
        if s.flat().shape != shape:
            raise InvalidInputError(
                "session-shape-mismatch",
                f"Session {s.source_id!r} has shape {s.flat().shape}, expecting {shape}.",
            )
    return np.stack([s.flat() for s in sessions])


def pool(weights: LayerWeights, x: np.ndarray) -> np.ndarray:
    """Pooled amplitudes ``h_i = sqrt((Wx)_{2i}^2 + (Wx)_{2i+1}^2 + eps_pool)`` for the
    input vectors on the last axis of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.dim:
        raise InvalidInputError(
            "dimension-mismatch",
            f"Input has dimension {x.shape[-1]}, the layer expects {weights.dim}.",
        )
    return _ae.pool(x @ weights.W.T, weights.config.eps_pool)


def phase(weights: LayerWeights, x: np.ndarray) -> np.ndarray:
    """Angle of each pooled pair, in radians."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.dim:
        raise InvalidInputError(
            "dimension-mismatch",
            f"Input has dimension {x.shape[-1]}, the layer expects {weights.dim}.",
        )
    return _ae.phase(x @ weights.W.T)


def _training_input(
    sessions: Sequence[TrackSession] | np.ndarray, cfg: SlowCostConfig
) -> np.ndarray:
    return cfg.input_scale * pack_sessions(sessions)


def cost(
    weights: WeightsLike,
    sessions: Sequence[TrackSession] | np.ndarray,
    cfg: SlowCostConfig,
) -> float:
    """Smoothed training objective, evaluated on the sessions multiplied by
    ``cfg.input_scale``. With ``alpha = gamma = 0`` this is the plain tied-weight linear
    autoencoder reconstruction error of the scaled input."""
    return _ae.cost(
        _matrix(weights),
        _training_input(sessions, cfg),
        cfg.alpha,
        cfg.gamma,
        cfg.eps_l1,
        cfg.eps_pool,
    )


def gradient(
    weights: WeightsLike,
    sessions: Sequence[TrackSession] | np.ndarray,
    cfg: SlowCostConfig,
) -> np.ndarray:
    """Gradient of :py:func:`cost` with respect to ``W``."""
    _, grad = _ae.cost_and_gradient(
        _matrix(weights),
        _training_input(sessions, cfg),
        cfg.alpha,
        cfg.gamma,
        cfg.eps_l1,
        cfg.eps_pool,
    )
    return grad


def init_weights(p: int, d: int, rng: SeedLike) -> np.ndarray:
    """I.i.d. Gaussian initialization with standard deviation ``1 / sqrt(d)``, rows start
    near unit norm.

    The sparsity term keeps a non-vanishing gradient at ``W = 0``, so every pooled unit
    whose rows start below about ``gamma / (4 * input_scale)`` in norm decays to zero
    instead of learning.

    """
    _check(p >= 2 and p % 2 == 0, "odd-units", f"Number of hidden units must be even, got {p}.")
    _check(d >= 1, "invalid-weights", f"Invalid input dimension {d}.")
    return as_generator(rng).normal(0.0, 1.0 / np.sqrt(d), size=(p, d))


class FitStatus(Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass
class FitResult:
    """Outcome of :py:func:`fit_layer`."""

    weights: LayerWeights
    initial_cost: float
    final_cost: float
    n_iter: int
    status: FitStatus
    message: str = field(default="", repr=False)


def fit_layer(
    sessions: Sequence[TrackSession] | np.ndarray,
    p: int,
    cfg: SlowCostConfig,
    opt: OptimizerConfig,
    rng: SeedLike,
    *,
    edge: int | None = None,
    W0: np.ndarray | None = None,
) -> FitResult:
    """Minimize the layer cost with L-BFGS, starting from a Gaussian initialization.

    Parameters
    ----------
    sessions :
        Training sessions, all with the same frame count and dimension.
    p :
        Number of hidden units, even.
    edge :
        Patch edge recorded in the returned weights. Taken from image sessions when not
        given; required for packed arrays and feature-space sessions.
    W0 :
        Explicit initialization, bypasses ``rng``.

    Returns
    -------
    The best iterate seen. Its cost never exceeds the initial cost.

    """
    X = _training_input(sessions, cfg)
    _check(X.ndim == 3, "invalid-sessions", "Sessions must be packed as [n, n_frames, d].")
    d = X.shape[2]
    if edge is None:
        edge = 0 if isinstance(sessions, np.ndarray) else sessions[0].edge
        if edge == 0:
            raise InvalidInputError(
                "missing-edge", "Patch edge must be given when training on feature vectors."
            )
    if W0 is None:
        W0 = init_weights(p, d, rng)
    W0 = np.asarray(W0, dtype=np.float64)
    _check(W0.shape == (p, d), "dimension-mismatch", f"Initial weights must be {(p, d)}.")

    def fun(w: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = _ae.cost_and_gradient(
            w.reshape(p, d), X, cfg.alpha, cfg.gamma, cfg.eps_l1, cfg.eps_pool
        )
        if not np.isfinite(value):
            raise NumericalError("non-finite", "Autoencoder cost is not finite.")
        if value < best[0]:
            best[0], best[1] = value, w.copy()
        return value, grad.ravel()

    initial = _ae.cost(W0, X, cfg.alpha, cfg.gamma, cfg.eps_l1, cfg.eps_pool)
    best: list[Any] = [initial, W0.ravel().copy()]
    _logger.info(
        "Training layer: p=%d, d=%d, %d sessions x %d frames, initial cost %.6g",
        p, d, X.shape[0], X.shape[1], initial,
    )
    if opt.max_iter == 0:
        return FitResult(LayerWeights(W0, edge, cfg), initial, initial, 0, FitStatus.MAX_ITER)

    n_iter = [0]

    def callback(xk: np.ndarray) -> None:
        n_iter[0] += 1
        _logger.debug("iteration %d: best cost %.9g", n_iter[0], best[0])

    res = optimize.minimize(
        fun,
        W0.ravel(),
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxiter": opt.max_iter,
            "maxcor": opt.history,
            "gtol": opt.gtol,
            "ftol": 0.0,
        },
    )
    if res.status == 0:
        status = FitStatus.CONVERGED
    elif res.status == 1:
        status = FitStatus.MAX_ITER
    else:
        status = FitStatus.LINE_SEARCH_FAILURE
        _logger.warning("L-BFGS stopped early, keeping the best iterate: %s", res.message)
    final, W = best[0], best[1].reshape(p, d)
    _logger.info("Layer trained: %d iterations, final cost %.6g (%s)", res.nit, final, status.value)
    return FitResult(LayerWeights(W, edge, cfg), initial, final, int(res.nit), status, str(res.message))


def train_layer(
    sessions: Sequence[TrackSession] | np.ndarray,
    p: int,
    cfg: SlowCostConfig,
    opt: OptimizerConfig,
    rng: SeedLike,
    *,
    edge: int | None = None,
) -> LayerWeights:
    """Train one layer, see :py:func:`fit_layer`."""
    return fit_layer(sessions, p, cfg, opt, rng, edge=edge).weights


def slowness_statistic(
    weights: LayerWeights, sessions: Sequence[TrackSession] | np.ndarray
) -> float:
    """Mean L1 distance between pooled representations of consecutive frames."""
    X = pack_sessions(sessions)
    H = pool(weights, X)
    return float(np.mean(np.sum(np.abs(np.diff(H, axis=1)), axis=-1)))


def encode_weights(weights: LayerWeights) -> bytes:
    """Layout: magic ``SLWT``, version, ``(p, d, edge)`` as ``u32``, ``W`` row-major
    ``f64``, then ``alpha, gamma, eps_l1, eps_pool, input_scale`` as ``f64``. Version 1
    files lack ``input_scale`` and decode with a gain of 1."""
    cfg = weights.config
    return (
        Writer(WEIGHTS_MAGIC, WEIGHTS_VERSION)
        .u32(weights.n_units, weights.dim, weights.edge)
        .array(weights.W)
        .f64(cfg.alpha, cfg.gamma, cfg.eps_l1, cfg.eps_pool, cfg.input_scale)
        .getvalue()
    )


def decode_weights(buf: bytes) -> LayerWeights:
    reader = Reader(buf, WEIGHTS_MAGIC, (1, WEIGHTS_VERSION))
    p, d, edge = reader.u32(), reader.u32(), reader.u32()
    W = reader.array((p, d))
    scalars = [reader.f64() for _ in range(4 if reader.version == 1 else 5)]
    if reader.version == 1:
        scalars.append(1.0)
    reader.finish()
    try:
        return LayerWeights(W, edge, SlowCostConfig(*scalars))
    except (InvalidInputError, NumericalError) as e:
        raise FormatError("invalid-weights", e.msg, offset=8)


def save_weights(weights: LayerWeights, path: os.PathLike | str) -> None:
    Path(os.path.expanduser(path)).write_bytes(encode_weights(weights))


def load_weights(path: os.PathLike | str) -> LayerWeights:
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    return decode_weights(p.read_bytes())
