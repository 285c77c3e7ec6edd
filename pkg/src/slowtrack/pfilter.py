# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Particle Filter
===============

Sequential importance resampling over axis-aligned box states. The proposal is the
dynamic model, so each particle's weight is driven by the observational model only:
``w_i ~ w_i' * exp(f(z_i))``.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .dataset import Frame
from .kernels import image as _image
from .kernels.lib import InvalidInputError, _check, _check_finite
from .stack import TEMPLATE_EDGE, StackedModel
from .utils import SeedLike, as_generator, parallel_map

if TYPE_CHECKING:
    from .obsmodel import Classifier

__all__ = [
    "AffineState",
    "DynamicModel",
    "ParticleSet",
    "propagate",
    "crop_and_warp",
    "crop_states",
    "reweight",
    "weigh",
    "resample",
    "estimate",
]

_logger = logging.getLogger(__name__)

SCALE_RANGE = (1e-3, 1e3)
# Number of particles scored per work item.
SCORE_CHUNK = 128


@dataclass(frozen=True)
class AffineState:
    """Box state: center ``(x, y)`` in pixels, ``scale`` = box width / template edge and
    ``aspect`` = height / width."""

    x: float
    y: float
    scale: float = 1.0
    aspect: float = 1.0

    def __post_init__(self) -> None:
        _check(self.scale > 0, "invalid-scale", f"Scale must be positive, got {self.scale}.")
        _check(self.aspect > 0, "invalid-aspect", f"Aspect must be positive, got {self.aspect}.")

    @property
    def width(self) -> float:
        """``S_x``"""
        return self.scale * TEMPLATE_EDGE

    @property
    def height(self) -> float:
        """``S_y``"""
        return self.width * self.aspect

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.scale, self.aspect], dtype=np.float64)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> AffineState:
        x, y, scale, aspect = (float(v) for v in arr)
        return cls(x, y, scale, aspect)

    @classmethod
    def from_box(cls, x: float, y: float, w: float, h: float) -> AffineState:
        """From a top-left ``(x, y, w, h)`` box."""
        if w <= 0 or h <= 0:
            raise InvalidInputError("degenerate-box", f"Box {(x, y, w, h)} has zero area.")
        return cls(x + w / 2.0, y + h / 2.0, w / TEMPLATE_EDGE, h / w)

    def to_box(self) -> tuple[float, float, float, float]:
        """Top-left ``(x, y, w, h)`` box."""
        w, h = self.width, self.height
        return (self.x - w / 2.0, self.y - h / 2.0, w, h)


@dataclass(frozen=True)
class DynamicModel:
    """Independent Gaussian random walk on ``(x, y, scale, aspect)`` with diagonal
    variances ``Q``."""

    variances: tuple[float, float, float, float] = (4.0, 4.0, 1e-4, 1e-4)

    def __post_init__(self) -> None:
        _check(len(self.variances) == 4, "invalid-dynamics", "Four variances are required.")
        for v in self.variances:
            _check(v >= 0, "invalid-dynamics", f"Variances must be non-negative, got {v}.")

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.variances, dtype=np.float64))

    @property
    def sigma_x(self) -> float:
        return float(self.sigma[0])

    @property
    def sigma_y(self) -> float:
        return float(self.sigma[1])


class ParticleSet:
    """Particle states ``[N, 4]`` with normalized weights. ``scores`` holds the
    classifier log-odds of the most recent weighing, if any."""

    def __init__(
        self,
        states: np.ndarray,
        weights: np.ndarray | None = None,
        scores: np.ndarray | None = None,
    ) -> None:
        states = np.array(states, dtype=np.float64)
        _check(
            states.ndim == 2 and states.shape[1] == 4 and states.shape[0] >= 1,
            "invalid-particles",
            f"Particle states must be [N, 4] with N >= 1, got {states.shape}.",
        )
        n = states.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        weights = np.asarray(weights, dtype=np.float64)
        _check(weights.shape == (n,), "invalid-particles", "One weight per particle.")
        _check(bool(np.all(weights >= 0)), "invalid-particles", "Weights must be non-negative.")
        self.states = states
        self.weights = weights
        self.scores = None if scores is None else np.asarray(scores, dtype=np.float64)

    @classmethod
    def around(cls, state: AffineState, n: int) -> ParticleSet:
        """``n`` copies of ``state`` with uniform weights."""
        _check(n >= 1, "invalid-particles", "At least one particle is required.")
        return cls(np.tile(state.as_array(), (n, 1)))

    def __len__(self) -> int:
        return int(self.states.shape[0])

    def state(self, i: int) -> AffineState:
        return AffineState.from_array(self.states[i])


def propagate(particles: ParticleSet, dynamics: DynamicModel, rng: SeedLike) -> ParticleSet:
    """Perturb every state element with independent Gaussian noise. Weights are kept."""
    gen = as_generator(rng)
    noise = gen.standard_normal(particles.states.shape) * dynamics.sigma
    states = particles.states + noise
    np.clip(states[:, 2:], SCALE_RANGE[0], SCALE_RANGE[1], out=states[:, 2:])
    return ParticleSet(states, particles.weights)


def _pixels(frame: Frame | np.ndarray) -> np.ndarray:
    return frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)


def crop_states(frame: Frame | np.ndarray, states: np.ndarray) -> np.ndarray:
    """Templates ``[n, 32, 32]`` for an ``[n, 4]`` array of states."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    width = states[:, 2] * TEMPLATE_EDGE
    height = width * states[:, 3]
    return _image.crop_boxes(
        _pixels(frame), states[:, 0], states[:, 1], width, height, TEMPLATE_EDGE
    )


def crop_and_warp(frame: Frame | np.ndarray, state: AffineState) -> np.ndarray:
    """Bilinearly resample the state's box into a ``32 x 32`` template. Pixels outside of
    the frame read as zero."""
    return crop_states(frame, state.as_array())[0]


def reweight(particles: ParticleSet, scores: np.ndarray) -> ParticleSet:
    """``w_i ~ w_i * exp(scores_i)``, normalized."""
    scores = np.asarray(scores, dtype=np.float64)
    _check(scores.shape == (len(particles),), "dimension-mismatch", "One score per particle.")
    _check_finite(scores, "scores")
    with np.errstate(divide="ignore"):
        logw = np.log(particles.weights) + scores
    logw -= np.max(logw)
    w = np.exp(logw)
    return ParticleSet(particles.states, w / np.sum(w), scores)


def weigh(
    particles: ParticleSet,
    frame: Frame | np.ndarray,
    model: StackedModel,
    classifier: Classifier,
) -> ParticleSet:
    """Score every particle's template with the classifier's log-odds and reweight, so
    each weight is multiplied by the odds ``p / (1 - p)`` of its template. Chunks of
    particles are scored in parallel; the result does not depend on the thread count."""
    n = len(particles)
    bounds = [(i, min(i + SCORE_CHUNK, n)) for i in range(0, n, SCORE_CHUNK)]

    def score(bound: tuple[int, int]) -> np.ndarray:
        lo, hi = bound
        Z = model.featurize(crop_states(frame, particles.states[lo:hi]))
        return classifier.log_odds(Z)

    scores = np.concatenate(parallel_map(score, bounds))
    return reweight(particles, scores)


def resample(particles: ParticleSet, rng: SeedLike) -> ParticleSet:
    """Systematic resampling. Offspring counts differ from ``N w_i`` by less than one and
    the output weights are uniform."""
    gen = as_generator(rng)
    n = len(particles)
    positions = (gen.uniform() + np.arange(n)) / n
    cumulative = np.cumsum(particles.weights)
    cumulative /= cumulative[-1]
    idx = np.searchsorted(cumulative, positions, side="right")
    np.clip(idx, 0, n - 1, out=idx)
    return ParticleSet(particles.states[idx])


def estimate(particles: ParticleSet, scores: np.ndarray | None = None) -> AffineState:
    """State of the particle with the highest score, the lowest index on ties."""
    if scores is None:
        scores = particles.scores
    if scores is None:
        raise InvalidInputError("missing-scores", "Particles have not been weighed.")
    scores = np.asarray(scores)
    _check(scores.shape == (len(particles),), "dimension-mismatch", "One score per particle.")
    return particles.state(int(np.argmax(scores)))
