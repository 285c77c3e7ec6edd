# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Observational Model
===================

Online sample collection, the retained training set, the class-weighted logistic
regression classifier and the retraining schedule.

Positive and negative samples are kept per frame. Samples of the first ``F_es`` frames
are retained permanently; later frames are kept in sliding windows of ``F_r+`` frames
(positives) and ``F_r-`` frames (negatives).

"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator

import numpy as np

from .dataset import Frame
from .kernels import logistic as _logistic
from .kernels.codec import Reader, Writer
from .kernels.image import STD_EPS
from .kernels.lib import (
    InvalidInputError,
    InvalidStateError,
    _check,
    _check_dim,
    _check_finite,
    _check_non_negative,
    _check_positive,
)
from .pfilter import AffineState, crop_states
from .stack import TEMPLATE_EDGE
from .utils import SeedLike, as_generator

__all__ = [
    "Sample",
    "TrainingSet",
    "Classifier",
    "UpdateSchedule",
    "NegativeSampling",
    "Featurizer",
    "jitter_offsets",
    "first_frame_positives",
    "negative_offsets",
    "annular_offsets",
    "proportional_offsets",
    "collect_negatives",
    "update_training_set",
    "train_classifier",
    "predict",
    "should_retrain",
]

_logger = logging.getLogger(__name__)

Featurizer = Callable[[np.ndarray], np.ndarray]
"""Maps a batch of ``[n, 32, 32]`` observations to ``[n, r]`` representations."""


@dataclass(frozen=True, eq=False)
class Sample:
    z: np.ndarray
    label: int
    frame: int

    def __post_init__(self) -> None:
        _check(self.label in (1, -1), "invalid-label", f"Label must be +1 or -1, got {self.label}.")


class TrainingSet:
    """Frame-indexed positive and negative samples.

    Parameters
    ----------
    F_es :
        Number of early frames whose samples are never evicted.
    F_rp :
        Sliding window of recent frames with retained positives.
    F_rn :
        Sliding window of recent frames with retained negatives.
    N_ns :
        Negatives collected per frame.

    """

    def __init__(self, F_es: int = 15, F_rp: int = 55, F_rn: int = 15, N_ns: int = 25) -> None:
        for name, value in (("F_es", F_es), ("F_rp", F_rp), ("F_rn", F_rn), ("N_ns", N_ns)):
            _check(value >= 1, f"invalid-{name}", f"`{name}` must be at least 1, got {value}.")
        self.F_es = F_es
        self.F_rp = F_rp
        self.F_rn = F_rn
        self.N_ns = N_ns
        self.positives: dict[int, np.ndarray] = {}
        self.negatives: dict[int, np.ndarray] = {}
        self.t = 0

    def add(self, frame: int, positives: np.ndarray, negatives: np.ndarray) -> None:
        """Store the samples of ``frame``, replacing any previous ones."""
        _check(frame >= 1, "invalid-frame", f"Frames are 1-based, got {frame}.")
        pos = np.atleast_2d(np.asarray(positives, dtype=np.float64))
        neg = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
        if self.positives or self.negatives:
            _check_dim(pos, self.dim, "positives")
            _check_dim(neg, self.dim, "negatives")
        _check_dim(neg, pos.shape[1], "negatives")
        self.positives[frame] = pos
        self.negatives[frame] = neg
        self.t = max(self.t, frame)

    def evict(self, t: int) -> None:
        """Drop frames ``f`` with ``F_es < f <= t - F_r`` for each class."""
        self.positives = {f: v for f, v in self.positives.items() if f <= self.F_es or f > t - self.F_rp}
        self.negatives = {f: v for f, v in self.negatives.items() if f <= self.F_es or f > t - self.F_rn}

    @property
    def dim(self) -> int:
        for store in (self.positives, self.negatives):
            for v in store.values():
                return int(v.shape[1])
        return 0

    def positive_frames(self) -> list[int]:
        return sorted(self.positives)

    def negative_frames(self) -> list[int]:
        return sorted(self.negatives)

    @property
    def n_positives(self) -> int:
        return sum(v.shape[0] for v in self.positives.values())

    @property
    def n_negatives(self) -> int:
        return sum(v.shape[0] for v in self.negatives.values())

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Features ``[n, r]`` and labels, positives first, both in frame order."""
        pos = [self.positives[f] for f in self.positive_frames()]
        neg = [self.negatives[f] for f in self.negative_frames()]
        n_pos = sum(p.shape[0] for p in pos)
        n_neg = sum(p.shape[0] for p in neg)
        if n_pos + n_neg == 0:
            return np.zeros((0, 0)), np.zeros(0)
        Z = np.concatenate(pos + neg, axis=0)
        y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
        return Z, y

    def __iter__(self) -> Iterator[Sample]:
        for label, store in ((1, self.positives), (-1, self.negatives)):
            for f in sorted(store):
                for z in store[f]:
                    yield Sample(z, label, f)

    def expected_frames(self, t: int) -> tuple[list[int], list[int]]:
        """Frames each class should hold after inserting frame ``t``."""
        early = list(range(1, min(t, self.F_es) + 1))
        pos = early + list(range(max(self.F_es + 1, t - self.F_rp + 1), t + 1))
        neg = early + list(range(max(self.F_es + 1, t - self.F_rn + 1), t + 1))
        return pos, neg

    def check_invariants(self) -> None:
        """Raise :py:class:`~slowtrack.kernels.lib.InvalidStateError` when the retained
        frames differ from the window equations."""
        pos, neg = self.expected_frames(self.t)
        if self.positive_frames() != pos or self.negative_frames() != neg:
            raise InvalidStateError(
                "training-set-corrupted",
                f"Retained frames at t={self.t} differ from the retention windows.",
            )
        for f, v in self.negatives.items():
            if f > 1 and v.shape[0] != self.N_ns:
                raise InvalidStateError(
                    "training-set-corrupted",
                    f"Frame {f} holds {v.shape[0]} negatives, expecting {self.N_ns}.",
                )

    def write(self, writer: Writer) -> None:
        writer.u32(self.F_es, self.F_rp, self.F_rn, self.N_ns, self.t, self.dim)
        for store in (self.positives, self.negatives):
            writer.u32(len(store))
            for f in sorted(store):
                writer.u32(f, store[f].shape[0]).array(store[f])

    @classmethod
    def read(cls, reader: Reader) -> TrainingSet:
        F_es, F_rp, F_rn, N_ns, t, dim = (reader.u32() for _ in range(6))
        out = cls(F_es, F_rp, F_rn, N_ns)
        out.t = t
        for store in (out.positives, out.negatives):
            for _ in range(reader.u32()):
                f, n = reader.u32(), reader.u32()
                store[f] = reader.array((n, dim))
        return out


class Classifier:
    """Linear logistic classifier over standardized features.

    Parameters
    ----------
    w :
        Weight vector.
    lam :
        L2 weight decay it was trained with.
    mean, std :
        Per-dimension standardization statistics of the training set.
    trained_at :
        Frame index of the training.

    """

    def __init__(
        self,
        w: np.ndarray,
        lam: float,
        mean: np.ndarray | None = None,
        std: np.ndarray | None = None,
        trained_at: int = 1,
    ) -> None:
        self.w = np.asarray(w, dtype=np.float64)
        _check_finite(self.w, "w")
        r = self.w.shape[0]
        self.lam = float(lam)
        self.mean = np.zeros(r) if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = np.ones(r) if std is None else np.asarray(std, dtype=np.float64)
        self.trained_at = int(trained_at)

    @property
    def dim(self) -> int:
        return int(self.w.shape[0])

    def transform(self, Z: np.ndarray) -> np.ndarray:
        return (np.asarray(Z, dtype=np.float64) - self.mean) / self.std

    def log_odds(self, Z: np.ndarray) -> np.ndarray:
        """Margin ``w^T z`` of each standardized row of ``Z``, the logit of :py:meth:`predict`."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        _check_dim(Z, self.dim, "z")
        return _logistic.log_odds(self.w, self.transform(Z))

    def predict(self, Z: np.ndarray) -> np.ndarray:
        """Probability of the positive class for each row of ``Z``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        _check_dim(Z, self.dim, "z")
        return _logistic.predict_proba(self.w, self.transform(Z))

    def write(self, writer: Writer) -> None:
        writer.u32(self.dim, self.trained_at).f64(self.lam)
        writer.array(self.w).array(self.mean).array(self.std)

    @classmethod
    def read(cls, reader: Reader) -> Classifier:
        r, trained_at = reader.u32(), reader.u32()
        lam = reader.f64()
        w, mean, std = (reader.array((r,)) for _ in range(3))
        return cls(w, lam, mean, std, trained_at)


@dataclass(frozen=True)
class UpdateSchedule:
    """Classifier update schedule.

    Parameters
    ----------
    F_f :
        Check period, in frames, of the confidence test.
    F_et :
        Early frames in which any low confidence triggers retraining.
    F_s :
        Frames after which retraining is forced.
    upsilon :
        Probability threshold of the confidence test.

    """

    F_f: int = 5
    F_et: int = 10
    F_s: int = 25
    upsilon: float = 0.99

    def __post_init__(self) -> None:
        for name in ("F_f", "F_et", "F_s"):
            value = getattr(self, name)
            _check(value >= 1, f"invalid-{name}", f"`{name}` must be at least 1, got {value}.")
        _check(self.F_s > self.F_f, "invalid-F_s", "`F_s` must exceed `F_f`.")
        _check(0.0 < self.upsilon < 1.0, "invalid-upsilon", "`upsilon` must lie in (0, 1).")


class NegativeSampling(Enum):
    """Placement of negative samples around the target."""

    MOTION = "motion"
    """Offsets from the dynamic model, pushed away from the target by a fixed fraction of
    its size."""
    ANNULAR = "annular"
    """Uniform over an annulus around the target."""
    PROPORTIONAL = "proportional"
    """Gaussian offsets proportional to the target size."""


def jitter_offsets(v: int, count: int, rng: SeedLike) -> np.ndarray:
    """Integer offsets ``[count, 2]`` drawn uniformly from ``[-v, v]^2``."""
    _check_non_negative(v, "v")
    _check(count >= 1, "invalid-count", f"Sample count must be at least 1, got {count}.")
    return as_generator(rng).integers(-v, v + 1, size=(count, 2))


def _clamp_centers(
    cx: np.ndarray, cy: np.ndarray, w: float, h: float, shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Move box centers so that the boxes lie inside the image where they fit."""
    height, width = shape
    lo_x, hi_x = (w / 2.0, width - w / 2.0) if w <= width else (width / 2.0, width / 2.0)
    lo_y, hi_y = (h / 2.0, height - h / 2.0) if h <= height else (height / 2.0, height / 2.0)
    x = np.clip(cx, lo_x, hi_x)
    y = np.clip(cy, lo_y, hi_y)
    moved = bool(np.any(x != cx) or np.any(y != cy))
    return x, y, moved


def _crops(
    frame: Frame | np.ndarray, target: AffineState, offsets: np.ndarray, warn: bool
) -> np.ndarray:
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    cx = target.x + offsets[:, 0]
    cy = target.y + offsets[:, 1]
    cx, cy, moved = _clamp_centers(cx, cy, target.width, target.height, pixels.shape)
    if moved and warn:
        _logger.warning("Sample windows outside of the frame were clamped to the image.")
    n = offsets.shape[0]
    states = np.column_stack([cx, cy, np.full(n, target.scale), np.full(n, target.aspect)])
    return crop_states(pixels, states)


def first_frame_positives(
    target: AffineState,
    v: int,
    count: int,
    rng: SeedLike,
    frame: Frame | np.ndarray,
    featurize: Featurizer,
) -> np.ndarray:
    """Positive representations ``[count, r]`` cropped at small integer translations of
    the target."""
    offsets = jitter_offsets(v, count, rng).astype(np.float64)
    return featurize(_crops(frame, target, offsets, warn=True))


def negative_offsets(
    size: tuple[float, float],
    sigma: tuple[float, float],
    varphi: float,
    eta: float,
    count: int,
    rng: SeedLike,
) -> tuple[np.ndarray, np.ndarray]:
    """Motion-driven negative offsets ``S_j varphi sgn(r_j) + r_j`` with
    ``r_j ~ N(0, (eta sigma_j)^2)``.

    Returns
    -------
    The offsets and the draws ``r``, both ``[count, 2]`` in ``(x, y)`` order.

    """
    _check(count >= 1, "invalid-count", f"Sample count must be at least 1, got {count}.")
    _check_positive(eta, "eta")
    _check_non_negative(varphi, "varphi")
    for s in sigma:
        _check_positive(s, "sigma")
    gen = as_generator(rng)
    scale = eta * np.asarray(sigma, dtype=np.float64)
    r = gen.standard_normal((count, 2)) * scale
    offsets = np.asarray(size, dtype=np.float64) * varphi * np.sign(r) + r
    return offsets, r


def annular_offsets(
    size: tuple[float, float], outer: float, count: int, rng: SeedLike
) -> np.ndarray:
    """Offsets uniform in angle with a radius uniform between the radius of the circle
    enclosing the target and ``outer``."""
    gen = as_generator(rng)
    inner = 0.5 * float(np.hypot(*size))
    outer = max(outer, inner)
    angle = gen.uniform(0.0, 2.0 * np.pi, size=count)
    radius = gen.uniform(inner, outer, size=count)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def proportional_offsets(
    size: tuple[float, float], c: float, count: int, rng: SeedLike
) -> np.ndarray:
    """Offsets ``N(0, (c S_j)^2)`` on each axis."""
    _check_positive(c, "proportional_sigma")
    gen = as_generator(rng)
    return gen.standard_normal((count, 2)) * (c * np.asarray(size, dtype=np.float64))


def collect_negatives(
    target: AffineState,
    sigma_x: float,
    sigma_y: float,
    varphi: float,
    eta: float,
    count: int,
    rng: SeedLike,
    frame: Frame | np.ndarray,
    featurize: Featurizer,
    *,
    strategy: NegativeSampling = NegativeSampling.MOTION,
    annulus_outer: float = 2.0 * TEMPLATE_EDGE,
    proportional_sigma: float = 0.5,
) -> np.ndarray:
    """Negative representations ``[count, r]`` cropped around the target at its size.
    Locations are clamped to the image."""
    size = (target.width, target.height)
    if strategy == NegativeSampling.MOTION:
        offsets, _ = negative_offsets(size, (sigma_x, sigma_y), varphi, eta, count, rng)
    elif strategy == NegativeSampling.ANNULAR:
        offsets = annular_offsets(size, annulus_outer, count, rng)
    elif strategy == NegativeSampling.PROPORTIONAL:
        offsets = proportional_offsets(size, proportional_sigma, count, rng)
    else:
        raise InvalidInputError("invalid-strategy", f"Unknown strategy {strategy!r}.")
    return featurize(_crops(frame, target, offsets, warn=False))


def update_training_set(
    training_set: TrainingSet, t: int, positives: np.ndarray, negatives: np.ndarray
) -> TrainingSet:
    """Store the samples of frame ``t`` and evict frames that left the retention
    windows. The set is modified in place and returned."""
    _check(t >= 2, "invalid-frame", f"Updates start at frame 2, got {t}.")
    training_set.add(t, positives, negatives)
    training_set.evict(t)
    return training_set


def train_classifier(
    training_set: TrainingSet,
    lam: float,
    *,
    standardize: bool = True,
    trained_at: int | None = None,
    gtol: float = 1e-6,
) -> Classifier:
    """Fit the class-weighted logistic regression on the whole training set.

    Parameters
    ----------
    lam :
        L2 weight decay.
    standardize :
        Standardize features with the training-set statistics first.

    """
    Z, y = training_set.arrays()
    weights = _logistic.class_weights(y)
    if standardize:
        mean = Z.mean(axis=0)
        std = Z.std(axis=0) + STD_EPS
    else:
        mean = np.zeros(Z.shape[1])
        std = np.ones(Z.shape[1])
    w = _logistic.fit((Z - mean) / std, y, weights, lam, gtol=gtol)
    at = training_set.t if trained_at is None else trained_at
    _logger.debug(
        "Classifier trained at frame %d on %d positives and %d negatives",
        at, training_set.n_positives, training_set.n_negatives,
    )
    return Classifier(w, lam, mean, std, at)


def predict(classifier: Classifier, z: np.ndarray) -> float:
    """Confidence ``1 / (1 + exp(-w^T z))`` of one representation."""
    return float(classifier.predict(z)[0])


def should_retrain(
    schedule: UpdateSchedule, t: int, frames_since_update: int, max_prob: float
) -> bool:
    """Whether the classifier must be retrained after frame ``t``."""
    low = max_prob < schedule.upsilon
    return (
        (low and frames_since_update == schedule.F_f)
        or (low and t <= schedule.F_et)
        or frames_since_update == schedule.F_s
    )
