# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Tracker
=======

The full tracking loop. Each frame the particles are propagated, weighed by the
classifier log-odds and the best particle is reported. New samples are collected
around the estimate, the training set is updated and the classifier is retrained when the schedule
asks for it. Particles are resampled last.

The run owns a single random generator consumed in a fixed order (propagation,
negative sampling, resampling), so a run is fully determined by its seed.

.. code-block:: python

    from slowtrack import stack, slowae, tracker

    model = stack.StackedModel(
        slowae.load_weights("layer1.slwt"), slowae.load_weights("layer2.slwt")
    )
    result = tracker.run("~/videos/car", (120, 64, 40, 30), tracker.TrackerConfig(), model)
    result.write_csv("car/track.csv")

"""

from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from PIL import Image, ImageDraw
from scipy import special

from .dataset import Frame, load_sequence
from .kernels.codec import Reader, Writer
from .kernels.lib import FormatError, InvalidInputError, _check
from .obsmodel import (
    Classifier,
    NegativeSampling,
    TrainingSet,
    UpdateSchedule,
    collect_negatives,
    first_frame_positives,
    should_retrain,
    train_classifier,
    update_training_set,
)
from .pfilter import (
    AffineState,
    DynamicModel,
    ParticleSet,
    crop_and_warp,
    estimate,
    propagate,
    resample,
    weigh,
)
from .slowae import OptimizerConfig, SlowCostConfig
from .stack import TEMPLATE_EDGE, StackedModel
from .utils import SeedLike, as_generator

__all__ = [
    "TrackerConfig",
    "TrackerState",
    "FrameRecord",
    "TrackResult",
    "initialize",
    "step",
    "run",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]

_logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SLCK"
CHECKPOINT_VERSION = 1
TRACK_COLUMNS = ("frame", "x", "y", "w", "h", "scale", "aspect", "max_prob", "retrained")
_U64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class TrackerConfig:
    """Every hyperparameter of feature learning and tracking."""

    # layer geometry
    edge1: int = 8
    edge2: int = 14
    k1: int = 6
    k2: int = 2
    p1: int = 64
    p2: int = 128
    # feature learning
    alpha: tuple[float, float] = (100.0, 300.0)
    gamma: tuple[float, float] = (20.0, 20.0)
    input_scale: tuple[float, float] = (10.0, 10.0)
    n_sessions: int = 15000
    n_frames: int = 5
    max_iter: int = 200
    # sample collection
    v: int = 1
    eta: float = 2.0
    varphi: float = 0.25
    n_first_positives: int = 10
    negative_sampling: NegativeSampling = NegativeSampling.MOTION
    annulus_outer: float = 2.0 * TEMPLATE_EDGE
    proportional_sigma: float = 0.5
    # retention
    F_es: int = 15
    F_rp: int = 55
    F_rn: int = 15
    N_ns: int = 25
    # retraining schedule
    F_f: int = 5
    F_et: int = 10
    F_s: int = 25
    upsilon: float = 0.99
    lam: float = 1e-4
    # particle filter
    n_particles: int = 1000
    variances: tuple[float, float, float, float] = (4.0, 4.0, 1e-4, 1e-4)
    # Verify the training-set retention windows after every frame.
    debug: bool = False

    def __post_init__(self) -> None:
        for name in (
            "edge1", "edge2", "k1", "k2", "p1", "p2", "n_sessions", "n_frames",
            "n_first_positives", "F_es", "F_rp", "F_rn", "N_ns", "n_particles",
        ):
            value = getattr(self, name)
            _check(value >= 1, f"invalid-{name}", f"`{name}` must be at least 1, got {value}.")
        _check(self.v >= 0, "invalid-v", "`v` must be non-negative.")
        _check(self.max_iter >= 0, "invalid-max_iter", "`max_iter` must be non-negative.")
        _check(self.lam >= 0, "invalid-lam", "`lam` must be non-negative.")
        _check(self.eta > 0, "invalid-eta", "`eta` must be positive.")
        _check(
            len(self.alpha) == len(self.gamma) == len(self.input_scale) == 2,
            "invalid-penalty",
            "One value per layer.",
        )
        # Constructing these validates them.
        self.schedule
        self.dynamics
        for layer in (1, 2):
            self.cost_config(layer)

    @property
    def schedule(self) -> UpdateSchedule:
        return UpdateSchedule(self.F_f, self.F_et, self.F_s, self.upsilon)

    @property
    def dynamics(self) -> DynamicModel:
        return DynamicModel(tuple(self.variances))

    @property
    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(max_iter=self.max_iter)

    def cost_config(self, layer: int) -> SlowCostConfig:
        i = layer - 1
        return SlowCostConfig(
            alpha=self.alpha[i], gamma=self.gamma[i], input_scale=self.input_scale[i]
        )

    def training_set(self) -> TrainingSet:
        return TrainingSet(self.F_es, self.F_rp, self.F_rn, self.N_ns)


@dataclass
class TrackerState:
    """Mutable state of a tracking run."""

    config: TrackerConfig
    model: StackedModel
    particles: ParticleSet
    training_set: TrainingSet
    classifier: Classifier
    rng: np.random.Generator
    estimate: AffineState
    t: int = 1
    frames_since_update: int = 0
    max_prob: float = 1.0
    retrained: bool = True

    def __getstate__(self) -> dict[str, Any]:
        return {"config": self.config, "model": self.model, "checkpoint": encode_checkpoint(self)}

    def __setstate__(self, state: dict[str, Any]) -> None:
        other = decode_checkpoint(state["checkpoint"], state["config"], state["model"])
        self.__dict__.update(other.__dict__)


@dataclass(frozen=True)
class FrameRecord:
    index: int
    state: AffineState
    max_prob: float
    retrained: bool
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class TrackResult:
    """One record per processed frame."""

    records: list[FrameRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def states(self) -> list[AffineState]:
        return [r.state for r in self.records]

    def boxes(self) -> np.ndarray:
        """Top-left ``(x, y, w, h)`` boxes, ``[T, 4]``."""
        return np.array([r.state.to_box() for r in self.records], dtype=np.float64).reshape(-1, 4)

    def write_csv(self, path: os.PathLike | str) -> None:
        """Write the trajectory. Timing is excluded, see :py:meth:`write_timing`."""
        with open(os.path.expanduser(path), "w", newline="") as fd:
            writer = csv.writer(fd, lineterminator="\n")
            writer.writerow(TRACK_COLUMNS)
            for r in self.records:
                x, y, w, h = r.state.to_box()
                writer.writerow(
                    [r.index]
                    + [f"{v:.6f}" for v in (x, y, w, h, r.state.scale, r.state.aspect)]
                    + [f"{r.max_prob:.9f}", int(r.retrained)]
                )

    def write_timing(self, path: os.PathLike | str) -> None:
        with open(os.path.expanduser(path), "w", newline="") as fd:
            writer = csv.writer(fd, lineterminator="\n")
            writer.writerow(("frame", "wall_time"))
            for r in self.records:
                writer.writerow((r.index, f"{r.wall_time:.6f}"))


def _pixels(frame: Frame | np.ndarray) -> np.ndarray:
    return frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)


def initialize(
    frame1: Frame | np.ndarray,
    init_box: Sequence[float],
    config: TrackerConfig,
    model: StackedModel,
    rng: SeedLike = 42,
) -> TrackerState:
    """Train the initial classifier on jittered positives and negatives of the first
    frame and seed the particles at the initial box.

    Parameters
    ----------
    init_box :
        Top-left ``(x, y, w, h)`` box, entirely inside the frame.

    """
    gen = as_generator(rng)
    pixels = _pixels(frame1)
    target = AffineState.from_box(*init_box)
    height, width = pixels.shape
    x, y, w, h = init_box
    if not (0 <= x and 0 <= y and x + w <= width and y + h <= height):
        raise InvalidInputError(
            "box-outside-frame",
            f"Initial box {tuple(init_box)} does not fit in the {width}x{height} frame.",
        )
    positives = first_frame_positives(
        target, config.v, config.n_first_positives, gen, pixels, model.featurize
    )
    negatives = _negatives(target, config, gen, pixels, model)
    training_set = config.training_set()
    training_set.add(1, positives, negatives)
    classifier = train_classifier(training_set, config.lam, trained_at=1)
    max_prob = float(classifier.predict(positives[:1])[0])
    _logger.info(
        "Tracker initialized at %s with %d features, initial confidence %.4f",
        tuple(init_box), model.n_features, max_prob,
    )
    return TrackerState(
        config=config,
        model=model,
        particles=ParticleSet.around(target, config.n_particles),
        training_set=training_set,
        classifier=classifier,
        rng=gen,
        estimate=target,
        max_prob=max_prob,
    )


def _negatives(
    target: AffineState,
    config: TrackerConfig,
    gen: np.random.Generator,
    pixels: np.ndarray,
    model: StackedModel,
) -> np.ndarray:
    dynamics = config.dynamics
    return collect_negatives(
        target,
        max(dynamics.sigma_x, 1e-12),
        max(dynamics.sigma_y, 1e-12),
        config.varphi,
        config.eta,
        config.N_ns,
        gen,
        pixels,
        model.featurize,
        strategy=config.negative_sampling,
        annulus_outer=config.annulus_outer,
        proportional_sigma=config.proportional_sigma,
    )


def step(state: TrackerState, frame: Frame | np.ndarray) -> tuple[TrackerState, AffineState]:
    """Process the next frame. ``state`` is updated in place and returned together with
    the estimated target state."""
    config, model = state.config, state.model
    pixels = _pixels(frame)
    t = state.t + 1

    particles = propagate(state.particles, config.dynamics, state.rng)
    particles = weigh(particles, pixels, model, state.classifier)
    assert particles.scores is not None
    target = estimate(particles)
    max_prob = float(special.expit(np.max(particles.scores)))

    positive = model.featurize(crop_and_warp(pixels, target)[np.newaxis])
    negatives = _negatives(target, config, state.rng, pixels, model)
    update_training_set(state.training_set, t, positive, negatives)

    state.frames_since_update += 1
    retrained = should_retrain(config.schedule, t, state.frames_since_update, max_prob)
    if retrained:
        state.classifier = train_classifier(state.training_set, config.lam, trained_at=t)
        state.frames_since_update = 0
    state.particles = resample(particles, state.rng)

    if config.debug:
        state.training_set.check_invariants()
    state.t = t
    state.estimate = target
    state.max_prob = max_prob
    state.retrained = retrained
    return state, target


def _overlay(pixels: np.ndarray, target: AffineState, path: Path) -> None:
    gray = np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    img = Image.fromarray(gray).convert("RGB")
    x, y, w, h = target.to_box()
    ImageDraw.Draw(img).rectangle([x, y, x + w - 1, y + h - 1], outline=(255, 0, 0))
    img.save(path)


def run(
    sequence: os.PathLike | str | Sequence[Frame],
    init_box: Sequence[float],
    config: TrackerConfig,
    model: StackedModel,
    *,
    seed: SeedLike = 42,
    overlay_dir: os.PathLike | str | None = None,
) -> TrackResult:
    """Track a target through a whole sequence.

    Parameters
    ----------
    sequence :
        Directory of frames (see :py:func:`~slowtrack.dataset.load_sequence`) or loaded
        frames.
    init_box :
        Top-left ``(x, y, w, h)`` box in the first frame.
    overlay_dir :
        When given, every frame is written as ``frame_{index:05}.png`` with the estimated
        box drawn.

    """
    if isinstance(sequence, (str, os.PathLike)):
        frames = load_sequence(sequence)
    else:
        frames = list(sequence)
    _check(len(frames) >= 1, "empty-sequence", "No frames to track.")
    out = None
    if overlay_dir is not None:
        out = Path(os.path.expanduser(overlay_dir))
        out.mkdir(parents=True, exist_ok=True)

    result = TrackResult()
    start = time.perf_counter()
    state = initialize(frames[0], init_box, config, model, seed)
    result.records.append(
        FrameRecord(1, state.estimate, state.max_prob, True, time.perf_counter() - start)
    )
    if out is not None:
        _overlay(_pixels(frames[0]), state.estimate, out / f"frame_{1:05}.png")

    for i, frame in enumerate(frames[1:], start=2):
        start = time.perf_counter()
        state, target = step(state, frame)
        elapsed = time.perf_counter() - start
        result.records.append(FrameRecord(i, target, state.max_prob, state.retrained, elapsed))
        if out is not None:
            _overlay(_pixels(frame), target, out / f"frame_{i:05}.png")
        if i % 10 == 0 or i == len(frames):
            _logger.info(
                "frame %d/%d: center (%.1f, %.1f), max prob %.4f",
                i, len(frames), target.x, target.y, state.max_prob,
            )
    return result


def encode_checkpoint(state: TrackerState) -> bytes:
    """Serialize the dynamic part of a tracking run. The configuration and the model
    are not included."""
    bitgen = state.rng.bit_generator
    rng_state = bitgen.state
    if rng_state.get("bit_generator") != "PCG64":
        raise InvalidInputError(
            "unsupported-rng", f"Only PCG64 generators can be saved, got {type(bitgen).__name__}."
        )
    inner = rng_state["state"]
    writer = Writer(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    writer.u32(state.t, state.frames_since_update, int(state.retrained))
    writer.f64(state.max_prob).array(state.estimate.as_array())
    for v in (inner["state"], inner["inc"]):
        writer.u64(v >> 64, v & _U64_MASK)
    writer.u32(rng_state["has_uint32"], rng_state["uinteger"])
    writer.u32(len(state.particles)).array(state.particles.states).array(state.particles.weights)
    state.training_set.write(writer)
    state.classifier.write(writer)
    return writer.getvalue()


def decode_checkpoint(buf: bytes, config: TrackerConfig, model: StackedModel) -> TrackerState:
    reader = Reader(buf, CHECKPOINT_MAGIC, (CHECKPOINT_VERSION,))
    t, since, retrained = reader.u32(), reader.u32(), reader.u32()
    max_prob = reader.f64()
    target = AffineState.from_array(reader.array((4,)))
    words = [reader.u64() for _ in range(4)]
    has_uint32, uinteger = reader.u32(), reader.u32()
    n = reader.u32()
    particles = ParticleSet(reader.array((n, 4)), reader.array((n,)))
    training_set = TrainingSet.read(reader)
    classifier = Classifier.read(reader)
    reader.finish()
    if classifier.dim != model.n_features:
        raise FormatError(
            "checkpoint-model-mismatch",
            f"Checkpoint classifier has {classifier.dim} features, the model {model.n_features}.",
        )
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": (words[0] << 64) | words[1], "inc": (words[2] << 64) | words[3]},
        "has_uint32": has_uint32,
        "uinteger": uinteger,
    }
    return TrackerState(
        config=config,
        model=model,
        particles=particles,
        training_set=training_set,
        classifier=classifier,
        rng=rng,
        estimate=target,
        t=t,
        frames_since_update=since,
        max_prob=max_prob,
        retrained=bool(retrained),
    )


def save_checkpoint(state: TrackerState, path: os.PathLike | str) -> None:
    Path(os.path.expanduser(path)).write_bytes(encode_checkpoint(state))


def load_checkpoint(path: os.PathLike | str, config: TrackerConfig, model: StackedModel) -> TrackerState:
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    return decode_checkpoint(p.read_bytes(), config, model)
