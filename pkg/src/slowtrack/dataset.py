# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Tracked Patch Datasets
======================

Ingests image sequences, finds regions with motion and emits fixed-size tracked patch
sessions for offline feature learning. Each :py:class:`TrackSession` is the unit over
which temporal slowness is enforced.

.. code-block:: python

    from slowtrack import dataset

    frames = dataset.load_sequence("~/videos/street")
    mask = dataset.accumulate_difference_mask(frames, threshold=0.1)
    sessions = dataset.sample_track_sessions(
        frames, mask, edge=8, n_sessions=500, n_frames=5, rng=42
    )
    dataset.export_sessions(sessions, "street.sltk")

"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .kernels import image as _image
from .kernels.codec import Reader, Writer
from .kernels.lib import FormatError, InvalidInputError, _check, _check_non_negative
from .utils import SeedLike, as_generator, base_seed, derived_generator, parallel_map

__all__ = [
    "Frame",
    "TrackSession",
    "InterestMask",
    "load_sequence",
    "accumulate_difference_mask",
    "sample_track_sessions",
    "generate_synthetic_sessions",
    "edge_patches",
    "standardize_sessions",
    "shuffle_sessions",
    "encode_sessions",
    "decode_sessions",
    "export_sessions",
    "import_sessions",
]

_logger = logging.getLogger(__name__)

SESSION_MAGIC = b"SLTK"
SESSION_VERSION = 1
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
# Attempts per session before giving up on a location that keeps producing flat patches.
_MAX_ATTEMPTS = 16


@dataclass(frozen=True, eq=False)
class Frame:
    """A grayscale frame with intensities in ``[0, 1]`` and a 1-based index."""

    pixels: np.ndarray
    index: int = 1

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.float64)
        _check(pixels.ndim == 2, "invalid-frame", f"Frame must be 2-D, got {pixels.shape}.")
        _check(
            bool(np.all((pixels >= 0.0) & (pixels <= 1.0))),
            "invalid-frame",
            "Frame intensities must lie in [0, 1].",
        )
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.pixels.shape[0]), int(self.pixels.shape[1]))


@dataclass(frozen=True, eq=False)
class TrackSession:
    """Ordered patches cropped from one tracked region.

    Parameters
    ----------
    patches :
        Array of shape ``[n_frames, edge, edge]`` for image sessions or
        ``[n_frames, d]`` for feature-space sessions (layer-2 training vectors).
    source_id :
        Opaque provenance tag.

    """

    patches: np.ndarray
    source_id: str = ""

    def __post_init__(self) -> None:
        patches = np.asarray(self.patches, dtype=np.float64)
        _check(
            patches.ndim == 2 or (patches.ndim == 3 and patches.shape[1] == patches.shape[2]),
            "invalid-session",
            f"Patches must be [n_frames, edge, edge] or [n_frames, d], got {patches.shape}.",
        )
        _check(
            patches.shape[0] >= 2,
            "invalid-session",
            "A session needs at least two frames.",
        )
        object.__setattr__(self, "patches", patches)

    @property
    def n_frames(self) -> int:
        return int(self.patches.shape[0])

    @property
    def edge(self) -> int:
        """Patch edge of an image session, 0 for feature-space sessions."""
        return int(self.patches.shape[1]) if self.patches.ndim == 3 else 0

    @property
    def dim(self) -> int:
        return int(np.prod(self.patches.shape[1:]))

    def flat(self) -> np.ndarray:
        """Row-major flattened patches, ``[n_frames, d]``."""
        return self.patches.reshape(self.n_frames, -1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrackSession):
            return NotImplemented
        return self.source_id == other.source_id and np.array_equal(
            self.patches, other.patches
        )

    def __hash__(self) -> int:
        return hash((self.source_id, self.patches.shape, self.patches.tobytes()))


@dataclass(frozen=True, eq=False)
class InterestMask:
    """Boolean grid of motion-interesting pixels, congruent with the source frames."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.bits.shape[0]), int(self.bits.shape[1]))

    def any(self) -> bool:
        return bool(self.bits.any())


def load_sequence(directory: os.PathLike | str) -> list[Frame]:
    """Load a directory of lexicographically ordered 8-bit PNG/JPEG images as grayscale
    frames."""
    path = Path(os.path.expanduser(directory))
    if not path.is_dir():
        raise FileNotFoundError(str(path))
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise InvalidInputError("empty-sequence", f"No images found in {path}.")
    frames = []
    for i, f in enumerate(files):
        with Image.open(f) as img:
            rgb = np.asarray(img.convert("RGB"))
        frames.append(Frame(_image.luma(rgb), index=i + 1))
    _check_congruent(frames)
    _logger.info("Loaded %d frames of size %s from %s", len(frames), frames[0].shape, path)
    return frames


def _check_congruent(frames: Sequence[Frame]) -> None:
    shape = frames[0].shape
    for f in frames:
        if f.shape != shape:
            raise InvalidInputError(
                "frame-size-mismatch",
                f"Frame {f.index} has size {f.shape}, expecting {shape}.",
            )


def accumulate_difference_mask(
    frames: Sequence[Frame], threshold: float = 0.1, min_component_area: int = 25
) -> InterestMask:
    """Binary-thresholded accumulative difference picture.

    The absolute differences of consecutive frames are summed per pixel and thresholded;
    4-connected components smaller than ``min_component_area`` pixels are removed.

    """
    _check(len(frames) >= 2, "too-few-frames", "At least two frames are required.")
    _check(0.0 < threshold < 1.0, "invalid-threshold", "Threshold must lie in (0, 1).")
    _check_congruent(frames)
    stack = np.stack([f.pixels for f in frames])
    accumulated = np.sum(np.abs(np.diff(stack, axis=0)), axis=0)
    bits = accumulated > threshold

    labels, n_components = ndimage.label(bits, structure=ndimage.generate_binary_structure(2, 1))
    if n_components > 0:
        areas = np.bincount(labels.ravel())
        small = areas < min_component_area
        small[0] = False
        bits[small[labels]] = False
    return InterestMask(bits)


def _window_hits(bits: np.ndarray, edge: int) -> np.ndarray:
    """Top-left positions whose ``edge x edge`` window covers at least one set bit."""
    integral = np.zeros((bits.shape[0] + 1, bits.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = np.cumsum(np.cumsum(bits, axis=0), axis=1)
    sums = (
        integral[edge:, edge:]
        - integral[:-edge, edge:]
        - integral[edge:, :-edge]
        + integral[:-edge, :-edge]
    )
    return np.argwhere(sums > 0)


def _match_motion(
    prev: np.ndarray, frame: np.ndarray, row: int, col: int, edge: int, radius: int
) -> tuple[int, int]:
    """Exhaustive sum-of-squared-differences search within ``radius`` pixels. Ties
    prefer the smallest displacement."""
    best: tuple[float, int, int, int] | None = None
    height, width = frame.shape
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            r, c = row + dr, col + dc
            if r < 0 or c < 0 or r + edge > height or c + edge > width:
                continue
            diff = frame[r : r + edge, c : c + edge] - prev
            key = (float(np.sum(diff * diff)), abs(dr) + abs(dc), r, c)
            if best is None or key[:2] < best[:2]:
                best = key
    assert best is not None
    return best[2], best[3]


def sample_track_sessions(
    frames: Sequence[Frame],
    mask: InterestMask,
    edge: int,
    n_sessions: int,
    n_frames: int,
    rng: SeedLike,
    *,
    search_radius: int = 2,
    source: str = "",
) -> list[TrackSession]:
    """Sample tracked patch sessions around motion.

    Each session starts at a uniformly drawn frame and a uniformly drawn location whose
    window overlaps the interest mask. The region is followed through the next
    ``n_frames - 1`` frames by exhaustive SSD matching within ``search_radius`` pixels.
    Patches are standardized; sessions containing a flat patch are redrawn.

    Returns
    -------
    Up to ``n_sessions`` sessions. An empty list (with a warning) if the mask has no
    reachable bit.

    """
    _check(len(frames) > 0, "too-few-frames", "No frames given.")
    _check_congruent(frames)
    height, width = frames[0].shape
    _check(
        mask.shape == (height, width),
        "mask-size-mismatch",
        f"Mask size {mask.shape} differs from frame size {(height, width)}.",
    )
    _check(
        0 < edge <= min(height, width),
        "invalid-edge",
        f"Patch edge {edge} does not fit in frames of size {(height, width)}.",
    )
    _check(
        2 <= n_frames <= len(frames),
        "invalid-n-frames",
        f"Frames per session must lie in [2, {len(frames)}], got {n_frames}.",
    )
    _check_non_negative(n_sessions, "n_sessions")
    if n_sessions == 0:
        return []
    candidates = _window_hits(mask.bits, edge)
    if candidates.shape[0] == 0:
        _logger.warning("Interest mask has no reachable bit, no session sampled.")
        return []

    stack = np.stack([f.pixels for f in frames])
    seed = base_seed(rng)
    n_starts = len(frames) - n_frames + 1

    def one(i: int) -> TrackSession | None:
        gen = derived_generator(seed, i)
        for _ in range(_MAX_ATTEMPTS):
            start = int(gen.integers(0, n_starts))
            row, col = (int(v) for v in candidates[int(gen.integers(0, candidates.shape[0]))])
            origin = (row, col)
            patches = [stack[start, row : row + edge, col : col + edge]]
            for f in range(1, n_frames):
                row, col = _match_motion(
                    patches[-1], stack[start + f], row, col, edge, search_radius
                )
                patches.append(stack[start + f, row : row + edge, col : col + edge])
            raw = np.stack(patches).reshape(n_frames, -1)
            if np.any(_image.is_flat(raw)):
                continue
            return TrackSession(
                _image.standardize(raw).reshape(n_frames, edge, edge),
                source_id=f"{source}@{start + 1}:{origin[0]},{origin[1]}",
            )
        return None

    sessions = [s for s in parallel_map(one, list(range(n_sessions))) if s is not None]
    if len(sessions) < n_sessions:
        _logger.warning(
            "Only %d of %d sessions sampled, the rest kept hitting flat patches.",
            len(sessions),
            n_sessions,
        )
    return sessions


def generate_synthetic_sessions(
    base_patches: Sequence[np.ndarray],
    n_frames: int,
    max_shift: float,
    max_rotation: float,
    rng: SeedLike,
) -> list[TrackSession]:
    """Synthesize one session per base patch by applying a random walk of sub-pixel
    translations (per-step magnitude at most ``max_shift`` px on each axis) and rotations
    (at most ``max_rotation`` degrees per step). The walk starts at the identity, so the
    first patch equals its base patch. Patches are not standardized, see
    :py:func:`standardize_sessions`.

    """
    _check(len(base_patches) > 0, "empty-base-patches", "No base patches given.")
    _check(n_frames >= 2, "invalid-n-frames", "A session needs at least two frames.")
    _check_non_negative(max_shift, "max_shift")
    _check_non_negative(max_rotation, "max_rotation")
    seed = base_seed(rng)

    def one(i: int) -> TrackSession:
        gen = derived_generator(seed, i)
        base = np.asarray(base_patches[i], dtype=np.float64)
        steps = gen.uniform(-1.0, 1.0, size=(n_frames - 1, 3))
        steps *= np.array([max_shift, max_shift, max_rotation])
        path = np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])
        patches = [_image.shift_rotate(base, dx, dy, angle) for dx, dy, angle in path]
        return TrackSession(np.stack(patches), source_id=f"synthetic:{i}")

    return parallel_map(one, list(range(len(base_patches))))


def edge_patches(edge: int, count: int, rng: SeedLike) -> list[np.ndarray]:
    """Random soft step edges in ``[0, 1]`` with uniformly drawn orientation and an offset
    near the patch center."""
    gen = as_generator(rng)
    coords = np.arange(edge, dtype=np.float64) - (edge - 1) / 2.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    patches = []
    for _ in range(count):
        angle = gen.uniform(0.0, np.pi)
        shift = gen.uniform(-edge / 4.0, edge / 4.0)
        proj = np.cos(angle) * xx + np.sin(angle) * yy - shift
        patches.append(0.5 + 0.5 * np.tanh(proj))
    return patches


def standardize_sessions(sessions: Sequence[TrackSession]) -> list[TrackSession]:
    """Standardize every patch. Sessions with a flat patch are dropped."""
    out = []
    for s in sessions:
        raw = s.flat()
        if np.any(_image.is_flat(raw)):
            continue
        patches = _image.standardize(raw).reshape(s.patches.shape)
        out.append(TrackSession(patches, s.source_id))
    if len(out) < len(sessions):
        _logger.info("Dropped %d flat sessions.", len(sessions) - len(out))
    return out


def shuffle_sessions(
    sessions: Sequence[TrackSession], fraction: float, rng: SeedLike
) -> list[TrackSession]:
    """Disrupt the temporal order of the first ``fraction`` of the sessions by permuting
    their frames. Emulates patches collected with an unreliable tracker."""
    _check(0.0 <= fraction <= 1.0, "invalid-fraction", "Fraction must lie in [0, 1].")
    gen = as_generator(rng)
    n_shuffled = int(round(fraction * len(sessions)))
    out = []
    for i, s in enumerate(sessions):
        if i < n_shuffled:
            s = TrackSession(s.patches[gen.permutation(s.n_frames)], s.source_id)
        out.append(s)
    return out


def encode_sessions(sessions: Sequence[TrackSession]) -> bytes:
    """Serialize sessions. Layout: magic ``SLTK``, version, ``(n_sessions, n_frames,
    edge)`` as ``u32``, the ``f64`` patch payload (session-major, row-major) and the
    length-prefixed UTF-8 source tags."""
    n_frames = sessions[0].n_frames if sessions else 0
    edge = sessions[0].edge if sessions else 0
    for s in sessions:
        _check(
            s.patches.ndim == 3,
            "invalid-session",
            "Only image sessions can be exported.",
        )
        _check(
            s.n_frames == n_frames and s.edge == edge,
            "session-shape-mismatch",
            "All sessions in a file must share frame count and edge.",
        )
    writer = Writer(SESSION_MAGIC, SESSION_VERSION).u32(len(sessions), n_frames, edge)
    for s in sessions:
        writer.array(s.patches)
    for s in sessions:
        writer.text(s.source_id)
    return writer.getvalue()


def decode_sessions(buf: bytes) -> list[TrackSession]:
    reader = Reader(buf, SESSION_MAGIC, (SESSION_VERSION,))
    n_sessions, n_frames, edge = reader.u32(), reader.u32(), reader.u32()
    payload = reader.array((n_sessions, n_frames, edge, edge))
    tags = [reader.text() for _ in range(n_sessions)]
    reader.finish()
    try:
        return [TrackSession(payload[i].copy(), tags[i]) for i in range(n_sessions)]
    except InvalidInputError as e:
        raise FormatError("invalid-session", e.msg, offset=12)


def export_sessions(sessions: Sequence[TrackSession], path: os.PathLike | str) -> None:
    Path(os.path.expanduser(path)).write_bytes(encode_sessions(sessions))


def import_sessions(path: os.PathLike | str) -> list[TrackSession]:
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    return decode_sessions(p.read_bytes())
