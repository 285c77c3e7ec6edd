# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Evaluation
==========

Success rate, center location (COL) error, selection of the median of repeated trials and
report emission.

Boxes are top-left ``(x, y, w, h)`` in pixels. Ground truth files hold one box per line,
in frame order, as ``x,y,w,h``.

"""

from __future__ import annotations

import csv
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TypeAlias

import numpy as np
from matplotlib.figure import Figure

from .kernels.lib import FormatError, InvalidInputError, _check
from .pfilter import AffineState
from .tracker import TrackResult

__all__ = [
    "Box",
    "TrialMetrics",
    "overlap",
    "success_rate",
    "col_error",
    "evaluate",
    "trial_scores",
    "median_trial",
    "emit_report",
    "load_ground_truth",
    "load_track_csv",
]

_logger = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 0.5
# Floor of the mean COL error before inversion.
_MIN_COL = 1e-12
REPORT_COLUMNS = (
    "frame", "pred_x", "pred_y", "pred_w", "pred_h",
    "gt_x", "gt_y", "gt_w", "gt_h", "iou", "col",
)


@dataclass(frozen=True)
class Box:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise InvalidInputError("degenerate-box", f"Box {self} has zero area.")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @classmethod
    def from_state(cls, state: AffineState) -> Box:
        return cls(*state.to_box())


Boxes: TypeAlias = Sequence[Box] | TrackResult | np.ndarray


def _as_array(boxes: Boxes) -> np.ndarray:
    if isinstance(boxes, TrackResult):
        return boxes.boxes()
    if isinstance(boxes, np.ndarray):
        arr = np.asarray(boxes, dtype=np.float64)
    else:
        arr = np.array([(b.x, b.y, b.w, b.h) for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def _pair(results: Boxes, ground_truth: Boxes) -> tuple[np.ndarray, np.ndarray]:
    pred, gt = _as_array(results), _as_array(ground_truth)
    if pred.shape[0] != gt.shape[0]:
        raise InvalidInputError(
            "length-mismatch",
            f"{pred.shape[0]} predicted boxes for {gt.shape[0]} ground truth boxes.",
        )
    _check(pred.shape[0] > 0, "empty-sequence", "No boxes to evaluate.")
    return pred, gt


def _iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    left = np.maximum(a[:, 0], b[:, 0])
    top = np.maximum(a[:, 1], b[:, 1])
    right = np.minimum(a[:, 0] + a[:, 2], b[:, 0] + b[:, 2])
    bottom = np.minimum(a[:, 1] + a[:, 3], b[:, 1] + b[:, 3])
    inter = np.clip(right - left, 0.0, None) * np.clip(bottom - top, 0.0, None)
    union = a[:, 2] * a[:, 3] + b[:, 2] * b[:, 3] - inter
    return inter / union


def overlap(a: Box, b: Box) -> float:
    """Intersection over union, 0 for disjoint boxes."""
    return float(_iou(_as_array([a]), _as_array([b]))[0])


def success_rate(results: Boxes, ground_truth: Boxes) -> float:
    """Percentage of frames whose overlap strictly exceeds 0.5."""
    pred, gt = _pair(results, ground_truth)
    return 100.0 * float(np.mean(_iou(pred, gt) > SUCCESS_THRESHOLD))


def _centers(arr: np.ndarray) -> np.ndarray:
    return arr[:, :2] + arr[:, 2:] / 2.0


def col_error(results: Boxes, ground_truth: Boxes) -> tuple[np.ndarray, float]:
    """Per-frame Euclidean distance between box centers and its mean."""
    pred, gt = _pair(results, ground_truth)
    diff = _centers(pred) - _centers(gt)
    errors = np.hypot(diff[:, 0], diff[:, 1])
    return errors, float(np.mean(errors))


@dataclass(frozen=True)
class TrialMetrics:
    success_rate: float
    mean_col: float


def evaluate(results: Boxes, ground_truth: Boxes) -> TrialMetrics:
    _, mean_col = col_error(results, ground_truth)
    return TrialMetrics(success_rate(results, ground_truth), mean_col)


def _maxmin(values: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo <= 0.0:
        return np.full(values.shape, 0.5)
    return (values - lo) / (hi - lo)


def trial_scores(trials: Sequence[TrialMetrics]) -> np.ndarray:
    """Max-min normalized success rate plus max-min normalized inverse mean COL error."""
    _check(len(trials) > 0, "empty-trials", "No trials to score.")
    sr = np.array([t.success_rate for t in trials], dtype=np.float64)
    col = np.array([t.mean_col for t in trials], dtype=np.float64)
    inv = 1.0 / np.maximum(col, _MIN_COL)
    return _maxmin(sr) + _maxmin(inv)


def median_trial(trials: Sequence[TrialMetrics]) -> int:
    """Index of the trial with the median score, the lowest index among equal scores.
    For an even number of trials the lower median is used."""
    scores = trial_scores(trials)
    median = np.sort(scores)[(len(scores) - 1) // 2]
    return int(np.flatnonzero(scores == median)[0])


def emit_report(
    results: Boxes,
    ground_truth: Boxes,
    out_dir: os.PathLike | str,
    name: str = "report",
) -> tuple[Path, Path]:
    """Write the per-frame CSV ``{name}.csv`` and the COL error plot ``{name}.png``.

    Returns
    -------
    Paths of the CSV and the plot.

    """
    pred, gt = _pair(results, ground_truth)
    iou = _iou(pred, gt)
    errors, mean_col = col_error(pred, gt)
    sr = success_rate(pred, gt)
    out = Path(os.path.expanduser(out_dir))
    out.mkdir(parents=True, exist_ok=True)
    csv_path, png_path = out / f"{name}.csv", out / f"{name}.png"

    with open(csv_path, "w", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for i in range(pred.shape[0]):
            writer.writerow(
                [i + 1]
                + [f"{v:.6f}" for v in pred[i]]
                + [f"{v:.6f}" for v in gt[i]]
                + [f"{iou[i]:.6f}", f"{errors[i]:.6f}"]
            )

    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    ax.plot(np.arange(1, pred.shape[0] + 1), errors, "-", linewidth=1.0)
    ax.set(
        xlabel="Frame",
        ylabel="Center location error (px)",
        title=f"{name}: SR {sr:.1f}%, mean COL {mean_col:.2f} px",
    )
    ax.grid(True)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    _logger.info("Report written to %s and %s", csv_path, png_path)
    return csv_path, png_path


_SEPARATOR = re.compile(r"[,\s]+")


def load_ground_truth(path: os.PathLike | str) -> list[Box]:
    """Read one ``x,y,w,h`` box per line. Tabs and spaces are accepted as separators;
    blank lines are skipped."""
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    boxes = []
    with open(p) as fd:
        for lineno, line in enumerate(fd, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f for f in _SEPARATOR.split(line) if f]
            try:
                if len(fields) != 4:
                    raise ValueError(f"expecting 4 fields, got {len(fields)}")
                boxes.append(Box(*(float(f) for f in fields)))
            except (ValueError, InvalidInputError) as e:
                raise FormatError("bad-ground-truth", f"{p}: {e}", offset=lineno)
    return boxes


def load_track_csv(path: os.PathLike | str) -> list[Box]:
    """Read the boxes of a trajectory written by
    :py:meth:`~slowtrack.tracker.TrackResult.write_csv`."""
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    boxes = []
    with open(p, newline="") as fd:
        reader = csv.DictReader(fd)
        missing = {"x", "y", "w", "h"} - set(reader.fieldnames or ())
        if missing:
            raise FormatError("bad-track-csv", f"{p}: missing columns {sorted(missing)}", offset=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                boxes.append(Box(float(row["x"]), float(row["y"]), float(row["w"]), float(row["h"])))
            except (ValueError, TypeError, InvalidInputError) as e:
                raise FormatError("bad-track-csv", f"{p}: {e}", offset=lineno)
    return boxes
