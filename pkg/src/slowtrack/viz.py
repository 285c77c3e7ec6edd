# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Optimal Stimuli
===============

Phase-shifted optimal stimuli of pooled units, rendered as linear combinations of the
paired filters. Shifting the phase of an invariant unit should reveal the transformation
it is invariant to (for instance a translating or rotating edge).

"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .kernels import image as _image
from .kernels.lib import InvalidInputError, _check
from .slowae import LayerWeights
from .stack import StackedModel

__all__ = [
    "StimulusGrid",
    "rescale",
    "optimal_stimulus_l1",
    "optimal_stimulus_l2",
    "render_grid",
]

_logger = logging.getLogger(__name__)

DEFAULT_THETA_STEP = 36.0
# Separator between tiles, in pixels of the upscaled image.
_GAP = 2


def rescale(img: np.ndarray) -> np.ndarray:
    """Affine min-max rescaling into ``[0, 1]``. Constant images map to ``0.5``."""
    img = np.asarray(img, dtype=np.float64)
    lo, hi = float(img.min()), float(img.max())
    if hi - lo <= 0.0:
        return np.full_like(img, 0.5)
    return (img - lo) / (hi - lo)


def _check_pair(weights: LayerWeights, pair_index: int) -> None:
    if not 0 <= pair_index < weights.n_pooled:
        raise InvalidInputError(
            "index-out-of-range",
            f"Pair index {pair_index} is out of range [0, {weights.n_pooled}).",
        )


def _shifted(weights: LayerWeights, pair_index: int, theta: float) -> np.ndarray:
    W = weights.W
    return np.cos(theta) * W[2 * pair_index] + np.sin(theta) * W[2 * pair_index + 1]


def optimal_stimulus_l1(
    layer1: LayerWeights, pair_index: int, theta: float, *, normalize: bool = True
) -> np.ndarray:
    """``cos(theta) W[2i] + sin(theta) W[2i+1]`` as an ``edge x edge`` image.

    Parameters
    ----------
    normalize :
        Rescale into ``[0, 1]``. Disable to obtain the raw linear combination.

    """
    _check_pair(layer1, pair_index)
    stimulus = _shifted(layer1, pair_index, theta).reshape(layer1.edge, layer1.edge)
    return rescale(stimulus) if normalize else stimulus


def optimal_stimulus_l2(
    layer1: LayerWeights,
    layer2: LayerWeights,
    pair_index: int,
    theta: float,
    *,
    k1: int = 6,
    normalize: bool = True,
) -> np.ndarray:
    """Back-project the phase-shifted layer-2 filter into image space.

    Every layer-2 input coordinate is the amplitude of a layer-1 pair in one cell of the
    dense layer-1 map. Its coefficient scales that pair's ``theta = 0`` stimulus, placed
    at the cell's pixel offset. Overlapping contributions are summed.

    """
    _check_pair(layer2, pair_index)
    cells = _image.grid_size(layer2.edge, layer1.edge, k1)
    if layer2.dim != cells * cells * layer1.n_pooled:
        raise InvalidInputError(
            "geometry-mismatch",
            f"Layer 2 has {layer2.dim} inputs, expecting {cells * cells * layer1.n_pooled}.",
        )
    coef = _shifted(layer2, pair_index, theta).reshape(cells, cells, layer1.n_pooled)
    filters = layer1.W[0::2].reshape(layer1.n_pooled, layer1.edge, layer1.edge)
    canvas = np.zeros((layer2.edge, layer2.edge))
    e = layer1.edge
    for ci in range(cells):
        for cj in range(cells):
            r, c = ci * k1, cj * k1
            canvas[r : r + e, c : c + e] += np.tensordot(coef[ci, cj], filters, axes=1)
    return rescale(canvas) if normalize else canvas


@dataclass(frozen=True, eq=False)
class StimulusGrid:
    """Stimuli of the selected pooled units (rows) at every phase step (columns).

    ``cells`` has shape ``[rows, cols, edge, edge]`` with values in ``[0, 1]``.

    """

    cells: np.ndarray
    pair_indices: tuple[int, ...]
    theta_step_deg: float
    path: Path | None = None

    @property
    def thetas(self) -> np.ndarray:
        """Phase of each column, in radians."""
        return np.deg2rad(self.theta_step_deg * np.arange(self.cells.shape[1]))

    def to_image(self, zoom: int = 4) -> Image.Image:
        """Tile the cells into one 8-bit grayscale image."""
        rows, cols, eh, ew = self.cells.shape
        th, tw = eh * zoom, ew * zoom
        canvas = Image.new("L", (cols * (tw + _GAP) + _GAP, rows * (th + _GAP) + _GAP), 0)
        for i in range(rows):
            for j in range(cols):
                tile = np.round(np.clip(self.cells[i, j], 0.0, 1.0) * 255.0).astype(np.uint8)
                img = Image.fromarray(tile).resize((tw, th), Image.Resampling.NEAREST)
                canvas.paste(img, (_GAP + j * (tw + _GAP), _GAP + i * (th + _GAP)))
        return canvas


def render_grid(
    model: StackedModel | LayerWeights,
    layer: int,
    pair_indices: Sequence[int] | None = None,
    theta_step_deg: float = DEFAULT_THETA_STEP,
    out_dir: os.PathLike | str | None = None,
) -> StimulusGrid:
    """Render phase-shifted stimuli of one layer.

    Parameters
    ----------
    model :
        A stacked model, or first-layer weights alone for ``layer = 1``.
    layer :
        ``1`` or ``2``.
    pair_indices :
        Pooled units to render, all of them by default.
    theta_step_deg :
        Phase increment. Must divide 360.
    out_dir :
        When given, the tiled grid is written to ``out_dir/stimuli_layer{layer}.png``.

    """
    _check(layer in (1, 2), "invalid-layer", f"Layer must be 1 or 2, got {layer}.")
    if isinstance(model, LayerWeights):
        _check(layer == 1, "layer2-weights-missing", "Layer 2 needs a stacked model.")
        layer1, layer2, k1 = model, None, 0
    else:
        layer1, layer2, k1 = model.layer1, model.layer2, model.k1
    _check(
        0 < theta_step_deg <= 180 and float(360 / theta_step_deg).is_integer(),
        "invalid-theta-step",
        f"Phase step {theta_step_deg} must divide 360 into at least 2 steps.",
    )
    weights = layer1 if layer2 is None or layer == 1 else layer2
    indices = tuple(range(weights.n_pooled)) if pair_indices is None else tuple(pair_indices)
    _check(len(indices) >= 1, "empty-selection", "No pooled unit selected.")
    n_cols = int(round(360 / theta_step_deg))
    thetas = np.deg2rad(theta_step_deg * np.arange(n_cols))

    def one(i: int, theta: float) -> np.ndarray:
        if layer == 1:
            return optimal_stimulus_l1(layer1, i, theta)
        assert layer2 is not None
        return optimal_stimulus_l2(layer1, layer2, i, theta, k1=k1)

    cells = np.stack([np.stack([one(i, t) for t in thetas]) for i in indices])
    path = None
    if out_dir is not None:
        path = Path(os.path.expanduser(out_dir)) / f"stimuli_layer{layer}.png"
        path.parent.mkdir(parents=True, exist_ok=True)
        grid = StimulusGrid(cells, indices, theta_step_deg)
        grid.to_image().save(path)
        _logger.info("Wrote %d x %d stimuli to %s", len(indices), n_cols, path)
    return StimulusGrid(cells, indices, theta_step_deg, path)
