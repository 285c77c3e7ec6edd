# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Stacked Features
================

Dense (convolutional) extraction of layer-1 features, layer-2 training vectors and the
final tracking representation.

The representation of a ``32 x 32`` observation concatenates, in this order:

1. layer-1 amplitudes over a ``5 x 5`` grid (stride ``k1 = 6``),
2. layer-1 phases on the same grid,
3. layer-2 amplitudes over ``2 x 2`` cell windows of the layer-1 amplitude map, moved with
   stride ``k2 = 2`` cells,
4. layer-2 phases on the same grid.

Every block is flattened row-major with the channel index varying fastest.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import TrackSession
from .kernels import autoencoder as _ae
from .kernels import image as _image
from .kernels.lib import InvalidInputError, _check
from .slowae import LayerWeights

__all__ = [
    "FeatureKind",
    "FeatureMap",
    "amplitude",
    "phase",
    "dense_extract",
    "layer2_training_vectors",
    "StackedModel",
    "tracking_representation",
]

_logger = logging.getLogger(__name__)

TEMPLATE_EDGE = 32


class FeatureKind(Enum):
    AMPLITUDE = "amplitude"
    PHASE = "phase"
    BOTH = "both"


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """A ``g x g`` grid of feature vectors.

    ``values`` has shape ``[..., g, g, channels]``. For :py:attr:`FeatureKind.BOTH` the
    amplitude channels come first, followed by the phase channels.

    """

    values: np.ndarray
    kind: FeatureKind

    @property
    def grid(self) -> int:
        return int(self.values.shape[-2])

    @property
    def channels(self) -> int:
        return int(self.values.shape[-1])

    @property
    def amplitude(self) -> np.ndarray:
        if self.kind == FeatureKind.PHASE:
            raise InvalidInputError("missing-amplitude", "Feature map holds phases only.")
        if self.kind == FeatureKind.AMPLITUDE:
            return self.values
        return self.values[..., : self.channels // 2]

    @property
    def phase(self) -> np.ndarray:
        if self.kind == FeatureKind.AMPLITUDE:
            raise InvalidInputError("missing-phase", "Feature map holds amplitudes only.")
        if self.kind == FeatureKind.PHASE:
            return self.values
        return self.values[..., self.channels // 2 :]


def amplitude(a: float, b: float) -> float:
    """Euclidean norm of the complex number ``a + ib``."""
    return float(np.hypot(a, b))


def phase(a: float, b: float) -> float:
    """Angle of ``a + ib`` in ``(-pi, pi]``, with ``phase(0, 0) = 0``."""
    return float(np.arctan2(b + 0.0, a + 0.0))


def _activations(weights: LayerWeights, images: np.ndarray, stride: int) -> np.ndarray:
    """Hidden activations of every standardized window, ``[..., g, g, p]``."""
    crops = _image.windows(images, weights.edge, stride)
    flat = crops.reshape(*crops.shape[:-2], weights.edge * weights.edge)
    _check(
        flat.shape[-1] == weights.dim,
        "dimension-mismatch",
        f"Layer expects {weights.dim} inputs, windows have {flat.shape[-1]}.",
    )
    return _image.standardize(flat) @ weights.W.T


def _features(weights: LayerWeights, A: np.ndarray, kind: FeatureKind) -> np.ndarray:
    if kind == FeatureKind.AMPLITUDE:
        return _ae.pool(A, weights.config.eps_pool)
    if kind == FeatureKind.PHASE:
        return _ae.phase(A)
    return np.concatenate([_ae.pool(A, weights.config.eps_pool), _ae.phase(A)], axis=-1)


def dense_extract(
    weights: LayerWeights,
    image: np.ndarray,
    stride: int,
    kind: FeatureKind = FeatureKind.AMPLITUDE,
) -> FeatureMap:
    """Crop every ``edge x edge`` window at the given stride, standardize it, and apply
    the layer's pooling and/or phase.

    Parameters
    ----------
    image :
        Square intensity grid ``[E, E]``, or a batch ``[..., E, E]``.

    """
    image = np.asarray(image, dtype=np.float64)
    _check(image.ndim >= 2, "invalid-image", f"Expecting an image, got {image.shape}.")
    _check(
        image.shape[-1] == image.shape[-2],
        "invalid-image",
        f"Expecting a square image, got {image.shape[-2:]}.",
    )
    A = _activations(weights, image, stride)
    return FeatureMap(_features(weights, A, kind), kind)


def _cell_windows(fmap: np.ndarray, cells: int, stride: int) -> np.ndarray:
    """Flatten ``cells x cells`` windows of a ``[..., g, g, C]`` map into
    ``[..., gh, gw, cells * cells * C]`` vectors, row-major and channel-minor."""
    moved = np.moveaxis(fmap, -1, -3)
    win = _image.windows(moved, cells, stride)
    # [..., C, gh, gw, cells, cells] -> [..., gh, gw, cells, cells, C]
    win = np.moveaxis(win, -5, -1)
    return win.reshape(*win.shape[:-3], -1)


def layer2_training_vectors(
    sessions: Sequence[TrackSession], layer1: LayerWeights, k1: int
) -> list[TrackSession]:
    """Map sessions of large patches into feature-space sessions: every patch becomes
    its flattened dense layer-1 amplitude map. Frame order is preserved."""
    out = []
    for s in sessions:
        _check(
            s.patches.ndim == 3,
            "invalid-session",
            "Layer-2 vectors are built from image sessions.",
        )
        if s.edge < layer1.edge:
            raise InvalidInputError(
                "geometry-mismatch",
                f"Session patch edge {s.edge} is smaller than the layer-1 edge {layer1.edge}.",
            )
        amp = dense_extract(layer1, s.patches, k1).values
        out.append(TrackSession(amp.reshape(s.n_frames, -1), s.source_id))
    return out


class StackedModel:
    """Two trained layers and the geometry gluing them together.

    Parameters
    ----------
    layer1 :
        First layer, trained on ``edge1 x edge1`` patches.
    layer2 :
        Second layer, trained on :py:func:`layer2_training_vectors` of
        ``edge2 x edge2`` patches.
    k1 :
        Pixel stride of the layer-1 dense extraction.
    k2 :
        Cell stride of the layer-2 windows over the layer-1 amplitude map.

    """

    def __init__(
        self,
        layer1: LayerWeights,
        layer2: LayerWeights,
        k1: int = 6,
        k2: int = 2,
        template_edge: int = TEMPLATE_EDGE,
    ) -> None:
        self.layer1 = layer1
        self.layer2 = layer2
        self.k1 = k1
        self.k2 = k2
        self.template_edge = template_edge
        self.cells = _image.grid_size(layer2.edge, layer1.edge, k1)
        expected = self.cells * self.cells * layer1.n_pooled
        if layer2.dim != expected:
            raise InvalidInputError(
                "geometry-mismatch",
                f"Layer 2 expects {layer2.dim} inputs, layer 1 produces {expected} per "
                f"{layer2.edge}x{layer2.edge} patch.",
            )
        self.grid1 = _image.grid_size(template_edge, layer1.edge, k1)
        self.grid2 = _image.grid_size(self.grid1, self.cells, k2)

    @property
    def n_features(self) -> int:
        """Length ``r`` of the tracking representation."""
        return 2 * (
            self.grid1 * self.grid1 * self.layer1.n_pooled
            + self.grid2 * self.grid2 * self.layer2.n_pooled
        )

    def featurize(self, observations: np.ndarray) -> np.ndarray:
        """Tracking representations of a batch of ``[n, 32, 32]`` observations,
        ``[n, r]``."""
        obs = np.asarray(observations, dtype=np.float64)
        edge = self.template_edge
        if obs.ndim != 3 or obs.shape[1:] != (edge, edge):
            raise InvalidInputError(
                "invalid-observation",
                f"Observations must be [n, {edge}, {edge}], got {obs.shape}.",
            )
        n = obs.shape[0]
        eps1 = self.layer1.config.eps_pool
        A1 = _activations(self.layer1, obs, self.k1)
        amp1 = _ae.pool(A1, eps1)
        ph1 = _ae.phase(A1)
        # Layer 2 consumes the raw amplitude map, no standardization.
        A2 = _cell_windows(amp1, self.cells, self.k2) @ self.layer2.W.T
        amp2 = _ae.pool(A2, self.layer2.config.eps_pool)
        ph2 = _ae.phase(A2)
        return np.concatenate(
            [b.reshape(n, -1) for b in (amp1, ph1, amp2, ph2)], axis=1
        )

    def tracking_representation(self, observation: np.ndarray) -> np.ndarray:
        """The ``r``-vector of a single ``32 x 32`` observation."""
        obs = np.asarray(observation, dtype=np.float64)
        return self.featurize(obs[np.newaxis])[0]

    def __repr__(self) -> str:
        return (
            f"StackedModel(layer1={self.layer1!r}, layer2={self.layer2!r}, "
            f"k1={self.k1}, k2={self.k2}, r={self.n_features})"
        )


def tracking_representation(
    observation: np.ndarray, layer1: LayerWeights, layer2: LayerWeights, k1: int, k2: int
) -> np.ndarray:
    """Functional form of :py:meth:`StackedModel.tracking_representation`."""
    return StackedModel(layer1, layer2, k1, k2).tracking_representation(observation)
