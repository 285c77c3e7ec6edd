# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
The Top Level Module
====================

The top-level slowtrack exports shorthands for the most common entry points: loading
trained layers into a :py:class:`~slowtrack.stack.StackedModel` and tracking a sequence
with :py:func:`~slowtrack.tracker.run`.

"""

from __future__ import annotations

from .kernels import __version__
from .slowae import LayerWeights, load_weights, save_weights
from .stack import StackedModel
from .tracker import TrackerConfig, TrackResult, run

__all__ = [
    "__version__",
    "LayerWeights",
    "StackedModel",
    "TrackerConfig",
    "TrackResult",
    "load_weights",
    "save_weights",
    "load_model",
    "run",
]


def load_model(layer1: str, layer2: str, k1: int = 6, k2: int = 2) -> StackedModel:
    """Load two weight files into a stacked model."""
    return StackedModel(load_weights(layer1), load_weights(layer2), k1, k2)
