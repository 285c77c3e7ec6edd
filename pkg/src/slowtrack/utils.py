# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Utilities
=========
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeAlias, TypeVar

import numpy as np

from .kernels.lib import n_threads

__all__ = ["SeedLike", "as_generator", "base_seed", "derived_generator", "parallel_map"]

_R = TypeVar("_R")
_T = TypeVar("_T")

SeedLike: TypeAlias = int | np.random.Generator


def as_generator(rng: SeedLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def base_seed(rng: SeedLike) -> int:
    """An integer seed. Integers pass through, generators are consumed once."""
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**62))
    return int(rng)


def derived_generator(seed: int, index: int) -> np.random.Generator:
    """Generator for the ``index``-th independent work item: ``seed ^ index``."""
    return np.random.default_rng(seed ^ index)


def parallel_map(fn: Callable[[_T], _R], items: Sequence[_T]) -> list[_R]:
    """Map ``fn`` over ``items`` on a thread pool bounded by
    :py:func:`~slowtrack.kernels.lib.n_threads`. Results keep the input order."""
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
