# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import numpy as np
import pytest

from slowtrack.kernels.lib import THREADS_ENV
from slowtrack.utils import as_generator, base_seed, derived_generator, parallel_map


def test_seeds() -> None:
    gen = np.random.default_rng(3)
    assert as_generator(gen) is gen
    assert base_seed(17) == 17
    a = base_seed(np.random.default_rng(3))
    b = base_seed(np.random.default_rng(3))
    assert a == b
    assert derived_generator(5, 2).integers(1 << 30) == np.random.default_rng(7).integers(1 << 30)


@pytest.mark.parametrize("threads", ["1", "4"])
def test_parallel_map(monkeypatch: pytest.MonkeyPatch, threads: str) -> None:
    monkeypatch.setenv(THREADS_ENV, threads)

    def draw(i: int) -> float:
        return float(derived_generator(11, i).uniform())

    out = parallel_map(draw, list(range(50)))
    assert out == [draw(i) for i in range(50)]
    assert parallel_map(draw, []) == []
