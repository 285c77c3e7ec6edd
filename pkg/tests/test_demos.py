# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

tests_dir = Path(__file__).resolve().parent
demo_dir = tests_dir.parent / "demos"


def _run(name: str) -> None:
    script = demo_dir / name
    results = subprocess.check_call([sys.executable, str(script)], stdout=subprocess.PIPE)
    assert results == 0


def test_optimal_stimuli() -> None:
    _run("optimal_stimuli.py")


@pytest.mark.slow
def test_intro() -> None:
    _run("intro.py")


@pytest.mark.slow
def test_negative_sampling() -> None:
    _run("negative_sampling.py")
