# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import pickle

import pytest

from slowtrack.kernels.lib import (
    THREADS_ENV,
    ExitStatus,
    FormatError,
    InvalidInputError,
    NumericalError,
    SlowTrackError,
    n_threads,
)


def test_status() -> None:
    assert InvalidInputError("a", "b").status == ExitStatus.USAGE
    assert FormatError("a", "b").status == ExitStatus.DATA_FORMAT
    assert NumericalError("a", "b").status == ExitStatus.NUMERICAL
    assert isinstance(InvalidInputError("a", "b"), ValueError)
    assert str(FormatError("bad-magic", "oops", offset=4)) == "bad-magic: oops (at offset 4)"


def test_pickle() -> None:
    for err in (
        SlowTrackError("layer1-weights-missing", "msg"),
        InvalidInputError("invalid-input", "msg"),
        FormatError("truncated", "msg", offset=12),
    ):
        copied = pickle.loads(pickle.dumps(err))
        assert type(copied) is type(err)
        assert copied.code == err.code
        assert copied.msg == err.msg
        assert copied.status == err.status
        assert str(copied) == str(err)


def test_n_threads(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(THREADS_ENV, raising=False)
    n = n_threads()
    assert n >= 1

    monkeypatch.setenv(THREADS_ENV, "1")
    assert n_threads() == 1
    monkeypatch.setenv(THREADS_ENV, str(n + 100))
    assert n_threads() == n
    monkeypatch.setenv(THREADS_ENV, "0")
    assert n_threads() == 1
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(InvalidInputError, match="invalid-threads"):
        n_threads()
