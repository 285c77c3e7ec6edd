# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Errors and Argument Checks
==========================
"""

from __future__ import annotations

import os
from enum import IntEnum
from typing import Any

import numpy as np

__all__ = [
    "ExitStatus",
    "SlowTrackError",
    "InvalidInputError",
    "InvalidStateError",
    "FormatError",
    "NumericalError",
    "n_threads",
]

THREADS_ENV = "SLOWTRACK_THREADS"


class ExitStatus(IntEnum):
    """Process exit codes used by the command line interface."""

    SUCCESS = 0
    USAGE = 2
    DATA_FORMAT = 3
    NUMERICAL = 4


class SlowTrackError(RuntimeError):
    """Generic catch-all runtime error reported by slowtrack.

    Parameters
    ----------
    code :
        Machine-parsable identifier, e.g. ``layer1-weights-missing``.
    msg :
        Human readable description.
    status :
        Exit status the CLI reports for this error.

    """

    default_status = ExitStatus.USAGE

    def __init__(self, code: str, msg: str, status: int | None = None) -> None:
        self.code = code
        self.msg = msg
        self.status = int(self.default_status if status is None else status)
        super().__init__(f"{self.code}: {self.msg}")

    def __reduce__(self) -> tuple[Any, ...]:
        # Errors raised in worker processes are pickled back to the parent.
        return (_rebuild, (type(self), self.__dict__.copy()))


def _rebuild(cls: type[SlowTrackError], state: dict[str, Any]) -> SlowTrackError:
    err = cls.__new__(cls)
    RuntimeError.__init__(err, f"{state['code']}: {state['msg']}")
    err.__dict__.update(state)
    return err


class InvalidInputError(SlowTrackError, ValueError):
    """Raised when arguments violate a documented precondition."""


class InvalidStateError(SlowTrackError):
    """Raised when an object is used before it is ready, e.g. training a classifier
    without samples of both classes."""


class FormatError(SlowTrackError):
    """Malformed file. ``offset`` is a byte offset for binary files and a line number for
    text files."""

    default_status = ExitStatus.DATA_FORMAT

    def __init__(self, code: str, msg: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            msg = f"{msg} (at offset {offset})"
        super().__init__(code, msg)


class NumericalError(SlowTrackError):
    """Non-finite values encountered during optimization or scoring."""

    default_status = ExitStatus.NUMERICAL


def _check(cond: bool, code: str, msg: str) -> None:
    if not cond:
        raise InvalidInputError(code, msg)


def _check_positive(value: float, name: str) -> None:
    _check(value > 0, f"invalid-{name}", f"`{name}` must be positive, got {value}.")


def _check_non_negative(value: float, name: str) -> None:
    _check(value >= 0, f"invalid-{name}", f"`{name}` must be non-negative, got {value}.")


def _check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericalError("non-finite", f"`{name}` contains NaN or infinity.")


def _check_dim(arr: np.ndarray, size: int, name: str) -> None:
    if arr.shape[-1] != size:
        raise InvalidInputError(
            "dimension-mismatch",
            f"`{name}` has trailing dimension {arr.shape[-1]}, expecting {size}.",
        )


def n_threads() -> int:
    """Number of worker threads for internal parallelism. Bounded by the CPU affinity of
    this process and by the ``SLOWTRACK_THREADS`` environment variable."""
    if hasattr(os, "sched_getaffinity"):
        n_cpus = len(os.sched_getaffinity(0))
    else:
        n_cpus = os.cpu_count() or 1
    capped = os.environ.get(THREADS_ENV, None)
    if capped is None or capped == "":
        return max(n_cpus, 1)
    try:
        value = int(capped)
    except ValueError:
        raise InvalidInputError(
            "invalid-threads", f"{THREADS_ENV} must be an integer, got {capped!r}."
        )
    return max(1, min(value, n_cpus))
