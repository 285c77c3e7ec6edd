# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Binary Codec
============

Little-endian readers and writers shared by the session, weight and checkpoint files.
Every file starts with a four byte magic followed by a ``u32`` format version.

"""

from __future__ import annotations

import struct

import numpy as np

from .lib import FormatError

__all__ = ["Writer", "Reader"]

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_F64 = struct.Struct("<d")


class Writer:
    """Accumulates a binary payload."""

    def __init__(self, magic: bytes, version: int) -> None:
        assert len(magic) == 4
        self._chunks: list[bytes] = [magic, _U32.pack(version)]

    def u32(self, *values: int) -> Writer:
        for v in values:
            self._chunks.append(_U32.pack(v))
        return self

    def u64(self, *values: int) -> Writer:
        for v in values:
            self._chunks.append(_U64.pack(v))
        return self

    def f64(self, *values: float) -> Writer:
        for v in values:
            self._chunks.append(_F64.pack(v))
        return self

    def array(self, arr: np.ndarray) -> Writer:
        self._chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return self

    def text(self, value: str) -> Writer:
        raw = value.encode("utf-8")
        self._chunks.append(_U32.pack(len(raw)))
        self._chunks.append(raw)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class Reader:
    """Sequential reader with byte-offset aware errors."""

    def __init__(self, buf: bytes, magic: bytes, versions: tuple[int, ...]) -> None:
        self._buf = memoryview(buf)
        self.offset = 0
        found = bytes(self._take(4, "magic"))
        if found != magic:
            raise FormatError(
                "bad-magic", f"Expecting magic {magic!r}, found {found!r}", offset=0
            )
        self.version = self.u32()
        if self.version not in versions:
            raise FormatError(
                "bad-version", f"Unsupported format version {self.version}", offset=4
            )

    def _take(self, n_bytes: int, what: str) -> memoryview:
        end = self.offset + n_bytes
        if end > len(self._buf):
            raise FormatError(
                "truncated",
                f"Truncated {what}: need {n_bytes} bytes, "
                f"{len(self._buf) - self.offset} available",
                offset=self.offset,
            )
        chunk = self._buf[self.offset : end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return int(_U32.unpack(self._take(4, "u32"))[0])

    def u64(self) -> int:
        return int(_U64.unpack(self._take(8, "u64"))[0])

    def f64(self) -> float:
        return float(_F64.unpack(self._take(8, "f64"))[0])

    def array(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        raw = self._take(count * 8, "payload")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    def text(self) -> str:
        n = self.u32()
        start = self.offset
        raw = bytes(self._take(n, "text"))
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("bad-text", "Invalid UTF-8 string", offset=start)

    def finish(self) -> None:
        if self.offset != len(self._buf):
            raise FormatError(
                "trailing-bytes",
                f"{len(self._buf) - self.offset} unexpected trailing bytes",
                offset=self.offset,
            )
