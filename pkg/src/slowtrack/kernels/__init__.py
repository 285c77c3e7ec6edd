# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Low-level Kernels
=================

Pure functions over :py:class:`numpy.ndarray`. The high-level modules in
:py:mod:`slowtrack` wrap these with typed containers; users who need raw arrays can call
them directly.

"""

from __future__ import annotations

__version__ = "0.1.0-dev"
