# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Image Kernels
=============

Grayscale conversion, patch standardization, strided window views and bilinear
resampling. Images are ``float64`` arrays indexed ``[row, col]``; pixel ``i`` covers the
interval ``[i, i + 1)`` so its center sits at ``i + 0.5``.

"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .lib import _check, _check_positive

__all__ = [
    "LUMA_WEIGHTS",
    "STD_EPS",
    "FLAT_VARIANCE",
    "luma",
    "standardize",
    "is_flat",
    "grid_size",
    "windows",
    "crop_boxes",
    "shift_rotate",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
STD_EPS = 1e-8
FLAT_VARIANCE = 1e-6


def luma(rgb: np.ndarray) -> np.ndarray:
    """Convert an 8-bit ``H x W x 3`` (or ``H x W``) image into intensities in
    ``[0, 1]``."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim == 2:
        return arr / 255.0
    _check(
        arr.ndim == 3 and arr.shape[2] >= 3,
        "invalid-image",
        f"Expecting a grayscale or RGB image, got shape {arr.shape}.",
    )
    r, g, b = LUMA_WEIGHTS
    gray = r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]
    # Weights sum to one, rounding may not.
    return np.clip(gray / 255.0, 0.0, 1.0)


def standardize(x: np.ndarray) -> np.ndarray:
    """Per-vector standardization over the last axis: subtract the mean and divide by the
    standard deviation plus :py:data:`STD_EPS`. Flat vectors map to zero."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    std = np.sqrt(np.mean(centered * centered, axis=-1, keepdims=True))
    return centered / (std + STD_EPS)


def is_flat(x: np.ndarray) -> np.ndarray:
    """Whether each vector (last axis) has variance below :py:data:`FLAT_VARIANCE`."""
    return np.asarray(x, dtype=np.float64).var(axis=-1) < FLAT_VARIANCE


def grid_size(image_edge: int, patch_edge: int, stride: int) -> int:
    """Number of window positions along one axis."""
    _check_positive(stride, "stride")
    _check(
        image_edge >= patch_edge,
        "image-too-small",
        f"Image edge {image_edge} is smaller than the patch edge {patch_edge}.",
    )
    return (image_edge - patch_edge) // stride + 1


def windows(images: np.ndarray, edge: int, stride: int) -> np.ndarray:
    """Strided square windows over the last two axes.

    Parameters
    ----------
    images :
        Array of shape ``[..., H, W]``.
    edge :
        Window edge length.
    stride :
        Step between windows, in pixels (or cells).

    Returns
    -------
    A read-only view of shape ``[..., gh, gw, edge, edge]``.

    """
    images = np.asarray(images)
    gh = grid_size(images.shape[-2], edge, stride)
    gw = grid_size(images.shape[-1], edge, stride)
    view = sliding_window_view(images, (edge, edge), axis=(-2, -1))
    return view[..., : (gh - 1) * stride + 1 : stride, : (gw - 1) * stride + 1 : stride, :, :]


def crop_boxes(
    image: np.ndarray,
    cx: np.ndarray,
    cy: np.ndarray,
    width: np.ndarray,
    height: np.ndarray,
    out_edge: int,
) -> np.ndarray:
    """Bilinearly resample axis-aligned boxes into ``out_edge x out_edge`` templates.

    Boxes are given by centers ``(cx, cy)`` and sizes in pixels. Samples falling outside
    of the image read as zero.

    Returns
    -------
    Array of shape ``[n_boxes, out_edge, out_edge]``.

    """
    cx, cy, width, height = (
        np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (cx, cy, width, height)
    )
    steps = (np.arange(out_edge, dtype=np.float64) + 0.5) / out_edge
    # Continuous pixel coordinates of sample centers, shifted to index space.
    cols = (cx - width / 2)[:, None] + steps[None, :] * width[:, None] - 0.5
    rows = (cy - height / 2)[:, None] + steps[None, :] * height[:, None] - 0.5
    n = cx.shape[0]
    rr = np.broadcast_to(rows[:, :, None], (n, out_edge, out_edge))
    cc = np.broadcast_to(cols[:, None, :], (n, out_edge, out_edge))
    out = ndimage.map_coordinates(
        np.asarray(image, dtype=np.float64),
        [rr.ravel(), cc.ravel()],
        order=1,
        mode="grid-constant",
        cval=0.0,
    )
    return out.reshape(n, out_edge, out_edge)


def shift_rotate(patch: np.ndarray, dx: float, dy: float, angle_deg: float) -> np.ndarray:
    """Translate by ``(dx, dy)`` pixels and rotate by ``angle_deg`` around the patch
    center with bilinear interpolation; borders are replicated."""
    patch = np.asarray(patch, dtype=np.float64)
    if dx == 0 and dy == 0 and angle_deg == 0:
        return patch.copy()
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    # Output -> input mapping: inverse rotation about the center, then inverse shift.
    inv = np.array([[c, s], [-s, c]])
    center = (np.array(patch.shape, dtype=np.float64) - 1.0) / 2.0
    offset = center - inv @ (center + np.array([dy, dx]))
    return ndimage.affine_transform(patch, inv, offset=offset, order=1, mode="nearest")
