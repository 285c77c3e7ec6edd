# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

import numpy as np
import pytest

from slowtrack.kernels import image
from slowtrack.kernels.lib import InvalidInputError


def test_luma() -> None:
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 255, 255)
    rgb[0, 1] = (255, 0, 0)
    gray = image.luma(rgb)
    assert gray[0, 0] == pytest.approx(1.0)
    assert gray[0, 1] == pytest.approx(0.299)
    assert gray[1, 1] == 0.0
    np.testing.assert_allclose(image.luma(np.full((3, 3), 51, dtype=np.uint8)), 0.2)


def test_standardize() -> None:
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(5, 64))
    s = image.standardize(x)
    np.testing.assert_allclose(s.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(s.std(axis=-1), 1.0, rtol=1e-6)
    np.testing.assert_array_equal(image.standardize(np.full(64, 0.3)), np.zeros(64))
    assert image.is_flat(np.full((2, 64), 0.5)).all()
    assert not image.is_flat(x).any()


@pytest.mark.parametrize(
    "image_edge,patch_edge,stride,expected", [(32, 8, 6, 5), (14, 8, 6, 2), (8, 8, 3, 1), (5, 2, 2, 2)]
)
def test_grid_size(image_edge: int, patch_edge: int, stride: int, expected: int) -> None:
    assert image.grid_size(image_edge, patch_edge, stride) == expected


def test_grid_size_too_small() -> None:
    with pytest.raises(InvalidInputError, match="image-too-small"):
        image.grid_size(7, 8, 6)


def test_windows() -> None:
    img = np.arange(32 * 32, dtype=np.float64).reshape(32, 32)
    win = image.windows(img, 8, 6)
    assert win.shape == (5, 5, 8, 8)
    for i in range(5):
        for j in range(5):
            np.testing.assert_array_equal(win[i, j], img[6 * i : 6 * i + 8, 6 * j : 6 * j + 8])

    batch = np.stack([img, -img])
    assert image.windows(batch, 8, 6).shape == (2, 5, 5, 8, 8)


def test_crop_boxes_identity() -> None:
    rng = np.random.default_rng(1)
    img = rng.uniform(size=(64, 64))
    # A 32 x 32 box with its top-left corner at (10, 7).
    out = image.crop_boxes(img, np.array([10 + 16.0]), np.array([7 + 16.0]), np.array([32.0]), np.array([32.0]), 32)
    assert out.shape == (1, 32, 32)
    assert np.max(np.abs(out[0] - img[7:39, 10:42])) < 1e-9


def test_crop_boxes_outside() -> None:
    img = np.ones((40, 40))
    out = image.crop_boxes(img, np.array([500.0]), np.array([500.0]), np.array([32.0]), np.array([32.0]), 32)
    np.testing.assert_array_equal(out, np.zeros((1, 32, 32)))

    # Left half of the box is outside of the image.
    out = image.crop_boxes(img, np.array([0.0]), np.array([20.0]), np.array([32.0]), np.array([32.0]), 32)[0]
    np.testing.assert_array_equal(out[:, :16], 0.0)
    np.testing.assert_allclose(out[:, 16:], 1.0)


def test_shift_rotate() -> None:
    rng = np.random.default_rng(2)
    patch = rng.uniform(size=(8, 8))
    same = image.shift_rotate(patch, 0.0, 0.0, 0.0)
    np.testing.assert_array_equal(same, patch)
    assert same is not patch

    shifted = image.shift_rotate(patch, 1.0, 0.0, 0.0)
    np.testing.assert_allclose(shifted[:, 1:], patch[:, :-1], atol=1e-12)

    down = image.shift_rotate(patch, 0.0, 2.0, 0.0)
    np.testing.assert_allclose(down[2:, :], patch[:-2, :], atol=1e-12)

    turned = image.shift_rotate(patch, 0.0, 0.0, 90.0)
    assert turned.shape == patch.shape
    assert np.all((turned >= patch.min() - 1e-12) & (turned <= patch.max() + 1e-12))
