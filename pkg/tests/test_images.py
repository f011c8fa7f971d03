import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voice2face.config import ImageConfig
from voice2face.data.images import (
    hflip,
    image_grid,
    load_png,
    preprocess_image,
    save_png,
)
from voice2face.errors import InvalidInputError


def test_resize_224_to_128(rng):
    raw = (rng.uniform(0, 1, size=(224, 224, 3)) * 255).astype(np.uint8)
    out = preprocess_image(raw, ImageConfig(resolution=128))
    assert out.pixels.shape == (3, 128, 128)
    assert out.pixels.min() >= -1.0 and out.pixels.max() <= 1.0


def test_constant_midgray_maps_to_zero():
    raw = np.full((64, 64, 3), 0.5, dtype=np.float32)
    out = preprocess_image(raw, ImageConfig(resolution=32))
    np.testing.assert_allclose(out.pixels, 0.0, atol=1e-6)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_flip_is_involution(seed):
    pixels = np.random.default_rng(seed).uniform(-1, 1, size=(3, 16, 16)).astype(np.float32)
    np.testing.assert_array_equal(hflip(hflip(pixels)), pixels)


def test_flip_applied_with_probability_half(rng):
    raw = (np.linspace(0, 1, 32 * 32 * 3).reshape(32, 32, 3) * 255).astype(np.uint8)
    cfg = ImageConfig(resolution=32)
    base = preprocess_image(raw, cfg).pixels
    flips = 0
    n = 400
    for _ in range(n):
        out = preprocess_image(raw, cfg, rng=rng, augment=True).pixels
        if not np.array_equal(out, base):
            flips += 1
    assert 0.4 < flips / n < 0.6


def test_non_square_rejected(rng):
    with pytest.raises(InvalidInputError):
        preprocess_image(np.zeros((64, 65, 3), dtype=np.uint8), ImageConfig(resolution=32))


def test_undersized_rejected():
    with pytest.raises(InvalidInputError):
        preprocess_image(np.zeros((16, 16, 3), dtype=np.uint8), ImageConfig(resolution=32))


def test_png_round_trip(tmp_path, rng):
    raw = (rng.uniform(0, 1, size=(48, 48, 3)) * 255).astype(np.uint8)
    path = str(tmp_path / "t.png")
    save_png(path, raw)
    loaded = load_png(path)
    np.testing.assert_array_equal(loaded, raw)


def test_image_grid_layout():
    imgs = np.zeros((6, 3, 8, 8), dtype=np.float32)
    grid = image_grid(imgs, n_cols=3, pad=2)
    assert grid.shape == (2 * 10 + 2, 3 * 10 + 2, 3)
