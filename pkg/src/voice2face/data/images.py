"""Face image loading and preprocessing.

Images enter as pre-cropped square face crops (detection and alignment
happen upstream) and leave as CHW float32 tensors in [-1, 1] at the
configured resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from ..config import ImageConfig
from ..errors import InvalidInputError


@dataclass
class FaceImage:
    """Square RGB face, channels-first, values in [-1, 1]."""

    pixels: np.ndarray  # float32, shape (3, H, W)

    @property
    def resolution(self) -> int:
        return self.pixels.shape[1]


def _to_unit_float(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw)
    if raw.ndim == 2:
        raw = np.stack([raw] * 3, axis=-1)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise InvalidInputError(f"expected HWC RGB image, got shape {raw.shape}")
    if raw.dtype == np.uint8:
        return raw.astype(np.float32) / 255.0
    return raw.astype(np.float32)


def resize_square(unit: np.ndarray, target: int) -> np.ndarray:
    """Antialiased bilinear resize of an HxWx3 float image in [0, 1]."""
    if unit.shape[0] == target:
        return unit
    t = torch.from_numpy(np.ascontiguousarray(unit.transpose(2, 0, 1)))[None]
    out = F.interpolate(t, size=(target, target), mode="bilinear", antialias=True, align_corners=False)
    return out[0].numpy().transpose(1, 2, 0)


def hflip(pixels: np.ndarray) -> np.ndarray:
    """Mirror a CHW image along its width axis."""
    return np.ascontiguousarray(pixels[..., ::-1])


def preprocess_image(
    raw: np.ndarray,
    config: ImageConfig,
    rng: np.random.Generator | None = None,
    augment: bool = False,
) -> FaceImage:
    """Resize a square face crop and map it to [-1, 1].

    With ``augment`` enabled a horizontal flip is applied with
    probability 0.5, drawn from ``rng``.

    Raises:
        InvalidInputError: non-square input or input smaller than the
            target resolution.
    """
    unit = _to_unit_float(raw)
    h, w = unit.shape[:2]
    if h != w:
        raise InvalidInputError(f"face crop must be square, got {h}x{w}")
    if h < config.resolution:
        raise InvalidInputError(
            f"face crop {h}x{w} smaller than target {config.resolution}"
        )
    unit = resize_square(unit, config.resolution)
    pixels = np.ascontiguousarray(unit.transpose(2, 0, 1)) * 2.0 - 1.0
    pixels = np.clip(pixels, -1.0, 1.0).astype(np.float32)
    if augment:
        if rng is None:
            raise InvalidInputError("augment=True requires an rng")
        if rng.random() < 0.5:
            pixels = hflip(pixels)
    return FaceImage(pixels=pixels)


def load_png(path: str) -> np.ndarray:
    """Read an image file as HWC uint8 RGB."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_png(path: str, pixels: np.ndarray) -> None:
    """Write a CHW float image in [-1, 1] (or HWC uint8) as PNG."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        if arr.ndim == 3 and arr.shape[0] == 3:
            arr = arr.transpose(1, 2, 0)
        arr = np.clip((arr + 1.0) * 127.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def image_grid(images: np.ndarray, n_cols: int, pad: int = 2) -> np.ndarray:
    """Assemble [N, 3, H, W] images in [-1, 1] into one HWC uint8 mosaic."""
    images = np.asarray(images)
    n, _, h, w = images.shape
    n_rows = -(-n // n_cols)
    canvas = np.full(
        (n_rows * (h + pad) + pad, n_cols * (w + pad) + pad, 3), 255, dtype=np.uint8
    )
    for idx in range(n):
        r, c = divmod(idx, n_cols)
        tile = np.clip((images[idx].transpose(1, 2, 0) + 1.0) * 127.5, 0, 255).astype(np.uint8)
        y, x = pad + r * (h + pad), pad + c * (w + pad)
        canvas[y : y + h, x : x + w] = tile
    return canvas
