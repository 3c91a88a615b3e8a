"""Image array helpers.

Images are float32 numpy arrays of shape (3, H, W) with values in [0, 1].
Label grids are integer numpy arrays of shape (H, W); 0 means background.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import RejectedInput


def validate_image(img: np.ndarray) -> np.ndarray:
    if img.ndim != 3 or img.shape[0] != 3:
        raise RejectedInput(f"expected (3, H, W) image, got shape {tuple(img.shape)}")
    if not np.isfinite(img).all():
        raise RejectedInput("image contains non-finite values")
    return img


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(img: np.ndarray, path) -> None:
    validate_image(img)
    arr = np.clip(img, 0.0, 1.0).transpose(1, 2, 0)
    Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8)).save(path)


def load_label_grid(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "I", "I;16"):
            im = im.convert("L")
        arr = np.asarray(im)
    return arr.astype(np.int64)


def save_label_grid(grid: np.ndarray, path) -> None:
    if grid.min() < 0 or grid.max() > 255:
        raise RejectedInput("label grid values must fit in [0, 255] for PNG storage")
    Image.fromarray(grid.astype(np.uint8), mode="L").save(path)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (C, H, W) float image with bilinear sampling (half-pixel centers)."""
    c, h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[None, :, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, None, :]
    top = img[:, y0][:, :, x0] * (1 - wx) + img[:, y0][:, :, x1] * wx
    bot = img[:, y1][:, :, x0] * (1 - wx) + img[:, y1][:, :, x1] * wx
    out = top * (1 - wy) + bot * wy
    return out.astype(img.dtype)


def resize_nearest(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (H, W) label grid with nearest-neighbor sampling."""
    h, w = grid.shape
    if (h, w) == (out_h, out_w):
        return grid.copy()
    ys = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    xs = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    return grid[ys][:, xs]
