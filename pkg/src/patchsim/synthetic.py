"""Procedural texture corpus with exact per-pixel labels.

Each class has a distinct color/noise signature, so the classes are separable
by simple pixel statistics; region layouts compose 2-3 classes per image.
Also provides single-texture images (for classification-style protocols) and
translating-square video sequences with full ground truth.
"""

from __future__ import annotations

import numpy as np

from .errors import RejectedInput
from .video import FrameSequence

# Base colors per class id (1-based). Kept moderately close together, with
# per-pixel noise on top, so raw pixels separate classes but a random encoder
# does not trivially saturate; patch-mean statistics still identify the class.
_BASE = {
    1: (0.71, 0.36, 0.32),
    2: (0.32, 0.66, 0.38),
    3: (0.32, 0.42, 0.71),
    4: (0.71, 0.68, 0.32),
    5: (0.66, 0.36, 0.68),
    6: (0.32, 0.68, 0.68),
}
_NOISE = 0.055
_PATTERN = 0.13


def texture_tile(class_id: int, h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    """One (3, h, w) tile of the class texture with a random phase/noise draw."""
    if class_id not in _BASE:
        raise RejectedInput(f"no texture defined for class {class_id}")
    base = np.asarray(_BASE[class_id], dtype=np.float32).reshape(3, 1, 1)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    phase = rng.uniform(0, 2 * np.pi)
    if class_id == 1:
        pattern = rng.normal(0, 1.8 * _NOISE, size=(h, w))
    elif class_id == 2:
        pattern = _PATTERN * np.sin(2 * np.pi * yy / 4 + phase) + rng.normal(0, _NOISE, size=(h, w))
    elif class_id == 3:
        pattern = _PATTERN * (((yy // 2) + (xx // 2)) % 2 - 0.5) + rng.normal(0, _NOISE, size=(h, w))
    elif class_id == 4:
        pattern = _PATTERN * np.sin(2 * np.pi * xx / 4 + phase) + rng.normal(0, _NOISE, size=(h, w))
    elif class_id == 5:
        pattern = _PATTERN * np.sin(2 * np.pi * (xx + yy) / 6 + phase) + rng.normal(0, _NOISE, size=(h, w))
    else:
        coarse = rng.normal(0, 1.5 * _NOISE, size=(max(1, h // 4), max(1, w // 4)))
        pattern = np.kron(coarse, np.ones((4, 4)))[:h, :w] + rng.normal(0, _NOISE, size=(h, w))
    img = base + pattern[None].astype(np.float32)
    return np.clip(img, 0.02, 0.98).astype(np.float32)


def _region_layout(size: int, n_regions: int, rng: np.random.Generator) -> np.ndarray:
    """Integer region-id grid (values 0..n_regions-1) covering the image."""
    s = size
    lo, hi = s // 4, 3 * s // 4
    regions = np.zeros((s, s), dtype=np.int64)
    if n_regions == 1:
        return regions
    if n_regions == 2:
        kind = rng.integers(0, 3)
        if kind == 0:
            cut = int(rng.integers(lo, hi + 1))
            regions[:, cut:] = 1
        elif kind == 1:
            cut = int(rng.integers(lo, hi + 1))
            regions[cut:, :] = 1
        else:
            rh = int(rng.integers(s // 3, s // 2 + 1))
            rw = int(rng.integers(s // 3, s // 2 + 1))
            top = int(rng.integers(0, s - rh + 1))
            left = int(rng.integers(0, s - rw + 1))
            regions[top : top + rh, left : left + rw] = 1
    else:
        kind = rng.integers(0, 2)
        if kind == 0:
            c1 = int(rng.integers(lo, s // 2))
            c2 = int(rng.integers(s // 2 + 1, hi + 1))
            regions[:, c1:c2] = 1
            regions[:, c2:] = 2
        else:
            cut = int(rng.integers(lo, hi + 1))
            hcut = int(rng.integers(lo, hi + 1))
            regions[:, cut:] = 1
            regions[hcut:, cut:] = 2
    return regions


def synth_textures(
    n_images: int,
    n_classes: int,
    size: int,
    seed: int,
    regions: tuple[int, int] = (2, 3),
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Composite images of 2-3 texture regions with exact per-pixel class labels."""
    if n_classes < 2:
        raise RejectedInput("need at least two texture classes")
    if n_classes > len(_BASE):
        raise RejectedInput(f"at most {len(_BASE)} texture classes are defined")
    rng = np.random.default_rng(seed)
    items = []
    for _ in range(n_images):
        n_reg = int(rng.integers(regions[0], regions[1] + 1))
        n_reg = min(n_reg, n_classes)
        layout = _region_layout(size, n_reg, rng)
        classes = rng.choice(np.arange(1, n_classes + 1), size=n_reg, replace=False)
        image = np.zeros((3, size, size), dtype=np.float32)
        labels = np.zeros((size, size), dtype=np.int64)
        for region_id, class_id in enumerate(classes):
            tile = texture_tile(int(class_id), size, size, rng)
            sel = layout == region_id
            image[:, sel] = tile[:, sel]
            labels[sel] = int(class_id)
        items.append((image, labels))
    return items


def synth_single_textures(
    n_images: int, n_classes: int, size: int, seed: int
) -> list[tuple[np.ndarray, int]]:
    """Whole-image single-texture samples with an image-level class label."""
    if n_classes < 2:
        raise RejectedInput("need at least two texture classes")
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n_images):
        class_id = 1 + i % n_classes
        items.append((texture_tile(class_id, size, size, rng), class_id))
    return items


def synth_video(
    n_frames: int = 5,
    size: int = 32,
    seed: int = 0,
    square_px: int = 12,
    step_px: int = 4,
    classes: tuple[int, int] = (3, 1),
) -> FrameSequence:
    """A textured square translating over a static textured background.

    The square keeps its texture content across frames; ground-truth label grids
    accompany every frame (background 0, square 1).
    """
    if n_frames < 2:
        raise RejectedInput("need at least two frames")
    rng = np.random.default_rng(seed)
    bg_class, fg_class = classes
    background = texture_tile(bg_class, size, size, rng)
    square = texture_tile(fg_class, square_px, square_px, rng)
    max_shift = size - square_px
    top = int(rng.integers(0, max(1, max_shift // 2)))
    left0 = 0
    frames, gts = [], []
    for t in range(n_frames):
        left = min(left0 + t * step_px, max_shift)
        frame = background.copy()
        frame[:, top : top + square_px, left : left + square_px] = square
        labels = np.zeros((size, size), dtype=np.int64)
        labels[top : top + square_px, left : left + square_px] = 1
        frames.append(frame)
        gts.append(labels)
    return FrameSequence(frames=frames, first_labels=gts[0], gt_labels=gts)
