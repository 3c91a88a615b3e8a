"""Zero-shot segmentation from a single prompted patch.

A clicked point selects a patch token; its cosine-similarity map against all
patch tokens is thresholded (strictly) into a binary patch-grid mask. Sweeping
the threshold over an annotated set yields mIoU per threshold and the optimum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backbone import FeatureSet
from .errors import RejectedInput
from .images import resize_nearest


@dataclass(frozen=True)
class PromptPoint:
    """Pixel coordinates in the evaluation-resolution image."""

    x: int
    y: int

    def patch_index(self, patch_size: int) -> tuple[int, int]:
        return (self.y // patch_size, self.x // patch_size)


@dataclass
class SimilarityMap:
    values: np.ndarray           # (H_p, W_p), in [-1, 1]
    query: tuple[int, int]       # (row, col)


@dataclass
class SegmentationMask:
    grid: np.ndarray             # (H_p, W_p) uint8
    threshold: float

    def to_pixels(self, patch_size: int) -> np.ndarray:
        return np.kron(self.grid, np.ones((patch_size, patch_size), dtype=np.uint8))

    @property
    def area(self) -> int:
        return int(self.grid.sum())


def similarity_map(features: FeatureSet, query: tuple[int, int]) -> SimilarityMap:
    """Cosine similarity of the query patch token against every patch token."""
    hp, wp = features.grid
    row, col = query
    if not (0 <= row < hp and 0 <= col < wp):
        raise RejectedInput(f"query {query} outside patch grid {features.grid}")
    patches = features.patches.astype(np.float64)
    norms = np.linalg.norm(patches, axis=1)
    q = patches[row * wp + col]
    qn = np.linalg.norm(q)
    values = np.zeros(hp * wp)
    if qn == 0 or (norms == 0).any():
        warnings.warn("zero-norm patch token: similarity defined as 0 there", stacklevel=2)
    if qn > 0:
        ok = norms > 0
        values[ok] = (patches[ok] @ q) / (norms[ok] * qn)
    return SimilarityMap(values.reshape(hp, wp).astype(np.float32), (row, col))


def threshold_segment(smap: SimilarityMap, threshold: float) -> SegmentationMask:
    """Cell is foreground iff its similarity is strictly above the threshold."""
    if not -1.0 <= threshold <= 1.0:
        raise RejectedInput("threshold must be in [-1, 1]")
    return SegmentationMask((smap.values > threshold).astype(np.uint8), float(threshold))


def select_query(gt_mask: np.ndarray, patch_size: int) -> PromptPoint:
    """Deterministic prompt: the on-mask pixel nearest the mask centroid
    (ties: smallest row, then column)."""
    ys, xs = np.nonzero(gt_mask)
    if ys.size == 0:
        raise RejectedInput("ground-truth mask is empty")
    cy, cx = ys.mean(), xs.mean()
    d2 = (ys - cy) ** 2 + (xs - cx) ** 2
    best = np.lexsort((xs, ys, d2))[0]
    return PromptPoint(x=int(xs[best]), y=int(ys[best]))


def binary_mask_to_patch_grid(mask: np.ndarray, patch_size: int) -> np.ndarray:
    """Pixel mask -> patch grid: a patch is foreground iff >50% of its pixels are."""
    h, w = mask.shape
    if h % patch_size or w % patch_size:
        raise RejectedInput("mask size not divisible by patch size")
    hp, wp = h // patch_size, w // patch_size
    blocks = mask.reshape(hp, patch_size, wp, patch_size).astype(np.float64)
    frac = blocks.mean(axis=(1, 3))
    return (frac > 0.5).astype(np.uint8)


def labels_to_patch_grid(labels: np.ndarray, patch_size: int) -> np.ndarray:
    """Integer label grid -> patch grid by plurality (ties to the smaller label,
    so a 50/50 foreground/background patch stays background)."""
    h, w = labels.shape
    if h % patch_size or w % patch_size:
        raise RejectedInput("label grid size not divisible by patch size")
    hp, wp = h // patch_size, w // patch_size
    out = np.zeros((hp, wp), dtype=np.int64)
    blocks = labels.reshape(hp, patch_size, wp, patch_size).swapaxes(1, 2)
    for r in range(hp):
        for c in range(wp):
            out[r, c] = np.bincount(blocks[r, c].ravel()).argmax()
    return out


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    p = pred.astype(bool)
    g = gt.astype(bool)
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


def miou(preds: Sequence[np.ndarray], gts: Sequence[np.ndarray]) -> float:
    """Mean IoU over per-instance binary masks."""
    if len(preds) != len(gts) or len(preds) == 0:
        raise RejectedInput("need matching, nonempty prediction/ground-truth lists")
    return float(np.mean([iou(p, g) for p, g in zip(preds, gts)]))


def patch_index_for_point(
    x: float, y: float, width: int, height: int, grid: tuple[int, int]
) -> tuple[int, int]:
    """Map a point in original-image pixels to a patch index on the feature grid."""
    if not (0 <= x < width and 0 <= y < height):
        raise RejectedInput(f"point ({x}, {y}) outside image {width}x{height}")
    hp, wp = grid
    row = min(hp - 1, int(y / height * hp))
    col = min(wp - 1, int(x / width * wp))
    return (row, col)


def rle_encode(grid: np.ndarray) -> list[int]:
    """Row-major run lengths, alternating and starting with the zero-run."""
    flat = np.asarray(grid).reshape(-1).astype(np.uint8)
    runs: list[int] = []
    value = 0
    run = 0
    for cell in flat:
        if cell == value:
            run += 1
        else:
            runs.append(run)
            value = 1 - value
            run = 1
    runs.append(run)
    return runs


def rle_decode(runs: Sequence[int], shape: tuple[int, int]) -> np.ndarray:
    total = int(np.prod(shape))
    if sum(runs) != total:
        raise RejectedInput(f"run lengths sum to {sum(runs)}, expected {total}")
    out = np.zeros(total, dtype=np.uint8)
    pos = 0
    value = 0
    for run in runs:
        if value:
            out[pos : pos + run] = 1
        pos += run
        value = 1 - value
    return out.reshape(shape)


def segment_point(
    features: FeatureSet,
    x: float,
    y: float,
    width: int,
    height: int,
    threshold: float,
) -> tuple[SegmentationMask, SimilarityMap]:
    """Shared click-to-mask path used by both the offline CLI and the service."""
    query = patch_index_for_point(x, y, width, height, features.grid)
    smap = similarity_map(features, query)
    return threshold_segment(smap, threshold), smap


@dataclass
class SweepResult:
    thresholds: list[float]
    miou_per_threshold: list[float]
    per_class: dict[int, list[float]]
    optimal_threshold: float
    optimal_miou: float
    n_instances: int
    resolution: int | None
    notes: str = field(
        default="prompt = mask pixel nearest the instance centroid; "
        "ground truth projected to the patch grid by the >50% pixel rule"
    )

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.thresholds, self.miou_per_threshold))


def threshold_sweep(
    items: Sequence,
    provider,
    thresholds: Sequence[float],
) -> SweepResult:
    """Per-threshold mIoU over all annotated instances.

    items: DatasetItems with integer label grids; every nonzero label in an
    image is one prompted instance. The provider supplies features (live or
    cached) plus the evaluation resolution; ground truth is rescaled to match.
    mIoU averages IoU over instances within each class, then over classes.
    """
    if len(thresholds) == 0:
        raise RejectedInput("threshold list is empty")
    if len(items) == 0:
        raise RejectedInput("dataset is empty")
    thresholds = [float(t) for t in thresholds]
    resolution = getattr(provider, "resolution", None)
    per_class: dict[int, list[list[float]]] = {}
    n_instances = 0
    for item in items:
        labels = item.labels
        if labels is None:
            continue
        if resolution is not None and labels.shape != (resolution, resolution):
            labels = resize_nearest(labels, resolution, resolution)
        feats = provider.features_for(item)
        patch_size = labels.shape[0] // feats.grid[0]
        for class_id in sorted(int(c) for c in np.unique(labels) if c != 0):
            gt_pixels = (labels == class_id).astype(np.uint8)
            gt_grid = binary_mask_to_patch_grid(gt_pixels, patch_size)
            prompt = select_query(gt_pixels, patch_size)
            smap = similarity_map(feats, prompt.patch_index(patch_size))
            ious = [iou(threshold_segment(smap, t).grid, gt_grid) for t in thresholds]
            per_class.setdefault(class_id, []).append(ious)
            n_instances += 1
    if n_instances == 0:
        raise RejectedInput("dataset has no annotated instances")
    class_means = {
        cid: np.asarray(instance_ious).mean(axis=0) for cid, instance_ious in per_class.items()
    }
    miou_per_t = np.stack(list(class_means.values())).mean(axis=0)
    best = int(np.argmax(miou_per_t))
    return SweepResult(
        thresholds=thresholds,
        miou_per_threshold=[float(v) for v in miou_per_t],
        per_class={cid: [float(v) for v in vals] for cid, vals in class_means.items()},
        optimal_threshold=thresholds[best],
        optimal_miou=float(miou_per_t[best]),
        n_instances=n_instances,
        resolution=resolution,
    )
