"""Nearest-neighbor mask propagation across video frames from frozen features,
scored with region IoU (J) and boundary F-measure (F) at patch resolution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .backbone import FeatureSet
from .errors import RejectedInput
from .segmentation import iou


@dataclass(frozen=True)
class PropagationConfig:
    n_prev: int = 7        # context frames
    top_k: int = 5         # neighbors per query patch
    radius: int = 12       # spatial search radius, patch cells (Chebyshev)
    temperature: float = 0.07  # softmax over the top-k similarities

    def __post_init__(self):
        if self.n_prev < 1 or self.top_k < 1:
            raise RejectedInput("n_prev and top_k must be >= 1")


@dataclass
class FrameSequence:
    frames: list[np.ndarray]           # images, all same resolution
    first_labels: np.ndarray           # pixel-level integer labels for frame 0
    gt_labels: list[np.ndarray] | None = None  # optional full ground truth

    def __post_init__(self):
        if not self.frames:
            raise RejectedInput("empty frame sequence")
        shapes = {f.shape for f in self.frames}
        if len(shapes) != 1:
            raise RejectedInput("all frames must share one resolution")
        if (self.first_labels > 0).sum() == 0:
            raise RejectedInput("frame 0 must contain at least one labeled instance")


def _normalize(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def propagate(
    seq_features: Sequence[FeatureSet],
    first_grid: np.ndarray,
    cfg: PropagationConfig = PropagationConfig(),
) -> list[np.ndarray]:
    """Propagate a patch-grid label map through a feature sequence.

    For each patch of frame t, candidate patches are those of the previous
    n_prev frames within the spatial radius; the top_k cosine-most-similar
    candidates vote with softmax(sim / temperature) weights on their soft
    labels. Frame 0 keeps its ground-truth labels throughout.
    """
    if len(seq_features) == 0:
        raise RejectedInput("empty context: no frames to propagate over")
    hp, wp = seq_features[0].grid
    if first_grid.shape != (hp, wp):
        raise RejectedInput("first-frame label grid does not match the feature grid")
    classes = np.unique(first_grid)
    n_classes = len(classes)
    class_index = {int(c): i for i, c in enumerate(classes)}

    feats = [_normalize(f.patches.astype(np.float64)).reshape(hp, wp, -1) for f in seq_features]

    soft0 = np.zeros((hp, wp, n_classes))
    for c, i in class_index.items():
        soft0[..., i] = first_grid == c
    soft_labels = [soft0]
    hard_labels = [first_grid.copy()]

    rows, cols = np.meshgrid(np.arange(hp), np.arange(wp), indexing="ij")
    for t in range(1, len(seq_features)):
        ctx = range(max(0, t - cfg.n_prev), t)
        soft_t = np.zeros((hp, wp, n_classes))
        for r in range(hp):
            for c in range(wp):
                within = (np.abs(rows - r) <= cfg.radius) & (np.abs(cols - c) <= cfg.radius)
                q = feats[t][r, c]
                sims, labels = [], []
                for s in ctx:
                    sims.append((feats[s][within] @ q))
                    labels.append(soft_labels[s][within])
                sims = np.concatenate(sims)
                labels = np.concatenate(labels)
                k = min(cfg.top_k, sims.size)
                top = np.argpartition(-sims, k - 1)[:k]
                w = np.exp((sims[top] - sims[top].max()) / cfg.temperature)
                w /= w.sum()
                soft_t[r, c] = w @ labels[top]
        soft_labels.append(soft_t)
        hard_labels.append(classes[np.argmax(soft_t, axis=-1)].astype(first_grid.dtype))
    return hard_labels


def propagate_sequence(
    seq: FrameSequence,
    encode: Callable[[np.ndarray], FeatureSet],
    patch_size: int,
    cfg: PropagationConfig = PropagationConfig(),
) -> list[np.ndarray]:
    from .segmentation import labels_to_patch_grid

    feats = [encode(frame) for frame in seq.frames]
    first_grid = labels_to_patch_grid(seq.first_labels, patch_size)
    if (first_grid > 0).sum() == 0:
        raise RejectedInput("frame-0 instance vanishes at patch resolution")
    return propagate(feats, first_grid, cfg)


def _instance_ids(grid: np.ndarray) -> list[int]:
    return [int(c) for c in np.unique(grid) if c != 0]


def j_measure(preds: Sequence[np.ndarray], gts: Sequence[np.ndarray]) -> float:
    """Mean region IoU over instances and frames (frame 0 is given, so skipped)."""
    if len(preds) != len(gts) or len(preds) < 2:
        raise RejectedInput("need aligned predictions and ground truth for >= 2 frames")
    instances = _instance_ids(gts[0])
    scores = [
        iou(p == inst, g == inst)
        for p, g in zip(preds[1:], gts[1:])
        for inst in instances
    ]
    return float(np.mean(scores))


def boundary_cells(mask: np.ndarray) -> np.ndarray:
    """Mask cells with at least one differing 4-neighbor (outside counts as background)."""
    m = mask.astype(bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return m & ~interior


def _match_within(a: np.ndarray, b: np.ndarray, tol: int) -> int:
    """Count cells of boundary a having some cell of boundary b within Chebyshev tol."""
    ra, ca = np.nonzero(a)
    rb, cb = np.nonzero(b)
    if ra.size == 0:
        return 0
    if rb.size == 0:
        return 0
    dr = np.abs(ra[:, None] - rb[None, :])
    dc = np.abs(ca[:, None] - cb[None, :])
    return int((np.maximum(dr, dc).min(axis=1) <= tol).sum())


def boundary_f(pred: np.ndarray, gt: np.ndarray, tol: int = 1) -> float:
    bp = boundary_cells(pred)
    bg = boundary_cells(gt)
    np_, ng = int(bp.sum()), int(bg.sum())
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    precision = _match_within(bp, bg, tol) / np_
    recall = _match_within(bg, bp, tol) / ng
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f_measure(preds: Sequence[np.ndarray], gts: Sequence[np.ndarray], tol: int = 1) -> float:
    """Mean boundary F-score over instances and frames (frame 0 skipped)."""
    if len(preds) != len(gts) or len(preds) < 2:
        raise RejectedInput("need aligned predictions and ground truth for >= 2 frames")
    instances = _instance_ids(gts[0])
    scores = [
        boundary_f(p == inst, g == inst, tol)
        for p, g in zip(preds[1:], gts[1:])
        for inst in instances
    ]
    return float(np.mean(scores))
