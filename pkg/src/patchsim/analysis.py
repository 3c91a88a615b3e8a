"""Discriminability analyses: intra/inter-object similarity distributions and
their overlap, kNN over frozen features with selectable head, one-shot
threshold classification (F1), and feature-variance stability."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .augmentation import MaskSpec, apply_mask, block_mask, random_resized_crop
from .backbone import FeatureSet
from .errors import RejectedInput


class HeadType(enum.Enum):
    CLS = "CLS"
    PAT = "PAT"          # mean of patch tokens
    HYBER = "Hyber"      # concatenation of CLS and the patch mean


def head_vector(features: FeatureSet, head: HeadType) -> np.ndarray:
    if head is HeadType.CLS:
        return features.cls
    pat_mean = features.patches.mean(axis=0)
    if head is HeadType.PAT:
        return pat_mean
    return np.concatenate([features.cls, pat_mean])


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def pair_similarities(
    features: FeatureSet,
    patch_labels: np.ndarray,
    kind: str,
    budget: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Cosine similarities of labeled patch pairs within one image.

    kind="intra": both patches share a nonzero label; kind="inter": both are
    labeled (nonzero) but differently. Background (label 0) never contributes.
    """
    if kind not in ("intra", "inter"):
        raise RejectedInput(f"kind must be 'intra' or 'inter', got {kind!r}")
    labels = np.asarray(patch_labels).reshape(-1)
    if labels.shape[0] != features.patches.shape[0]:
        raise RejectedInput("patch labels do not match the feature grid")
    vecs = _normalize_rows(features.patches.astype(np.float64))
    idx = np.nonzero(labels > 0)[0]
    if idx.size < 2:
        return np.empty(0)
    li = labels[idx]
    ii, jj = np.triu_indices(idx.size, k=1)
    same = li[ii] == li[jj]
    keep = same if kind == "intra" else ~same
    ii, jj = ii[keep], jj[keep]
    if budget is not None and ii.size > budget:
        sel = np.random.default_rng(seed).choice(ii.size, size=budget, replace=False)
        ii, jj = ii[sel], jj[sel]
    return np.einsum("ij,ij->i", vecs[idx[ii]], vecs[idx[jj]])


def collect_pair_similarities(
    pairs: Sequence[tuple[FeatureSet, np.ndarray]],
    kind: str,
    budget: int = 100_000,
    seed: int = 0,
) -> np.ndarray:
    """Pool within-image pair similarities over an image set, subsampled to a budget."""
    chunks = [
        pair_similarities(f, labels, kind, budget=budget, seed=seed + i)
        for i, (f, labels) in enumerate(pairs)
    ]
    sims = np.concatenate([c for c in chunks if c.size > 0]) if chunks else np.empty(0)
    if sims.size > budget:
        sims = np.random.default_rng(seed).choice(sims, size=budget, replace=False)
    return sims


@dataclass
class SimilarityDistribution:
    """Normalized histogram of cosine values over [-1, 1]."""

    edges: np.ndarray       # (n_bins + 1,), strictly increasing
    densities: np.ndarray   # (n_bins,), integrates to 1
    kind: str
    count: int

    @property
    def mean(self) -> float:
        centers = (self.edges[:-1] + self.edges[1:]) / 2
        widths = np.diff(self.edges)
        return float((centers * self.densities * widths).sum())


def similarity_histogram(samples: np.ndarray, kind: str, n_bins: int = 50) -> SimilarityDistribution:
    if samples.size == 0:
        raise RejectedInput("no similarity samples to bin")
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    densities, _ = np.histogram(np.clip(samples, -1.0, 1.0), bins=edges, density=True)
    return SimilarityDistribution(edges=edges, densities=densities, kind=kind, count=int(samples.size))


@dataclass
class OverlapStats:
    overlap: float
    mean_intra: float
    mean_inter: float


def overlap_area(d1: SimilarityDistribution, d2: SimilarityDistribution) -> float:
    """Shared area of two normalized histograms: sum of min(p1, p2) * bin width."""
    if d1.edges.shape != d2.edges.shape or not np.allclose(d1.edges, d2.edges):
        raise RejectedInput("distributions must share identical binning")
    widths = np.diff(d1.edges)
    return float((np.minimum(d1.densities, d2.densities) * widths).sum())


def overlap_stats(intra: np.ndarray, inter: np.ndarray, n_bins: int = 50) -> OverlapStats:
    d_intra = similarity_histogram(intra, "intra", n_bins)
    d_inter = similarity_histogram(inter, "inter", n_bins)
    return OverlapStats(
        overlap=overlap_area(d_intra, d_inter),
        mean_intra=float(intra.mean()),
        mean_inter=float(inter.mean()),
    )


def knn_classify(
    train_vectors: np.ndarray,
    train_labels: Sequence[int],
    query: np.ndarray,
    k: int,
) -> int:
    """Majority label of the k cosine-nearest neighbors; vote ties fall to the
    nearest neighbor whose label is among the tied labels."""
    train_vectors = np.asarray(train_vectors, dtype=np.float64)
    labels = np.asarray(train_labels)
    n = train_vectors.shape[0]
    if n == 0:
        raise RejectedInput("empty training set")
    if not 1 <= k <= n:
        raise RejectedInput(f"k must be in [1, {n}], got {k}")
    sims = _normalize_rows(train_vectors) @ _normalize_rows(
        np.asarray(query, dtype=np.float64)[None]
    )[0]
    order = np.argsort(-sims, kind="stable")[:k]
    votes: dict[int, int] = {}
    for lab in labels[order]:
        votes[int(lab)] = votes.get(int(lab), 0) + 1
    top = max(votes.values())
    tied = {lab for lab, v in votes.items() if v == top}
    if len(tied) == 1:
        return tied.pop()
    for idx in order:
        if int(labels[idx]) in tied:
            return int(labels[idx])
    raise AssertionError("unreachable")


def knn_accuracy(
    train_vectors: np.ndarray,
    train_labels: Sequence[int],
    test_vectors: np.ndarray,
    test_labels: Sequence[int],
    k: int,
) -> float:
    preds = [knn_classify(train_vectors, train_labels, q, k) for q in test_vectors]
    return float(np.mean(np.asarray(preds) == np.asarray(test_labels)))


DEFAULT_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 10))


def f1_score(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def oneshot_f1(
    pair_sims: np.ndarray,
    same_class: np.ndarray,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Binary same-class prediction by thresholding pair cosine similarity.

    Returns (best F1, threshold achieving it, per-threshold table). Requires at
    least one positive and one negative pair.
    """
    pair_sims = np.asarray(pair_sims, dtype=np.float64)
    same = np.asarray(same_class, dtype=bool)
    if pair_sims.shape != same.shape:
        raise RejectedInput("similarity and ground-truth arrays must align")
    if not (same.any() and (~same).any()):
        raise RejectedInput("need at least one positive and one negative pair")
    table = []
    for t in thresholds:
        pred = pair_sims > t
        tp = int(np.sum(pred & same))
        fp = int(np.sum(pred & ~same))
        fn = int(np.sum(~pred & same))
        table.append((float(t), f1_score(tp, fp, fn)))
    best_t, best_f1 = max(table, key=lambda row: row[1])
    return best_f1, best_t, table


def pairwise_cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _normalize_rows(np.asarray(a, dtype=np.float64)) @ _normalize_rows(
        np.asarray(b, dtype=np.float64)
    ).T


def feature_variance(
    image: np.ndarray,
    encode: Callable[[np.ndarray], FeatureSet],
    mode: str,
    n_views: int = 128,
    seed: int = 0,
    patch_size: int = 4,
    mask_ratio: float = 0.5,
    crop_scale: tuple[float, float] = (0.4, 1.0),
) -> float:
    """Stability of last-block outputs under view perturbations.

    mode="crop_CLS": per-dimension sample variance of the CLS vector across
    random crops, averaged over dimensions. mode="mask_PAT": variance of
    same-position patch vectors across noise-masked views, averaged over
    positions and dimensions. Raw (unnormalized) outputs.
    """
    if n_views < 2:
        raise RejectedInput("need at least two views")
    if mode not in ("crop_CLS", "mask_PAT"):
        raise RejectedInput(f"unknown mode {mode!r}")
    root = np.random.SeedSequence(seed)
    outputs = []
    if mode == "crop_CLS":
        size = image.shape[1]
        for s in root.spawn(n_views):
            view = random_resized_crop(
                image, size, crop_scale, np.random.default_rng(s),
                aspect_range=(1.0, 1.0) if crop_scale == (1.0, 1.0) else (3 / 4, 4 / 3),
            )
            outputs.append(encode(view).cls)
    else:
        grid = (image.shape[1] // patch_size, image.shape[2] // patch_size)
        for s in root.spawn(n_views):
            mask_s, noise_s = s.spawn(2)
            spec = MaskSpec(
                patch_mask=block_mask(grid, mask_ratio, mask_s),
                fill="noise",
                patch_size=patch_size,
                ratio=mask_ratio,
            )
            outputs.append(encode(apply_mask(image, spec, noise_s)).patches)
    stacked = np.stack(outputs)  # (n_views, ...) CLS: (n, C); PAT: (n, P, C)
    return float(stacked.var(axis=0, ddof=1).mean())
