"""Report rendering: every CLI evaluation writes a JSON report, a delimited
table, and matplotlib figures next to each other in the output directory."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    return path


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_threshold_curve(thresholds, mious, optimal_t, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(thresholds, mious, marker="o")
    ax.axvline(optimal_t, color="tab:red", linestyle="--", label=f"optimal T={optimal_t:g}")
    ax.set_xlabel("threshold")
    ax.set_ylabel("mIoU")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def fig_similarity_distributions(d_intra, d_inter, overlap, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    centers = (d_intra.edges[:-1] + d_intra.edges[1:]) / 2
    width = float(np.diff(d_intra.edges).mean())
    ax.bar(centers, d_intra.densities, width=width, alpha=0.55, label="intra-object")
    ax.bar(centers, d_inter.densities, width=width, alpha=0.55, label="inter-object")
    ax.set_xlabel("cosine similarity")
    ax.set_ylabel("density")
    ax.set_title(f"overlap area O = {overlap:.3f}")
    ax.legend()
    return _finish(fig, path)


def fig_loss_curves(history: Sequence[dict], path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    steps = [h["step"] for h in history]
    for key in ("l_total", "l_rec", "l_cls", "l_pat"):
        ax.plot(steps, [h[key] for h in history], label=key)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def _to_hwc(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0, 1).transpose(1, 2, 0)


def fig_reconstruction_grid(masked_image, recons, diffs, layers, path) -> Path:
    n = len(recons)
    fig, axes = plt.subplots(2, n + 1, figsize=(1.6 * (n + 1), 3.4))
    axes[0, 0].imshow(_to_hwc(masked_image))
    axes[0, 0].set_title("input", fontsize=8)
    for i, (recon, layer) in enumerate(zip(recons, layers)):
        axes[0, i + 1].imshow(_to_hwc(recon))
        axes[0, i + 1].set_title(f"layer {layer}", fontsize=8)
    axes[1, 0].axis("off")
    for i, diff in enumerate(diffs):
        axes[1, i + 2].imshow(diff.mean(axis=0), cmap="magma")
        axes[1, i + 2].set_title(f"|{layers[i + 1]}-{layers[i]}|", fontsize=8)
    if diffs:
        axes[1, 1].axis("off")
    for ax in axes.ravel():
        ax.set_xticks([])
        ax.set_yticks([])
    return _finish(fig, path)


def fig_bars(names: Sequence[str], values: Sequence[float], ylabel: str, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.bar(range(len(names)), values, tick_label=list(names))
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)
    return _finish(fig, path)


def fig_frame_scores(j_scores, f_scores, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    frames = np.arange(1, len(j_scores) + 1)
    ax.plot(frames, j_scores, marker="o", label="J (region IoU)")
    ax.plot(frames, f_scores, marker="s", label="F (boundary)")
    ax.set_xlabel("frame")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def fig_montage(images: Sequence[np.ndarray], path, cols: int = 8, labels=None) -> Path:
    n = len(images)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(1.2 * cols, 1.3 * rows), squeeze=False)
    for i in range(rows * cols):
        ax = axes[i // cols][i % cols]
        ax.axis("off")
        if i < n:
            ax.imshow(_to_hwc(images[i]))
            if labels is not None:
                ax.set_title(str(labels[i]), fontsize=7)
    return _finish(fig, path)


def fig_heatmap(values: np.ndarray, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(3.4, 3))
    im = ax.imshow(values, cmap="viridis", vmin=-1, vmax=1)
    fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        ax.set_title(title, fontsize=9)
    ax.set_xticks([])
    ax.set_yticks([])
    return _finish(fig, path)
