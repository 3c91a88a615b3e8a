"""Umbrella command-line interface.

Every evaluation writes a JSON report plus a CSV table and matplotlib figures
alongside it. Operational failures exit nonzero with a machine-readable error
report on stderr.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, reporting, segmentation, synthetic, video
from .config import RunConfig, TrainConfig
from .data import CachedFeatures, LiveFeatures, cache_features, load_dataset, write_dataset
from .errors import CacheConflict, DatasetLoadError, RejectedInput, StateError, TrainingDivergence
from .images import load_image, load_label_grid, save_image, save_label_grid
from .training import load_model, reconstruct_series, train

_OPERATIONAL = (
    RejectedInput,
    StateError,
    TrainingDivergence,
    CacheConflict,
    DatasetLoadError,
    FileNotFoundError,
    OSError,
)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _OPERATIONAL as exc:
            report = {"error": type(exc).__name__, "detail": str(exc)}
            print(json.dumps(report), file=sys.stderr)
            sys.exit(1)

    return wrapper


def parse_thresholds(spec: str) -> list[float]:
    """Parse "start:stop:step" (inclusive) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise RejectedInput(f"bad threshold range {spec!r}, want start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise RejectedInput("threshold step must be positive")
        n = int(round((stop - start) / step))
        values = [round(start + i * step, 10) for i in range(n + 1)]
        return [v for v in values if v <= stop + 1e-9]
    return [float(p) for p in spec.split(",") if p.strip()]


def _load_run_config(config_path, **overrides) -> RunConfig:
    cfg = RunConfig.from_yaml(config_path) if config_path else RunConfig()
    train_kw = {k: v for k, v in overrides.items() if v is not None and k in
                {f.name for f in dataclasses.fields(TrainConfig)}}
    loss_kw = {k: v for k, v in overrides.items() if v is not None and k in ("rec", "cls", "pat")}
    if train_kw:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, **train_kw))
    if loss_kw:
        cfg = dataclasses.replace(cfg, losses=dataclasses.replace(cfg.losses, **loss_kw))
    return cfg


def _provider(checkpoint, cache, resolution, layer, net):
    if cache:
        return CachedFeatures(cache), CachedFeatures(cache).manifest.get("checkpoint_hash", "")
    if not checkpoint:
        raise RejectedInput("pass --checkpoint or --cache")
    model, manifest = load_model(checkpoint, net=net)
    return LiveFeatures(model, resolution, layer), manifest["weights_hash"]


def _sidecar(out: Path, suffix: str) -> Path:
    return out.parent / (out.stem + suffix)


@click.group()
def main():
    """Self-supervised patch-similarity toolkit: pretraining, prompt
    segmentation, analyses, video propagation, and the demo service."""


@main.command()
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--n", default=2000, show_default=True)
@click.option("--classes", default=4, show_default=True)
@click.option("--size", default=32, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--kind", type=click.Choice(["composite", "single", "video"]), default="composite")
@click.option("--frames", default=5, show_default=True, help="frames per video sequence")
@click.option("--sequences", default=4, show_default=True, help="video sequence count")
@click.option("--val-frac", default=0.1, show_default=True)
@cli_errors
def synth(out, n, classes, size, seed, kind, frames, sequences, val_frac):
    """Generate a synthetic texture dataset with exact masks."""
    out.mkdir(parents=True, exist_ok=True)
    if kind == "video":
        for s in range(sequences):
            seq = synthetic.synth_video(n_frames=frames, size=size, seed=seed + s)
            seq_dir = out / f"seq_{s:03d}"
            (seq_dir / "frames").mkdir(parents=True, exist_ok=True)
            (seq_dir / "masks").mkdir(parents=True, exist_ok=True)
            for t, (frame, labels) in enumerate(zip(seq.frames, seq.gt_labels)):
                save_image(frame, seq_dir / "frames" / f"{t:04d}.png")
                save_label_grid(labels, seq_dir / "masks" / f"{t:04d}.png")
        click.echo(f"wrote {sequences} sequences to {out}")
        return
    if kind == "single":
        items = synthetic.synth_single_textures(n, classes, size, seed)
        manifest = write_dataset(items, out, val_frac=val_frac, seed=seed)
        reporting.fig_montage(
            [img for img, _ in items[:24]], out / "montage.png",
            labels=[lab for _, lab in items[:24]],
        )
    else:
        items = synthetic.synth_textures(n, classes, size, seed)
        manifest = write_dataset(items, out, val_frac=val_frac, seed=seed)
        reporting.fig_montage([img for img, _ in items[:24]], out / "montage.png")
    click.echo(f"wrote {len(items)} images; manifest at {manifest}")


@main.command(name="convert-coco")
@click.option("--annotations", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--images", "images_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--val-frac", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@cli_errors
def convert_coco_cmd(annotations, images_dir, out, val_frac, seed):
    """Convert COCO polygon annotations into the native mask/manifest layout."""
    from .data import convert_coco

    manifest = convert_coco(annotations, images_dir, out, val_frac=val_frac, seed=seed)
    click.echo(f"manifest at {manifest}")


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--epochs", type=int)
@click.option("--batch-size", "batch_size", type=int)
@click.option("--seed", type=int)
@click.option("--checkpoint-every", "checkpoint_every", type=int)
@click.option("--warmup-frac", "warmup_frac", type=float)
@click.option("--rec/--no-rec", default=None, help="toggle the reconstruction loss")
@click.option("--cls/--no-cls", default=None, help="toggle the global contrast loss")
@click.option("--pat/--no-pat", default=None, help="toggle the patch distillation loss")
@click.option("--resume", type=click.Path(exists=True, path_type=Path))
@click.option("--log-every", default=20, show_default=True)
@cli_errors
def pretrain(data_path, out, config_path, epochs, batch_size, seed, checkpoint_every,
             warmup_frac, rec, cls, pat, resume, log_every):
    """Run self-supervised pretraining and write checkpoints plus loss reports."""
    cfg = _load_run_config(
        config_path, epochs=epochs, batch_size=batch_size, seed=seed,
        checkpoint_every=checkpoint_every, warmup_frac=warmup_frac,
        rec=rec, cls=cls, pat=pat,
    )
    items = load_dataset(data_path, split="train")
    images = [item.image for item in items]
    result = train(images, cfg, out, resume=resume, log_every=log_every)
    cfg.to_yaml(out / "config.yaml")
    reporting.write_csv(
        out / "loss_history.csv",
        ["step", "lr", "ema_momentum", "l_rec", "l_cls", "l_pat", "l_total"],
        [[h[k] for k in ("step", "lr", "ema_momentum", "l_rec", "l_cls", "l_pat", "l_total")]
         for h in result.history],
    )
    reporting.fig_loss_curves(result.history, out / "loss_curves.png")
    click.echo(f"final checkpoint: {result.checkpoints[-1]}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--split", default=None)
@click.option("--resolution", type=int, default=None)
@click.option("--layer", type=int, default=None)
@click.option("--net", type=click.Choice(["student", "teacher"]), default="teacher")
@click.option("--overwrite", is_flag=True)
@cli_errors
def cache(checkpoint, dataset, out, split, resolution, layer, net, overwrite):
    """Precompute and store features for a dataset."""
    model, manifest = load_model(checkpoint, net=net)
    items = load_dataset(dataset, split=split)
    cache_features(items, model, manifest["weights_hash"], out,
                   resolution=resolution, layer=layer, overwrite=overwrite)
    click.echo(f"cached {len(items)} items to {out}")


def _eval_seg_options(fn):
    fn = click.option("--checkpoint", type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--cache", "cache_dir", type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--split", default="val", show_default=True)(fn)
    fn = click.option("--resolution", type=int, default=480, show_default=True)(fn)
    fn = click.option("--layer", type=int, default=None)(fn)
    fn = click.option("--net", type=click.Choice(["student", "teacher"]), default="teacher")(fn)
    fn = click.option("--out", required=True, type=click.Path(path_type=Path))(fn)
    return fn


@main.command(name="eval-seg")
@_eval_seg_options
@click.option("--thresholds", default="0:0.9:0.1", show_default=True)
@cli_errors
def eval_seg(checkpoint, cache_dir, dataset, split, resolution, layer, net, out, thresholds):
    """Zero-shot prompt segmentation: threshold sweep and mIoU."""
    provider, ckpt_hash = _provider(checkpoint, cache_dir, resolution, layer, net)
    items = load_dataset(dataset, split=split)
    t_list = parse_thresholds(thresholds)
    result = segmentation.threshold_sweep(items, provider, t_list)
    payload = {
        "thresholds": result.thresholds,
        "miou_per_threshold": result.miou_per_threshold,
        "per_class": {str(k): v for k, v in result.per_class.items()},
        "optimal_threshold": result.optimal_threshold,
        "optimal_miou": result.optimal_miou,
        "n_instances": result.n_instances,
        "resolution": result.resolution,
        "notes": result.notes,
        "checkpoint_hash": ckpt_hash,
    }
    reporting.save_json(out, payload)
    reporting.write_csv(_sidecar(out, ".csv"), ["threshold", "miou"], result.rows())
    reporting.fig_threshold_curve(
        result.thresholds, result.miou_per_threshold, result.optimal_threshold,
        _sidecar(out, "_curve.png"),
    )
    _export_sample_heatmap(items, provider, _sidecar(out, "_heatmap.png"))
    click.echo(f"optimal mIoU {result.optimal_miou:.4f} at T={result.optimal_threshold:g}")


def _export_sample_heatmap(items, provider, path):
    """Similarity heatmap for the centroid prompt of the first annotated instance."""
    from .images import resize_nearest

    for item in items:
        if item.labels is None:
            continue
        labels = item.labels
        res = getattr(provider, "resolution", None)
        if res is not None and labels.shape != (res, res):
            labels = resize_nearest(labels, res, res)
        feats = provider.features_for(item)
        ps = labels.shape[0] // feats.grid[0]
        classes = [int(c) for c in np.unique(labels) if c != 0]
        if not classes:
            continue
        prompt = segmentation.select_query((labels == classes[0]).astype(np.uint8), ps)
        smap = segmentation.similarity_map(feats, prompt.patch_index(ps))
        reporting.fig_heatmap(
            smap.values, path, title=f"query patch {smap.query} ({item.id})"
        )
        return


@main.command(name="analyze-sim")
@_eval_seg_options
@click.option("--budget", default=100_000, show_default=True)
@click.option("--bins", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@cli_errors
def analyze_sim(checkpoint, cache_dir, dataset, split, resolution, layer, net, out,
                budget, bins, seed):
    """Intra/inter-object similarity distributions and their overlap area."""
    provider, ckpt_hash = _provider(checkpoint, cache_dir, resolution, layer, net)
    items = [it for it in load_dataset(dataset, split=split) if it.labels is not None]
    if not items:
        raise RejectedInput("dataset has no masks to analyze")
    pairs = []
    from .images import resize_nearest

    for item in items:
        feats = provider.features_for(item)
        labels = item.labels
        res = getattr(provider, "resolution", None)
        if res is not None and labels.shape != (res, res):
            labels = resize_nearest(labels, res, res)
        ps = labels.shape[0] // feats.grid[0]
        pairs.append((feats, segmentation.labels_to_patch_grid(labels, ps)))
    intra = analysis.collect_pair_similarities(pairs, "intra", budget=budget, seed=seed)
    inter = analysis.collect_pair_similarities(pairs, "inter", budget=budget, seed=seed)
    stats = analysis.overlap_stats(intra, inter, n_bins=bins)
    payload = {
        "O": stats.overlap,
        "Intra": stats.mean_intra,
        "Inter": stats.mean_inter,
        "n_intra_pairs": int(intra.size),
        "n_inter_pairs": int(inter.size),
        "bins": bins,
        "checkpoint_hash": ckpt_hash,
    }
    reporting.save_json(out, payload)
    d_intra = analysis.similarity_histogram(intra, "intra", bins)
    d_inter = analysis.similarity_histogram(inter, "inter", bins)
    reporting.write_csv(
        _sidecar(out, ".csv"),
        ["bin_left", "bin_right", "density_intra", "density_inter"],
        list(zip(d_intra.edges[:-1], d_intra.edges[1:], d_intra.densities, d_inter.densities)),
    )
    reporting.fig_similarity_distributions(d_intra, d_inter, stats.overlap,
                                           _sidecar(out, "_dist.png"))
    click.echo(f"O={stats.overlap:.4f} Intra={stats.mean_intra:.4f} Inter={stats.mean_inter:.4f}")


@main.command(name="eval-knn")
@_eval_seg_options
@click.option("--k", default=10, show_default=True)
@click.option("--head", type=click.Choice(["CLS", "PAT", "Hyber"]), default="PAT",
              show_default=True)
@cli_errors
def eval_knn(checkpoint, cache_dir, dataset, split, resolution, layer, net, out, k, head):
    """k-nearest-neighbor classification on frozen features."""
    provider, ckpt_hash = _provider(checkpoint, cache_dir, resolution, layer, net)
    head_t = {"CLS": analysis.HeadType.CLS, "PAT": analysis.HeadType.PAT,
              "Hyber": analysis.HeadType.HYBER}[head]
    train_items = [it for it in load_dataset(dataset, split="train") if it.label is not None]
    test_items = [it for it in load_dataset(dataset, split=split) if it.label is not None]
    if not train_items or not test_items:
        raise RejectedInput("kNN evaluation needs image-level labels in both splits")
    train_vecs = np.stack([analysis.head_vector(provider.features_for(it), head_t)
                           for it in train_items])
    train_labels = [it.label for it in train_items]
    test_vecs = np.stack([analysis.head_vector(provider.features_for(it), head_t)
                          for it in test_items])
    test_labels = [it.label for it in test_items]
    preds = [analysis.knn_classify(train_vecs, train_labels, q, k) for q in test_vecs]
    acc = float(np.mean(np.asarray(preds) == np.asarray(test_labels)))
    classes = sorted(set(test_labels))
    per_class = {
        c: float(np.mean([p == t for p, t in zip(preds, test_labels) if t == c]))
        for c in classes
    }
    payload = {"accuracy": acc, "k": k, "head": head, "per_class": {str(c): v for c, v in per_class.items()},
               "n_train": len(train_items), "n_test": len(test_items), "checkpoint_hash": ckpt_hash}
    reporting.save_json(out, payload)
    reporting.write_csv(_sidecar(out, ".csv"), ["class", "accuracy"],
                        [[c, per_class[c]] for c in classes])
    reporting.fig_bars([str(c) for c in classes], [per_class[c] for c in classes],
                       "accuracy", _sidecar(out, "_classes.png"))
    click.echo(f"kNN accuracy {acc:.4f} (k={k}, head={head})")


@main.command(name="eval-oneshot")
@_eval_seg_options
@cli_errors
def eval_oneshot(checkpoint, cache_dir, dataset, split, resolution, layer, net, out):
    """One-shot same-class classification by CLS-similarity thresholding (best F1)."""
    provider, ckpt_hash = _provider(checkpoint, cache_dir, resolution, layer, net)
    train_items = [it for it in load_dataset(dataset, split="train") if it.label is not None]
    test_items = [it for it in load_dataset(dataset, split=split) if it.label is not None]
    if not train_items or not test_items:
        raise RejectedInput("one-shot evaluation needs image-level labels in both splits")
    support = {}
    for it in train_items:  # one support sample per class
        support.setdefault(it.label, it)
    support_items = list(support.values())
    support_vecs = np.stack([provider.features_for(it).cls for it in support_items])
    support_labels = np.asarray([it.label for it in support_items])
    query_vecs = np.stack([provider.features_for(it).cls for it in test_items])
    query_labels = np.asarray([it.label for it in test_items])
    sims = analysis.pairwise_cosine(query_vecs, support_vecs)
    same = query_labels[:, None] == support_labels[None, :]
    best_f1, best_t, table = analysis.oneshot_f1(sims.ravel(), same.ravel())
    nn_acc = float(np.mean(support_labels[np.argmax(sims, axis=1)] == query_labels))
    payload = {"best_f1": best_f1, "best_threshold": best_t, "nn_accuracy": nn_acc,
               "n_support": len(support_items), "n_queries": len(test_items),
               "checkpoint_hash": ckpt_hash}
    reporting.save_json(out, payload)
    reporting.write_csv(_sidecar(out, ".csv"), ["threshold", "f1"], table)
    reporting.fig_threshold_curve([t for t, _ in table], [f for _, f in table], best_t,
                                  _sidecar(out, "_f1.png"))
    click.echo(f"best F1 {best_f1:.4f} at T={best_t:g}; 1-NN accuracy {nn_acc:.4f}")


@main.command(name="eval-variance")
@_eval_seg_options
@click.option("--n-views", default=128, show_default=True)
@click.option("--n-images", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@cli_errors
def eval_variance(checkpoint, cache_dir, dataset, split, resolution, layer, net, out,
                  n_views, n_images, seed):
    """Feature stability: CLS variance under crops, patch variance under masking."""
    if cache_dir:
        raise RejectedInput("eval-variance re-encodes perturbed views; pass --checkpoint")
    model, manifest = load_model(checkpoint, net=net)
    live = LiveFeatures(model, resolution, layer)
    items = load_dataset(dataset, split=split)[:n_images]
    if not items:
        raise RejectedInput("dataset split is empty")
    ps = model.backbone.cfg.patch_size
    rows = []
    for i, item in enumerate(items):
        image = item.image
        if resolution is not None and image.shape[1:] != (resolution, resolution):
            from .images import resize_bilinear

            image = resize_bilinear(image, resolution, resolution)
        v_cls = analysis.feature_variance(image, live.encode_image, "crop_CLS",
                                          n_views=n_views, seed=seed + i, patch_size=ps)
        v_pat = analysis.feature_variance(image, live.encode_image, "mask_PAT",
                                          n_views=n_views, seed=seed + i, patch_size=ps)
        rows.append([item.id, v_cls, v_pat])
    mean_cls = float(np.mean([r[1] for r in rows]))
    mean_pat = float(np.mean([r[2] for r in rows]))
    payload = {"CLS": mean_cls, "PAT": mean_pat, "n_views": n_views,
               "n_images": len(rows), "checkpoint_hash": manifest["weights_hash"]}
    reporting.save_json(out, payload)
    reporting.write_csv(_sidecar(out, ".csv"), ["image", "var_cls_crops", "var_pat_masked"], rows)
    reporting.fig_bars(["CLS (crops)", "PAT (masked)"], [mean_cls, mean_pat],
                       "mean variance", _sidecar(out, "_var.png"))
    click.echo(f"variance CLS {mean_cls:.5f}  PAT {mean_pat:.5f}")


@main.command(name="eval-video")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--sequences", "seq_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--net", type=click.Choice(["student", "teacher"]), default="teacher")
@click.option("--n-prev", default=7, show_default=True)
@click.option("--top-k", default=5, show_default=True)
@click.option("--radius", default=12, show_default=True)
@cli_errors
def eval_video(checkpoint, seq_dir, out, net, n_prev, top_k, radius):
    """Nearest-neighbor mask propagation over frame sequences; J/F measures."""
    model, manifest = load_model(checkpoint, net=net)
    live = LiveFeatures(model)
    cfg = video.PropagationConfig(n_prev=n_prev, top_k=top_k, radius=radius)
    ps = model.backbone.cfg.patch_size
    rows = []
    seq_dirs = sorted(p for p in Path(seq_dir).iterdir() if p.is_dir())
    if not seq_dirs:
        raise RejectedInput(f"no sequence directories under {seq_dir}")
    for sd in seq_dirs:
        frame_paths = sorted((sd / "frames").glob("*.png"))
        mask_paths = sorted((sd / "masks").glob("*.png"))
        frames = [load_image(p) for p in frame_paths]
        gts = [load_label_grid(p) for p in mask_paths]
        seq = video.FrameSequence(frames=frames, first_labels=gts[0], gt_labels=gts)
        preds = video.propagate_sequence(seq, live.encode_image, ps, cfg)
        gt_grids = [segmentation.labels_to_patch_grid(g, ps) for g in gts]
        j = video.j_measure(preds, gt_grids)
        f = video.f_measure(preds, gt_grids)
        rows.append([sd.name, j, f, (j + f) / 2])
    j_mean = float(np.mean([r[1] for r in rows]))
    f_mean = float(np.mean([r[2] for r in rows]))
    payload = {
        "J_mean": j_mean, "F_mean": f_mean, "JF_mean": (j_mean + f_mean) / 2,
        "per_sequence": {r[0]: {"J": r[1], "F": r[2], "JF": r[3]} for r in rows},
        "protocol": {"n_prev": n_prev, "top_k": top_k, "radius": radius,
                     "weighting": "softmax over top-k cosine, temperature 0.07",
                     "boundary_tolerance_cells": 1},
        "checkpoint_hash": manifest["weights_hash"],
    }
    reporting.save_json(out, payload)
    reporting.write_csv(_sidecar(out, ".csv"), ["sequence", "J", "F", "J&F"], rows)
    reporting.fig_bars([r[0] for r in rows], [r[3] for r in rows], "J&F",
                       _sidecar(out, "_jf.png"))
    click.echo(f"J {j_mean:.4f}  F {f_mean:.4f}  J&F {(j_mean + f_mean) / 2:.4f}")


@main.command(name="recon-layers")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--layers", default=None, help="comma list; default: all blocks")
@click.option("--mask-ratio", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--net", type=click.Choice(["student", "teacher"]), default="teacher")
@cli_errors
def recon_layers(checkpoint, image_path, layers, mask_ratio, seed, out, net):
    """Reconstruct a masked image from each block's tokens; difference maps too."""
    from .augmentation import MaskSpec, apply_mask, block_mask

    model, _ = load_model(checkpoint, net=net)
    ps = model.backbone.cfg.patch_size
    image = load_image(image_path)
    size = model.backbone.cfg.image_size
    from .images import resize_bilinear

    if image.shape[1:] != (size, size):
        image = resize_bilinear(image, size, size)
    grid = (size // ps, size // ps)
    spec = MaskSpec(block_mask(grid, mask_ratio, seed), "noise", ps, ratio=mask_ratio)
    masked = apply_mask(image, spec, seed + 1)
    depth = model.backbone.cfg.depth
    layer_list = ([int(x) for x in layers.split(",")] if layers else list(range(1, depth + 1)))
    recons, diffs = reconstruct_series(model, masked, layer_list)
    reporting.fig_reconstruction_grid(masked, recons, diffs, layer_list, out)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--resolution", default=480, show_default=True)
@click.option("--net", type=click.Choice(["student", "teacher"]), default="teacher")
@click.option("--frontend", type=click.Path(exists=True, path_type=Path), default=None,
              help="static directory with the built web UI")
@cli_errors
def serve(checkpoint, port, host, resolution, net, frontend):
    """Serve the interactive click-to-segment API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint=checkpoint, resolution=resolution, net=net,
                     frontend_dir=frontend)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
