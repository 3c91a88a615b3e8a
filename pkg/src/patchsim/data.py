"""Dataset ingestion and the feature cache.

A dataset is a directory with `manifest.json` listing items (image path, mask
path, optional image-level label, split). Masks are integer label grids stored
as lossless PNG. The feature cache mirrors the checkpoint blob convention.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .backbone import FeatureSet
from .checkpoint import read_blob, write_blob
from .errors import CacheConflict, DatasetLoadError, RejectedInput, StateError
from .images import load_image, load_label_grid, resize_bilinear, save_image, save_label_grid

MANIFEST_SCHEMA = 1


@dataclass
class DatasetItem:
    id: str
    image: np.ndarray
    labels: np.ndarray | None = None
    label: int | None = None      # image-level class, when the item has one
    split: str = "train"


def write_dataset(
    items: Sequence[tuple[np.ndarray, np.ndarray | int]],
    out_dir,
    val_frac: float = 0.1,
    seed: int = 0,
) -> Path:
    """Write images (+ masks or labels) and a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_val = int(round(len(items) * val_frac))
    val_ids = set(rng.permutation(len(items))[:n_val].tolist())
    entries = []
    for i, (image, ann) in enumerate(items):
        item_id = f"img_{i:05d}"
        rel_img = f"images/{item_id}.png"
        save_image(image, out_dir / rel_img)
        entry = {"id": item_id, "image": rel_img, "split": "val" if i in val_ids else "train"}
        if isinstance(ann, (int, np.integer)):
            entry["label"] = int(ann)
        else:
            (out_dir / "masks").mkdir(exist_ok=True)
            rel_mask = f"masks/{item_id}.png"
            save_label_grid(ann, out_dir / rel_mask)
            entry["mask"] = rel_mask
        entries.append(entry)
    manifest = {"schema_version": MANIFEST_SCHEMA, "items": entries}
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return path


def load_dataset(
    manifest_path,
    split: str | None = None,
    seed: int | None = None,
) -> list[DatasetItem]:
    """Load every listed item eagerly; ordering is manifest order, or a
    seed-stable shuffle when a seed is given. Missing/corrupt files are
    collected into one itemized error."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.exists():
        raise DatasetLoadError([str(manifest_path)])
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != MANIFEST_SCHEMA:
        raise RejectedInput(f"unsupported manifest schema {manifest.get('schema_version')}")
    root = manifest_path.parent
    items: list[DatasetItem] = []
    failures: list[str] = []
    for entry in manifest["items"]:
        if split is not None and entry.get("split", "train") != split:
            continue
        try:
            image = load_image(root / entry["image"])
        except (OSError, ValueError):
            failures.append(entry["image"])
            continue
        labels = None
        if "mask" in entry:
            try:
                labels = load_label_grid(root / entry["mask"])
            except (OSError, ValueError):
                failures.append(entry["mask"])
                continue
            if labels.shape != image.shape[1:]:
                failures.append(entry["mask"] + " (mask/image size mismatch)")
                continue
        items.append(
            DatasetItem(
                id=entry["id"],
                image=image,
                labels=labels,
                label=entry.get("label"),
                split=entry.get("split", "train"),
            )
        )
    if failures:
        raise DatasetLoadError(failures)
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(items))
        items = [items[i] for i in order]
    return items


def convert_coco(annotations_path, images_dir, out_dir, val_frac: float = 0.1,
                 seed: int = 0) -> Path:
    """Convert COCO-style polygon annotations into the native dataset layout.

    Reads an instances JSON (images + annotations with polygon segmentations
    and category ids), rasterizes the polygons into integer label grids (later
    annotations paint over earlier ones), and writes images, masks, and a
    manifest. Compressed-RLE segmentations are not supported.
    """
    from PIL import Image, ImageDraw

    annotations_path = Path(annotations_path)
    images_dir = Path(images_dir)
    with open(annotations_path) as fh:
        coco = json.load(fh)
    by_image: dict[int, list[dict]] = {}
    for ann in coco.get("annotations", []):
        by_image.setdefault(ann["image_id"], []).append(ann)
    items: list[tuple[np.ndarray, np.ndarray]] = []
    failures: list[str] = []
    for info in coco.get("images", []):
        path = images_dir / info["file_name"]
        try:
            image = load_image(path)
        except (OSError, ValueError):
            failures.append(info["file_name"])
            continue
        h, w = image.shape[1:]
        canvas = Image.new("I", (w, h), 0)
        draw = ImageDraw.Draw(canvas)
        for ann in by_image.get(info["id"], []):
            seg = ann.get("segmentation")
            if not isinstance(seg, list):
                raise RejectedInput(
                    f"annotation {ann.get('id')} is not polygon-encoded"
                )
            for polygon in seg:
                points = list(zip(polygon[0::2], polygon[1::2]))
                if len(points) >= 3:
                    draw.polygon(points, fill=int(ann["category_id"]))
        items.append((image, np.asarray(canvas, dtype=np.int64)))
    if failures:
        raise DatasetLoadError(failures)
    if not items:
        raise RejectedInput("no images listed in the annotations file")
    return write_dataset(items, out_dir, val_frac=val_frac, seed=seed)


class LiveFeatures:
    """Encode images on the fly with a loaded model at a fixed resolution/layer."""

    def __init__(self, model, resolution: int | None = None, layer: int | None = None):
        self.model = model
        self.resolution = resolution
        self.layer = layer if layer is not None else model.backbone.cfg.depth

    def encode_image(self, image: np.ndarray) -> FeatureSet:
        if self.resolution is not None and image.shape[1:] != (self.resolution, self.resolution):
            image = resize_bilinear(image, self.resolution, self.resolution)
        return self.model.backbone.encode_at_layer(image, self.layer)

    def features_for(self, item: DatasetItem) -> FeatureSet:
        return self.encode_image(item.image)


class CachedFeatures:
    """Read features produced by cache_features; keyed by item id."""

    def __init__(self, cache_dir):
        self.dir = Path(cache_dir)
        with open(self.dir / "manifest.json") as fh:
            self.manifest = json.load(fh)
        self.resolution = self.manifest["resolution"]
        self.layer = self.manifest["layer_index"]

    def features_for(self, item: DatasetItem) -> FeatureSet:
        entry = self.manifest["entries"].get(item.id)
        if entry is None:
            raise StateError(f"no cached features for item {item.id!r}")
        cls = read_blob(self.dir / f"{item.id}.cls.f32", [entry["dim"]])
        patches = read_blob(
            self.dir / f"{item.id}.pat.f32", [entry["grid"][0] * entry["grid"][1], entry["dim"]]
        )
        return FeatureSet(
            cls=cls, patches=patches, grid=tuple(entry["grid"]), layer_index=self.layer
        )


def cache_features(
    items: Iterable[DatasetItem],
    model,
    weights_hash: str,
    out_dir,
    resolution: int | None = None,
    layer: int | None = None,
    overwrite: bool = False,
) -> Path:
    """Encode every item once and store the features as float32 blobs.

    Rerunning with the same checkpoint is a no-op; a different checkpoint hash
    raises CacheConflict unless overwrite is set. Blob writes go through a
    temp file + atomic rename.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    live = LiveFeatures(model, resolution, layer)
    existing = {}
    if manifest_path.exists():
        with open(manifest_path) as fh:
            old = json.load(fh)
        if old.get("checkpoint_hash") != weights_hash or old.get("resolution") != resolution:
            if not overwrite:
                raise CacheConflict(
                    "existing cache was produced by a different checkpoint/resolution; "
                    "pass overwrite to replace it"
                )
        else:
            existing = old.get("entries", {})
    entries = dict(existing)
    for item in items:
        if item.id in existing:
            continue
        feats = live.features_for(item)
        for suffix, arr in (("cls", feats.cls), ("pat", feats.patches)):
            fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
            os.close(fd)
            write_blob(Path(tmp), arr)
            os.replace(tmp, out_dir / f"{item.id}.{suffix}.f32")
        entries[item.id] = {"grid": list(feats.grid), "dim": feats.dim}
    manifest = {
        "checkpoint_hash": weights_hash,
        "resolution": resolution,
        "layer_index": live.layer,
        "entries": entries,
    }
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    os.close(fd)
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    os.replace(tmp, manifest_path)
    return out_dir
