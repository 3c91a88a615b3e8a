"""Interactive segmentation service.

Upload an image once (features are encoded and cached per session), then click
points and move the threshold; every /segment response is a pure function of
(checkpoint, image, point, threshold) apart from the timing field.
"""

from __future__ import annotations

import io
import threading
import time
import uuid
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from .backbone import FeatureSet
from .errors import RejectedInput
from .images import resize_bilinear
from .segmentation import rle_encode, segment_point
from .training import load_model


@dataclass
class SessionRecord:
    features: FeatureSet
    width: int
    height: int
    created: float


class SessionStore:
    def __init__(self, ttl: float):
        self.ttl = ttl
        self._lock = threading.Lock()
        self._records: dict[str, SessionRecord] = {}

    def create(self, record: SessionRecord) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            now = time.monotonic()
            expired = [k for k, v in self._records.items() if now - v.created > self.ttl]
            for k in expired:
                del self._records[k]
            self._records[session_id] = record
        return session_id

    def get(self, session_id: str) -> SessionRecord | None:
        with self._lock:
            record = self._records.get(session_id)
            if record is None:
                return None
            if time.monotonic() - record.created > self.ttl:
                del self._records[session_id]
                return None
            return record


class SegmentRequest(BaseModel):
    session_id: str
    x: float
    y: float
    threshold: float


def create_app(
    checkpoint=None,
    model=None,
    weights_hash: str = "",
    resolution: int = 480,
    net: str = "teacher",
    ttl: float = 3600.0,
    max_bytes: int = 8 * 1024 * 1024,
    frontend_dir=None,
) -> FastAPI:
    if model is None:
        if checkpoint is None:
            raise RejectedInput("need a checkpoint directory or a loaded model")
        model, manifest = load_model(checkpoint, net=net)
        weights_hash = manifest["weights_hash"]
    if resolution % model.backbone.cfg.patch_size:
        raise RejectedInput("service resolution must be divisible by the patch size")

    app = FastAPI(title="patchsim segmentation service")
    store = SessionStore(ttl)
    counters = {"encodes": 0}
    encode_lock = threading.Lock()

    @app.post("/session")
    async def create_session(request: Request):
        payload = await request.body()
        if len(payload) == 0:
            return JSONResponse({"error": "empty payload"}, status_code=400)
        if len(payload) > max_bytes:
            return JSONResponse(
                {"error": f"payload exceeds {max_bytes} bytes"}, status_code=413
            )
        try:
            with Image.open(io.BytesIO(payload)) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
        except Exception:
            return JSONResponse({"error": "payload is not a decodable image"}, status_code=400)
        image = np.ascontiguousarray(arr.transpose(2, 0, 1))
        height, width = image.shape[1:]
        resized = resize_bilinear(image, resolution, resolution)
        with encode_lock:
            features = model.backbone.encode(resized)
            counters["encodes"] += 1
        session_id = store.create(
            SessionRecord(features=features, width=width, height=height, created=time.monotonic())
        )
        return {
            "session_id": session_id,
            "width": width,
            "height": height,
            "grid": list(features.grid),
            "resolution": resolution,
        }

    @app.post("/segment")
    def segment(req: SegmentRequest):
        record = store.get(req.session_id)
        if record is None:
            return JSONResponse({"error": "unknown or expired session"}, status_code=404)
        if not -1.0 <= req.threshold <= 1.0:
            return JSONResponse({"error": "threshold must be in [-1, 1]"}, status_code=422)
        t0 = time.perf_counter()
        try:
            mask, smap = segment_point(
                record.features, req.x, req.y, record.width, record.height, req.threshold
            )
        except RejectedInput as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        return {
            "mask_rle": rle_encode(mask.grid),
            "grid": list(record.features.grid),
            "heatmap": [[float(v) for v in row] for row in smap.values],
            "threshold": req.threshold,
            "query_patch": list(smap.query),
            "timing_ms": elapsed_ms,
        }

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "checkpoint_hash": weights_hash,
            "resolution": resolution,
            "patch_size": model.backbone.cfg.patch_size,
            "embed_dim": model.backbone.cfg.embed_dim,
            "encodes": counters["encodes"],
        }

    if frontend_dir is not None:
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
