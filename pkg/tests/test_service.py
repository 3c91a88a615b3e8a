import io
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from patchsim.checkpoint import load_manifest
from patchsim.segmentation import rle_encode, segment_point
from patchsim.service import create_app
from patchsim.synthetic import synth_textures
from patchsim.training import load_model


def png_bytes(image: np.ndarray) -> bytes:
    arr = (np.clip(image, 0, 1).transpose(1, 2, 0) * 255 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def service(mini_checkpoint):
    app = create_app(checkpoint=mini_checkpoint, resolution=32, ttl=3600)
    with TestClient(app) as client:
        yield client, mini_checkpoint


@pytest.fixture(scope="module")
def sample_png():
    image, _ = synth_textures(1, 4, 32, seed=21)[0]
    return png_bytes(image), image


class TestSession:
    def test_valid_upload(self, service, sample_png):
        client, _ = service
        r = client.post("/session", content=sample_png[0])
        assert r.status_code == 200
        body = r.json()
        assert body["session_id"]
        assert body["grid"] == [8, 8]

    def test_empty_payload_rejected(self, service):
        client, _ = service
        assert client.post("/session", content=b"").status_code == 400

    def test_undecodable_payload_rejected(self, service):
        client, _ = service
        assert client.post("/session", content=b"not an image").status_code == 400

    def test_oversized_payload_rejected(self, mini_checkpoint, sample_png):
        app = create_app(checkpoint=mini_checkpoint, resolution=32, max_bytes=16)
        with TestClient(app) as client:
            assert client.post("/session", content=sample_png[0]).status_code == 413

    def test_two_uploads_two_sessions(self, service, sample_png):
        client, _ = service
        a = client.post("/session", content=sample_png[0]).json()["session_id"]
        b = client.post("/session", content=sample_png[0]).json()["session_id"]
        assert a != b

    def test_clicks_reuse_cached_features(self, service, sample_png):
        client, _ = service
        before = client.get("/health").json()["encodes"]
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        mid = client.get("/health").json()["encodes"]
        assert mid == before + 1
        for _ in range(3):
            client.post("/segment", json={"session_id": sid, "x": 5, "y": 5, "threshold": 0.3})
        assert client.get("/health").json()["encodes"] == mid

    def test_expired_session_is_404(self, mini_checkpoint, sample_png):
        app = create_app(checkpoint=mini_checkpoint, resolution=32, ttl=0.0)
        with TestClient(app) as client:
            sid = client.post("/session", content=sample_png[0]).json()["session_id"]
            r = client.post("/segment", json={"session_id": sid, "x": 1, "y": 1, "threshold": 0})
            assert r.status_code == 404


class TestSegment:
    def test_threshold_minus_one_full_mask(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        r = client.post("/segment", json={"session_id": sid, "x": 3, "y": 7, "threshold": -1.0})
        body = r.json()
        assert body["mask_rle"] == [0, 64]

    def test_repeat_click_identical_response(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        payload = {"session_id": sid, "x": 12, "y": 20, "threshold": 0.25}
        a = client.post("/segment", json=payload).json()
        b = client.post("/segment", json=payload).json()
        a.pop("timing_ms")
        b.pop("timing_ms")
        assert a == b

    def test_unknown_session_404(self, service):
        client, _ = service
        r = client.post("/segment", json={"session_id": "nope", "x": 1, "y": 1, "threshold": 0})
        assert r.status_code == 404

    def test_out_of_bounds_point_rejected(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        r = client.post("/segment", json={"session_id": sid, "x": 99, "y": 1, "threshold": 0})
        assert r.status_code == 422

    def test_threshold_out_of_range_rejected(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        r = client.post("/segment", json={"session_id": sid, "x": 1, "y": 1, "threshold": 2.0})
        assert r.status_code == 422

    def test_matches_offline_path_bitwise(self, service, mini_checkpoint):
        client, _ = service
        model, _ = load_model(mini_checkpoint)
        rng = np.random.default_rng(5)
        for trial in range(5):
            image, _ = synth_textures(1, 4, 32, seed=100 + trial)[0]
            sid = client.post("/session", content=png_bytes(image)).json()["session_id"]
            x = float(rng.integers(0, 32))
            y = float(rng.integers(0, 32))
            t = float(rng.uniform(-1, 1))
            got = client.post(
                "/segment", json={"session_id": sid, "x": x, "y": y, "threshold": t}
            ).json()["mask_rle"]
            # offline path: PNG round-trip then the shared segment_point helper
            arr = np.asarray(
                Image.open(io.BytesIO(png_bytes(image))).convert("RGB"), dtype=np.float32
            ) / 255.0
            feats = model.backbone.encode(np.ascontiguousarray(arr.transpose(2, 0, 1)))
            mask, _ = segment_point(feats, x, y, 32, 32, t)
            assert got == rle_encode(mask.grid)

    def test_mask_rle_decodes_to_grid_cells(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]
        body = client.post(
            "/segment", json={"session_id": sid, "x": 10, "y": 10, "threshold": 0.5}
        ).json()
        assert sum(body["mask_rle"]) == 64
        assert len(body["heatmap"]) == 8 and len(body["heatmap"][0]) == 8


class TestHealth:
    def test_status_and_hash(self, service):
        client, checkpoint = service
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["checkpoint_hash"] == load_manifest(checkpoint)["weights_hash"]

    def test_responds_under_concurrent_load(self, service, sample_png):
        client, _ = service
        sid = client.post("/session", content=sample_png[0]).json()["session_id"]

        def one_segment(i):
            return client.post(
                "/segment",
                json={"session_id": sid, "x": i % 32, "y": (3 * i) % 32, "threshold": 0.2},
            ).status_code

        with ThreadPoolExecutor(max_workers=16) as pool:
            codes = list(pool.map(one_segment, range(50)))
        assert all(c == 200 for c in codes)
        assert client.get("/health").json()["status"] == "ok"

    def test_requests_do_not_mutate_parameters(self, mini_checkpoint, sample_png):
        model, manifest = load_model(mini_checkpoint)
        before = [p.detach().clone() for p in model.parameters()]
        app = create_app(model=model, weights_hash=manifest["weights_hash"], resolution=32)
        with TestClient(app) as client:
            sid = client.post("/session", content=sample_png[0]).json()["session_id"]
            client.post("/segment", json={"session_id": sid, "x": 4, "y": 4, "threshold": 0.1})
        import torch

        for a, b in zip(before, model.parameters()):
            assert torch.equal(a, b)
