import numpy as np
import pytest
import torch

from patchsim.backbone import (
    BackboneConfig,
    VisionTransformer,
    build_backbone,
    fold_patches,
    patchify,
)
from patchsim.errors import RejectedInput, StateError


def make_image(size, seed=0):
    return np.random.default_rng(seed).uniform(0, 1, (3, size, size)).astype(np.float32)


class TestPatchify:
    def test_480_by_16_gives_900_patches(self):
        patches, grid = patchify(make_image(480), 16)
        assert grid == (30, 30)
        assert patches.shape == (900, 16 * 16 * 3)

    def test_224_by_16_gives_196_patches(self):
        patches, grid = patchify(make_image(224), 16)
        assert patches.shape[0] == 196

    def test_indivisible_rejected(self):
        img = np.zeros((3, 225, 224), dtype=np.float32)
        with pytest.raises(RejectedInput):
            patchify(img, 16)

    def test_row_major_order_and_layout(self):
        img = make_image(8, seed=3)
        patches, grid = patchify(img, 4)
        assert grid == (2, 2)
        # patch (0, 1) covers columns 4..8 of rows 0..4
        expected = img[:, 0:4, 4:8].transpose(1, 2, 0).reshape(-1)
        np.testing.assert_array_equal(patches[1], expected)

    def test_fold_roundtrip(self):
        img = make_image(16, seed=4)
        patches, grid = patchify(img, 4)
        np.testing.assert_array_equal(fold_patches(patches, grid, 4), img)


class TestEncode:
    def test_vit_s_shapes(self):
        cfg = BackboneConfig(patch_size=16, embed_dim=384, depth=12, heads=6, image_size=224)
        model = build_backbone(cfg, seed=0)
        feats = model.encode(make_image(224))
        assert feats.cls.shape == (384,)
        assert feats.patches.shape == (196, 384)

    def test_deterministic(self, random_backbone):
        img = make_image(32, seed=1)
        f1 = random_backbone.encode(img)
        f2 = random_backbone.encode(img)
        np.testing.assert_array_equal(f1.cls, f2.cls)
        np.testing.assert_array_equal(f1.patches, f2.patches)

    def test_uninitialized_raises(self):
        model = VisionTransformer(BackboneConfig(), init=False)
        with pytest.raises(StateError):
            model.encode(make_image(32))

    def test_output_shape_independent_of_masking(self, random_backbone):
        img = make_image(32, seed=2)
        masked = img.copy()
        masked[:, :16, :] = 0.5
        assert random_backbone.encode(img).patches.shape == random_backbone.encode(masked).patches.shape

    def test_finite_norms(self, random_backbone):
        feats = random_backbone.encode(make_image(32, seed=5))
        assert np.isfinite(np.linalg.norm(feats.patches, axis=1)).all()

    def test_permutation_equivariance(self):
        """Swapping two input patches (and their position embeddings) swaps the
        corresponding output patch tokens and leaves the rest unchanged."""
        cfg = BackboneConfig(patch_size=4, embed_dim=64, depth=3, heads=2, image_size=16)
        model = build_backbone(cfg, seed=11)
        img = make_image(16, seed=6)
        i, j = 1, 6  # patch indices in the 4x4 grid
        base = model.encode(img).patches

        swapped = img.copy()
        pi = (i // 4, i % 4)
        pj = (j // 4, j % 4)

        def block(a, p):
            return a[:, p[0] * 4 : (p[0] + 1) * 4, p[1] * 4 : (p[1] + 1) * 4].copy()

        bi, bj = block(img, pi), block(img, pj)
        swapped[:, pi[0] * 4 : (pi[0] + 1) * 4, pi[1] * 4 : (pi[1] + 1) * 4] = bj
        swapped[:, pj[0] * 4 : (pj[0] + 1) * 4, pj[1] * 4 : (pj[1] + 1) * 4] = bi

        with torch.no_grad():
            pe = model.pos_embed.data.clone()
            model.pos_embed.data[0, [i + 1, j + 1]] = pe[0, [j + 1, i + 1]]
            out = model.encode(swapped).patches
            model.pos_embed.data = pe

        unswapped = out.copy()
        unswapped[[i, j]] = out[[j, i]]
        np.testing.assert_allclose(unswapped, base, atol=1e-5)


class TestEncodeAtLayer:
    def test_final_layer_equals_encode(self, random_backbone):
        img = make_image(32, seed=7)
        full = random_backbone.encode(img)
        at_depth = random_backbone.encode_at_layer(img, random_backbone.cfg.depth)
        np.testing.assert_array_equal(full.patches, at_depth.patches)
        assert at_depth.layer_index == random_backbone.cfg.depth

    def test_previous_layer_differs(self, random_backbone):
        img = make_image(32, seed=8)
        d = random_backbone.cfg.depth
        a = random_backbone.encode_at_layer(img, d - 1).patches
        b = random_backbone.encode_at_layer(img, d).patches
        assert not np.allclose(a, b)

    def test_layer_zero_rejected(self, random_backbone):
        with pytest.raises(RejectedInput):
            random_backbone.encode_at_layer(make_image(32), 0)

    def test_layer_beyond_depth_rejected(self, random_backbone):
        with pytest.raises(RejectedInput):
            random_backbone.encode_at_layer(make_image(32), random_backbone.cfg.depth + 1)


class TestPositionEmbedding:
    def test_interpolation_at_other_resolution(self, random_backbone):
        feats = random_backbone.encode(make_image(64, seed=9))
        assert feats.grid == (16, 16)
        assert feats.patches.shape == (256, 96)

    def test_config_validation(self):
        with pytest.raises(RejectedInput):
            BackboneConfig(embed_dim=97, heads=3)
        with pytest.raises(RejectedInput):
            BackboneConfig(depth=0)
