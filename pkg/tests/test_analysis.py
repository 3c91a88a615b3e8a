import numpy as np
import pytest

from patchsim.analysis import (
    HeadType,
    SimilarityDistribution,
    collect_pair_similarities,
    feature_variance,
    head_vector,
    knn_accuracy,
    knn_classify,
    oneshot_f1,
    overlap_area,
    overlap_stats,
    pair_similarities,
    pairwise_cosine,
    similarity_histogram,
)
from patchsim.backbone import FeatureSet
from patchsim.errors import RejectedInput


def feature_set(patches, grid, cls=None):
    patches = np.asarray(patches, dtype=np.float32)
    if cls is None:
        cls = patches.mean(axis=0)
    return FeatureSet(cls=np.asarray(cls, dtype=np.float32), patches=patches,
                      grid=grid, layer_index=1)


class TestPairSimilarities:
    def test_single_category_gives_no_inter_pairs(self, rng):
        feats = feature_set(rng.normal(size=(4, 3)), (2, 2))
        labels = np.ones((2, 2), dtype=np.int64)
        assert pair_similarities(feats, labels, "inter").size == 0
        assert pair_similarities(feats, labels, "intra").size == 6

    def test_orthogonal_regions(self):
        patches = np.zeros((4, 2))
        patches[:2, 0] = 1.0  # class 1 along e0
        patches[2:, 1] = 1.0  # class 2 along e1
        feats = feature_set(patches, (2, 2))
        labels = np.array([[1, 1], [2, 2]])
        intra = pair_similarities(feats, labels, "intra")
        inter = pair_similarities(feats, labels, "inter")
        np.testing.assert_allclose(intra, 1.0, atol=1e-7)
        np.testing.assert_allclose(inter, 0.0, atol=1e-7)

    def test_matches_all_pairs_double_loop(self, rng):
        patches = rng.normal(size=(16, 6))
        labels = rng.integers(0, 3, size=(4, 4))
        feats = feature_set(patches, (4, 4))
        got_intra = sorted(pair_similarities(feats, labels, "intra"))
        got_inter = sorted(pair_similarities(feats, labels, "inter"))
        norm = patches / np.linalg.norm(patches, axis=1, keepdims=True)
        flat = labels.reshape(-1)
        exp_intra, exp_inter = [], []
        for i in range(16):
            for j in range(i + 1, 16):
                if flat[i] == 0 or flat[j] == 0:
                    continue
                sim = float(norm[i] @ norm[j])
                (exp_intra if flat[i] == flat[j] else exp_inter).append(sim)
        np.testing.assert_allclose(got_intra, sorted(exp_intra), atol=1e-6)
        np.testing.assert_allclose(got_inter, sorted(exp_inter), atol=1e-6)

    def test_background_excluded(self, rng):
        feats = feature_set(rng.normal(size=(4, 3)), (2, 2))
        labels = np.array([[0, 0], [0, 1]])
        assert pair_similarities(feats, labels, "intra").size == 0

    def test_budget_subsampling(self, rng):
        feats = feature_set(rng.normal(size=(16, 3)), (4, 4))
        labels = np.ones((4, 4), dtype=np.int64)
        sims = pair_similarities(feats, labels, "intra", budget=10, seed=0)
        assert sims.size == 10

    def test_collect_over_corpus(self, rng):
        pairs = []
        for _ in range(3):
            feats = feature_set(rng.normal(size=(4, 3)), (2, 2))
            pairs.append((feats, np.array([[1, 1], [2, 2]])))
        intra = collect_pair_similarities(pairs, "intra", budget=100)
        assert intra.size == 6  # one pair per class per image


class TestOverlap:
    def test_identical_distributions_overlap_one(self, rng):
        d = similarity_histogram(rng.uniform(-1, 1, 5000), "intra")
        assert overlap_area(d, d) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_supports_zero(self):
        lo = similarity_histogram(np.random.default_rng(0).uniform(-0.9, -0.5, 1000), "a")
        hi = similarity_histogram(np.random.default_rng(1).uniform(0.5, 0.9, 1000), "b")
        assert overlap_area(lo, hi) == 0.0

    def test_min_sum_worked_example(self):
        edges = np.array([0.0, 1 / 3, 2 / 3, 1.0])
        w = 1 / 3
        d1 = SimilarityDistribution(edges, np.array([0.5, 0.5, 0.0]) / w, "a", 10)
        d2 = SimilarityDistribution(edges, np.array([0.0, 0.5, 0.5]) / w, "b", 10)
        assert overlap_area(d1, d2) == pytest.approx(0.5, abs=1e-12)

    def test_symmetry(self, rng):
        d1 = similarity_histogram(rng.normal(0, 0.3, 2000).clip(-1, 1), "a")
        d2 = similarity_histogram(rng.normal(0.4, 0.2, 2000).clip(-1, 1), "b")
        assert overlap_area(d1, d2) == pytest.approx(overlap_area(d2, d1), abs=1e-12)

    def test_binning_mismatch_rejected(self, rng):
        d1 = similarity_histogram(rng.uniform(-1, 1, 100), "a", n_bins=50)
        d2 = similarity_histogram(rng.uniform(-1, 1, 100), "b", n_bins=40)
        with pytest.raises(RejectedInput):
            overlap_area(d1, d2)

    def test_stats_bundle(self, rng):
        intra = rng.uniform(0.5, 1.0, 1000)
        inter = rng.uniform(-1.0, 0.0, 1000)
        stats = overlap_stats(intra, inter)
        assert stats.overlap == 0.0
        assert stats.mean_intra == pytest.approx(intra.mean())
        assert stats.mean_inter == pytest.approx(inter.mean())


class TestKnn:
    def test_exact_match_k1(self, rng):
        train = rng.normal(size=(5, 4))
        labels = [0, 1, 2, 3, 4]
        assert knn_classify(train, labels, train[3], 1) == 3

    def test_majority_two_to_one(self):
        train = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
        labels = ["A", "A", "B"]
        q = np.array([1.0, 0.05])
        # use integer labels to match the signature
        assert knn_classify(train, [0, 0, 1], q, 3) == 0

    def test_matches_exhaustive_sort_oracle(self, rng):
        train = rng.normal(size=(20, 6))
        labels = rng.integers(0, 2, size=20)
        queries = rng.normal(size=(10, 6))
        k = 10
        for q in queries:
            tn = train / np.linalg.norm(train, axis=1, keepdims=True)
            qn = q / np.linalg.norm(q)
            sims = tn @ qn
            order = np.argsort(-sims, kind="stable")[:k]
            top_labels = labels[order]
            counts = {}
            for lab in top_labels:
                counts[int(lab)] = counts.get(int(lab), 0) + 1
            best = max(counts.values())
            tied = {lab for lab, v in counts.items() if v == best}
            expected = next(int(labels[i]) for i in order if int(labels[i]) in tied)
            assert knn_classify(train, labels, q, k) == expected

    def test_rescaling_invariance(self, rng):
        train = rng.normal(size=(12, 5))
        labels = rng.integers(0, 3, size=12)
        q = rng.normal(size=5)
        assert knn_classify(train, labels, q, 5) == knn_classify(train * 3.7, labels, q * 0.2, 5)

    def test_empty_train_rejected(self):
        with pytest.raises(RejectedInput):
            knn_classify(np.empty((0, 3)), [], np.ones(3), 1)

    def test_k_bounds(self, rng):
        train = rng.normal(size=(4, 3))
        with pytest.raises(RejectedInput):
            knn_classify(train, [0, 1, 0, 1], train[0], 5)

    def test_accuracy_helper(self, rng):
        train = np.vstack([np.tile([1.0, 0.0], (5, 1)), np.tile([0.0, 1.0], (5, 1))])
        labels = [0] * 5 + [1] * 5
        acc = knn_accuracy(train, labels, train, labels, 3)
        assert acc == 1.0


class TestOneshotF1:
    def test_perfectly_separable(self):
        sims = np.array([0.9, 0.9, 0.1, 0.1])
        same = np.array([True, True, False, False])
        best, best_t, _ = oneshot_f1(sims, same)
        assert best == 1.0

    def test_all_positive_predictions_half_true(self):
        # every pair above every threshold, half actually positive: P=0.5, R=1
        sims = np.array([0.95, 0.95, 0.95, 0.95])
        same = np.array([True, True, False, False])
        best, _, table = oneshot_f1(sims, same)
        assert best == pytest.approx(2 / 3, abs=1e-12)
        assert all(f == pytest.approx(2 / 3, abs=1e-12) for _, f in table)

    def test_matches_confusion_matrix_oracle(self, rng):
        sims = rng.uniform(-1, 1, 50)
        same = rng.uniform(size=50) > 0.5
        _, _, table = oneshot_f1(sims, same)
        for t, f1 in table:
            pred = sims > t
            tp = np.sum(pred & same)
            fp = np.sum(pred & ~same)
            fn = np.sum(~pred & same)
            if tp == 0:
                expected = 0.0
            else:
                p = tp / (tp + fp)
                r = tp / (tp + fn)
                expected = 2 * p * r / (p + r)
            assert f1 == pytest.approx(expected, abs=1e-12)

    def test_requires_both_pair_kinds(self):
        with pytest.raises(RejectedInput):
            oneshot_f1(np.array([0.5]), np.array([True]))

    def test_output_in_unit_interval_and_monotone_under_separation(self, rng):
        sims = rng.uniform(-1, 1, 40)
        same = sims > 0.0  # partially separable
        best_a, _, _ = oneshot_f1(sims, same)
        sims_better = np.where(same, np.abs(sims), -np.abs(sims))  # strictly better
        best_b, _, _ = oneshot_f1(sims_better, same)
        assert 0.0 <= best_a <= 1.0
        assert best_b >= best_a


class TestHeadVector:
    def test_hyber_concatenates(self, rng):
        feats = feature_set(rng.normal(size=(4, 3)), (2, 2), cls=rng.normal(size=3))
        v = head_vector(feats, HeadType.HYBER)
        assert v.shape == (6,)
        np.testing.assert_allclose(v[:3], feats.cls)
        np.testing.assert_allclose(v[3:], feats.patches.mean(axis=0))


class TestFeatureVariance:
    def test_identical_views_zero(self):
        image = np.random.default_rng(0).uniform(0, 1, (3, 16, 16)).astype(np.float32)

        def encode(img):
            return feature_set(np.ones((16, 4)), (4, 4), cls=np.ones(4))

        v = feature_variance(image, encode, "crop_CLS", n_views=8, crop_scale=(1.0, 1.0))
        assert v == 0.0

    def test_plus_minus_v_closed_form(self):
        image = np.random.default_rng(1).uniform(0, 1, (3, 16, 16)).astype(np.float32)
        v = np.array([1.0, 2.0, 3.0], dtype=np.float32)
        state = {"n": 0}

        def encode(img):
            state["n"] += 1
            sign = 1.0 if state["n"] % 2 else -1.0
            return feature_set(np.ones((16, 3)), (4, 4), cls=sign * v)

        got = feature_variance(image, encode, "crop_CLS", n_views=2)
        # sample variance of {v, -v} per dim is 2 v_d^2; mean over dims
        assert got == pytest.approx(float((2 * v**2).mean()), rel=1e-6)

    def test_matches_two_pass_oracle(self, random_backbone):
        image = np.random.default_rng(2).uniform(0, 1, (3, 32, 32)).astype(np.float32)
        captured = []

        def encode(img):
            feats = random_backbone.encode(img)
            captured.append(feats.cls)
            return feats

        got = feature_variance(image, encode, "crop_CLS", n_views=16, seed=5)
        stack = np.stack(captured)
        mean = stack.mean(axis=0)
        two_pass = (np.sum((stack - mean) ** 2, axis=0) / (len(captured) - 1)).mean()
        assert got == pytest.approx(float(two_pass), rel=1e-6)

    def test_mask_pat_mode_uses_masked_views(self, random_backbone):
        image = np.random.default_rng(3).uniform(0, 1, (3, 32, 32)).astype(np.float32)
        v = feature_variance(
            image, random_backbone.encode, "mask_PAT", n_views=4, patch_size=4
        )
        assert v > 0.0

    def test_preconditions(self, random_backbone):
        image = np.zeros((3, 32, 32), dtype=np.float32)
        with pytest.raises(RejectedInput):
            feature_variance(image, random_backbone.encode, "crop_CLS", n_views=1)
        with pytest.raises(RejectedInput):
            feature_variance(image, random_backbone.encode, "bogus", n_views=4)


def test_pairwise_cosine(rng):
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(2, 4))
    sims = pairwise_cosine(a, b)
    for i in range(3):
        for j in range(2):
            expected = a[i] @ b[j] / (np.linalg.norm(a[i]) * np.linalg.norm(b[j]))
            assert sims[i, j] == pytest.approx(expected, abs=1e-9)
