"""Top-K pseudolabel assignment tests.

topk_per_class is checked against a brute-force oracle (sort every column by
score descending, id ascending, take k) on seeded random instances, including
deliberately quantized scores so ties actually occur.
"""

import numpy as np
import pytest

from plrefine.pseudolabels import (
    PseudolabelSet,
    drop_duplicate_assignments,
    effective_k,
    pseudolabel_accuracy,
    similarity_matrix,
    topk_per_class,
)


def _unit_rows(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _brute_force_topk(S, k, class_subset, ids):
    """Independent oracle: per class, sort by (-score, id) and take k."""
    triples = []
    for c in class_subset:
        order = sorted(range(S.shape[0]), key=lambda r: (-S[r, c], ids[r]))
        for r in order[:k]:
            triples.append((int(ids[r]), int(c), float(S[r, c])))
    return triples


class TestSimilarityMatrix:
    def test_matches_dot_product(self):
        rng = np.random.default_rng(0)
        Z = _unit_rows(rng, 9, 6)
        W = _unit_rows(rng, 4, 6)
        S = similarity_matrix(Z, W)
        assert S.shape == (9, 4)
        assert np.allclose(S, Z @ W.T)
        assert np.all(np.abs(S) <= 1.0 + 1e-9)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError, match="dimension"):
            similarity_matrix(_unit_rows(rng, 3, 5), _unit_rows(rng, 2, 4))


class TestEffectiveK:
    def test_cap_at_pool_share(self):
        assert effective_k(16, 100, 10) == 10
        assert effective_k(16, 1000, 10) == 16
        assert effective_k(2, 100, 10) == 2

    def test_floor_of_one(self):
        assert effective_k(16, 5, 10) == 1
        assert effective_k(1, 1, 1) == 1

    def test_exact_division(self):
        assert effective_k(7, 70, 10) == 7
        assert effective_k(8, 70, 10) == 7


class TestTopkPerClass:
    def test_matches_brute_force_on_seeded_grid(self):
        rng = np.random.default_rng(2)
        for trial in range(60):
            n = int(rng.integers(4, 40))
            C = int(rng.integers(2, 7))
            k = int(rng.integers(1, min(n, 6) + 1))
            S = rng.uniform(-1.0, 1.0, size=(n, C))
            if trial % 2 == 0:
                # Quantize so duplicate scores (ties) are common.
                S = np.round(S, 1)
            ids = rng.permutation(n * 3)[:n].astype(np.uint64)
            subset = tuple(sorted(rng.choice(C, size=rng.integers(1, C + 1), replace=False)))
            pl = topk_per_class(S[:, :], k, subset, ids)
            got = list(zip(pl.example_ids.tolist(), pl.classes.tolist(), pl.scores.tolist()))
            assert got == _brute_force_topk(S, k, subset, ids)
            assert pl.k_used == k
            assert pl.m == k * len(subset)

    def test_duplicates_across_classes_allowed(self):
        # One row dominating both columns is assigned to both classes.
        S = np.array([[0.9, 0.8], [0.1, 0.2], [0.0, 0.1]])
        ids = np.array([5, 6, 7], dtype=np.uint64)
        pl = topk_per_class(S, 1, (0, 1), ids)
        assert pl.example_ids.tolist() == [5, 5]
        assert pl.classes.tolist() == [0, 1]

    def test_tie_break_prefers_lower_id(self):
        S = np.array([[0.5], [0.5], [0.5]])
        ids = np.array([30, 10, 20], dtype=np.uint64)
        pl = topk_per_class(S, 2, (0,), ids)
        assert pl.example_ids.tolist() == [10, 20]

    def test_k_larger_than_pool(self):
        rng = np.random.default_rng(3)
        S = rng.standard_normal((3, 2))
        ids = np.arange(3, dtype=np.uint64)
        with pytest.raises(ValueError, match="k=4 exceeds the 3 available unlabeled rows"):
            topk_per_class(S, 4, (0, 1), ids)

    def test_emission_order_per_class(self):
        rng = np.random.default_rng(4)
        S = rng.uniform(-1.0, 1.0, size=(20, 3))
        ids = np.arange(100, 120, dtype=np.uint64)
        pl = topk_per_class(S, 4, (2, 0), ids)
        # Class blocks appear in subset order.
        assert pl.classes.tolist() == [2] * 4 + [0] * 4
        for block in (pl.scores[:4], pl.scores[4:]):
            assert np.all(np.diff(block) <= 0)


class TestPseudolabelSet:
    def test_per_class_cap_enforced(self):
        ids = np.array([1, 2, 3], dtype=np.uint64)
        classes = np.array([0, 0, 0], dtype=np.int64)
        scores = np.array([0.5, 0.4, 0.3])
        with pytest.raises(ValueError, match="class 0 holds 3 entries, cap is 2"):
            PseudolabelSet(ids, classes, scores, k_used=2)

    def test_score_range_enforced(self):
        ids = np.array([1], dtype=np.uint64)
        classes = np.array([0], dtype=np.int64)
        with pytest.raises(ValueError, match="cosine"):
            PseudolabelSet(ids, classes, np.array([1.5]), k_used=1)

    def test_empty_set(self):
        pl = PseudolabelSet(
            np.array([], dtype=np.uint64),
            np.array([], dtype=np.int64),
            np.array([], dtype=np.float64),
            k_used=0,
        )
        assert pl.m == 0


class TestDropDuplicates:
    def test_keeps_best_class_per_id(self):
        ids = np.array([5, 6, 5, 7], dtype=np.uint64)
        classes = np.array([0, 0, 1, 1], dtype=np.int64)
        scores = np.array([0.9, 0.3, 0.6, 0.2])
        pl = PseudolabelSet(ids, classes, scores, k_used=2)
        out = drop_duplicate_assignments(pl)
        assert out.example_ids.tolist() == [5, 6, 7]
        assert out.classes.tolist() == [0, 0, 1]
        assert out.k_used == 2

    def test_score_tie_prefers_lower_class(self):
        ids = np.array([5, 5], dtype=np.uint64)
        classes = np.array([3, 1], dtype=np.int64)
        scores = np.array([0.4, 0.4])
        out = drop_duplicate_assignments(PseudolabelSet(ids, classes, scores, k_used=1))
        assert out.classes.tolist() == [1]

    def test_no_duplicates_is_identity(self):
        rng = np.random.default_rng(5)
        S = rng.uniform(-1.0, 1.0, size=(12, 3))
        pl = topk_per_class(S, 2, (0, 1, 2), np.arange(12, dtype=np.uint64))
        seen = set(pl.example_ids.tolist())
        if len(seen) == pl.m:
            out = drop_duplicate_assignments(pl)
            assert np.array_equal(out.example_ids, pl.example_ids)
            assert np.array_equal(out.classes, pl.classes)


class TestPseudolabelAccuracy:
    def test_fraction_correct(self):
        ids = np.array([1, 2, 3, 4], dtype=np.uint64)
        classes = np.array([0, 0, 1, 1], dtype=np.int64)
        scores = np.zeros(4)
        pl = PseudolabelSet(ids, classes, scores, k_used=2)
        truth = {1: 0, 2: 1, 3: 1, 4: 0}
        assert pseudolabel_accuracy(pl, truth) == 0.5

    def test_empty_set_rejected(self):
        pl = PseudolabelSet(
            np.array([], dtype=np.uint64),
            np.array([], dtype=np.int64),
            np.array([], dtype=np.float64),
            k_used=0,
        )
        with pytest.raises(ValueError, match="empty pseudolabel set"):
            pseudolabel_accuracy(pl, {})

    def test_unknown_id_rejected(self):
        pl = PseudolabelSet(
            np.array([8], dtype=np.uint64),
            np.array([0], dtype=np.int64),
            np.array([0.1]),
            k_used=1,
        )
        with pytest.raises(KeyError, match="no ground-truth label for example id 8"):
            pseudolabel_accuracy(pl, {7: 0})
