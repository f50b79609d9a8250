"""Core container and paradigm arithmetic tests.

The weight and split rules are checked against exact rational arithmetic
(fractions.Fraction) so no tolerance hides an off-by-one.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from plrefine.core import (
    PARADIGMS,
    UNLABELED,
    ClassSpace,
    EmbeddingSet,
    LabeledSubset,
    ParadigmConfig,
    Task,
    make_trzsl_split,
    paradigm_weights,
    sample_shots,
    unit_normalize,
)


def _unit_rows(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _embedding_set(rng, n, d, C):
    feats = _unit_rows(rng, n, d)
    labels = rng.integers(0, C, size=n).astype(np.int64)
    return EmbeddingSet(feats, labels, np.arange(n, dtype=np.uint64))


def _class_space(rng, C, d):
    return ClassSpace(
        tuple(f"c{j}" for j in range(C)),
        _unit_rows(rng, C, d),
    )


class TestUnitNormalize:
    def test_rows_become_unit(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            x = 3.0 * rng.standard_normal((7, 5)) + 0.5
            u = unit_normalize(x)
            assert np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)
            # Direction is preserved.
            assert np.allclose(u * np.linalg.norm(x, axis=1, keepdims=True), x)

    def test_zero_vector_rejected(self):
        x = np.zeros((2, 4))
        x[0, 0] = 1.0
        with pytest.raises(ValueError, match="degenerate embedding"):
            unit_normalize(x)

    def test_higher_rank_input(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((3, 4, 6))
        u = unit_normalize(x)
        assert np.allclose(np.linalg.norm(u, axis=-1), 1.0)


class TestEmbeddingSet:
    def test_round_trip_properties(self):
        rng = np.random.default_rng(2)
        data = _embedding_set(rng, 12, 6, 4)
        assert data.n == 12
        assert data.d == 6
        assert not data.features.flags.writeable

    def test_rows_for_ids(self):
        rng = np.random.default_rng(3)
        feats = _unit_rows(rng, 6, 4)
        ids = np.array([9, 4, 11, 2, 7, 5], dtype=np.uint64)
        data = EmbeddingSet(feats, np.zeros(6, dtype=np.int64), ids)
        rows = data.rows_for_ids([11, 9, 5])
        assert rows.tolist() == [2, 0, 5]

    def test_rows_for_unknown_id(self):
        rng = np.random.default_rng(4)
        data = _embedding_set(rng, 5, 4, 2)
        with pytest.raises(KeyError, match="unknown example id 99"):
            data.rows_for_ids([0, 99])

    def test_rejects_non_unit_rows(self):
        rng = np.random.default_rng(5)
        feats = 2.0 * _unit_rows(rng, 4, 3)
        with pytest.raises(ValueError, match="unit-normalized"):
            EmbeddingSet(feats, np.zeros(4, dtype=np.int64), np.arange(4, dtype=np.uint64))

    def test_rejects_duplicate_ids(self):
        rng = np.random.default_rng(6)
        feats = _unit_rows(rng, 3, 3)
        ids = np.array([1, 1, 2], dtype=np.uint64)
        with pytest.raises(ValueError, match="ids must be unique"):
            EmbeddingSet(feats, np.zeros(3, dtype=np.int64), ids)

    def test_rejects_labels_below_sentinel(self):
        rng = np.random.default_rng(7)
        feats = _unit_rows(rng, 3, 3)
        labels = np.array([0, -2, 1], dtype=np.int64)
        with pytest.raises(ValueError, match="sentinel"):
            EmbeddingSet(feats, labels, np.arange(3, dtype=np.uint64))

    def test_sentinel_label_allowed(self):
        rng = np.random.default_rng(8)
        feats = _unit_rows(rng, 3, 3)
        labels = np.array([0, UNLABELED, 1], dtype=np.int64)
        data = EmbeddingSet(feats, labels, np.arange(3, dtype=np.uint64))
        assert data.labels[1] == UNLABELED


class TestClassSpace:
    def test_basic_properties(self):
        rng = np.random.default_rng(9)
        space = _class_space(rng, 4, 7)
        assert space.C == 4
        assert space.d == 7
        assert space.partition is None

    def test_rejects_shape_mismatch(self):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError, match="one row per class name"):
            ClassSpace(("a", "b", "c"), _unit_rows(rng, 2, 4))

    def test_rejects_non_unit_prototypes(self):
        rng = np.random.default_rng(11)
        with pytest.raises(ValueError, match="unit-normalized"):
            ClassSpace(("a", "b"), 1.1 * _unit_rows(rng, 2, 4))

    def test_partition_must_cover_classes(self):
        rng = np.random.default_rng(12)
        protos = _unit_rows(rng, 4, 5)
        names = ("a", "b", "c", "d")
        ClassSpace(names, protos, partition=((0, 2), (1, 3)))  # valid
        bad = [
            ((0, 1), (2,)),        # misses class 3
            ((0, 1, 2, 3), ()),    # one side empty
            ((0, 1), (1, 2, 3)),   # overlap
            ((0, 0, 1), (2, 3)),   # duplicate
        ]
        for partition in bad:
            with pytest.raises(ValueError, match="partition"):
                ClassSpace(names, protos, partition=partition)


class TestLabeledSubset:
    def test_n_property(self):
        sub = LabeledSubset(np.array([3, 1, 4]), np.array([0, 1, 0]))
        assert sub.n == 3

    def test_rejects_duplicate_rows(self):
        with pytest.raises(ValueError, match="rows must be unique"):
            LabeledSubset(np.array([1, 1]), np.array([0, 1]))

    def test_rejects_sentinel_labels(self):
        with pytest.raises(ValueError, match="sentinel"):
            LabeledSubset(np.array([0, 1]), np.array([0, UNLABELED]))

    def test_empty_subset_allowed(self):
        sub = LabeledSubset(np.array([], dtype=np.int64), np.array([], dtype=np.int64))
        assert sub.n == 0


class TestParadigmConfig:
    def test_known_paradigms(self):
        for p in PARADIGMS:
            cfg = ParadigmConfig(p)
            assert cfg.paradigm == p
            assert cfg.shots_per_class == 2

    def test_unknown_paradigm(self):
        with pytest.raises(ValueError, match="unknown paradigm 'FSL'"):
            ParadigmConfig("FSL")

    def test_ul_forbids_labeled_weight(self):
        ParadigmConfig("UL", gamma=0.0, lam=2.5)
        with pytest.raises(ValueError, match="UL trains with no labeled term: gamma must be 0"):
            ParadigmConfig("UL", gamma=0.5)

    def test_sl_forbids_pseudo_weight(self):
        ParadigmConfig("SL", gamma=1.0, lam=0.0)
        with pytest.raises(ValueError, match="SL trains with no pseudolabel term: lambda must be 0"):
            ParadigmConfig("SL", lam=0.5)

    def test_rejects_negative_knobs(self):
        with pytest.raises(ValueError, match="shots_per_class"):
            ParadigmConfig("SSL", shots_per_class=-1)
        with pytest.raises(ValueError, match="gamma"):
            ParadigmConfig("SSL", gamma=-0.1)
        with pytest.raises(ValueError, match="lambda"):
            ParadigmConfig("SSL", lam=-0.1)


class TestTrzslSplit:
    def test_benchmark_seen_counts(self):
        """floor(0.62 C) for five common benchmark class counts."""
        expected = {102: 63, 45: 27, 100: 62, 10: 6, 47: 29}
        for C, seen_count in expected.items():
            seen, unseen = make_trzsl_split(C, seed=0)
            assert len(seen) == seen_count == math.floor(0.62 * C)
            assert len(unseen) == C - seen_count

    def test_split_partitions_classes(self):
        for seed in range(10):
            for C in (2, 3, 10, 31):
                seen, unseen = make_trzsl_split(C, seed)
                assert sorted(seen + unseen) == list(range(C))
                assert set(seen).isdisjoint(unseen)
                assert list(seen) == sorted(seen)
                assert list(unseen) == sorted(unseen)

    def test_deterministic_per_seed(self):
        assert make_trzsl_split(40, 7) == make_trzsl_split(40, 7)
        splits = {make_trzsl_split(40, s) for s in range(8)}
        assert len(splits) > 1

    def test_too_few_classes(self):
        with pytest.raises(ValueError, match="at least 2 classes"):
            make_trzsl_split(1, 0)


class TestSampleShots:
    def test_counts_and_membership(self):
        rng = np.random.default_rng(13)
        feats = _unit_rows(rng, 40, 6)
        labels = np.repeat(np.arange(4, dtype=np.int64), 10)
        data = EmbeddingSet(feats, labels, np.arange(40, dtype=np.uint64))
        sub = sample_shots(data, range(4), shots=3, seed=5)
        assert sub.n == 12
        for c in range(4):
            rows_c = sub.rows[sub.labels == c]
            assert rows_c.size == 3
            assert np.all(labels[rows_c] == c)

    def test_deterministic_and_seed_sensitive(self):
        rng = np.random.default_rng(14)
        feats = _unit_rows(rng, 30, 5)
        labels = np.repeat(np.arange(3, dtype=np.int64), 10)
        data = EmbeddingSet(feats, labels, np.arange(30, dtype=np.uint64))
        a = sample_shots(data, range(3), 2, seed=1)
        b = sample_shots(data, range(3), 2, seed=1)
        c = sample_shots(data, range(3), 2, seed=2)
        assert np.array_equal(a.rows, b.rows)
        assert not np.array_equal(a.rows, c.rows)

    def test_insufficient_rows(self):
        rng = np.random.default_rng(15)
        feats = _unit_rows(rng, 4, 5)
        labels = np.array([0, 0, 0, 1], dtype=np.int64)
        data = EmbeddingSet(feats, labels, np.arange(4, dtype=np.uint64))
        with pytest.raises(ValueError, match="class 1 has only 1 labeled rows, need 2"):
            sample_shots(data, range(2), 2, seed=0)

    def test_sentinel_rows_never_sampled(self):
        rng = np.random.default_rng(16)
        feats = _unit_rows(rng, 6, 5)
        labels = np.array([0, 0, UNLABELED, 1, 1, UNLABELED], dtype=np.int64)
        data = EmbeddingSet(feats, labels, np.arange(6, dtype=np.uint64))
        sub = sample_shots(data, range(2), 2, seed=0)
        assert set(sub.rows.tolist()) == {0, 1, 3, 4}


class TestParadigmWeights:
    def test_exact_on_random_pairs(self):
        """gamma and lambda match rational arithmetic on 100 size pairs."""
        rng = np.random.default_rng(17)
        for trial in range(100):
            n_l = int(rng.integers(1, 5000))
            n_p = int(rng.integers(1, 5000))
            gamma, lam = paradigm_weights("SSL", n_l, n_p)
            assert gamma == float(Fraction(n_p, n_l))
            assert lam == 1.0
            gamma, lam = paradigm_weights("TRZSL", n_l, n_p)
            assert gamma == 1.0
            assert lam == float(Fraction(n_l, n_p))
            assert paradigm_weights("UL", n_l, n_p) == (0.0, 1.0)
            assert paradigm_weights("SL", n_l, n_p) == (1.0, 0.0)

    def test_division_by_zero_messages(self):
        with pytest.raises(ZeroDivisionError, match="SSL with no labeled data"):
            paradigm_weights("SSL", 0, 10)
        with pytest.raises(ZeroDivisionError, match="TRZSL with no pseudolabels"):
            paradigm_weights("TRZSL", 10, 0)

    def test_zero_pools_fine_when_unused(self):
        assert paradigm_weights("UL", 0, 10) == (0.0, 1.0)
        assert paradigm_weights("SL", 10, 0) == (1.0, 0.0)

    def test_unknown_paradigm(self):
        with pytest.raises(ValueError, match="unknown paradigm"):
            paradigm_weights("mystery", 1, 1)

    def test_negative_sizes(self):
        with pytest.raises(ValueError, match="non-negative"):
            paradigm_weights("SSL", -1, 5)


class TestTask:
    def test_dimension_mismatch(self):
        rng = np.random.default_rng(18)
        train = _embedding_set(rng, 6, 5, 3)
        test = _embedding_set(rng, 4, 5, 3)
        space = _class_space(rng, 3, 4)
        with pytest.raises(ValueError, match="dimension must match"):
            Task(train=train, test=test, space=space)

    def test_valid_task(self):
        rng = np.random.default_rng(19)
        train = _embedding_set(rng, 6, 5, 3)
        test = _embedding_set(rng, 4, 5, 3)
        space = _class_space(rng, 3, 5)
        task = Task(train=train, test=test, space=space)
        assert task.space.C == 3
