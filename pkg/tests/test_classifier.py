from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from promptrc.backend import LogitMatrix
from promptrc.classifier import (
    ClassifierError,
    ScoreTable,
    entity_marker_classify,
    predict,
    random_baseline_micro_f1,
    score_relations,
)


def brute_force_scores(values, targets, length_normalize=True):
    """Independent reference: plain-Python softmax and summation."""
    n_vocab = len(values)
    n_cols = len(values[0])
    columns = []
    for t in range(n_cols):
        col = [values[v][t] for v in range(n_vocab)]
        total = sum(math.exp(x) for x in col)
        columns.append([math.exp(x) / total for x in col])
    scores = {}
    for relation, ids in targets.items():
        acc = 0.0
        for t, token in enumerate(ids):
            acc += columns[t][token]
        scores[relation] = acc / len(ids) if length_normalize else acc
    return scores


def matrix(values):
    values = np.asarray(values, dtype=np.float64)
    vocab = tuple(f"tok{i}" for i in range(values.shape[0]))
    return LogitMatrix(values=values, vocab=vocab)


class TestScoreRelations:
    def test_worked_example(self):
        # vocab {a, b}; column 1 favors a, column 2 favors b
        lm = matrix([[2.0, 0.0], [0.0, 2.0]])
        table = score_relations(lm, {"r1": (0, 1), "r2": (0, 0)})
        sigma = math.exp(2) / (math.exp(2) + 1)  # 0.8807970779778823
        assert table.scores["r1"] == pytest.approx(sigma, abs=1e-12)
        assert table.scores["r2"] == pytest.approx(0.5, abs=1e-12)

    def test_uniform_column_scores_one_over_vocab(self):
        lm = matrix([[0.0], [0.0], [0.0]])
        table = score_relations(lm, {"any": (1,)})
        assert table.scores["any"] == pytest.approx(1 / 3)

    def test_repeating_identical_columns_keeps_score(self):
        base = np.array([[1.5, -0.5], [0.2, 0.9], [-1.0, 0.0]])
        doubled = np.hstack([base, base])
        short = score_relations(matrix(base), {"r": (0, 2)}).scores["r"]
        long = score_relations(matrix(doubled), {"r": (0, 2, 0, 2)}).scores["r"]
        assert long == pytest.approx(short, abs=1e-12)

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n_vocab = rng.integers(2, 20)
            n_cols = rng.integers(1, 6)
            values = rng.normal(0, 3, size=(n_vocab, n_cols))
            targets = {
                f"rel-{i}": tuple(rng.integers(0, n_vocab, size=rng.integers(1, n_cols + 1)))
                for i in range(rng.integers(1, 8))
            }
            got = score_relations(matrix(values), targets).scores
            expected = brute_force_scores(values.tolist(), targets)
            for relation in targets:
                assert got[relation] == pytest.approx(expected[relation], rel=1e-9)

    def test_scores_in_unit_interval_and_columns_normalized(self):
        rng = np.random.default_rng(11)
        values = rng.normal(0, 5, size=(12, 4))
        exp = np.exp(values - values.max(axis=0))
        softmax = exp / exp.sum(axis=0)
        assert np.allclose(softmax.sum(axis=0), 1.0, atol=1e-6)
        table = score_relations(
            matrix(values), {f"r{i}": (i % 12, (i + 3) % 12) for i in range(6)}
        )
        assert all(0.0 <= s <= 1.0 for s in table.scores.values())

    def test_column_shift_invariance(self):
        rng = np.random.default_rng(3)
        values = rng.normal(size=(8, 3))
        shifted = values.copy()
        shifted[:, 1] += 17.0
        targets = {"r1": (0, 1, 2), "r2": (4, 5)}
        base = score_relations(matrix(values), targets).scores
        moved = score_relations(matrix(shifted), targets).scores
        for relation in targets:
            assert moved[relation] == pytest.approx(base[relation], rel=1e-9)

    def test_length_normalization_flag(self):
        lm = matrix([[1.0, 1.0], [0.0, 0.0]])
        normalized = score_relations(lm, {"r": (0, 0)}).scores["r"]
        raw = score_relations(lm, {"r": (0, 0)}, length_normalize=False).scores["r"]
        assert raw == pytest.approx(2 * normalized)

    def test_target_longer_than_decode_length_errors(self):
        with pytest.raises(ClassifierError):
            score_relations(matrix([[0.0], [0.0]]), {"r": (0, 1)})

    def test_target_token_outside_vocab_errors(self):
        with pytest.raises(ClassifierError):
            score_relations(matrix([[0.0], [0.0]]), {"r": (5,)})

    def test_empty_targets_error(self):
        with pytest.raises(ClassifierError):
            score_relations(matrix([[0.0]]), {})


class TestPredict:
    def test_singleton(self):
        table = ScoreTable(scores={"only-rel": 0.4}, target_ids={"only-rel": (0,)})
        assert predict(table) == "only-rel"

    def test_tie_breaks_lexicographically_and_flags(self):
        table = ScoreTable(
            scores={"b-rel": 0.5, "a-rel": 0.5}, target_ids={"b-rel": (0,), "a-rel": (1,)}
        )
        assert predict(table) == "a-rel"
        assert table.tie_break_applied

    @given(st.lists(st.floats(min_value=0, max_value=1, allow_nan=False), min_size=1, max_size=10))
    def test_matches_exhaustive_scan(self, raw):
        scores = {f"rel-{i:02d}": s for i, s in enumerate(raw)}
        table = ScoreTable(scores=scores, target_ids={r: (0,) for r in scores})
        best = predict(table)
        top = max(scores.values())
        assert scores[best] == top
        assert best == min(r for r, s in scores.items() if s == top)

    def test_scale_free(self):
        scores = {"r1": 0.2, "r2": 0.5, "r3": 0.1}
        a = ScoreTable(scores=dict(scores), target_ids={r: (0,) for r in scores})
        b = ScoreTable(
            scores={r: 3.7 * s for r, s in scores.items()},
            target_ids={r: (0,) for r in scores},
        )
        assert predict(a) == predict(b)

    def test_sum_normalization_never_changes_argmax(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            raw = rng.uniform(0.01, 1.0, size=6)
            scores = {f"r{i}": float(s) for i, s in enumerate(raw)}
            normalized = {r: s / sum(scores.values()) for r, s in scores.items()}
            a = ScoreTable(scores=scores, target_ids={r: (0,) for r in scores})
            b = ScoreTable(scores=normalized, target_ids={r: (0,) for r in scores})
            assert predict(a) == predict(b)

    def test_empty_table_errors(self):
        with pytest.raises(ClassifierError):
            predict(ScoreTable(scores={}, target_ids={}))

    def test_to_json_is_ranked(self):
        table = ScoreTable(
            scores={"low": 0.1, "high": 0.9}, target_ids={"low": (0,), "high": (1,)}
        )
        rows = json.loads(table.to_json())
        assert [r["relation"] for r in rows] == ["high", "low"]
        assert [r["rank"] for r in rows] == [1, 2]


class TestEntityMarkerClassify:
    def test_zero_weights_return_bias(self):
        vectors = (np.ones(3), np.ones(3))
        bias = np.array([0.5, -1.0])
        scores = entity_marker_classify(vectors, np.zeros((2, 6)), bias)
        assert np.allclose(scores, bias)

    def test_identity_block_hand_computed(self):
        # weight [[1, 0, 0, 0], [0, 0, 1, 0]] picks head[0] and tail[0]
        weight = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
        scores = entity_marker_classify(
            (np.array([2.0, 3.0]), np.array([5.0, 7.0])), weight, np.array([1.0, -1.0])
        )
        assert np.allclose(scores, [3.0, 4.0])

    def test_dimension_mismatch_errors(self):
        with pytest.raises(ClassifierError):
            entity_marker_classify((np.ones(2), np.ones(2)), np.zeros((2, 5)), np.zeros(2))
        with pytest.raises(ClassifierError):
            entity_marker_classify((np.ones(2), np.ones(2)), np.zeros((2, 4)), np.zeros(3))


class TestRandomBaseline:
    @pytest.mark.parametrize(
        "num_classes,expected", [(36, 2.8), (8, 12.5), (7, 14.3), (1, 100.0)]
    )
    def test_reference_values(self, num_classes, expected):
        assert round(random_baseline_micro_f1(num_classes), 1) == expected

    def test_zero_classes_error(self):
        with pytest.raises(ClassifierError):
            random_baseline_micro_f1(0)
