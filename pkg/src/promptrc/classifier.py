"""Relation prediction from decoder logits.

Each candidate relation is scored against the logit matrix: softmax over the
vocabulary at every decode step, then the probabilities of the relation's
target tokens are *summed* across steps (partial matches still earn credit)
and divided by the target length so longer verbalizations are not penalized.
The prediction is the argmax; normalizing scores by their sum over relations
never changes it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .backend import LogitMatrix

NO_RELATION = "no_relation"


class ClassifierError(ValueError):
    """Malformed score table or targets."""


@dataclass
class ScoreTable:
    """Per-relation scores in [0, 1] plus the target ids that produced them."""

    scores: dict[str, float]
    target_ids: dict[str, tuple[int, ...]]
    tie_break_applied: bool = False
    length_normalized: bool = True

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.scores.items(), key=lambda item: (-item[1], item[0]))

    def to_json(self) -> str:
        rows = [
            {"relation": relation, "score": score, "rank": rank}
            for rank, (relation, score) in enumerate(self.ranked(), start=1)
        ]
        return json.dumps(rows, ensure_ascii=False, indent=2)


def _column_softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=0, keepdims=True)


def score_relations(
    logits: LogitMatrix,
    targets: Mapping[str, Sequence[int]],
    *,
    length_normalize: bool = True,
) -> ScoreTable:
    """Score every candidate relation against one logit matrix.

    ``targets`` maps each relation to its verbalization's token ids.
    ``length_normalize=False`` drops the 1/length factor; it exists only to
    demonstrate why the normalization is needed and is never used for
    prediction.
    """
    if not targets:
        raise ClassifierError("empty target set")
    vocab_size, max_len = logits.values.shape
    probs = _column_softmax(logits.values)
    scores: dict[str, float] = {}
    target_ids: dict[str, tuple[int, ...]] = {}
    for relation, ids in targets.items():
        ids = tuple(int(i) for i in ids)
        if not ids:
            raise ClassifierError(f"relation {relation!r} has an empty target")
        if len(ids) > max_len:
            raise ClassifierError(
                f"relation {relation!r}: target length {len(ids)} exceeds the "
                f"decode length {max_len}"
            )
        if any(i < 0 or i >= vocab_size for i in ids):
            raise ClassifierError(
                f"relation {relation!r}: target token id outside the vocabulary "
                f"(size {vocab_size})"
            )
        total = float(probs[list(ids), range(len(ids))].sum())
        scores[relation] = total / len(ids) if length_normalize else total
        target_ids[relation] = ids
    return ScoreTable(
        scores=scores, target_ids=target_ids, length_normalized=length_normalize
    )


def predict(table: ScoreTable) -> str:
    """Highest-scoring relation; exact ties go to the lexicographically first
    identifier and are flagged on the table."""
    if not table.scores:
        raise ClassifierError("cannot predict from an empty score table")
    best_score = max(table.scores.values())
    winners = sorted(r for r, s in table.scores.items() if s == best_score)
    if len(winners) > 1:
        table.tie_break_applied = True
    return winners[0]


def entity_marker_classify(
    vectors: tuple[np.ndarray, np.ndarray],
    weight: np.ndarray,
    bias: np.ndarray,
) -> np.ndarray:
    """Affine head over the concatenated entity-start vectors.

    ``weight`` has shape (num_relations, 2 * d); training such a head uses
    standard cross-entropy on the returned logits.
    """
    head, tail = (np.asarray(v, dtype=np.float64) for v in vectors)
    features = np.concatenate([head.ravel(), tail.ravel()])
    weight = np.asarray(weight, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weight.ndim != 2 or weight.shape[1] != features.shape[0]:
        raise ClassifierError(
            f"weight shape {weight.shape} does not match feature size {features.shape[0]}"
        )
    if bias.shape != (weight.shape[0],):
        raise ClassifierError(
            f"bias shape {bias.shape} does not match {weight.shape[0]} classes"
        )
    return weight @ features + bias


def random_baseline_micro_f1(num_classes: int) -> float:
    """Expected micro-F1 (%) of uniform guessing over ``num_classes`` labels.

    With exhaustive single-label prediction micro-F1 equals accuracy, so the
    expectation is simply 100 / num_classes.
    """
    if num_classes < 1:
        raise ClassifierError("num_classes must be >= 1")
    return 100.0 / num_classes
