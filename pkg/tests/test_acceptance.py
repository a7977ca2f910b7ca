"""Acceptance suite: one test per criterion, each printed as PASS/FAIL.

Desk-scale checks only: property- and oracle-based tests plus fixture-level
reproduction of the published aggregate arithmetic.  Nothing here needs a
pre-trained model.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from promptrc.backend import LogitMatrix, TrainConfig
from promptrc.classifier import predict, random_baseline_micro_f1, score_relations
from promptrc.corpus import Dataset
from promptrc.experiment import (
    DEFAULT_SEEDS,
    RunSpec,
    build_instances,
    evaluate_language,
    run_cross_lingual_transfer,
    run_few_shot,
    sample_k_shot,
)
from promptrc.metrics import group_average, macro_average, micro_f1
from promptrc.prompt import PromptVariant, render, render_sov
from promptrc.synthetic import SYNTHETIC_RELATIONS, synthetic_corpus
from promptrc.tokenizer import WhitespaceTokenizer
from promptrc.toy import ToySeq2Seq
from promptrc.verbalizer import verbalize

from conftest import make_dataset
from test_classifier import brute_force_scores
from test_experiment import LoggingMapping, rigged_backend
from test_metrics import EM_ROW, IL_ROW


def test_scorer_matches_brute_force_oracle():
    """1,000 random matrices: vectorized scorer vs plain-Python softmax."""
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    for _ in range(1000):
        n_vocab = int(rng.integers(2, 51))
        n_cols = int(rng.integers(1, 7))
        values = rng.normal(0, 4, size=(n_vocab, n_cols))
        n_relations = int(rng.integers(1, 21))
        targets = {
            f"rel-{i:02d}": tuple(
                int(t) for t in rng.integers(0, n_vocab, size=int(rng.integers(1, n_cols + 1)))
            )
            for i in range(n_relations)
        }
        vocab = tuple(f"t{i}" for i in range(n_vocab))
        table = score_relations(LogitMatrix(values=values, vocab=vocab), targets)
        expected = brute_force_scores(values.tolist(), targets)
        for relation in targets:
            assert table.scores[relation] == pytest.approx(expected[relation], rel=1e-9)
        best = predict(table)
        top = max(expected.values())
        exhaustive = min(r for r, s in expected.items() if abs(s - top) < 1e-15)
        assert best == exhaustive  # lexicographic tie-break documented in predict()
    assert time.perf_counter() - started < 10.0


def test_worked_scoring_example():
    """vocab {a, b}, logits [[2, 0], [0, 2]]: r1 = e^2/(e^2+1), r2 = 1/2."""
    lm = LogitMatrix(values=np.array([[2.0, 0.0], [0.0, 2.0]]), vocab=("a", "b"))
    targets = {"r1": (0, 1), "r2": (0, 0)}
    table = score_relations(lm, targets)
    oracle = brute_force_scores([[2.0, 0.0], [0.0, 2.0]], targets)
    assert table.scores["r1"] == pytest.approx(oracle["r1"], rel=1e-12)
    assert table.scores["r2"] == pytest.approx(oracle["r2"], rel=1e-12)
    assert table.scores["r1"] == pytest.approx(0.8808, abs=5e-5)
    assert table.scores["r2"] == pytest.approx(0.5, abs=1e-12)


def test_aggregate_metric_fixtures():
    """Published per-language rows reproduce their group/macro aggregates."""
    assert round(macro_average(IL_ROW), 1) == pytest.approx(85.0, abs=0.05)
    groups = group_average(EM_ROW)
    assert groups["H"] == pytest.approx(86.1, abs=0.05)
    assert groups["M"] == pytest.approx(54.3, abs=0.05)
    assert groups["L"] == pytest.approx(3.7, abs=0.05 + 1e-9)


def test_random_baseline():
    assert round(random_baseline_micro_f1(36), 1) == 2.8
    assert round(random_baseline_micro_f1(8), 1) == 12.5
    assert round(random_baseline_micro_f1(7), 1) == 14.3
    # simulated uniform guesser over 10,000 synthetic examples
    rng = np.random.default_rng(99)
    classes = [f"c{i}" for i in range(8)]
    gold = rng.choice(classes, size=10_000).tolist()
    guesses = rng.choice(classes, size=10_000).tolist()
    simulated = micro_f1(guesses, gold)
    assert abs(simulated - random_baseline_micro_f1(8)) <= 1.5


def test_template_snapshots(goethe, demo_tables):
    expected = {
        "null": ("Goethe schrieb Faust. ____", "has author"),
        "cs": ("Goethe schrieb Faust. Faust ____ Goethe", "has author"),
        "sp": ("Goethe schrieb Faust. [v1]Faust [v2]____ [v3]Goethe", "has author"),
        "il": ("Goethe schrieb Faust. Faust ____ Goethe", "hat Autor"),
    }
    for kind, (input_text, target) in expected.items():
        inst = render(goethe, PromptVariant(kind), demo_tables)
        assert inst.input_text == input_text
        assert inst.target_text == target
    sov = render_sov(goethe, PromptVariant("cs"), demo_tables)
    assert sov.input_text == "Goethe schrieb Faust. Faust Goethe ____"


def test_few_shot_sampler_contract():
    dataset = make_dataset("en", {"rel-a": 12, "rel-b": 5, "rel-c": 40})
    episode = sample_k_shot(dataset, 8, seed=13)
    for relation, available in (("rel-a", 12), ("rel-b", 5), ("rel-c", 40)):
        count = sum(ex.relation == relation for ex in episode.train_examples)
        assert count == min(8, available)
    reference = episode.example_ids
    for _ in range(100):
        assert sample_k_shot(dataset, 8, seed=13).example_ids == reference
    # the reference seed set lands in report provenance untouched
    train, test, tables = synthetic_corpus(n_train=3, n_test=1)
    spec = RunSpec(
        protocol="fewshot",
        variant_kind="cs",
        languages=("de",),
        k=2,
        train_config=TrainConfig(epochs=0),
    )
    backend = rigged_backend(test, tables)
    report = run_few_shot(spec, lambda seed: backend, train, test, tables)
    assert tuple(report.provenance["seeds"]) == DEFAULT_SEEDS == (13, 36, 121, 223, 319)


def test_end_to_end_learning():
    """32-shot, 3 languages, 5 relations, in-language variant, toy backend."""
    started = time.perf_counter()
    train, test, tables = synthetic_corpus(n_train=40, n_test=8)
    languages = ("en", "de", "sv")
    variant = PromptVariant("il")
    texts = [ex.text for ds in train.values() for ex in ds]
    verbals = [verbalize(r, lang, tables) for lang in languages for r in SYNTHETIC_RELATIONS]
    backend = ToySeq2Seq(WhitespaceTokenizer.build(texts + verbals), seed=13)

    episodes = {lang: sample_k_shot(train[lang], 32, seed=13) for lang in languages}
    instances = [
        inst
        for lang in languages
        for inst in build_instances(episodes[lang].train_examples, variant, tables)
    ]
    episode_sets = {
        lang: Dataset.from_examples(episodes[lang].train_examples, split="train")
        for lang in languages
    }

    def episode_micro_f1() -> float:
        # equal per-language episode sizes, so the mean equals pooled micro-F1
        return float(np.mean([
            evaluate_language(backend, episode_sets[lang], lang, variant, tables)
            for lang in languages
        ]))

    epochs_used = 0
    train_f1 = 0.0
    while epochs_used < 200:
        backend.train(instances, TrainConfig.few_shot(epochs=50, seed=13))
        epochs_used += 50
        train_f1 = episode_micro_f1()
        if train_f1 >= 95.0:
            break
    assert train_f1 >= 95.0, f"train micro-F1 {train_f1} after {epochs_used} epochs"

    held_out = float(np.mean([
        evaluate_language(backend, test[lang], lang, variant, tables)
        for lang in languages
    ]))
    baseline = random_baseline_micro_f1(len(SYNTHETIC_RELATIONS))
    assert baseline == 20.0
    assert held_out >= baseline + 40.0, f"held-out micro-F1 {held_out}"
    assert time.perf_counter() - started < 300.0


def test_length_normalization():
    rng = np.random.default_rng(5)
    base = rng.normal(0, 2, size=(6, 3))
    doubled = np.hstack([base, base])
    vocab6 = tuple(f"t{i}" for i in range(6))
    short = score_relations(
        LogitMatrix(values=base, vocab=vocab6), {"r": (0, 3, 5)}
    ).scores["r"]
    long = score_relations(
        LogitMatrix(values=doubled, vocab=vocab6), {"r": (0, 3, 5, 0, 3, 5)}
    ).scores["r"]
    assert abs(long - short) <= 1e-12

    # negative control: without the length factor the ranking flips
    # (both columns put 0.6 on token a, 0.4 on token b)
    values = np.array([[math.log(0.6)] * 2, [math.log(0.4)] * 2])
    lm = LogitMatrix(values=values, vocab=("a", "b"))
    targets = {"rel-short": (0,), "rel-long": (1, 1)}
    normalized = score_relations(lm, targets)
    raw = score_relations(lm, targets, length_normalize=False)
    assert predict(normalized) == "rel-short"
    assert predict(raw) == "rel-long"


def test_cross_lingual_protocol_audit():
    train, test, tables = synthetic_corpus(n_train=2, n_test=2)
    audited = LoggingMapping(train)
    # logits rigged for code-switch inputs only: a perfect score proves the
    # evaluation went through the code-switch rendering
    backend = rigged_backend(test, tables, variant_kinds=("cs",))
    spec = RunSpec(
        protocol="zeroshot-transfer",
        variant_kind="cs",
        languages=("en", "de", "sv"),
        train_config=TrainConfig(epochs=0),
    )
    report = run_cross_lingual_transfer(spec, lambda seed: backend, audited, test, tables)
    assert set(audited.accessed) == {"en"}
    row = report.rows[0]
    assert sorted(row.per_language) == ["de", "sv"]  # English is never evaluated
    assert all(cell.mean == 100.0 for cell in row.per_language.values())
    assert report.provenance["transfer"] == {
        "train_language": "en",
        "train_variant": "il",
        "eval_variant": "cs",
        "num_train": len(train["en"]),
    }
