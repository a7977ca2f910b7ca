"""Experiment protocols: fully supervised, few-shot, and zero-shot runs.

Episodes are sampled with seeded, order-canonicalized draws so that equal
(dataset, K, seed) always yields the identical example-id list.  Few-shot
validation episodes come from the English train split and are disjoint (by
example id) from the English K-shot training episode under the same seed.
Hyperparameter defaults follow the reference protocols but every value can be
overridden through the run spec.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .backend import TrainConfig
from .classifier import predict, score_relations
from .corpus import Dataset, RCExample
from .metrics import CellStat, EvalReport, ReportRow, micro_f1
from .prompt import PromptInstance, PromptVariant, render
from .verbalizer import VerbalizerSet, verbalize

PROTOCOLS = ("full", "fewshot", "zeroshot-incontext", "zeroshot-transfer")

DEFAULT_SEEDS = (13, 36, 121, 223, 319)
DEFAULT_SHOTS = (8, 16, 32)

#: Paper-scale cross-lingual transfer sources: the full English train split
#: and its small variant, with the fully supervised training settings.
PAPER_TRANSFER_CONFIGS = {
    "EN (268K)": {"source_split": "en", "num_train": 267_600},
    "EN-small (36K)": {"source_split": "en-small", "num_train": 36_000},
}


class ExperimentError(ValueError):
    """Invalid run configuration or data for the requested protocol."""


@dataclass(frozen=True)
class Episode:
    """A K-shot training set sampled from one train split."""

    k: int
    seed: int
    train_examples: tuple[RCExample, ...]
    language: str
    underfilled: tuple[str, ...] = ()

    @property
    def example_ids(self) -> tuple[str, ...]:
        return tuple(ex.id for ex in self.train_examples)


def _pools(dataset: Dataset) -> dict[tuple[str, str], list[RCExample]]:
    pools: dict[tuple[str, str], list[RCExample]] = defaultdict(list)
    for ex in dataset:
        pools[(ex.language, ex.relation)].append(ex)
    for pool in pools.values():
        pool.sort(key=lambda ex: ex.id)
    return pools


def _draw(
    pools: Mapping[tuple[str, str], list[RCExample]],
    k: int,
    rng: random.Random,
) -> tuple[list[RCExample], list[str]]:
    chosen: list[RCExample] = []
    underfilled: list[str] = []
    for (language, relation) in sorted(pools):
        pool = pools[(language, relation)]
        take = min(k, len(pool))
        if take < k:
            underfilled.append(f"{language}:{relation}")
        chosen.extend(sorted(rng.sample(pool, take), key=lambda ex: ex.id))
    return chosen, underfilled


def sample_k_shot(dataset: Dataset, k: int, seed: int) -> Episode:
    """Seeded draw of min(K, available) examples per relation class."""
    if k < 1:
        raise ExperimentError("k must be >= 1")
    if len(dataset) == 0:
        raise ExperimentError("cannot sample an episode from an empty dataset")
    chosen, underfilled = _draw(_pools(dataset), k, random.Random(seed))
    languages = {ex.language for ex in chosen}
    return Episode(
        k=k,
        seed=seed,
        train_examples=tuple(chosen),
        language=languages.pop() if len(languages) == 1 else "multi",
        underfilled=tuple(underfilled),
    )


def make_validation(english_train: Dataset, k: int, seed: int) -> Episode:
    """English K-shot validation episode, disjoint from the K-shot training
    episode drawn from the same split under the same seed."""
    if set(english_train.languages()) - {"en"}:
        raise ExperimentError("validation episodes are sampled from English data only")
    train_ids = set(sample_k_shot(english_train, k, seed).example_ids)
    pools = _pools(Dataset.from_examples(
        (ex for ex in english_train if ex.id not in train_ids),
        split=english_train.split,
        relation_set=english_train.relation_set,
    ))
    # Missing relations (fully consumed by the training episode) surface as
    # underfilled entries rather than silently vanishing.
    for relation in english_train.relation_set.get("en", frozenset()):
        pools.setdefault(("en", relation), [])
    chosen, underfilled = _draw(pools, k, random.Random(f"validation-{seed}"))
    return Episode(
        k=k,
        seed=seed,
        train_examples=tuple(chosen),
        language="en",
        underfilled=tuple(underfilled),
    )


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce a run."""

    protocol: str
    variant_kind: str = "cs"
    word_orders: tuple[str, ...] = ("svo",)
    languages: tuple[str, ...] = ()
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    k: int | None = None
    train_config: TrainConfig | None = None
    convention: str = "all-classes"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ExperimentError(f"unknown protocol {self.protocol!r}; expected {PROTOCOLS}")
        if self.protocol == "fewshot" and (self.k is None or self.k < 1):
            raise ExperimentError("few-shot runs need k >= 1 (reference values: 8, 16, 32)")
        if not self.languages:
            raise ExperimentError("run spec lists no languages")
        for wo in self.word_orders:
            PromptVariant(self.variant_kind, wo)  # validates both fields

    def variant(self, word_order: str | None = None) -> PromptVariant:
        return PromptVariant(self.variant_kind, word_order or self.word_orders[0])

    def resolved_train_config(self) -> TrainConfig:
        if self.train_config is not None:
            return self.train_config
        if self.protocol == "fewshot":
            return TrainConfig.few_shot()
        return TrainConfig.fully_supervised()

    def provenance(self, **extra) -> dict:
        info = {
            "protocol": self.protocol,
            "variant": self.variant_kind,
            "word_orders": list(self.word_orders),
            "languages": list(self.languages),
            "seeds": list(self.seeds),
            "k": self.k,
            "convention": self.convention,
            "train_config": (
                self.resolved_train_config().to_dict()
                if self.protocol != "zeroshot-incontext"
                else None
            ),
        }
        info.update(extra)
        return info


def build_instances(
    examples: Iterable[RCExample],
    variant: PromptVariant,
    tables: VerbalizerSet,
) -> list[PromptInstance]:
    return [render(ex, variant, tables) for ex in examples]


def evaluate_language(
    backend,
    test: Dataset,
    language: str,
    variant: PromptVariant,
    tables: VerbalizerSet,
    convention: str = "all-classes",
) -> float:
    """Micro-F1 (%) of the backend on one language's test split."""
    subset = test.for_language(language)
    if len(subset) == 0:
        raise ExperimentError(f"no test examples for language {language!r}")
    relations = sorted(subset.relation_set.get(language, frozenset()))
    target_language = language if variant.kind == "il" else "en"
    targets = {
        relation: tuple(backend.tokenizer.encode(verbalize(relation, target_language, tables)))
        for relation in relations
    }
    max_len = max(len(ids) for ids in targets.values())
    predictions = []
    gold = []
    for example in subset:
        instance = render(example, variant, tables)
        logits = backend.decode_logits(instance, max_len)
        predictions.append(predict(score_relations(logits, targets)))
        gold.append(example.relation)
    return micro_f1(predictions, gold, convention)


BackendFactory = Callable[[int], object]


def run_fully_supervised(
    spec: RunSpec,
    backend_factory: BackendFactory,
    train_by_lang: Mapping[str, Dataset],
    test_by_lang: Mapping[str, Dataset],
    tables: VerbalizerSet,
) -> EvalReport:
    """Train on each language's full train split, evaluate on its test split."""
    variant = spec.variant()
    config = spec.resolved_train_config()
    cells: dict[str, CellStat] = {}
    for language in spec.languages:
        backend = backend_factory(config.seed)
        instances = build_instances(train_by_lang[language], variant, tables)
        try:
            backend.train(instances, config)
        except Exception as exc:
            raise ExperimentError(f"training failed for language {language!r}: {exc}") from exc
        score = evaluate_language(
            backend, test_by_lang[language], language, variant, tables, spec.convention
        )
        cells[language] = CellStat(mean=score, values=(score,))
    row = ReportRow(label=f"{variant.kind}/{variant.word_order}", per_language=cells)
    return EvalReport(rows=[row], provenance=spec.provenance(seeds=[config.seed]))


def run_few_shot(
    spec: RunSpec,
    backend_factory: BackendFactory,
    train_by_lang: Mapping[str, Dataset],
    test_by_lang: Mapping[str, Dataset],
    tables: VerbalizerSet,
) -> EvalReport:
    """K-shot training repeated over the seed list; cells carry mean and std.

    A fresh English validation episode is sampled per seed (disjoint from the
    English training episode); it is recorded for tuning workflows but no
    automatic search runs here.
    """
    variant = spec.variant()
    base_config = spec.resolved_train_config()
    per_language: dict[str, list[float]] = {lang: [] for lang in spec.languages}
    validation_sizes: dict[int, int] = {}
    for seed in spec.seeds:
        if "en" in train_by_lang:
            validation_sizes[seed] = len(
                make_validation(train_by_lang["en"], spec.k, seed).train_examples
            )
        for language in spec.languages:
            episode = sample_k_shot(train_by_lang[language], spec.k, seed)
            backend = backend_factory(seed)
            instances = build_instances(episode.train_examples, variant, tables)
            try:
                backend.train(instances, replace(base_config, seed=seed))
            except Exception as exc:
                raise ExperimentError(
                    f"training failed for language {language!r} (seed {seed}): {exc}"
                ) from exc
            per_language[language].append(
                evaluate_language(
                    backend, test_by_lang[language], language, variant, tables, spec.convention
                )
            )
    row = ReportRow(
        label=f"{variant.kind}/{variant.word_order}/k={spec.k}",
        per_language={
            lang: CellStat.from_values(values) for lang, values in per_language.items()
        },
    )
    return EvalReport(
        rows=[row],
        provenance=spec.provenance(
            validation={"resampled_per_seed": True, "episode_sizes": validation_sizes}
        ),
    )


def run_zero_shot_incontext(
    spec: RunSpec,
    backend,
    test_by_lang: Mapping[str, Dataset],
    tables: VerbalizerSet,
) -> EvalReport:
    """Out-of-the-box scoring, one report row per requested word order."""
    rows = []
    for word_order in spec.word_orders:
        variant = spec.variant(word_order)
        cells = {}
        for language in spec.languages:
            score = evaluate_language(
                backend, test_by_lang[language], language, variant, tables, spec.convention
            )
            cells[language] = CellStat(mean=score, values=(score,))
        rows.append(ReportRow(label=f"{variant.kind}/{word_order}", per_language=cells))
    return EvalReport(rows=rows, provenance=spec.provenance(train_config=None))


def _humanize(count: int) -> str:
    return f"{round(count / 1000)}K" if count >= 1000 else str(count)


def run_cross_lingual_transfer(
    spec: RunSpec,
    backend_factory: BackendFactory,
    train_by_lang: Mapping[str, Dataset],
    test_by_lang: Mapping[str, Dataset],
    tables: VerbalizerSet,
) -> EvalReport:
    """Fine-tune once on the English train split with in-language prompting,
    then score every other language zero-shot with code-switch prompting.

    Only the English entry of ``train_by_lang`` is ever read.
    """
    config = spec.resolved_train_config()
    english_train = train_by_lang["en"]
    train_variant = PromptVariant("il", spec.word_orders[0])
    eval_variant = PromptVariant("cs", spec.word_orders[0])
    backend = backend_factory(config.seed)
    try:
        backend.train(build_instances(english_train, train_variant, tables), config)
    except Exception as exc:
        raise ExperimentError(f"English training failed: {exc}") from exc
    cells = {}
    for language in spec.languages:
        if language == "en":
            continue
        score = evaluate_language(
            backend, test_by_lang[language], language, eval_variant, tables, spec.convention
        )
        cells[language] = CellStat(mean=score, values=(score,))
    if not cells:
        raise ExperimentError("cross-lingual transfer needs at least one non-English language")
    row = ReportRow(label=f"EN ({_humanize(len(english_train))})", per_language=cells)
    return EvalReport(
        rows=[row],
        provenance=spec.provenance(
            seeds=[config.seed],
            transfer={
                "train_language": "en",
                "train_variant": train_variant.kind,
                "eval_variant": eval_variant.kind,
                "num_train": len(english_train),
            },
        ),
    )
