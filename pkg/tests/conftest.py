"""Shared fixtures: the German demo example, small verbalizer tables, and a
hook that prints one PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

import pytest

from promptrc.corpus import Dataset, RCExample
from promptrc.synthetic import synthetic_verbalizers
from promptrc.verbalizer import VerbalizerSet


@pytest.fixture
def goethe() -> RCExample:
    # "Goethe schrieb Faust.": head entity "Faust" [15, 20), tail "Goethe" [0, 6)
    return RCExample(
        id="demo-de-1",
        text="Goethe schrieb Faust.",
        head_span=(15, 20),
        tail_span=(0, 6),
        relation="has-author",
        language="de",
    )


@pytest.fixture
def demo_tables() -> VerbalizerSet:
    return synthetic_verbalizers()


def make_example(
    language: str,
    relation: str,
    index: int,
    head: str = "Alpha",
    tail: str = "Beta",
) -> RCExample:
    text = f"{head} links {tail} sample{index}."
    tail_start = len(head) + len(" links ")
    return RCExample(
        id=f"{language}-{relation}-{index}",
        text=text,
        head_span=(0, len(head)),
        tail_span=(tail_start, tail_start + len(tail)),
        relation=relation,
        language=language,
    )


def make_dataset(language: str, relation_counts: dict[str, int], split: str = "train") -> Dataset:
    examples = [
        make_example(language, relation, i)
        for relation, count in relation_counts.items()
        for i in range(count)
    ]
    return Dataset.from_examples(examples, split=split)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in str(item.fspath):
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {item.name}: {status}")
