"""Deterministic synthetic corpus for desk-scale runs and tests.

Three languages (en, de, sv), five relations.  Every sentence is
``"<head> <cue> <tail> <marker>."`` where the cue word identifies the relation
and is shared across languages (so English task training can transfer), while
the marker word identifies the language (so in-language targets are
learnable).  Test-split entities never occur in the train split.
"""

from __future__ import annotations

from typing import Mapping

from .corpus import Dataset, RCExample
from .verbalizer import VerbalizerSet, VerbalizerTable

SYNTHETIC_LANGUAGES = ("en", "de", "sv")

SYNTHETIC_RELATIONS = (
    "birth-place",
    "has-author",
    "has-genre",
    "no_relation",
    "org-has-member",
)

_RELATION_CUES = {
    "birth-place": "born",
    "has-author": "authored",
    "has-genre": "styled",
    "no_relation": "ignores",
    "org-has-member": "recruits",
}

_LANGUAGE_MARKERS = {"en": "indeed", "de": "durchaus", "sv": "faktiskt"}

_TABLES = {
    "de": {
        "birth-place": "Geburtsort",
        "has-author": "hat Autor",
        "has-genre": "hat Genre",
        "no_relation": "keine Beziehung",
        "org-has-member": "Organisation hat Mitglied",
    },
    "sv": {
        "birth-place": "födelseort",
        "has-author": "har författare",
        "has-genre": "har genre",
        "no_relation": "ingen relation",
        "org-has-member": "organisation har medlem",
    },
}


def synthetic_verbalizers() -> VerbalizerSet:
    """Verbalizer tables for the synthetic languages (English is rule-based)."""
    return VerbalizerSet(
        tables={
            lang: VerbalizerTable(language=lang, entries=dict(entries))
            for lang, entries in _TABLES.items()
        }
    )


#: Entities come from a small shared pool per language; train and test pair
#: them with different offsets, so test sentences are unseen while the
#: relation cue stays the only class-predictive token.
_ENTITY_POOL = 8
_PAIR_OFFSET = {"train": 1, "test": 3, "validation": 5}


def _make_example(language: str, relation: str, index: int, split: str) -> RCExample:
    head = f"{language}h{index % _ENTITY_POOL}"
    tail = f"{language}t{(index + _PAIR_OFFSET[split]) % _ENTITY_POOL}"
    cue = _RELATION_CUES[relation]
    marker = _LANGUAGE_MARKERS[language]
    text = f"{head} {cue} {tail} {marker}."
    tail_start = len(head) + 1 + len(cue) + 1
    return RCExample(
        id=f"{language}-{split}-{relation}-{index}",
        text=text,
        head_span=(0, len(head)),
        tail_span=(tail_start, tail_start + len(tail)),
        relation=relation,
        language=language,
    )


def synthetic_split(
    split: str,
    per_relation: int | Mapping[str, int],
    languages: tuple[str, ...] = SYNTHETIC_LANGUAGES,
) -> dict[str, Dataset]:
    """One dataset per language with ``per_relation`` examples per class.

    Test-split indices start above any train-split index, keeping the entity
    vocabularies of the two splits disjoint.
    """
    offset = 0 if split == "train" else 10_000
    datasets: dict[str, Dataset] = {}
    for language in languages:
        examples = []
        for relation in SYNTHETIC_RELATIONS:
            count = per_relation if isinstance(per_relation, int) else per_relation[relation]
            examples.extend(
                _make_example(language, relation, offset + i, split)
                for i in range(count)
            )
        datasets[language] = Dataset.from_examples(examples, split=split)
    return datasets


def synthetic_corpus(
    n_train: int | Mapping[str, int] = 40,
    n_test: int | Mapping[str, int] = 8,
    languages: tuple[str, ...] = SYNTHETIC_LANGUAGES,
) -> tuple[dict[str, Dataset], dict[str, Dataset], VerbalizerSet]:
    """Train/test splits per language plus the matching verbalizer tables."""
    train = synthetic_split("train", n_train, languages)
    test = synthetic_split("test", n_test, languages)
    return train, test, synthetic_verbalizers()
