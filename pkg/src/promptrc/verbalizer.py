"""Relation verbalizers: identifier -> natural-language label, per language.

English verbalizations are derived from the relation identifier itself
(hyphens/underscores become spaces, abbreviations are expanded).  Other
languages use static translation tables shipped as per-language JSON files
``{relation: verbalization}``; the toolkit never calls a translation service.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

#: Identifier abbreviations expanded during English verbalization.  The list
#: is deliberately small and editable via a JSON config file.
DEFAULT_ABBREVIATIONS: Mapping[str, str] = {"org": "organization"}

_SEPARATORS = re.compile(r"[-_]+")


class VerbalizerError(ValueError):
    """Missing or inconsistent verbalizer data."""


def verbalize_en(relation: str, abbreviations: Mapping[str, str] | None = None) -> str:
    """English verbalization: split the identifier on '-'/'_' and expand
    abbreviations, e.g. ``org-has-member`` -> ``organization has member``."""
    if not relation:
        raise VerbalizerError("empty relation identifier")
    abbrev = DEFAULT_ABBREVIATIONS if abbreviations is None else abbreviations
    parts = [p for p in _SEPARATORS.split(relation) if p]
    if not parts:
        raise VerbalizerError(f"relation {relation!r} has no verbalizable content")
    return " ".join(abbrev.get(part, part) for part in parts)


@dataclass(frozen=True)
class VerbalizerTable:
    """One language's relation -> verbalization map.  Must be one-to-one."""

    language: str
    entries: Mapping[str, str]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for relation, verbalization in self.entries.items():
            if not verbalization:
                raise VerbalizerError(
                    f"{self.language}: empty verbalization for {relation!r}"
                )
            clash = seen.get(verbalization)
            if clash is not None:
                raise VerbalizerError(
                    f"{self.language}: verbalization {verbalization!r} is shared by "
                    f"{clash!r} and {relation!r} (must be one-to-one)"
                )
            seen[verbalization] = relation


@dataclass(frozen=True)
class VerbalizerSet:
    """All loaded per-language tables plus the abbreviation config."""

    tables: Mapping[str, VerbalizerTable] = field(default_factory=dict)
    abbreviations: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_ABBREVIATIONS)
    )

    def has(self, language: str) -> bool:
        return language.lower() in self.tables

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.tables))


def verbalize(relation: str, language: str, table_set: VerbalizerSet) -> str:
    """Verbalization of ``relation`` in ``language``.

    English falls back to the rule-based verbalizer when no entry is present;
    every other language requires a loaded table entry.
    """
    language = language.lower()
    table = table_set.tables.get(language)
    if table is not None:
        try:
            return table.entries[relation]
        except KeyError:
            if language != "en":
                raise VerbalizerError(
                    f"no verbalization for relation {relation!r} in language "
                    f"{language!r}"
                ) from None
    if language == "en":
        return verbalize_en(relation, table_set.abbreviations)
    raise VerbalizerError(
        f"no verbalizer table loaded for language {language!r} "
        f"(needed for relation {relation!r})"
    )


def load_tables(
    directory: Path | str,
    abbreviations: Mapping[str, str] | None = None,
) -> VerbalizerSet:
    """Load every ``<lang>.json`` table in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise VerbalizerError(f"verbalizer directory not found: {directory}")
    tables: dict[str, VerbalizerTable] = {}
    for path in sorted(directory.glob("*.json")):
        language = path.stem.lower()
        with path.open("r", encoding="utf-8") as handle:
            entries = json.load(handle)
        if not isinstance(entries, dict):
            raise VerbalizerError(f"{path}: expected a JSON object")
        tables[language] = VerbalizerTable(
            language=language,
            entries={str(k): str(v) for k, v in entries.items()},
        )
    return VerbalizerSet(
        tables=tables,
        abbreviations=dict(DEFAULT_ABBREVIATIONS if abbreviations is None else abbreviations),
    )


def validate_coverage(
    table_set: VerbalizerSet,
    relation_set: Mapping[str, Iterable[str]],
) -> None:
    """Check every relation of every language has a verbalization; fail fast."""
    missing: list[str] = []
    for language, relations in sorted(relation_set.items()):
        for relation in sorted(relations):
            try:
                verbalize(relation, language, table_set)
            except VerbalizerError:
                missing.append(f"{language}:{relation}")
    if missing:
        raise VerbalizerError(
            f"verbalizer tables do not cover {len(missing)} relation(s): "
            + ", ".join(missing[:10])
        )


@dataclass(frozen=True)
class LengthStats:
    """Mean and population standard deviation of verbalization token counts."""

    mean: float
    std: float
    count: int


def _stats(lengths: list[int]) -> LengthStats:
    n = len(lengths)
    mean = sum(lengths) / n
    var = sum((x - mean) ** 2 for x in lengths) / n
    return LengthStats(mean=mean, std=math.sqrt(var), count=n)


def length_stats(
    table_set: VerbalizerSet,
    tokenizer: Callable[[str], list[str]] | None = None,
) -> dict[str, LengthStats]:
    """Token-length statistics per table, plus an ``ALL`` pooled entry.

    The paper-scale numbers depend on the backing model's tokenizer; inject it
    for comparable values, otherwise whitespace tokens are used.
    """
    tok = tokenizer if tokenizer is not None else str.split
    if not table_set.tables:
        raise VerbalizerError("no verbalizer tables loaded")
    out: dict[str, LengthStats] = {}
    pooled: list[int] = []
    for language in sorted(table_set.tables):
        entries = table_set.tables[language].entries
        if not entries:
            raise VerbalizerError(f"{language}: empty verbalizer table")
        lengths = [len(tok(v)) for v in entries.values()]
        pooled.extend(lengths)
        out[language] = _stats(lengths)
    out["ALL"] = _stats(pooled)
    return out
