"""Data model and ingestion for multilingual relation-classification corpora.

The canonical on-disk format is JSON lines: one object per example with keys
``id``, ``text``, ``head``, ``tail``, ``relation`` and ``lang``.  Entity spans
are half-open character offsets ``[start, end)`` into ``text`` (0-based).
A TSV adapter handles sources that mark entities inline with tags such as
``<e1>...</e1>``; its column layout comes from a user-supplied mapping file.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping

SMILER_LANGUAGES = (
    "ar", "de", "en", "es", "fa", "fr", "it",
    "ko", "nl", "pl", "pt", "ru", "sv", "uk",
)

# Resource groups: English on its own, the large European languages, the three
# non-European mid-resource languages, and the two lowest-resource languages
# (Swedish, Ukrainian).
LANGUAGE_GROUPS: Mapping[str, tuple[str, ...]] = {
    "EN": ("en",),
    "H": ("de", "es", "fr", "it", "nl", "pl", "pt", "ru"),
    "M": ("ar", "fa", "ko"),
    "L": ("sv", "uk"),
}

_GROUP_BY_LANGUAGE = {
    lang: group for group, members in LANGUAGE_GROUPS.items() for lang in members
}

SPLITS = ("train", "test", "validation")

CANONICAL_KEYS = ("id", "text", "head", "tail", "relation", "lang")


class CorpusError(ValueError):
    """Malformed corpus input; ``row_errors`` carries one message per bad row."""

    def __init__(self, message: str, row_errors: list[str] | None = None):
        super().__init__(message)
        self.row_errors = row_errors or []


def group_of(language: str) -> str:
    """Resource group (EN, H, M or L) of one of the 14 supported languages."""
    try:
        return _GROUP_BY_LANGUAGE[language.lower()]
    except KeyError:
        raise CorpusError(
            f"language {language!r} is not one of the 14 supported codes"
        ) from None


@dataclass(frozen=True)
class RCExample:
    """One text with two disjoint entity spans and a gold relation."""

    id: str
    text: str
    head_span: tuple[int, int]
    tail_span: tuple[int, int]
    relation: str
    language: str

    def __post_init__(self):
        for name, (start, end) in (("head", self.head_span), ("tail", self.tail_span)):
            if not (0 <= start < end <= len(self.text)):
                raise CorpusError(
                    f"example {self.id!r}: {name} span [{start}, {end}) out of bounds "
                    f"for text of length {len(self.text)}"
                )
        hs, he = self.head_span
        ts, te = self.tail_span
        if not (he <= ts or te <= hs):
            raise CorpusError(
                f"example {self.id!r}: head span [{hs}, {he}) and tail span "
                f"[{ts}, {te}) overlap"
            )
        if not self.relation:
            raise CorpusError(f"example {self.id!r}: empty relation identifier")
        lang = self.language
        if len(lang) != 2 or not lang.isalpha() or lang != lang.lower():
            raise CorpusError(
                f"example {self.id!r}: language {lang!r} is not a lowercase "
                "two-letter code"
            )

    @property
    def head(self) -> str:
        return self.text[self.head_span[0]:self.head_span[1]]

    @property
    def tail(self) -> str:
        return self.text[self.tail_span[0]:self.tail_span[1]]

    def to_row(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "head": list(self.head_span),
            "tail": list(self.tail_span),
            "relation": self.relation,
            "lang": self.language,
        }


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of examples with a per-language relation set."""

    examples: tuple[RCExample, ...]
    relation_set: Mapping[str, frozenset[str]]
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusError(f"unknown split {self.split!r}; expected one of {SPLITS}")
        for ex in self.examples:
            declared = self.relation_set.get(ex.language, frozenset())
            if ex.relation not in declared:
                raise CorpusError(
                    f"example {ex.id!r}: relation {ex.relation!r} not in the "
                    f"declared relation set for {ex.language!r}"
                )

    @classmethod
    def from_examples(
        cls,
        examples,
        split: str = "train",
        relation_set: Mapping[str, frozenset[str]] | None = None,
    ) -> "Dataset":
        """Build a dataset, deriving the relation set from the data if absent."""
        examples = tuple(examples)
        if relation_set is None:
            derived: dict[str, set[str]] = defaultdict(set)
            for ex in examples:
                derived[ex.language].add(ex.relation)
            relation_set = {lang: frozenset(rs) for lang, rs in derived.items()}
        return cls(examples=examples, relation_set=dict(relation_set), split=split)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[RCExample]:
        return iter(self.examples)

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted({ex.language for ex in self.examples}))

    def for_language(self, language: str) -> "Dataset":
        """Single-language view; keeps that language's declared relation set."""
        language = language.lower()
        subset = tuple(ex for ex in self.examples if ex.language == language)
        rs = {language: self.relation_set.get(language, frozenset())}
        return Dataset(examples=subset, relation_set=rs, split=self.split)


@dataclass(frozen=True)
class LanguageProfile:
    """Per-language dataset statistics."""

    language: str
    num_classes: int
    num_train: int
    max_text_length: int
    group: str | None


def _parse_row(raw: dict, line_no: int) -> RCExample:
    missing = [k for k in CANONICAL_KEYS if k not in raw]
    if missing:
        rid = raw.get("id", f"line {line_no}")
        raise CorpusError(f"row {rid!r}: missing keys {', '.join(missing)}")
    head = raw["head"]
    tail = raw["tail"]
    for name, span in (("head", head), ("tail", tail)):
        if not (isinstance(span, (list, tuple)) and len(span) == 2):
            raise CorpusError(
                f"row {raw['id']!r}: {name} must be a [start, end) pair, got {span!r}"
            )
    return RCExample(
        id=str(raw["id"]),
        text=str(raw["text"]),
        head_span=(int(head[0]), int(head[1])),
        tail_span=(int(tail[0]), int(tail[1])),
        relation=str(raw["relation"]),
        language=str(raw["lang"]).lower(),
    )


def _load_jsonl(path: Path) -> list[RCExample]:
    examples: list[RCExample] = []
    errors: list[str] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"line {line_no}: invalid JSON ({exc.msg})")
                continue
            try:
                examples.append(_parse_row(raw, line_no))
            except (CorpusError, TypeError, ValueError) as exc:
                errors.append(str(exc))
    if errors:
        raise CorpusError(
            f"{path}: {len(errors)} malformed row(s); first: {errors[0]}", errors
        )
    return examples


# --- TSV adapter -----------------------------------------------------------

_MAPPING_DEFAULTS = {
    "markup.head_open": "<e1>",
    "markup.head_close": "</e1>",
    "markup.tail_open": "<e2>",
    "markup.tail_close": "</e2>",
    "header": "false",
}

_MAPPING_KEYS = {"col.id", "col.text", "col.relation", "col.lang"} | set(_MAPPING_DEFAULTS)


def parse_mapping(path: Path | str) -> dict[str, str]:
    """Read a plain key=value mapping file for the TSV adapter."""
    mapping = dict(_MAPPING_DEFAULTS)
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CorpusError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _MAPPING_KEYS:
            raise CorpusError(f"{path}:{line_no}: unknown mapping key {key!r}")
        mapping[key] = value.strip()
    for required in ("col.text", "col.relation", "col.lang"):
        if required not in mapping:
            raise CorpusError(f"{path}: mapping is missing required key {required!r}")
    return mapping


def _strip_markup(text: str, mapping: Mapping[str, str]) -> tuple[str, tuple[int, int], tuple[int, int]]:
    """Remove entity tags from ``text``, returning clean text plus both spans."""
    tags = [
        ("head_open", mapping["markup.head_open"]),
        ("head_close", mapping["markup.head_close"]),
        ("tail_open", mapping["markup.tail_open"]),
        ("tail_close", mapping["markup.tail_close"]),
    ]
    positions = {}
    for name, tag in tags:
        first = text.find(tag)
        if first < 0 or text.find(tag, first + len(tag)) >= 0:
            raise CorpusError(f"markup tag {tag!r} must occur exactly once")
        positions[name] = (first, tag)

    events = sorted((pos, name, tag) for name, (pos, tag) in positions.items())
    order = [name for _, name, _ in events]
    if order not in (
        ["head_open", "head_close", "tail_open", "tail_close"],
        ["tail_open", "tail_close", "head_open", "head_close"],
    ):
        raise CorpusError("entity markup tags are interleaved or out of order")

    clean: list[str] = []
    spans: dict[str, int] = {}
    cursor = 0
    removed = 0
    for pos, name, tag in events:
        clean.append(text[cursor:pos])
        spans[name] = pos - removed
        removed += len(tag)
        cursor = pos + len(tag)
    clean.append(text[cursor:])
    return (
        "".join(clean),
        (spans["head_open"], spans["head_close"]),
        (spans["tail_open"], spans["tail_close"]),
    )


def _load_smiler_tsv(path: Path, mapping: Mapping[str, str]) -> list[RCExample]:
    examples: list[RCExample] = []
    errors: list[str] = []
    skip_header = mapping.get("header", "false").lower() in ("true", "1", "yes")
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if skip_header and line_no == 1:
                continue
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            row_id = f"line {line_no}"
            try:
                if "col.id" in mapping:
                    row_id = cols[int(mapping["col.id"])]
                raw_text = cols[int(mapping["col.text"])]
                relation = cols[int(mapping["col.relation"])]
                lang = cols[int(mapping["col.lang"])]
                text, head_span, tail_span = _strip_markup(raw_text, mapping)
                examples.append(
                    RCExample(
                        id=str(row_id),
                        text=text,
                        head_span=head_span,
                        tail_span=tail_span,
                        relation=relation,
                        language=lang.lower(),
                    )
                )
            except IndexError:
                errors.append(f"row {row_id!r}: too few columns for the mapping")
            except (CorpusError, ValueError) as exc:
                errors.append(f"row {row_id!r}: {exc}")
    if errors:
        raise CorpusError(
            f"{path}: {len(errors)} malformed row(s); first: {errors[0]}", errors
        )
    return examples


def load_corpus(
    path: Path | str,
    format: str = "canonical-jsonl",
    *,
    split: str = "train",
    mapping: Path | str | Mapping[str, str] | None = None,
    relation_set: Mapping[str, frozenset[str]] | None = None,
) -> Dataset:
    """Load a dataset, validating every row; any bad row fails the load."""
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    if format == "canonical-jsonl":
        examples = _load_jsonl(path)
    elif format == "smiler-tsv":
        if mapping is None:
            raise CorpusError("smiler-tsv requires a column-mapping file")
        if not isinstance(mapping, Mapping):
            mapping = parse_mapping(mapping)
        examples = _load_smiler_tsv(path, mapping)
    else:
        raise CorpusError(f"unknown corpus format {format!r}")
    return Dataset.from_examples(examples, split=split, relation_set=relation_set)


def save_corpus(dataset: Dataset, path: Path | str) -> None:
    """Write canonical JSON lines; output is byte-stable for identical input."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for ex in dataset:
            handle.write(json.dumps(ex.to_row(), ensure_ascii=False, sort_keys=False))
            handle.write("\n")


def language_stats(
    dataset: Dataset,
    tokenizer: Callable[[str], list[str]] | None = None,
) -> list[LanguageProfile]:
    """Per-language class counts, example counts and max token length.

    Lengths use whitespace tokens unless a tokenizer callable is supplied.
    """
    tok = tokenizer if tokenizer is not None else str.split
    by_lang: dict[str, list[RCExample]] = defaultdict(list)
    for ex in dataset:
        by_lang[ex.language].append(ex)
    profiles = []
    for lang in sorted(by_lang):
        examples = by_lang[lang]
        profiles.append(
            LanguageProfile(
                language=lang,
                num_classes=len(dataset.relation_set.get(lang, frozenset())),
                num_train=len(examples),
                max_text_length=max(len(tok(ex.text)) for ex in examples),
                group=_GROUP_BY_LANGUAGE.get(lang),
            )
        )
    return profiles
