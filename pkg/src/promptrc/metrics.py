"""Micro-F1, language/group aggregation, run statistics, and eval reports.

All scores are percentages.  Aggregates are unweighted means: per group over
its member languages, and the overall macro over every evaluated language.
Values stay at full precision internally; rounding happens only when a report
is formatted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import jsonschema

from .classifier import NO_RELATION
from .corpus import CorpusError, group_of

GROUP_ORDER = ("EN", "H", "M", "L")

CONVENTIONS = ("all-classes", "exclude-no-relation")


class MetricsError(ValueError):
    """Inconsistent metric inputs."""


def micro_f1(
    predictions: Sequence[str],
    gold: Sequence[str],
    convention: str = "all-classes",
) -> float:
    """Micro-averaged F1 in percent.

    Under ``all-classes`` with exhaustive single-label prediction this equals
    accuracy.  Under ``exclude-no-relation`` the no_relation class contributes
    no true positives: predicting it can only miss gold relations, and gold
    no_relation rows only punish spurious relation predictions.
    """
    if len(predictions) != len(gold):
        raise MetricsError(
            f"{len(predictions)} predictions vs {len(gold)} gold labels"
        )
    if convention not in CONVENTIONS:
        raise MetricsError(f"unknown convention {convention!r}; expected {CONVENTIONS}")
    if not gold:
        raise MetricsError("empty evaluation set")
    tp = fp = fn = 0
    for pred, ref in zip(predictions, gold):
        if convention == "all-classes":
            if pred == ref:
                tp += 1
            else:
                fp += 1
                fn += 1
        else:
            if ref != NO_RELATION and pred == ref:
                tp += 1
            else:
                if pred != NO_RELATION and pred != ref:
                    fp += 1
                if ref != NO_RELATION and pred != ref:
                    fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 100.0 * 2 * precision * recall / (precision + recall)


def macro_average(per_language: Mapping[str, float]) -> float:
    """Unweighted mean over languages."""
    if not per_language:
        raise MetricsError("macro average of an empty map")
    return sum(per_language.values()) / len(per_language)


def group_average(
    per_language: Mapping[str, float],
    grouping: Callable[[str], str] = group_of,
) -> dict[str, float]:
    """Unweighted mean per resource group, over the languages present."""
    if not per_language:
        raise MetricsError("group average of an empty map")
    buckets: dict[str, list[float]] = {}
    for language, score in per_language.items():
        try:
            group = grouping(language)
        except CorpusError as exc:
            raise MetricsError(str(exc)) from None
        buckets.setdefault(group, []).append(score)
    return {
        group: sum(values) / len(values)
        for group, values in buckets.items()
    }


def run_stats(values: Sequence[float], *, ddof: int = 0) -> tuple[float, float]:
    """Mean and standard deviation over runs (population std by default;
    pass ddof=1 for the sample flavor)."""
    if not values:
        raise MetricsError("run statistics of an empty list")
    n = len(values)
    if n - ddof <= 0:
        return values[0], 0.0
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - ddof)
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class CellStat:
    """One report cell: a score, optionally with spread across runs."""

    mean: float
    std: float | None = None
    values: tuple[float, ...] = ()

    @classmethod
    def from_values(cls, values: Sequence[float], *, ddof: int = 0) -> "CellStat":
        mean, std = run_stats(values, ddof=ddof)
        return cls(mean=mean, std=std if len(values) > 1 else None, values=tuple(values))

    def format(self, decimals: int = 1) -> str:
        text = f"{self.mean:.{decimals}f}"
        if self.std is not None:
            text += f"±{self.std:.{decimals}f}"
        return text


@dataclass(frozen=True)
class ReportRow:
    """Per-language cells for one method/configuration."""

    label: str
    per_language: Mapping[str, CellStat]

    def means(self) -> dict[str, float]:
        return {lang: cell.mean for lang, cell in self.per_language.items()}

    def macro(self) -> float:
        return macro_average(self.means())

    def groups(self) -> dict[str, float] | None:
        """Group means, or None when a language has no resource group."""
        try:
            return group_average(self.means())
        except MetricsError:
            return None


SCHEMA_VERSION = 1

REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["schema_version", "provenance", "rows"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "provenance": {"type": "object"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "per_language", "macro"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "per_language": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "object",
                            "required": ["mean"],
                            "additionalProperties": False,
                            "properties": {
                                "mean": {"type": "number"},
                                "std": {"type": ["number", "null"]},
                                "values": {
                                    "type": "array",
                                    "items": {"type": "number"},
                                },
                            },
                        },
                    },
                    "groups": {
                        "type": ["object", "null"],
                        "additionalProperties": {"type": "number"},
                    },
                    "macro": {"type": "number"},
                },
            },
        },
    },
}


@dataclass
class EvalReport:
    """Evaluation rows plus full provenance of how they were produced."""

    rows: list[ReportRow] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_json_dict(self) -> dict[str, Any]:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "rows": [
                {
                    "label": row.label,
                    "per_language": {
                        lang: {
                            "mean": cell.mean,
                            "std": cell.std,
                            "values": list(cell.values),
                        }
                        for lang, cell in sorted(row.per_language.items())
                    },
                    "groups": row.groups(),
                    "macro": row.macro(),
                }
                for row in self.rows
            ],
        }
        jsonschema.validate(payload, REPORT_SCHEMA)
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_json_dict(cls, payload: Mapping[str, Any]) -> "EvalReport":
        jsonschema.validate(payload, REPORT_SCHEMA)
        rows = [
            ReportRow(
                label=raw["label"],
                per_language={
                    lang: CellStat(
                        mean=cell["mean"],
                        std=cell.get("std"),
                        values=tuple(cell.get("values", ())),
                    )
                    for lang, cell in raw["per_language"].items()
                },
            )
            for raw in payload["rows"]
        ]
        return cls(rows=rows, provenance=dict(payload["provenance"]))

    def to_markdown(self, decimals: int = 1) -> str:
        """One table row per method, language columns then group and macro
        columns, mirroring the layout of the per-language result tables."""
        languages = sorted({lang for row in self.rows for lang in row.per_language})
        groups_present = [
            g
            for g in GROUP_ORDER
            if any((row.groups() or {}).get(g) is not None for row in self.rows)
        ]
        header = ["Method", *[lang.upper() for lang in languages], *groups_present, "X̄"]
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "---|" * len(header),
        ]
        for row in self.rows:
            cells = [row.label]
            for lang in languages:
                cell = row.per_language.get(lang)
                cells.append(cell.format(decimals) if cell else "-")
            groups = row.groups() or {}
            for g in groups_present:
                value = groups.get(g)
                cells.append(f"{value:.{decimals}f}" if value is not None else "-")
            cells.append(f"{row.macro():.{decimals}f}")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def save(self, json_path: Path | str, markdown_path: Path | str | None = None) -> None:
        json_path = Path(json_path)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(self.to_json() + "\n", encoding="utf-8")
        if markdown_path is not None:
            Path(markdown_path).write_text(self.to_markdown(), encoding="utf-8")
