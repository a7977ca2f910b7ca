"""Prompt construction: entity-blank-entity templates and their variants.

The base template appends the two entities and a blank to the text, so the
prompt introduces no tokens that would need translation.  Variants: ``null``
(text + blank only), ``cs`` (code-switch: English target), ``sp`` (code-switch
plus three learnable soft-token slots), ``il`` (in-language target).  Word
order ``svo`` puts the blank between the entities, ``sov`` after both.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable

from .corpus import RCExample
from .verbalizer import VerbalizerSet, verbalize

VARIANT_KINDS = ("null", "cs", "sp", "il")
WORD_ORDERS = ("svo", "sov")
SOFT_SLOTS = ("v1", "v2", "v3")

#: Display form of the blank; backends choose their own concrete realization.
BLANK_TEXT = "____"

_SENTENCE_END = (".", "!", "?", "…", "。", "！", "？", "؟")


class PromptError(ValueError):
    """Invalid variant configuration or unrenderable example."""


@dataclass(frozen=True)
class PromptVariant:
    kind: str
    word_order: str = "svo"

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise PromptError(f"unknown variant {self.kind!r}; expected {VARIANT_KINDS}")
        if self.word_order not in WORD_ORDERS:
            raise PromptError(
                f"unknown word order {self.word_order!r}; expected {WORD_ORDERS}"
            )


@dataclass(frozen=True)
class Segment:
    """One space-delimited unit of the prompt input.

    ``text`` is the literal content; ``None`` marks the single blank.  A soft
    slot id, when set, is rendered immediately before the content with no
    separating space (``[v1]Faust``).
    """

    text: str | None
    soft_slot: str | None = None

    @property
    def is_blank(self) -> bool:
        return self.text is None

    def render(self) -> str:
        body = BLANK_TEXT if self.text is None else self.text
        if self.soft_slot is not None:
            return f"[{self.soft_slot}]{body}"
        return body


@dataclass(frozen=True)
class PromptInstance:
    """Rendered prompt input (segments with exactly one blank) plus target."""

    input_segments: tuple[Segment, ...]
    target_text: str
    language: str

    def __post_init__(self):
        blanks = sum(1 for seg in self.input_segments if seg.is_blank)
        if blanks != 1:
            raise PromptError(f"prompt must contain exactly one blank, got {blanks}")

    @property
    def input_text(self) -> str:
        return " ".join(seg.render() for seg in self.input_segments)


def _terminated(text: str) -> str:
    # The template reads "x." but leaves punctuation handling open; only add
    # the period when the text does not already end a sentence.
    if text.endswith(_SENTENCE_END):
        return text
    return text + "."


def render(
    example: RCExample,
    variant: PromptVariant,
    tables: VerbalizerSet | None = None,
) -> PromptInstance:
    """Render one example under the given variant and word order.

    The target is the English verbalization for null/cs/sp and the example
    language's verbalization for il.
    """
    table_set = tables if tables is not None else VerbalizerSet()
    target_language = example.language if variant.kind == "il" else "en"
    target = verbalize(example.relation, target_language, table_set)

    body = Segment(_terminated(example.text))
    if variant.kind == "null":
        segments = (body, Segment(None))
    else:
        soft = variant.kind == "sp"
        head = Segment(example.head, soft_slot="v1" if soft else None)
        blank = Segment(None, soft_slot="v2" if soft else None)
        tail = Segment(example.tail, soft_slot="v3" if soft else None)
        if variant.word_order == "svo":
            segments = (body, head, blank, tail)
        else:
            # SOV: the entities first, then the blank; soft slots stay anchored
            # to the element they precede ([v2] moves with the blank).
            segments = (body, head, tail, blank)
    return PromptInstance(
        input_segments=segments,
        target_text=target,
        language=example.language,
    )


def render_sov(
    example: RCExample,
    variant: PromptVariant,
    tables: VerbalizerSet | None = None,
) -> PromptInstance:
    """Render with the entities-then-blank (SOV) suffix order."""
    return render(example, replace(variant, word_order="sov"), tables)


def max_target_length(
    relations: Iterable[str],
    tables: VerbalizerSet | None,
    tokenizer: Callable[[str], list[str]] | None = None,
    languages: Iterable[str] = ("en",),
) -> int:
    """Maximum decode length: the longest tokenized verbalization over all
    relations and active target languages."""
    table_set = tables if tables is not None else VerbalizerSet()
    tok = tokenizer if tokenizer is not None else str.split
    relations = tuple(relations)
    if not relations:
        raise PromptError("empty relation set")
    return max(
        len(tok(verbalize(relation, language, table_set)))
        for language in languages
        for relation in relations
    )
