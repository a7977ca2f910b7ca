"""Word-level whitespace tokenizer used by the built-in desk-scale backends.

Reserved ids cover padding, unknowns, the decoder start token, the blank
sentinel the prompt templates leave in the encoder input, and the entity
marker tokens for the entity-start baseline.  Soft-prompt tokens deliberately
live *outside* this vocabulary; backends allocate their ids above
``vocab_size``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"
BLANK = "<blank>"
HEAD_OPEN = "<e1>"
HEAD_CLOSE = "</e1>"
TAIL_OPEN = "<e2>"
TAIL_CLOSE = "</e2>"

SPECIAL_TOKENS = (PAD, UNK, BOS, BLANK, HEAD_OPEN, HEAD_CLOSE, TAIL_OPEN, TAIL_CLOSE)


class WhitespaceTokenizer:
    """Deterministic token <-> id map over whitespace-separated words."""

    def __init__(self, words: Iterable[str] = ()):
        self._tokens: list[str] = list(SPECIAL_TOKENS)
        seen = set(self._tokens)
        for word in sorted(set(words)):
            if word not in seen:
                self._tokens.append(word)
                seen.add(word)
        self._ids = {token: i for i, token in enumerate(self._tokens)}

    @classmethod
    def build(cls, texts: Iterable[str]) -> "WhitespaceTokenizer":
        words: set[str] = set()
        for text in texts:
            words.update(text.split())
        return cls(words)

    @property
    def vocab_size(self) -> int:
        return len(self._tokens)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def id_of(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            return self._ids[UNK]

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def encode(self, text: str) -> list[int]:
        return [self.id_of(token) for token in text.split()]

    def decode(self, ids: Sequence[int]) -> str:
        # Padding is an artifact of batching; everything else stays literal so
        # verbalizations round-trip exactly.
        pad = self._ids[PAD]
        return " ".join(self._tokens[i] for i in ids if i != pad)
