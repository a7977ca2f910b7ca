"""Backend-facing types shared by every sequence model implementation.

A backend exposes ``decode_logits(instance, max_len) -> LogitMatrix`` (and
``train`` when it learns).  The logit matrix covers every decode step at once
so all candidate relations are scored from a single decoder pass.  The blank
in the encoder input is realized as one reserved sentinel token; the decoder
target is the bare verbalization.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .corpus import RCExample
from .prompt import PromptInstance
from .tokenizer import (
    BLANK,
    HEAD_CLOSE,
    HEAD_OPEN,
    TAIL_CLOSE,
    TAIL_OPEN,
    WhitespaceTokenizer,
)


class BackendError(RuntimeError):
    """Backend failure: bad configuration, non-finite loss, overlong input."""


@dataclass
class LogitMatrix:
    """Pre-softmax decoder scores, shape (vocab_size, max_decode_length).

    Column t holds the scores for decode step t; ``truncated`` flags that the
    encoder input was cut to the backend's maximum sequence length.
    """

    values: np.ndarray
    vocab: tuple[str, ...]
    truncated: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise BackendError(f"logit matrix must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] != len(self.vocab):
            raise BackendError(
                f"logit matrix has {self.values.shape[0]} rows but the vocabulary "
                f"has {len(self.vocab)} entries"
            )
        if not np.isfinite(self.values).all():
            raise BackendError("logit matrix contains non-finite entries")

    @property
    def max_decode_length(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults follow the fully supervised protocol."""

    learning_rate: float = 3e-5
    batch_size: int = 16
    epochs: int = 5
    max_sequence_length: int = 256
    optimizer: str = "adamw"
    seed: int = 319

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise BackendError("learning_rate must be positive")
        if self.batch_size <= 0 or self.max_sequence_length <= 0:
            raise BackendError("batch_size and max_sequence_length must be positive")
        if self.epochs < 0:
            raise BackendError("epochs must be non-negative")
        if self.optimizer != "adamw":
            raise BackendError(f"unsupported optimizer {self.optimizer!r}")

    @classmethod
    def fully_supervised(cls, **overrides) -> "TrainConfig":
        return cls(**overrides)

    @classmethod
    def few_shot(cls, **overrides) -> "TrainConfig":
        defaults = {"learning_rate": 3e-4, "epochs": 20}
        defaults.update(overrides)
        return cls(**defaults)

    def to_dict(self) -> dict:
        return asdict(self)


def instance_token_ids(
    instance: PromptInstance,
    tokenizer: WhitespaceTokenizer,
    soft_ids: Mapping[str, int] | None = None,
) -> list[int]:
    """Flatten a prompt instance into encoder token ids.

    Literal segments are word-tokenized, the blank becomes the sentinel token,
    and soft slots map to their out-of-vocabulary ids.
    """
    ids: list[int] = []
    for segment in instance.input_segments:
        if segment.soft_slot is not None:
            if soft_ids is None or segment.soft_slot not in soft_ids:
                raise BackendError(
                    f"no soft-token id registered for slot {segment.soft_slot!r}"
                )
            ids.append(soft_ids[segment.soft_slot])
        if segment.is_blank:
            ids.append(tokenizer.id_of(BLANK))
        else:
            ids.extend(tokenizer.encode(segment.text))
    return ids


def insert_entity_markers(example: RCExample) -> tuple[list[str], int, int]:
    """Surround both entities with start/end marker tokens.

    Returns the marked token sequence plus the indices of the two *start*
    markers (head first), regardless of which entity occurs first in the text.
    """
    (hs, he), (ts, te) = example.head_span, example.tail_span
    slices = sorted(
        [(hs, he, HEAD_OPEN, HEAD_CLOSE), (ts, te, TAIL_OPEN, TAIL_CLOSE)]
    )
    (s1, e1, open1, close1), (s2, e2, open2, close2) = slices
    tokens: list[str] = []
    positions: dict[str, int] = {}
    for piece in (example.text[:s1],):
        tokens.extend(piece.split())
    positions[open1] = len(tokens)
    tokens.append(open1)
    tokens.extend(example.text[s1:e1].split())
    tokens.append(close1)
    tokens.extend(example.text[e1:s2].split())
    positions[open2] = len(tokens)
    tokens.append(open2)
    tokens.extend(example.text[s2:e2].split())
    tokens.append(close2)
    tokens.extend(example.text[e2:].split())
    return tokens, positions[HEAD_OPEN], positions[TAIL_OPEN]


def encode_entity_starts(
    encoder,
    example: RCExample,
    max_sequence_length: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Top-layer vectors at the two entity start markers (head, tail).

    ``encoder`` must provide ``encode_token_vectors(tokens) -> (n, d) array``.
    Marker insertion that overflows the maximum length is an error rather than
    a silent truncation, since truncation could drop a marker.
    """
    tokens, head_pos, tail_pos = insert_entity_markers(example)
    if max_sequence_length is not None and len(tokens) > max_sequence_length:
        raise BackendError(
            f"example {example.id!r}: {len(tokens)} tokens exceed the maximum "
            f"sequence length {max_sequence_length} after marker insertion"
        )
    vectors = np.asarray(encoder.encode_token_vectors(tokens))
    return vectors[head_pos], vectors[tail_pos]


class TableBackend:
    """Deterministic logit source driven by a lookup table.

    Maps rendered input text to a fixed logit matrix, with an optional default
    for unlisted inputs.  Used as the oracle backend in scorer tests and for
    protocol plumbing that needs no learning; ``train`` is a no-op.
    """

    def __init__(
        self,
        tokenizer: WhitespaceTokenizer,
        tables: Mapping[str, np.ndarray] | None = None,
        default: np.ndarray | None = None,
        max_sequence_length: int = 256,
    ):
        self.tokenizer = tokenizer
        self.max_sequence_length = max_sequence_length
        self._tables = {k: np.asarray(v, dtype=np.float64) for k, v in (tables or {}).items()}
        self._default = None if default is None else np.asarray(default, dtype=np.float64)
        for matrix in list(self._tables.values()) + ([self._default] if self._default is not None else []):
            if matrix.shape[0] != tokenizer.vocab_size:
                raise BackendError(
                    f"configured matrix has {matrix.shape[0]} rows; tokenizer "
                    f"vocabulary has {tokenizer.vocab_size}"
                )

    def decode_logits(self, instance: PromptInstance, max_len: int) -> LogitMatrix:
        if max_len < 1:
            raise BackendError("max decode length must be >= 1")
        matrix = self._tables.get(instance.input_text, self._default)
        if matrix is None:
            raise BackendError(
                f"no logits configured for input {instance.input_text!r} and no default"
            )
        n_tokens = len(instance_token_ids(instance, self.tokenizer, self._soft_ids()))
        truncated = n_tokens > self.max_sequence_length
        if matrix.shape[1] < max_len:
            # Unconfigured steps fall back to uniform scores.
            pad = np.zeros((matrix.shape[0], max_len - matrix.shape[1]))
            matrix = np.hstack([matrix, pad])
        return LogitMatrix(
            values=matrix[:, :max_len].copy(),
            vocab=self.tokenizer.tokens,
            truncated=truncated,
        )

    def train(self, instances, config: TrainConfig) -> list[float]:
        return []

    def _soft_ids(self) -> dict[str, int]:
        base = self.tokenizer.vocab_size
        return {f"v{i + 1}": base + i for i in range(3)}
