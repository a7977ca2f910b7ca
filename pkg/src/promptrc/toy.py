"""Small trainable backends for desk-scale experiments and tests.

``ToySeq2Seq`` is a word-level encoder-decoder (GRU encoder, GRU-cell decoder)
big enough to overfit fixtures, trained with the teacher-forced negative
log-likelihood of the target verbalization.  Inference collects the decoder's
pre-softmax scores for ``max_len`` steps of self-conditioned greedy decoding:
every step is conditioned on the model's own previous greedy token, so all
candidate relations are scored from one shared decoded prefix.

``ToyEntityMarkerModel`` is the matching encoder baseline: a bidirectional GRU
read of the marker-annotated text, classified from the concatenated vectors at
the two entity start markers.

Pre-trained multilingual checkpoints are intentionally not bundled; anything
exposing the same ``decode_logits``/``train`` surface can stand in.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from .backend import BackendError, LogitMatrix, TrainConfig, insert_entity_markers, instance_token_ids
from .prompt import PromptInstance
from .tokenizer import BOS, SPECIAL_TOKENS, WhitespaceTokenizer

_PAD_ID = 0  # SPECIAL_TOKENS order pins <pad> to id 0


class _Seq2SeqNet(nn.Module):
    def __init__(self, vocab_size: int, num_soft: int, embed_dim: int, hidden_dim: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, embed_dim, padding_idx=_PAD_ID)
        self.soft = nn.Parameter(torch.empty(num_soft, embed_dim))
        self.encoder = nn.GRU(embed_dim, hidden_dim, batch_first=True)
        self.decoder_cell = nn.GRUCell(embed_dim, hidden_dim)
        self.out = nn.Linear(hidden_dim, vocab_size)
        # Soft tokens start from the embedding matrix's empirical statistics.
        with torch.no_grad():
            mean = self.embedding.weight.mean().item()
            std = self.embedding.weight.std().item()
            self.soft.normal_(mean=mean, std=std)

    def embed(self, ids: torch.Tensor) -> torch.Tensor:
        table = torch.cat([self.embedding.weight, self.soft], dim=0)
        return table[ids]


class ToySeq2Seq:
    """Trainable encoder-decoder over a whitespace vocabulary."""

    def __init__(
        self,
        tokenizer: WhitespaceTokenizer,
        embed_dim: int = 32,
        hidden_dim: int = 64,
        num_soft_tokens: int = 3,
        max_sequence_length: int = 256,
        seed: int = 0,
    ):
        self.tokenizer = tokenizer
        self.max_sequence_length = max_sequence_length
        self.seed = seed
        self._dims = (embed_dim, hidden_dim, num_soft_tokens)
        torch.manual_seed(seed)
        self._net = _Seq2SeqNet(tokenizer.vocab_size, num_soft_tokens, embed_dim, hidden_dim)
        self._last_train_config: TrainConfig | None = None

    @property
    def soft_ids(self) -> dict[str, int]:
        base = self.tokenizer.vocab_size
        return {f"v{i + 1}": base + i for i in range(self._dims[2])}

    # -- encoding -----------------------------------------------------------

    def _input_ids(self, instance: PromptInstance, limit: int) -> tuple[list[int], bool]:
        ids = instance_token_ids(instance, self.tokenizer, self.soft_ids)
        if len(ids) > limit:
            return ids[:limit], True
        return ids, False

    def _encode_batch(self, id_lists: Sequence[Sequence[int]]) -> torch.Tensor:
        lengths = torch.tensor([len(ids) for ids in id_lists])
        max_len = int(lengths.max())
        padded = torch.full((len(id_lists), max_len), _PAD_ID, dtype=torch.long)
        for row, ids in enumerate(id_lists):
            padded[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        embedded = self._net.embed(padded)
        packed = nn.utils.rnn.pack_padded_sequence(
            embedded, lengths, batch_first=True, enforce_sorted=False
        )
        _, hidden = self._net.encoder(packed)
        return hidden[-1]

    # -- training -----------------------------------------------------------

    def _batch_nll(self, instances: Sequence[PromptInstance], limit: int) -> torch.Tensor:
        """Teacher-forced negative log-likelihood, summed over target tokens,
        one entry per instance."""
        input_ids = [self._input_ids(inst, limit)[0] for inst in instances]
        target_ids = [self.tokenizer.encode(inst.target_text) for inst in instances]
        for inst, ids in zip(instances, target_ids):
            if not ids:
                raise BackendError(f"untokenizable target {inst.target_text!r}")
        hidden = self._encode_batch(input_ids)

        max_len = max(len(ids) for ids in target_ids)
        bos = self.tokenizer.id_of(BOS)
        batch = len(instances)
        dec_in = torch.full((batch, max_len), _PAD_ID, dtype=torch.long)
        dec_out = torch.full((batch, max_len), _PAD_ID, dtype=torch.long)
        mask = torch.zeros(batch, max_len)
        for row, ids in enumerate(target_ids):
            dec_in[row, 0] = bos
            if len(ids) > 1:
                dec_in[row, 1 : len(ids)] = torch.tensor(ids[:-1], dtype=torch.long)
            dec_out[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            mask[row, : len(ids)] = 1.0

        nll = torch.zeros(batch)
        for t in range(max_len):
            hidden = self._net.decoder_cell(self._net.embed(dec_in[:, t]), hidden)
            logits = self._net.out(hidden)
            step_nll = nn.functional.cross_entropy(logits, dec_out[:, t], reduction="none")
            nll = nll + step_nll * mask[:, t]
        return nll

    def loss(self, instances: Sequence[PromptInstance]) -> float:
        """Mean over instances of the per-instance token-summed NLL (nats)."""
        if not instances:
            raise BackendError("loss of an empty instance list")
        self._net.eval()
        with torch.no_grad():
            return float(self._batch_nll(instances, self.max_sequence_length).mean())

    def train(self, instances: Sequence[PromptInstance], config: TrainConfig) -> list[float]:
        """Minimize the mean teacher-forced NLL; returns one loss per epoch.

        Soft-token embeddings train alongside the model parameters whenever
        instances carry soft slots.  Weight decay is off: the desk-scale
        backends exist to overfit fixtures.
        """
        if not instances:
            raise BackendError("cannot train on an empty instance list")
        self._last_train_config = config
        if config.epochs == 0:
            return []
        torch.manual_seed(config.seed)
        rng = random.Random(config.seed)
        optimizer = torch.optim.AdamW(
            self._net.parameters(), lr=config.learning_rate, weight_decay=0.0
        )
        order = list(range(len(instances)))
        history: list[float] = []
        self._net.train()
        for epoch in range(config.epochs):
            rng.shuffle(order)
            epoch_losses: list[float] = []
            for start in range(0, len(order), config.batch_size):
                batch = [instances[i] for i in order[start : start + config.batch_size]]
                optimizer.zero_grad()
                loss = self._batch_nll(batch, config.max_sequence_length).mean()
                if not torch.isfinite(loss):
                    raise BackendError(
                        f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                    )
                loss.backward()
                optimizer.step()
                epoch_losses.append(loss.item())
            history.append(sum(epoch_losses) / len(epoch_losses))
        self._net.eval()
        return history

    # -- inference ----------------------------------------------------------

    def decode_logits(self, instance: PromptInstance, max_len: int) -> LogitMatrix:
        """Greedy decode for ``max_len`` steps, recording pre-softmax scores."""
        if max_len < 1:
            raise BackendError("max decode length must be >= 1")
        ids, truncated = self._input_ids(instance, self.max_sequence_length)
        self._net.eval()
        with torch.no_grad():
            hidden = self._encode_batch([ids])
            prev = torch.tensor([self.tokenizer.id_of(BOS)], dtype=torch.long)
            columns = []
            for _ in range(max_len):
                hidden = self._net.decoder_cell(self._net.embed(prev), hidden)
                logits = self._net.out(hidden)[0]
                columns.append(logits.numpy().copy())
                prev = logits.argmax().reshape(1)
        return LogitMatrix(
            values=np.stack(columns, axis=1),
            vocab=self.tokenizer.tokens,
            truncated=truncated,
        )

    # -- persistence --------------------------------------------------------

    def save(self, path: Path | str) -> None:
        """Write the checkpoint blob plus a JSON sidecar with the training
        provenance (config and seeds)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        embed_dim, hidden_dim, num_soft = self._dims
        torch.save(
            {
                "state_dict": self._net.state_dict(),
                "tokens": list(self.tokenizer.tokens),
                "embed_dim": embed_dim,
                "hidden_dim": hidden_dim,
                "num_soft_tokens": num_soft,
                "max_sequence_length": self.max_sequence_length,
                "seed": self.seed,
            },
            path,
        )
        sidecar = {
            "backend": "toy-seq2seq",
            "init_seed": self.seed,
            "train_config": (
                self._last_train_config.to_dict() if self._last_train_config else None
            ),
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: Path | str) -> "ToySeq2Seq":
        payload = torch.load(Path(path), weights_only=False)
        tokenizer = WhitespaceTokenizer(payload["tokens"][len(SPECIAL_TOKENS):])
        if list(tokenizer.tokens) != payload["tokens"]:
            raise BackendError("checkpoint vocabulary does not round-trip")
        backend = cls(
            tokenizer,
            embed_dim=payload["embed_dim"],
            hidden_dim=payload["hidden_dim"],
            num_soft_tokens=payload["num_soft_tokens"],
            max_sequence_length=payload["max_sequence_length"],
            seed=payload["seed"],
        )
        backend._net.load_state_dict(payload["state_dict"])
        backend._net.eval()
        return backend


class ToyEntityMarkerModel:
    """Entity-start fine-tuning baseline at desk scale.

    A bidirectional GRU encodes the marker-annotated tokens; the vectors at
    the two start markers are concatenated and classified by a linear head
    trained with cross-entropy.
    """

    def __init__(
        self,
        tokenizer: WhitespaceTokenizer,
        relations: Iterable[str],
        embed_dim: int = 32,
        hidden_dim: int = 32,
        max_sequence_length: int = 256,
        seed: int = 0,
    ):
        self.tokenizer = tokenizer
        self.relations = tuple(sorted(relations))
        self.max_sequence_length = max_sequence_length
        torch.manual_seed(seed)
        self._embedding = nn.Embedding(tokenizer.vocab_size, embed_dim, padding_idx=_PAD_ID)
        self._encoder = nn.GRU(embed_dim, hidden_dim, batch_first=True, bidirectional=True)
        self._head = nn.Linear(4 * hidden_dim, len(self.relations))
        self._params = (
            list(self._embedding.parameters())
            + list(self._encoder.parameters())
            + list(self._head.parameters())
        )

    def _token_states(self, tokens: Sequence[str]) -> torch.Tensor:
        ids = torch.tensor([[self.tokenizer.id_of(t) for t in tokens]], dtype=torch.long)
        states, _ = self._encoder(self._embedding(ids))
        return states[0]

    def encode_token_vectors(self, tokens: Sequence[str]) -> np.ndarray:
        with torch.no_grad():
            return self._token_states(tokens).numpy().copy()

    def _example_logits(self, example) -> torch.Tensor:
        tokens, head_pos, tail_pos = insert_entity_markers(example)
        if len(tokens) > self.max_sequence_length:
            raise BackendError(
                f"example {example.id!r}: marked input exceeds the maximum "
                f"sequence length {self.max_sequence_length}"
            )
        states = self._token_states(tokens)
        features = torch.cat([states[head_pos], states[tail_pos]])
        return self._head(features)

    def train(self, examples, config: TrainConfig) -> list[float]:
        if not examples:
            raise BackendError("cannot train on an empty example list")
        label_of = {relation: i for i, relation in enumerate(self.relations)}
        torch.manual_seed(config.seed)
        rng = random.Random(config.seed)
        optimizer = torch.optim.AdamW(self._params, lr=config.learning_rate, weight_decay=0.0)
        order = list(range(len(examples)))
        history: list[float] = []
        for epoch in range(config.epochs):
            rng.shuffle(order)
            epoch_losses: list[float] = []
            for start in range(0, len(order), config.batch_size):
                batch = [examples[i] for i in order[start : start + config.batch_size]]
                optimizer.zero_grad()
                logits = torch.stack([self._example_logits(ex) for ex in batch])
                labels = torch.tensor([label_of[ex.relation] for ex in batch])
                loss = nn.functional.cross_entropy(logits, labels)
                if not torch.isfinite(loss):
                    raise BackendError(f"non-finite loss at epoch {epoch}")
                loss.backward()
                optimizer.step()
                epoch_losses.append(loss.item())
            history.append(sum(epoch_losses) / len(epoch_losses))
        return history

    def predict_relation(self, example) -> str:
        with torch.no_grad():
            logits = self._example_logits(example)
        return self.relations[int(logits.argmax())]
