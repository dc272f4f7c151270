"""Run a frozen pretrained transformer over a corpus and dump last-layer
vectors, one CTXE entry per sequence.

The classification and separator marker pieces are fed to the model but
excluded from the emitted rows, so row t is the vector of content piece t.
The piece vocabulary actually used is written next to the store so the
consuming side can replay the identical segmentation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .conll import read_sequences
from .ctxe import write_atomic
from .wordpiece import split_sequence

log = logging.getLogger(__name__)

MAX_LENGTH_BY_SOURCE = {"forum-sentence": 512, "tweet": 130}


@dataclass
class ExportJob:
    corpus_path: Path
    model_id: str
    output_path: Path
    vocab_out_path: Path
    source: str = "forum-sentence"
    batch_size: int = 8

    def __post_init__(self):
        self.corpus_path = Path(self.corpus_path)
        self.output_path = Path(self.output_path)
        self.vocab_out_path = Path(self.vocab_out_path)
        if self.source not in MAX_LENGTH_BY_SOURCE:
            raise ValueError(f"unknown source {self.source!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def max_tokens(self) -> int:
        return MAX_LENGTH_BY_SOURCE[self.source]


@dataclass
class ExportResult:
    entries: int
    dimension: int
    truncated: list[str] = field(default_factory=list)


def export(job: ExportJob) -> ExportResult:
    tokenizer = AutoTokenizer.from_pretrained(job.model_id)
    model = AutoModel.from_pretrained(job.model_id)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    torch.set_num_threads(1)  # bit-identical repeated runs

    vocab = tokenizer.get_vocab()
    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id
    pad_id = tokenizer.pad_token_id or 0
    unk = tokenizer.unk_token
    # The model's positional capacity bounds content pieces (two slots go to
    # the marker pieces).
    max_pieces = int(model.config.max_position_embeddings) - 2

    sequences = read_sequences(job.corpus_path)
    truncated: list[str] = []
    pieced: list[tuple[str, list[int]]] = []
    for seq_id, surfaces in sequences:
        if len(surfaces) > job.max_tokens:
            truncated.append(
                f"{seq_id}: {len(surfaces)} tokens truncated to {job.max_tokens}"
            )
            surfaces = surfaces[: job.max_tokens]
        pieces = split_sequence(surfaces, vocab, unk)
        if len(pieces) > max_pieces:
            truncated.append(
                f"{seq_id}: {len(pieces)} pieces truncated to {max_pieces}"
            )
            pieces = pieces[:max_pieces]
        pieced.append((seq_id, [vocab[p] for p in pieces]))

    entries: list[tuple[str, np.ndarray]] = []
    dimension = int(model.config.hidden_size)
    with torch.no_grad():
        for lo in range(0, len(pieced), job.batch_size):
            chunk = pieced[lo : lo + job.batch_size]
            width = max(len(ids) for _, ids in chunk) + 2
            input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
            attention = torch.zeros((len(chunk), width), dtype=torch.long)
            for i, (_, ids) in enumerate(chunk):
                row = [cls_id] + ids + [sep_id]
                input_ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
                attention[i, : len(row)] = 1
            hidden = model(input_ids=input_ids, attention_mask=attention).last_hidden_state
            for i, (seq_id, ids) in enumerate(chunk):
                rows = hidden[i, 1 : 1 + len(ids)].numpy().astype(np.float32)
                entries.append((seq_id, rows))

    write_atomic(job.output_path, dimension, entries)
    id_to_piece = sorted(vocab.items(), key=lambda kv: kv[1])
    job.vocab_out_path.write_text(
        "\n".join(piece for piece, _ in id_to_piece) + "\n", encoding="utf-8"
    )
    if truncated:
        sidecar = Path(str(job.output_path) + ".log")
        sidecar.write_text("\n".join(truncated) + "\n", encoding="utf-8")
        for line in truncated:
            log.warning("%s", line)
    return ExportResult(len(entries), dimension, truncated)
