"""Mini-batch training with Adam, cross-validation and run manifests.

The loss is the mean per-sequence CRF negative log-likelihood of each batch.
Weight decay is L2-coupled: the decay term joins the raw gradient before the
Adam moment updates, so a zero learning rate leaves parameters untouched.
Model selection keeps the epoch with the best dev macro-F1.
"""
from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import crf as crf_ops
from .corpus import (
    Concept,
    FoldAssignment,
    LabelTag,
    LabeledSequence,
    assign_folds,
    normalize_bio,
)
from .embeddings import (
    ContextualStore,
    PieceAlignment,
    StaticEmbeddingTable,
    collapse_from_pieces,
    expand_to_pieces,
    wordpiece,
)
from .errors import ConfigError, NumericError
from .evaluation import MetricsReport, evaluate, mean_report
from .gazetteer import DictRegistry, dict_vectors
from .network import (
    DictMode,
    ModelConfig,
    ModelParams,
    SequenceBatch,
    Variant,
    backward,
    build_inputs,
    emissions,
    forward,
    init_params,
    make_batch,
)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 0.01
    weight_decay: float = 1e-5
    epochs: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    grad_clip: float | None = None
    seed: int = 0
    folds: int = 3
    patience: int = 10

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.folds < 2:
            raise ConfigError("batch_size, epochs >= 1 and folds >= 2 required")
        if min(self.learning_rate, self.weight_decay) < 0:
            raise ConfigError("learning_rate and weight_decay must be >= 0")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError("grad_clip must be positive when set")

    def to_json(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_epsilon": self.adam_epsilon,
            "grad_clip": self.grad_clip,
            "seed": self.seed,
            "folds": self.folds,
            "patience": self.patience,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def label_vocabulary(concepts: Sequence[Concept]) -> list[str]:
    """Canonical label index order: O first, then B/I per concept."""
    labels = ["O"]
    for c in concepts:
        labels.append(f"B-{c.value}")
        labels.append(f"I-{c.value}")
    return labels


@dataclass
class Resources:
    """Everything a model needs besides its parameters."""

    table: StaticEmbeddingTable
    labels: list[str]
    registry: DictRegistry | None = None
    store: ContextualStore | None = None
    piece_vocab: frozenset[str] | None = None

    def __post_init__(self):
        self.tag_index = {tag: i for i, tag in enumerate(self.labels)}


@dataclass
class Example:
    """A sequence compiled to model inputs."""

    id: str
    inputs: np.ndarray
    dict_matrix: np.ndarray | None
    label_idx: list[int] | None
    alignment: PieceAlignment | None
    n_tokens: int


def prepare_example(
    seq: LabeledSequence,
    config: ModelConfig,
    resources: Resources,
    with_labels: bool = True,
) -> Example:
    dicts = None
    if config.dict_mode is not DictMode.NONE:
        if resources.registry is None:
            raise ConfigError("dict_mode requires a dictionary registry")
        dicts = dict_vectors(resources.registry, seq.tokens)
    alignment = None
    if config.variant is Variant.BERT_LSTM_CRF:
        if resources.piece_vocab is None:
            raise ConfigError("contextual variant requires a piece vocabulary")
        alignment = wordpiece(seq.tokens, resources.piece_vocab)
    x = build_inputs(seq, resources.table, resources.store, dicts, config, alignment)

    dict_matrix = None
    if config.dict_mode is DictMode.DICT2:
        rows = [d.as_array() for d in dicts]
        if alignment is not None:
            rows = expand_to_pieces(alignment, rows)
        dict_matrix = np.stack(rows)

    label_idx = None
    if with_labels and seq.labels is not None:
        try:
            tags = [resources.tag_index[str(t)] for t in seq.labels]
        except KeyError as exc:
            raise ConfigError(f"{seq.id}: label {exc} not in model vocabulary") from None
        if alignment is not None:
            tags = expand_to_pieces(alignment, tags)
        label_idx = tags
    return Example(seq.id, x, dict_matrix, label_idx, alignment, len(seq.tokens))


def _batch_from(examples: Sequence[Example], config: ModelConfig,
                with_labels: bool, batch_id: str = "") -> SequenceBatch:
    return make_batch(
        [e.id for e in examples],
        [e.inputs for e in examples],
        config,
        [e.dict_matrix for e in examples] if config.dict_mode is DictMode.DICT2 else None,
        [e.label_idx for e in examples] if with_labels else None,
        batch_id,
    )


def batch_loss_and_grads(
    params: ModelParams, batch: SequenceBatch
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean per-sequence CRF NLL over the batch plus gradients per tensor."""
    features, cache = forward(params, batch)
    logp = emissions(params, features)
    trans = params.tensors["crf.trans"]
    d_emissions = np.zeros_like(logp)
    d_trans = np.zeros_like(trans)
    total = 0.0
    for bi, labels in enumerate(batch.labels):
        n = int(batch.lengths[bi])
        loss_b, d_e, d_t = crf_ops.nll_and_grad(logp[bi, :n], trans, labels)
        total += loss_b
        d_emissions[bi, :n] = d_e
        d_trans += d_t
    scale = 1.0 / batch.size
    grads, _ = backward(cache, d_emissions * scale)
    grads["crf.trans"] += d_trans * scale
    loss = total * scale
    if not np.isfinite(loss):
        raise NumericError(f"loss diverged in batch {batch.batch_id!r}")
    return loss, grads


class Adam:
    """Classic Adam; weight decay is added to the gradient (L2-coupled)."""

    def __init__(self, params: ModelParams, config: TrainConfig):
        self.config = config
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        c = self.config
        if c.grad_clip is not None:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if norm > c.grad_clip:
                grads = {k: g * (c.grad_clip / norm) for k, g in grads.items()}
        self.t += 1
        correct1 = 1.0 - c.adam_beta1**self.t
        correct2 = 1.0 - c.adam_beta2**self.t
        for name, tensor in params.tensors.items():
            g = grads[name] + c.weight_decay * tensor
            self.m[name] = c.adam_beta1 * self.m[name] + (1 - c.adam_beta1) * g
            self.v[name] = c.adam_beta2 * self.v[name] + (1 - c.adam_beta2) * g * g
            m_hat = self.m[name] / correct1
            v_hat = self.v[name] / correct2
            tensor -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.adam_epsilon)


def _epoch_order(ids: Sequence[str], seed: int, epoch: int) -> list[str]:
    order = sorted(ids)
    random.Random(f"{seed}:{epoch}").shuffle(order)
    return order


def predict_sequences(
    params: ModelParams,
    sequences: Sequence[LabeledSequence],
    resources: Resources,
    batch_size: int = 16,
) -> list[LabeledSequence]:
    """Viterbi-decode each sequence; piece-level predictions collapse to the
    first piece of each token; illegal BIO continuations are repaired."""
    config = params.config
    trans = params.tensors["crf.trans"]
    out: list[LabeledSequence] = []
    for lo in range(0, len(sequences), batch_size):
        chunk = sequences[lo : lo + batch_size]
        examples = [
            prepare_example(s, config, resources, with_labels=False) for s in chunk
        ]
        batch = _batch_from(examples, config, with_labels=False)
        logp = emissions(params, forward(params, batch)[0])
        for bi, (seq, ex) in enumerate(zip(chunk, examples)):
            n = int(batch.lengths[bi])
            path, _ = crf_ops.viterbi(logp[bi, :n], trans)
            if ex.alignment is not None:
                path = collapse_from_pieces(ex.alignment, path)
            tags = [LabelTag.parse(resources.labels[y]) for y in path]
            out.append(seq.with_labels(normalize_bio(tags)))
    return out


@dataclass
class FoldResult:
    params: ModelParams
    epoch_losses: list[float]
    dev_macro_f1: list[float]
    best_epoch: int

    def fragment(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "dev_macro_f1": self.dev_macro_f1,
            "best_epoch": self.best_epoch,
        }


def train_fold(
    model_config: ModelConfig,
    train_config: TrainConfig,
    train_sequences: Sequence[LabeledSequence],
    dev_sequences: Sequence[LabeledSequence],
    resources: Resources,
) -> FoldResult:
    """Train on seeded shuffled mini-batches; return the best-dev-F1 epoch."""
    if model_config.label_count != len(resources.labels):
        raise ConfigError(
            f"model has {model_config.label_count} labels, "
            f"resources define {len(resources.labels)}"
        )
    examples = {
        s.id: prepare_example(s, model_config, resources) for s in train_sequences
    }
    if any(e.label_idx is None for e in examples.values()):
        raise ConfigError("training requires labeled sequences")
    params = init_params(model_config)
    optimizer = Adam(params, train_config)
    best: ModelParams | None = None
    best_f1 = -1.0
    best_epoch = -1
    epoch_losses: list[float] = []
    dev_f1s: list[float] = []
    for epoch in range(train_config.epochs):
        order = _epoch_order(list(examples), train_config.seed, epoch)
        total = 0.0
        for bi in range(0, len(order), train_config.batch_size):
            chunk = [examples[i] for i in order[bi : bi + train_config.batch_size]]
            batch = _batch_from(
                chunk, model_config, with_labels=True,
                batch_id=f"epoch{epoch}-batch{bi // train_config.batch_size}",
            )
            loss, grads = batch_loss_and_grads(params, batch)
            optimizer.step(params, grads)
            total += loss * batch.size
        epoch_losses.append(total / len(examples))

        predicted = predict_sequences(
            params, dev_sequences, resources, train_config.batch_size
        )
        dev_f1 = evaluate(dev_sequences, predicted).macro_f1
        dev_f1s.append(dev_f1)
        if dev_f1 > best_f1:
            best, best_f1, best_epoch = params.clone(), dev_f1, epoch
            if best_f1 >= 1.0:  # nothing left to select
                break
        elif epoch - best_epoch >= train_config.patience:
            break
    return FoldResult(best, epoch_losses, dev_f1s, best_epoch)


def cross_validate(
    model_config: ModelConfig,
    train_config: TrainConfig,
    corpus: Sequence[LabeledSequence],
    resources: Resources,
) -> tuple[list[MetricsReport], MetricsReport, FoldAssignment, list[FoldResult]]:
    """Hold out each fold in turn (it doubles as the dev set), then average."""
    fa = assign_folds(corpus, train_config.folds, train_config.seed)
    reports: list[MetricsReport] = []
    results: list[FoldResult] = []
    for k in range(train_config.folds):
        held = [s for s in corpus if fa.assignment[s.id] == k]
        rest = [s for s in corpus if fa.assignment[s.id] != k]
        result = train_fold(model_config, train_config, rest, held, resources)
        predicted = predict_sequences(
            result.params, held, resources, train_config.batch_size
        )
        reports.append(evaluate(held, predicted))
        results.append(result)
    return reports, mean_report(reports), fa, results


def corpus_digest(sequences: Sequence[LabeledSequence]) -> str:
    h = hashlib.sha256()
    for seq in sequences:
        h.update(seq.id.encode("utf-8"))
        for tok in seq.tokens:
            h.update(tok.surface.encode("utf-8"))
        if seq.labels is not None:
            for tag in seq.labels:
                h.update(str(tag).encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def registry_digest(registry: DictRegistry | None) -> str:
    if registry is None:
        return ""
    return hashlib.sha256(registry.digest_material().encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to re-run an experiment bit-identically."""

    model_config: ModelConfig
    train_config: TrainConfig
    labels: list[str]
    registry_digest: str
    corpus_digests: dict[str, str]
    fold_assignment: dict[str, int] | None = None
    fold_fragments: list[dict] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "model_config": self.model_config.to_json(),
            "train_config": self.train_config.to_json(),
            "labels": self.labels,
            "registry_digest": self.registry_digest,
            "corpus_digests": self.corpus_digests,
            "fold_assignment": self.fold_assignment,
            "fold_fragments": self.fold_fragments,
            "metrics": self.metrics,
            "wall_clock_seconds": self.wall_clock_seconds,
            "extra": self.extra,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


class Stopwatch:
    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.seconds = time.monotonic() - self.start
