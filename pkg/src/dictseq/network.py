"""Two-layer BiLSTM encoder with dictionary-vector injection and attention.

Dictionary bits can join the inputs of layer 1 (DICT1) or be concatenated to
the layer-1 hidden states feeding layer 2 (DICT2). The second architecture
variant additionally concatenates precomputed contextual vectors to the
static embeddings at layer-1 input. Everything runs in float64 with manually
derived gradients so finite-difference checks are decisive.

Shapes: batches are (B, T, ·) with a {0,1} mask; padded positions are gated
out of the recurrences, zeroed in the emitted hidden states, and excluded
from attention weights, so they contribute nothing to loss or gradients.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import LabeledSequence
from .embeddings import ContextualStore, PieceAlignment, StaticEmbeddingTable, expand_to_pieces
from .errors import ConfigError, ContractViolation, NumericError, StoreError
from .gazetteer import NUM_BITS, DictVector

CHECKPOINT_MAGIC = b"DSCK"
CHECKPOINT_VERSION = 1


class Variant(Enum):
    LSTM_CRF = "lstm-crf"
    BERT_LSTM_CRF = "bert-lstm-crf"


class DictMode(Enum):
    NONE = "none"
    DICT1 = "dict1"
    DICT2 = "dict2"


class Attention(Enum):
    NONE = "none"
    SELF = "self"
    CROSS = "cross"


@dataclass(frozen=True)
class ModelConfig:
    variant: Variant
    dict_mode: DictMode = DictMode.NONE
    attention: Attention = Attention.NONE
    hidden_size: int = 100
    static_dim: int = 300
    contextual_dim: int = 0
    dict_dim: int = NUM_BITS
    label_count: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.dict_dim != NUM_BITS:
            raise ConfigError(f"dict_dim must be {NUM_BITS}, got {self.dict_dim}")
        if self.attention is not Attention.NONE and self.variant is not Variant.LSTM_CRF:
            raise ConfigError("attention is only supported by the lstm-crf variant")
        if self.variant is Variant.BERT_LSTM_CRF and self.contextual_dim <= 0:
            raise ConfigError("bert-lstm-crf needs contextual_dim > 0")
        if min(self.hidden_size, self.static_dim, self.label_count) < 1:
            raise ConfigError("hidden_size, static_dim and label_count must be >= 1")

    @property
    def layer1_input_dim(self) -> int:
        dim = self.static_dim
        if self.variant is Variant.BERT_LSTM_CRF:
            dim += self.contextual_dim
        if self.dict_mode is DictMode.DICT1:
            dim += self.dict_dim
        return dim

    @property
    def layer2_input_dim(self) -> int:
        dim = 2 * self.hidden_size
        if self.dict_mode is DictMode.DICT2:
            dim += self.dict_dim
        return dim

    @property
    def feature_dim(self) -> int:
        width = 2 * self.hidden_size
        return 2 * width if self.attention is not Attention.NONE else width

    def to_json(self) -> dict:
        return {
            "variant": self.variant.value,
            "dict_mode": self.dict_mode.value,
            "attention": self.attention.value,
            "hidden_size": self.hidden_size,
            "static_dim": self.static_dim,
            "contextual_dim": self.contextual_dim,
            "dict_dim": self.dict_dim,
            "label_count": self.label_count,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(
            variant=Variant(data["variant"]),
            dict_mode=DictMode(data["dict_mode"]),
            attention=Attention(data["attention"]),
            hidden_size=data["hidden_size"],
            static_dim=data["static_dim"],
            contextual_dim=data["contextual_dim"],
            dict_dim=data["dict_dim"],
            label_count=data["label_count"],
            seed=data["seed"],
        )


def _lstm_names(layer: str) -> list[str]:
    return [f"{layer}.{d}.{p}" for d in ("fwd", "bwd") for p in ("W", "U", "b")]


def tensor_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor name -> shape map; fully determined by the config."""
    h = config.hidden_size
    shapes: dict[str, tuple[int, ...]] = {}
    for layer, din in (("lstm1", config.layer1_input_dim), ("lstm2", config.layer2_input_dim)):
        for d in ("fwd", "bwd"):
            shapes[f"{layer}.{d}.W"] = (4 * h, din)
            shapes[f"{layer}.{d}.U"] = (4 * h, h)
            shapes[f"{layer}.{d}.b"] = (4 * h,)
    if config.attention is not Attention.NONE:
        for name in ("wq", "wk", "wv"):
            shapes[f"attn.{name}"] = (2 * h, 2 * h)
    shapes["emit.W"] = (config.label_count, config.feature_dim)
    shapes["emit.b"] = (config.label_count,)
    shapes["crf.trans"] = (config.label_count + 2, config.label_count + 2)
    return shapes


@dataclass
class ModelParams:
    """All trainable tensors, keyed by canonical names from tensor_shapes."""

    config: ModelConfig
    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        want = tensor_shapes(self.config)
        if set(self.tensors) != set(want):
            missing = set(want) - set(self.tensors)
            extra = set(self.tensors) - set(want)
            raise ContractViolation(f"tensor mismatch: missing {missing}, extra {extra}")
        for name, shape in want.items():
            if self.tensors[name].shape != shape:
                raise ContractViolation(
                    f"{name}: shape {self.tensors[name].shape}, want {shape}"
                )

    def clone(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})


def init_params(config: ModelConfig) -> ModelParams:
    """Seeded initialization: LSTM weights uniform in +-1/sqrt(hidden) with
    forget-gate bias 1; projections uniform in +-1/sqrt(fan_in); transitions 0."""
    rng = np.random.default_rng(config.seed)
    h = config.hidden_size
    tensors: dict[str, np.ndarray] = {}
    bound = 1.0 / np.sqrt(h)
    for name, shape in tensor_shapes(config).items():
        if name.startswith("lstm") and name.endswith(("W", "U")):
            tensors[name] = rng.uniform(-bound, bound, shape)
        elif name.startswith("lstm"):  # biases
            b = np.zeros(shape)
            b[h : 2 * h] = 1.0
            tensors[name] = b
        elif name.startswith("attn") or name == "emit.W":
            fan_in = shape[1]
            tensors[name] = rng.uniform(-1.0 / np.sqrt(fan_in), 1.0 / np.sqrt(fan_in), shape)
        else:  # emit.b, crf.trans
            tensors[name] = np.zeros(shape)
    return ModelParams(config, tensors)


@dataclass
class SequenceBatch:
    """Padded batch with per-sequence lengths and a {0,1} mask."""

    ids: tuple[str, ...]
    inputs: np.ndarray  # (B, T, layer1_input_dim)
    lengths: np.ndarray  # (B,)
    mask: np.ndarray  # (B, T)
    dict2: np.ndarray | None = None  # (B, T, 7) when dict_mode == DICT2
    labels: tuple[tuple[int, ...], ...] | None = None
    batch_id: str = ""

    def __post_init__(self):
        b, t, _ = self.inputs.shape
        if self.lengths.shape != (b,) or self.mask.shape != (b, t):
            raise ContractViolation("batch lengths/mask shapes inconsistent")
        if self.labels is not None:
            for seq_id, length, labs in zip(self.ids, self.lengths, self.labels):
                if len(labs) != length:
                    raise ContractViolation(
                        f"{seq_id}: {len(labs)} labels for length {length}"
                    )
        if not self.batch_id:
            object.__setattr__(self, "batch_id", ",".join(self.ids[:4]))

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


def make_batch(
    ids: Sequence[str],
    input_matrices: Sequence[np.ndarray],
    config: ModelConfig,
    dict_matrices: Sequence[np.ndarray] | None = None,
    labels: Sequence[Sequence[int]] | None = None,
    batch_id: str = "",
) -> SequenceBatch:
    """Pad per-sequence matrices to a common length and stack them."""
    b = len(input_matrices)
    if b == 0:
        raise ContractViolation("empty batch")
    lengths = np.array([m.shape[0] for m in input_matrices], dtype=np.int64)
    t = int(lengths.max())
    d1 = config.layer1_input_dim
    inputs = np.zeros((b, t, d1))
    mask = np.zeros((b, t))
    for i, m in enumerate(input_matrices):
        if m.shape[1] != d1:
            raise ContractViolation(f"{ids[i]}: input width {m.shape[1]}, want {d1}")
        inputs[i, : m.shape[0]] = m
        mask[i, : m.shape[0]] = 1.0
    dict2 = None
    if config.dict_mode is DictMode.DICT2:
        if dict_matrices is None:
            raise ContractViolation("dict_mode=dict2 requires dictionary matrices")
        dict2 = np.zeros((b, t, config.dict_dim))
        for i, m in enumerate(dict_matrices):
            if m.shape != (lengths[i], config.dict_dim):
                raise ContractViolation(f"{ids[i]}: dict matrix shape {m.shape}")
            dict2[i, : m.shape[0]] = m
    packed = tuple(tuple(int(y) for y in seq) for seq in labels) if labels is not None else None
    return SequenceBatch(tuple(ids), inputs, lengths, mask, dict2, packed, batch_id)


def build_inputs(
    seq: LabeledSequence,
    table: StaticEmbeddingTable,
    store: ContextualStore | None,
    dicts: Sequence[DictVector] | None,
    config: ModelConfig,
    alignment: PieceAlignment | None = None,
) -> np.ndarray:
    """Per-position layer-1 input rows for one sequence.

    For the contextual variant the rows are piece-level: the static vector of
    a token repeats once per piece and is concatenated with that piece's
    stored contextual vector. DICT1 appends the dictionary bits here; DICT2
    defers them to layer 2 (see make_batch).
    """
    if config.dict_mode is not DictMode.NONE:
        if dicts is None or len(dicts) != len(seq.tokens):
            raise ContractViolation(
                f"{seq.id}: need one dictionary vector per token"
            )
    static_rows = [table.lookup(t.surface) for t in seq.tokens]
    if len(static_rows) and static_rows[0].shape != (config.static_dim,):
        raise ContractViolation(
            f"{seq.id}: static dim {static_rows[0].shape[0]} != {config.static_dim}"
        )
    if config.variant is Variant.LSTM_CRF:
        parts = [np.stack(static_rows)]
        if config.dict_mode is DictMode.DICT1:
            parts.append(np.stack([d.as_array() for d in dicts]))
        return np.concatenate(parts, axis=1)

    if store is None or alignment is None:
        raise ContractViolation(f"{seq.id}: contextual variant needs a store and alignment")
    contextual = store.get(seq.id)
    if contextual.shape[0] != alignment.num_pieces:
        raise ContractViolation(
            f"{seq.id}: store has {contextual.shape[0]} rows, "
            f"alignment yields {alignment.num_pieces} pieces"
        )
    if contextual.shape[1] != config.contextual_dim:
        raise ContractViolation(
            f"{seq.id}: contextual dim {contextual.shape[1]} != {config.contextual_dim}"
        )
    expanded_static = np.stack(expand_to_pieces(alignment, static_rows))
    parts = [expanded_static, contextual.astype(np.float64)]
    if config.dict_mode is DictMode.DICT1:
        rows = expand_to_pieces(alignment, [d.as_array() for d in dicts])
        parts.append(np.stack(rows))
    return np.concatenate(parts, axis=1)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class _Step:
    t: int
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    hc: np.ndarray  # tanh of the new cell state
    m: np.ndarray  # (B, 1) mask column


def _lstm_forward(
    w: np.ndarray, u: np.ndarray, b: np.ndarray, x: np.ndarray, mask: np.ndarray, reverse: bool
) -> tuple[np.ndarray, list[_Step]]:
    bsz, t_max, _ = x.shape
    hdim = u.shape[1]
    h = np.zeros((bsz, hdim))
    c = np.zeros((bsz, hdim))
    out = np.zeros((bsz, t_max, hdim))
    steps: list[_Step] = []
    order = range(t_max - 1, -1, -1) if reverse else range(t_max)
    for t in order:
        xt = x[:, t]
        m = mask[:, t][:, None]
        a = xt @ w.T + h @ u.T + b
        i = _sigmoid(a[:, :hdim])
        f = _sigmoid(a[:, hdim : 2 * hdim])
        g = np.tanh(a[:, 2 * hdim : 3 * hdim])
        o = _sigmoid(a[:, 3 * hdim :])
        c_new = f * c + i * g
        hc = np.tanh(c_new)
        h_new = o * hc
        steps.append(_Step(t, xt, h, c, i, f, g, o, hc, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        out[:, t] = h
    return out, steps


def _lstm_backward(
    w: np.ndarray, u: np.ndarray, steps: list[_Step], d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    bsz, t_max, _ = d_out.shape
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(w.shape[0])
    dx = np.zeros((bsz, t_max, w.shape[1]))
    dh_carry = np.zeros((bsz, u.shape[1]))
    dc_carry = np.zeros((bsz, u.shape[1]))
    for step in reversed(steps):
        m = step.m
        dh = d_out[:, step.t] + dh_carry
        dh_new = dh * m
        dh_prev = dh * (1.0 - m)
        dc_new = dc_carry * m
        dc_prev = dc_carry * (1.0 - m)
        do = dh_new * step.hc
        dc_new = dc_new + dh_new * step.o * (1.0 - step.hc**2)
        df = dc_new * step.c_prev
        di = dc_new * step.g
        dg = dc_new * step.i
        dc_prev = dc_prev + dc_new * step.f
        da = np.concatenate(
            [
                di * step.i * (1.0 - step.i),
                df * step.f * (1.0 - step.f),
                dg * (1.0 - step.g**2),
                do * step.o * (1.0 - step.o),
            ],
            axis=1,
        )
        dw += da.T @ step.x
        du += da.T @ step.h_prev
        db += da.sum(axis=0)
        dx[:, step.t] = da @ w
        dh_carry = da @ u + dh_prev
        dc_carry = dc_prev
    return dx, dw, du, db


@dataclass
class _AttnCache:
    queries: list[np.ndarray] = field(default_factory=list)
    keys: list[np.ndarray] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)
    alphas: list[np.ndarray] = field(default_factory=list)
    sent_repr: list[np.ndarray] = field(default_factory=list)  # cross only


@dataclass
class ForwardCache:
    config: ModelConfig
    params: ModelParams
    batch: SequenceBatch
    steps1: tuple[list[_Step], list[_Step]]
    steps2: tuple[list[_Step], list[_Step]]
    h1: np.ndarray
    layer2_in: np.ndarray
    h2: np.ndarray
    attn: _AttnCache | None
    features: np.ndarray


def _attend(
    params: ModelParams, config: ModelConfig, batch: SequenceBatch, h2: np.ndarray
) -> tuple[np.ndarray, _AttnCache]:
    wq, wk, wv = (params.tensors[f"attn.{n}"] for n in ("wq", "wk", "wv"))
    h = config.hidden_size
    scale = np.sqrt(2.0 * h)
    cache = _AttnCache()
    ctx = np.zeros_like(h2)
    for bi in range(batch.size):
        length = int(batch.lengths[bi])
        rows = h2[bi]  # (T, 2h); padded rows are zero
        keys = rows @ wk.T
        values = rows @ wv.T
        if config.attention is Attention.CROSS:
            sent = np.concatenate([h2[bi, length - 1, :h], h2[bi, 0, h:]])
            q = wq @ sent
            scores = keys[:length] @ q / scale
            scores -= scores.max()
            alpha = np.exp(scores)
            alpha /= alpha.sum()
            context = alpha @ values[:length]
            ctx[bi, :length] = context
            cache.sent_repr.append(sent)
            cache.queries.append(q)
        else:  # SELF
            queries = rows @ wq.T
            scores = queries[:length] @ keys[:length].T / scale
            scores -= scores.max(axis=1, keepdims=True)
            alpha = np.exp(scores)
            alpha /= alpha.sum(axis=1, keepdims=True)
            ctx[bi, :length] = alpha @ values[:length]
            cache.queries.append(queries)
        cache.keys.append(keys)
        cache.values.append(values)
        cache.alphas.append(alpha)
    return ctx, cache


def forward(
    params: ModelParams, batch: SequenceBatch, config: ModelConfig | None = None
) -> tuple[np.ndarray, ForwardCache]:
    """Run the encoder; returns per-position feature rows plus the backprop
    workspace. Features are hidden2, or concat(hidden2, attention context)."""
    config = config or params.config
    t = params.tensors
    mask3 = batch.mask[:, :, None]

    hf1, sf1 = _lstm_forward(t["lstm1.fwd.W"], t["lstm1.fwd.U"], t["lstm1.fwd.b"],
                             batch.inputs, batch.mask, reverse=False)
    hb1, sb1 = _lstm_forward(t["lstm1.bwd.W"], t["lstm1.bwd.U"], t["lstm1.bwd.b"],
                             batch.inputs, batch.mask, reverse=True)
    h1 = np.concatenate([hf1, hb1], axis=2) * mask3

    if config.dict_mode is DictMode.DICT2:
        layer2_in = np.concatenate([h1, batch.dict2], axis=2)
    else:
        layer2_in = h1
    hf2, sf2 = _lstm_forward(t["lstm2.fwd.W"], t["lstm2.fwd.U"], t["lstm2.fwd.b"],
                             layer2_in, batch.mask, reverse=False)
    hb2, sb2 = _lstm_forward(t["lstm2.bwd.W"], t["lstm2.bwd.U"], t["lstm2.bwd.b"],
                             layer2_in, batch.mask, reverse=True)
    h2 = np.concatenate([hf2, hb2], axis=2) * mask3

    attn_cache = None
    if config.attention is Attention.NONE:
        features = h2
    else:
        ctx, attn_cache = _attend(params, config, batch, h2)
        features = np.concatenate([h2, ctx], axis=2) * mask3

    if not np.isfinite(features).all():
        raise NumericError(f"non-finite activations in batch {batch.batch_id!r}")
    return features, ForwardCache(
        config, params, batch, (sf1, sb1), (sf2, sb2), h1, layer2_in, h2, attn_cache, features
    )


def emissions(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Affine projection to label scores followed by per-position log-softmax."""
    z = features @ params.tensors["emit.W"].T + params.tensors["emit.b"]
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _attention_backward(
    cache: ForwardCache, d_h2_direct: np.ndarray, d_ctx: np.ndarray, grads: dict
) -> np.ndarray:
    config, batch, h2 = cache.config, cache.batch, cache.h2
    t = cache.params.tensors
    wq, wk, wv = t["attn.wq"], t["attn.wk"], t["attn.wv"]
    h = config.hidden_size
    scale = np.sqrt(2.0 * h)
    ac = cache.attn
    d_h2 = d_h2_direct.copy()
    for bi in range(batch.size):
        length = int(batch.lengths[bi])
        rows = h2[bi]
        keys, values, alpha = ac.keys[bi], ac.values[bi], ac.alphas[bi]
        if config.attention is Attention.CROSS:
            q, sent = ac.queries[bi], ac.sent_repr[bi]
            d_context = d_ctx[bi, :length].sum(axis=0)
            d_values = np.outer(alpha, d_context)
            d_alpha = values[:length] @ d_context
            d_scores = alpha * (d_alpha - float(d_alpha @ alpha))
            d_q = keys[:length].T @ d_scores / scale
            d_keys = np.outer(d_scores, q) / scale
            grads["attn.wq"] += np.outer(d_q, sent)
            d_sent = wq.T @ d_q
            d_h2[bi, length - 1, :h] += d_sent[:h]
            d_h2[bi, 0, h:] += d_sent[h:]
            d_h2[bi, :length] += d_keys @ wk + d_values @ wv
            grads["attn.wk"] += d_keys.T @ rows[:length]
            grads["attn.wv"] += d_values.T @ rows[:length]
        else:  # SELF
            queries = ac.queries[bi]
            d_context = d_ctx[bi, :length]
            d_values = alpha.T @ d_context
            d_alpha = d_context @ values[:length].T
            d_scores = alpha * (d_alpha - (d_alpha * alpha).sum(axis=1, keepdims=True))
            d_queries = d_scores @ keys[:length] / scale
            d_keys = d_scores.T @ queries[:length] / scale
            d_h2[bi, :length] += d_queries @ wq + d_keys @ wk + d_values @ wv
            grads["attn.wq"] += d_queries.T @ rows[:length]
            grads["attn.wk"] += d_keys.T @ rows[:length]
            grads["attn.wv"] += d_values.T @ rows[:length]
    return d_h2


def backward(
    cache: ForwardCache, d_emissions: np.ndarray
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Exact gradients for every tensor (except crf.trans, which the CRF loss
    differentiates directly) plus gradients w.r.t. the batch input rows.

    `d_emissions` is the upstream gradient w.r.t. the log-softmax output of
    emissions(); rows at padded positions must be zero.
    """
    config, batch = cache.config, cache.batch
    t = cache.params.tensors
    mask3 = batch.mask[:, :, None]
    grads = {name: np.zeros_like(arr) for name, arr in t.items()}

    # Through log-softmax and the affine projection.
    z = cache.features @ t["emit.W"].T + t["emit.b"]
    z = z - z.max(axis=-1, keepdims=True)
    probs = np.exp(z)
    probs /= probs.sum(axis=-1, keepdims=True)
    d_emissions = d_emissions * batch.mask[:, :, None]
    dz = d_emissions - probs * d_emissions.sum(axis=-1, keepdims=True)
    grads["emit.W"] = np.einsum("btk,btf->kf", dz, cache.features)
    grads["emit.b"] = dz.sum(axis=(0, 1))
    d_features = dz @ t["emit.W"]

    width = 2 * config.hidden_size
    if config.attention is Attention.NONE:
        d_h2 = d_features
    else:
        d_features = d_features * mask3
        d_h2 = _attention_backward(
            cache, d_features[:, :, :width], d_features[:, :, width:], grads
        )
    d_h2 = d_h2 * mask3  # h2 was zeroed at padded positions

    d_l2in_f, dw, du, db = _lstm_backward(
        t["lstm2.fwd.W"], t["lstm2.fwd.U"], cache.steps2[0], d_h2[:, :, : config.hidden_size]
    )
    grads["lstm2.fwd.W"], grads["lstm2.fwd.U"], grads["lstm2.fwd.b"] = dw, du, db
    d_l2in_b, dw, du, db = _lstm_backward(
        t["lstm2.bwd.W"], t["lstm2.bwd.U"], cache.steps2[1], d_h2[:, :, config.hidden_size :]
    )
    grads["lstm2.bwd.W"], grads["lstm2.bwd.U"], grads["lstm2.bwd.b"] = dw, du, db
    d_layer2_in = d_l2in_f + d_l2in_b

    d_h1 = d_layer2_in[:, :, : 2 * config.hidden_size] * mask3

    d_x_f, dw, du, db = _lstm_backward(
        t["lstm1.fwd.W"], t["lstm1.fwd.U"], cache.steps1[0], d_h1[:, :, : config.hidden_size]
    )
    grads["lstm1.fwd.W"], grads["lstm1.fwd.U"], grads["lstm1.fwd.b"] = dw, du, db
    d_x_b, dw, du, db = _lstm_backward(
        t["lstm1.bwd.W"], t["lstm1.bwd.U"], cache.steps1[1], d_h1[:, :, config.hidden_size :]
    )
    grads["lstm1.bwd.W"], grads["lstm1.bwd.U"], grads["lstm1.bwd.b"] = dw, du, db
    d_inputs = d_x_f + d_x_b
    return grads, d_inputs


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    labels: Sequence[str],
    meta: dict | None = None,
) -> None:
    """Versioned checkpoint: JSON header then named float64 tensor blocks."""
    names = sorted(params.tensors)
    header = {
        "config": params.config.to_json(),
        "labels": list(labels),
        "tensors": names,
        "meta": meta or {},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(raw)))
        fh.write(raw)
        for name in names:
            arr = np.ascontiguousarray(params.tensors[name], dtype="<f8")
            nm = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nm)))
            fh.write(nm)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> tuple[ModelParams, list[str], dict]:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise StoreError(f"{path}: bad checkpoint magic")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != CHECKPOINT_VERSION:
        raise StoreError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
    config = ModelConfig.from_json(header["config"])
    pos = 10 + hlen
    tensors: dict[str, np.ndarray] = {}
    for expected in header["tensors"]:
        (nlen,) = struct.unpack("<H", data[pos : pos + 2])
        pos += 2
        name = data[pos : pos + nlen].decode("utf-8")
        pos += nlen
        if name != expected:
            raise StoreError(f"{path}: tensor {name!r} out of order")
        (ndim,) = struct.unpack("<B", data[pos : pos + 1])
        pos += 1
        shape = struct.unpack(f"<{ndim}I", data[pos : pos + 4 * ndim])
        pos += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data[pos : pos + 8 * count], dtype="<f8")
        if arr.size != count:
            raise StoreError(f"{path}: truncated tensor {name!r}")
        pos += 8 * count
        tensors[name] = arr.reshape(shape).copy()
    return ModelParams(config, tensors), list(header["labels"]), header["meta"]
