"""Shared fixtures: random batches and the full training loss with gradients."""
from __future__ import annotations

import numpy as np

from dictseq import crf as crf_ops
from dictseq.network import (
    Attention,
    DictMode,
    ModelConfig,
    ModelParams,
    SequenceBatch,
    Variant,
    backward,
    emissions,
    forward,
    make_batch,
)

TINY = dict(hidden_size=3, static_dim=4, contextual_dim=5, label_count=3)


def tiny_config(variant=Variant.LSTM_CRF, dict_mode=DictMode.NONE,
                attention=Attention.NONE, seed=0, **overrides) -> ModelConfig:
    kwargs = {**TINY, **overrides}
    if variant is Variant.LSTM_CRF:
        kwargs["contextual_dim"] = 0
    return ModelConfig(variant, dict_mode, attention, seed=seed, **kwargs)


def random_batch(config: ModelConfig, rng: np.random.Generator,
                 lengths=(4, 3)) -> SequenceBatch:
    ids = [f"s{i}" for i in range(len(lengths))]
    inputs = [rng.normal(size=(n, config.layer1_input_dim)) for n in lengths]
    dicts = None
    if config.dict_mode is DictMode.DICT2:
        dicts = [(rng.random(size=(n, config.dict_dim)) < 0.4).astype(float)
                 for n in lengths]
    labels = [[int(y) for y in rng.integers(0, config.label_count, size=n)]
              for n in lengths]
    return make_batch(ids, inputs, config, dicts, labels)


def pipeline_loss(params: ModelParams, batch: SequenceBatch) -> float:
    """Mean per-sequence CRF negative log-likelihood of the batch."""
    features, _ = forward(params, batch)
    logp = emissions(params, features)
    trans = params.tensors["crf.trans"]
    total = 0.0
    for bi, labels in enumerate(batch.labels):
        n = int(batch.lengths[bi])
        total += crf_ops.nll_and_grad(logp[bi, :n], trans, labels)[0]
    return total / batch.size


def pipeline_loss_and_grads(params: ModelParams, batch: SequenceBatch):
    """Loss plus analytic gradients for every tensor, including transitions."""
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
    grads, d_inputs = backward(cache, d_emissions * scale)
    grads["crf.trans"] += d_trans * scale
    return total * scale, grads, d_inputs
