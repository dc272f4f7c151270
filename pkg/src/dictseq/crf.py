"""Linear-chain CRF: scoring, log-partition, likelihood gradient, Viterbi.

Label indices 0..K-1 are real labels; two virtual states START=K and STOP=K+1
bound every path. The transition matrix is (K+2)x(K+2) but only the blocks
START->label, label->label and label->STOP are ever read, so transitions into
START and out of STOP are structurally impossible and receive zero gradient.
All scores live in log space; sums over paths use log-sum-exp.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation, NumericError


def _logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    out = m.squeeze(axis) + np.log(np.sum(np.exp(x - m), axis=axis))
    return out


@dataclass
class CrfParams:
    """Transition scores with virtual boundary states."""

    label_count: int
    transitions: np.ndarray = field(default=None)  # (K+2, K+2)

    def __post_init__(self):
        k = self.label_count
        if self.transitions is None:
            self.transitions = np.zeros((k + 2, k + 2))
        if self.transitions.shape != (k + 2, k + 2):
            raise ContractViolation(
                f"transitions shape {self.transitions.shape}, want {(k + 2, k + 2)}"
            )

    @property
    def start(self) -> int:
        return self.label_count

    @property
    def stop(self) -> int:
        return self.label_count + 1


def _check(emissions: np.ndarray, transitions: np.ndarray) -> int:
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise ContractViolation(f"emissions shape {emissions.shape}")
    k = emissions.shape[1]
    if transitions.shape != (k + 2, k + 2):
        raise ContractViolation(
            f"transitions shape {transitions.shape} for {k} labels"
        )
    return k


def path_score(
    emissions: np.ndarray, transitions: np.ndarray, path: Sequence[int]
) -> float:
    """Emission scores along the path plus START->y1, y_t->y_{t+1}, yL->STOP."""
    k = _check(emissions, transitions)
    if len(path) != emissions.shape[0]:
        raise ContractViolation(f"path length {len(path)} != {emissions.shape[0]}")
    start, stop = k, k + 1
    path = list(path)
    score = transitions[start, path[0]] + transitions[path[-1], stop]
    score += sum(transitions[a, b] for a, b in zip(path, path[1:]))
    score += sum(emissions[t, y] for t, y in enumerate(path))
    return float(score)


def log_partition(emissions: np.ndarray, transitions: np.ndarray) -> float:
    """log sum over all label paths of exp(path_score), forward algorithm."""
    k = _check(emissions, transitions)
    start, stop = k, k + 1
    alpha = transitions[start, :k] + emissions[0]
    for t in range(1, emissions.shape[0]):
        alpha = _logsumexp(alpha[:, None] + transitions[:k, :k], axis=0) + emissions[t]
    z = float(_logsumexp(alpha + transitions[:k, stop], axis=0))
    if not np.isfinite(z):
        raise NumericError("log partition is not finite")
    return z


def nll_and_grad(
    emissions: np.ndarray, transitions: np.ndarray, gold: Sequence[int]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative log-likelihood of the gold path and its exact gradients.

    Gradients are expected feature counts (posterior marginals from the
    forward-backward recursions) minus the gold indicator counts; they cover
    the emissions matrix and the full (K+2)^2 transition matrix.
    """
    k = _check(emissions, transitions)
    n = emissions.shape[0]
    if len(gold) != n:
        raise ContractViolation(f"gold path length {len(gold)} != {n}")
    start, stop = k, k + 1
    trans = transitions[:k, :k]

    alpha = np.empty((n, k))
    alpha[0] = transitions[start, :k] + emissions[0]
    for t in range(1, n):
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + trans, axis=0) + emissions[t]

    beta = np.empty((n, k))
    beta[n - 1] = transitions[:k, stop]
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp(trans + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)

    z = float(_logsumexp(alpha[n - 1] + beta[n - 1], axis=0))
    if not np.isfinite(z):
        raise NumericError("log partition is not finite")
    loss = z - path_score(emissions, transitions, gold)

    # Unary marginals minus gold one-hots.
    d_emissions = np.exp(alpha + beta - z)
    for t, y in enumerate(gold):
        d_emissions[t, y] -= 1.0

    d_transitions = np.zeros_like(transitions)
    marg0 = np.exp(alpha[0] + beta[0] - z)
    d_transitions[start, :k] = marg0
    d_transitions[start, gold[0]] -= 1.0
    margl = np.exp(alpha[n - 1] + beta[n - 1] - z)
    d_transitions[:k, stop] = margl
    d_transitions[gold[-1], stop] -= 1.0
    for t in range(n - 1):
        pair = np.exp(
            alpha[t][:, None] + trans + (emissions[t + 1] + beta[t + 1])[None, :] - z
        )
        d_transitions[:k, :k] += pair
        d_transitions[gold[t], gold[t + 1]] -= 1.0
    return loss, d_emissions, d_transitions


def viterbi(emissions: np.ndarray, transitions: np.ndarray) -> tuple[list[int], float]:
    """Maximum-score path; ties resolve to the smallest label index."""
    k = _check(emissions, transitions)
    n = emissions.shape[0]
    start, stop = k, k + 1
    delta = transitions[start, :k] + emissions[0]
    back = np.empty((n, k), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + transitions[:k, :k]
        back[t] = np.argmax(cand, axis=0)  # first max = smallest index
        delta = cand[back[t], np.arange(k)] + emissions[t]
    final = delta + transitions[:k, stop]
    last = int(np.argmax(final))
    path = [last]
    for t in range(n - 1, 0, -1):
        last = int(back[t, last])
        path.append(last)
    path.reverse()
    return path, float(np.max(final))
