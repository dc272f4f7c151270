import numpy as np
import pytest

from dictseq.crf import log_partition, nll_and_grad, path_score, viterbi
from oracles import (
    brute_log_partition,
    brute_viterbi,
    central_difference,
    max_relative_error,
)


def random_instance(rng, max_labels=4, max_len=5):
    k = rng.integers(2, max_labels + 1)
    n = rng.integers(1, max_len + 1)
    emissions = rng.normal(size=(n, k)) * 2.0
    transitions = np.zeros((k + 2, k + 2))
    transitions[: k + 1, : k + 2] = rng.normal(size=(k + 1, k + 2))
    return emissions, transitions


def test_path_score_zero_transitions_is_emission_sum():
    emissions = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    transitions = np.zeros((4, 4))
    assert path_score(emissions, transitions, [1, 0, 1]) == pytest.approx(2 + 3 + 6)


def test_path_score_length_one():
    emissions = np.array([[0.5, -0.5]])
    transitions = np.arange(16, dtype=float).reshape(4, 4)
    # START=2, STOP=3: trans[2,1] + trans[1,3] + emission
    assert path_score(emissions, transitions, [1]) == pytest.approx(9 + 7 - 0.5)


def test_equal_emissions_argmax_is_transition_driven():
    k = 3
    emissions = np.full((4, k), 1.25)
    transitions = np.zeros((k + 2, k + 2))
    transitions[0, 1] = 5.0
    transitions[1, 0] = 4.0
    path, _ = viterbi(emissions, transitions)
    assert path == [0, 1, 0, 1]


def test_log_partition_matches_enumeration_1000_trials():
    rng = np.random.default_rng(20240)
    for _ in range(1000):
        emissions, transitions = random_instance(rng)
        assert log_partition(emissions, transitions) == pytest.approx(
            brute_log_partition(emissions, transitions), abs=1e-9
        )


def test_log_partition_single_position():
    emissions = np.array([[1.0, 2.0]])
    transitions = np.zeros((4, 4))
    assert log_partition(emissions, transitions) == pytest.approx(
        np.log(np.exp(1.0) + np.exp(2.0))
    )


def test_log_partition_shift_identity():
    rng = np.random.default_rng(7)
    emissions, transitions = random_instance(rng)
    z = log_partition(emissions, transitions)
    shifted = emissions.copy()
    shifted[0] += 3.5
    assert log_partition(shifted, transitions) == pytest.approx(z + 3.5, abs=1e-9)


def test_viterbi_matches_enumeration_1000_trials():
    rng = np.random.default_rng(90125)
    for _ in range(1000):
        emissions, transitions = random_instance(rng)
        path, score = viterbi(emissions, transitions)
        oracle_path, oracle_score = brute_viterbi(emissions, transitions)
        assert path == oracle_path
        assert score == pytest.approx(oracle_score, abs=1e-9)


def test_viterbi_peaked_emissions_zero_transitions():
    k = 4
    rng = np.random.default_rng(3)
    emissions = rng.normal(size=(5, k))
    want = [2, 0, 3, 1, 1]
    for t, y in enumerate(want):
        emissions[t, y] += 100.0
    transitions = np.zeros((k + 2, k + 2))
    path, _ = viterbi(emissions, transitions)
    assert path == want


def test_viterbi_all_equal_takes_smallest_labels():
    emissions = np.zeros((4, 3))
    transitions = np.zeros((5, 5))
    path, _ = viterbi(emissions, transitions)
    assert path == [0, 0, 0, 0]


def test_viterbi_invariant_to_per_position_shift():
    rng = np.random.default_rng(11)
    emissions, transitions = random_instance(rng)
    path, _ = viterbi(emissions, transitions)
    shifted = emissions + rng.normal(size=(emissions.shape[0], 1))
    path2, _ = viterbi(shifted, transitions)
    assert path == path2


def test_partition_dominates_viterbi_score():
    rng = np.random.default_rng(12)
    for _ in range(50):
        emissions, transitions = random_instance(rng)
        _, best = viterbi(emissions, transitions)
        assert log_partition(emissions, transitions) >= best - 1e-12


def test_path_probabilities_sum_to_one():
    rng = np.random.default_rng(13)
    from oracles import brute_path_scores

    for _ in range(20):
        emissions, transitions = random_instance(rng)
        z = log_partition(emissions, transitions)
        total = np.exp(brute_path_scores(emissions, transitions) - z).sum()
        assert total == pytest.approx(1.0, abs=1e-9)


def test_nll_gradients_match_finite_differences():
    rng = np.random.default_rng(99)
    k, n = 3, 4
    emissions = rng.normal(size=(n, k))
    transitions = np.zeros((k + 2, k + 2))
    transitions[: k + 1, :] = rng.normal(size=(k + 1, k + 2)) * 0.5
    gold = [int(g) for g in rng.integers(0, k, size=n)]

    loss, d_em, d_tr = nll_and_grad(emissions, transitions, gold)
    assert loss >= 0

    params = {"emissions": emissions.copy(), "transitions": transitions.copy()}

    def f(p):
        return (
            log_partition(p["emissions"], p["transitions"])
            - path_score(p["emissions"], p["transitions"], gold)
        )

    numeric = central_difference(f, params, h=1e-6)
    assert np.max(np.abs(d_em - numeric["emissions"])) <= 1e-6
    # Structurally excluded cells never receive gradient.
    valid = np.zeros_like(transitions, dtype=bool)
    valid[: k + 1, : k + 2] = True
    valid[:, k] = False
    valid[k + 1, :] = False
    assert np.all(d_tr[~valid] == 0)
    assert np.max(np.abs(d_tr - numeric["transitions"])) <= 1e-6


def test_nll_zero_iff_certain_path():
    # One label: the only path has probability 1.
    emissions = np.array([[2.0], [1.0]])
    transitions = np.zeros((3, 3))
    loss, d_em, d_tr = nll_and_grad(emissions, transitions, [0, 0])
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(d_em, 0, atol=1e-12)


def test_emission_gradient_rows_sum_to_zero():
    rng = np.random.default_rng(5)
    emissions, transitions = random_instance(rng)
    n, k = emissions.shape
    gold = [int(g) for g in rng.integers(0, k, size=n)]
    _, d_em, _ = nll_and_grad(emissions, transitions, gold)
    assert np.allclose(d_em.sum(axis=1), 0, atol=1e-12)
