import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_banded

from clusterperf import queueing
from clusterperf.markov import (
    DEFAULT_TRUNCATION,
    SteadyStateVector,
    TruncatedChain,
    metrics_from_distribution,
    oracle_metrics,
    solve_steady_state,
    thomas_solve,
)
from clusterperf.queueing import QueueParameters

GRID = (5, 10, 15, 20, 25, 30)


def banded_reference(lower, diag, upper, rhs):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


@settings(max_examples=50)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=0, max_value=2**32 - 1))
def test_thomas_matches_banded_lu(n, seed):
    rng = np.random.default_rng(seed)
    lower, upper = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = rng.uniform(2.5, 4, n) * rng.choice([-1, 1], n)
    rhs = rng.normal(size=n)
    np.testing.assert_allclose(thomas_solve(lower, diag, upper, rhs), banded_reference(lower, diag, upper, rhs), rtol=1e-10, atol=1e-12)


def test_thomas_rejects_bad_shapes():
    with pytest.raises(ValueError):
        thomas_solve(np.ones(2), np.ones(2), np.ones(1), np.ones(2))


def test_chain_validation():
    with pytest.raises(ValueError):
        TruncatedChain(0, 1.0, 2.0)
    with pytest.raises(ValueError):
        TruncatedChain(3, 1.0, 0.0)
    with pytest.raises(ValueError):
        TruncatedChain(2.5, 1.0, 2.0)


def test_two_state_chain_by_hand():
    # pi0 * 16 = pi1 * 32 and pi0 + pi1 = 1
    v = solve_steady_state(TruncatedChain(1, 16, 32))
    np.testing.assert_allclose(v.probabilities, [2 / 3, 1 / 3], rtol=1e-15)


def test_no_arrivals_stays_empty():
    v = solve_steady_state(TruncatedChain(1, 0, 32))
    assert list(v.probabilities) == [1.0, 0.0]
    m = metrics_from_distribution(v, QueueParameters(0, 32))
    assert m.mean_in_system == 0 and m.utilization == 0
    assert math.isnan(m.mean_response_time)


def test_half_load_p0():
    v = solve_steady_state(TruncatedChain(50, 16, 32))
    assert abs(v.probabilities[0] - 0.5) <= 1e-10


def test_half_load_mean_in_system():
    v = solve_steady_state(TruncatedChain(DEFAULT_TRUNCATION, 16, 32))
    assert metrics_from_distribution(v, QueueParameters(16, 32)).mean_in_system == pytest.approx(1.0, abs=1e-8)


def test_heavy_load_response_time_k200():
    m = oracle_metrics(QueueParameters(30, 32), truncation_level=200)
    assert abs(m.mean_response_time - 0.5) <= 1e-4


@pytest.mark.parametrize("lam", [0, 5, 16, 30, 31.9, 32, 40, 64])
@pytest.mark.parametrize("k", [1, 2, 7, 400])
def test_normalized_and_balanced(lam, k):
    v = solve_steady_state(TruncatedChain(k, lam, 32))
    p = v.probabilities
    assert len(p) == k + 1
    assert np.all(p >= 0)
    assert abs(math.fsum(p) - 1) <= 1e-12
    assert v.balance_residual(lam, 32) <= 1e-12
    assert v.saturated == (lam >= 32)


@pytest.mark.parametrize("lam", GRID + (16,))
def test_geometric_shape(lam):
    rho = lam / 32
    p = solve_steady_state(TruncatedChain(DEFAULT_TRUNCATION, lam, 32)).probabilities
    # ratios are only meaningful while both entries are normal doubles
    ok = p[1:] > 1e-290
    ratios = p[1:][ok] / p[:-1][ok]
    np.testing.assert_allclose(ratios, rho, rtol=1e-10)
    probs = [queueing.state_probability(QueueParameters(lam, 32), i) for i in range(20)]
    np.testing.assert_allclose(p[:20], probs, rtol=1e-9)


def test_truncated_distribution_matches_normalized_geometric():
    # Independent closed form of the finite chain: pi_i = rho^i (1-rho) / (1-rho^(K+1))
    k, rho = 12, 0.75
    p = solve_steady_state(TruncatedChain(k, 24, 32)).probabilities
    ref = np.array([rho**i for i in range(k + 1)]) * (1 - rho) / (1 - rho ** (k + 1))
    np.testing.assert_allclose(p, ref, rtol=1e-13)


def test_saturated_chain_is_reversed_geometric():
    k = 10
    p = solve_steady_state(TruncatedChain(k, 64, 32)).probabilities
    ref = np.array([2.0**i for i in range(k + 1)])
    np.testing.assert_allclose(p, ref / ref.sum(), rtol=1e-13)


@pytest.mark.parametrize("lam", GRID)
def test_oracle_equivalence_on_grid(lam):
    params = QueueParameters(lam, 32)
    rho = params.rho
    tol = max(1e-8, rho**DEFAULT_TRUNCATION * 100)
    got = oracle_metrics(params).as_dict()
    for key, ref in queueing.metrics(params).as_dict().items():
        assert got[key] == pytest.approx(ref, rel=tol), key


def test_vector_len_and_residual_of_single_state():
    v = SteadyStateVector(np.array([1.0]))
    assert len(v) == 1 and v.balance_residual(1.0, 2.0) == 0.0


def test_tail_mass_bound():
    assert TruncatedChain(400, 30, 32).tail_mass_bound() == pytest.approx(0.9375**401)
    assert TruncatedChain(4, 40, 32).tail_mass_bound() == 1.0
