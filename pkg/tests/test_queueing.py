from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from clusterperf.queueing import (
    QueueParameters,
    SaturatedQueueError,
    check_stability,
    mean_in_system,
    mean_queue_length,
    mean_response_time,
    mean_wait,
    metrics,
    state_distribution,
    state_probability,
    utilization,
)


def exact(lam, mu):
    """Rational-arithmetic oracle for the M/M/1 formulas."""
    lam, mu = Fraction(lam), Fraction(mu)
    rho = lam / mu
    t = 1 / (mu - lam)
    return {"rho": rho, "T": t, "W": t - 1 / mu, "N": lam * t, "N_Q": lam * (t - 1 / mu), "P0": 1 - rho}


def Q(lam, mu=32):
    return QueueParameters(lam, mu)


@pytest.mark.parametrize("lam, mu, expected", [(30, 32, True), (32, 32, False), (5, 32, True), (40, 32, False)])
def test_check_stability(lam, mu, expected):
    assert check_stability(Q(lam, mu)) is expected


@pytest.mark.parametrize(
    "lam, mu, msg",
    [(-1, 32, "arrival_rate"), (1, 0, "service_rate"), (1, -3, "service_rate"), (float("nan"), 1, "finite")],
)
def test_invalid_parameters(lam, mu, msg):
    with pytest.raises(ValueError, match=msg):
        QueueParameters(lam, mu)


@pytest.mark.parametrize("lam, expected", [(5, 0.15625), (0, 0.0), (30, 0.9375)])
def test_utilization(lam, expected):
    assert utilization(Q(lam)) == expected


def test_utilization_does_not_require_stability():
    assert utilization(Q(40)) == 1.25


def test_state_probability():
    assert state_probability(Q(16), 0) == 0.5
    assert state_probability(Q(5), 0) == 0.84375
    assert state_probability(Q(16), 2) == 0.125


def test_state_probability_rejects_bad_input():
    with pytest.raises(SaturatedQueueError):
        state_probability(Q(32), 0)
    with pytest.raises(ValueError):
        state_probability(Q(5), -1)


@pytest.mark.parametrize(
    "func, lam, expected",
    [
        (mean_in_system, 16, 1.0),
        (mean_in_system, 30, 15.0),
        (mean_in_system, 5, float(Fraction(5, 27))),
        (mean_response_time, 30, 0.5),
        (mean_response_time, 16, 0.0625),
        (mean_wait, 5, float(Fraction(5, 32) / 27)),
        (mean_wait, 0, 0.0),
        (mean_wait, 30, 0.46875),
        (mean_queue_length, 0, 0.0),
        (mean_queue_length, 30, 14.0625),
        (mean_queue_length, 16, 0.5),
    ],
)
def test_single_quantities(func, lam, expected):
    assert func(Q(lam)) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_mean_wait_matches_printed_value():
    assert mean_wait(Q(5)) == pytest.approx(0.00578704, abs=5e-9)


def test_response_time_reference_value_for_lambda_5():
    assert abs(mean_response_time(Q(5)) - 0.03704) <= 5e-6


@pytest.mark.parametrize("func", [mean_in_system, mean_response_time, mean_wait, mean_queue_length, metrics])
@pytest.mark.parametrize("lam", [32, 33.5])
def test_unstable_rejected(func, lam):
    with pytest.raises(SaturatedQueueError, match="saturated"):
        func(Q(lam))


def test_metrics_half_load():
    m = metrics(Q(16))
    assert (m.utilization, m.mean_in_system, m.mean_response_time) == (0.5, 1.0, 0.0625)
    assert (m.mean_wait, m.mean_queue_length, m.prob_empty) == (0.03125, 0.5, 0.5)


@pytest.mark.parametrize("lam, rho, t", [(20, 0.625, 0.08333), (25, 0.78125, 0.14286)])
def test_metrics_reference_points(lam, rho, t):
    m = metrics(Q(lam))
    assert m.utilization == rho
    assert abs(m.mean_response_time - t) <= 5e-6


@pytest.mark.parametrize("lam", [0, 0.5, 5, 10, 15, 20, 25, 30, 31.9])
def test_metrics_against_rational_oracle(lam):
    ref = exact(lam, 32)
    got = metrics(Q(lam)).as_dict()
    for key, value in ref.items():
        assert got[key] == pytest.approx(float(value), rel=1e-13, abs=1e-15), key


def test_state_distribution_prefix():
    d = state_distribution(Q(16), 4)
    assert d.state_probabilities == (0.5, 0.25, 0.125, 0.0625)
    assert len(d) == 4 and d[3] == 0.0625


stable = st.tuples(
    st.floats(min_value=1e-3, max_value=1e4), st.floats(min_value=1e-6, max_value=0.999)
).map(lambda t: QueueParameters(t[0] * t[1], t[0]))


@given(stable)
def test_little_law_exact(p):
    m = metrics(p)
    assert m.mean_in_system == pytest.approx(p.arrival_rate * m.mean_response_time, rel=1e-12, abs=1e-300)


@given(stable)
def test_response_time_decomposition(p):
    m = metrics(p)
    assert m.mean_response_time == pytest.approx(m.mean_wait + 1 / p.service_rate, rel=1e-12)
    assert m.mean_queue_length == pytest.approx(m.mean_in_system - m.utilization, rel=1e-9, abs=1e-12)
    assert m.prob_empty == 1 - m.utilization


@given(st.floats(min_value=1e-4, max_value=0.98))
def test_state_probabilities_sum_and_series(rho):
    p = QueueParameters(rho * 10, 10.0)
    k = 0
    while p.rho ** (k + 1) >= 1e-12:
        k += 1
    probs = [state_probability(p, i) for i in range(k + 1)]
    assert abs(sum(probs) - 1) <= 1e-10
    assert sum(i * q for i, q in enumerate(probs)) == pytest.approx(mean_in_system(p), abs=1e-8, rel=1e-8)
    for i in range(min(k, 50)):
        assert probs[i + 1] / probs[i] == pytest.approx(p.rho, rel=1e-10)


@given(stable, st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(p, c):
    scaled = QueueParameters(p.arrival_rate * c, p.service_rate * c)
    assert metrics(scaled).utilization == pytest.approx(metrics(p).utilization, rel=1e-12)
    assert metrics(scaled).mean_response_time == pytest.approx(metrics(p).mean_response_time / c, rel=1e-12)


@given(st.lists(st.floats(min_value=0, max_value=31.99), min_size=2, max_size=2, unique=True))
def test_monotone_in_arrival_rate(pair):
    lo, hi = sorted(pair)
    assume(hi - lo > 1e-9)  # below this the difference is lost to rounding
    a, b = metrics(Q(lo)), metrics(Q(hi))
    for name in ("mean_response_time", "mean_wait", "mean_in_system", "mean_queue_length"):
        assert getattr(a, name) < getattr(b, name), name
