"""Numerical oracle for the M/M/1 station via a truncated birth-death chain.

The chain keeps states 0..K. Its stationary vector is obtained by solving the
tridiagonal balance system ``Q^T x = 0`` with one equation replaced by an
anchor ``x_a = 1``, then normalizing. Nothing here uses the geometric closed
form, so agreement with :mod:`clusterperf.queueing` is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .queueing import QueueParameters, SteadyStateMetrics

__all__ = [
    "DEFAULT_TRUNCATION",
    "TruncatedChain",
    "SteadyStateVector",
    "thomas_solve",
    "solve_steady_state",
    "metrics_from_distribution",
    "oracle_metrics",
]

DEFAULT_TRUNCATION = 400


@dataclass(frozen=True)
class TruncatedChain:
    truncation_level: int
    arrival_rate: float
    service_rate: float

    def __post_init__(self):
        if int(self.truncation_level) != self.truncation_level or self.truncation_level < 1:
            raise ValueError(f"truncation_level must be an integer >= 1, got {self.truncation_level!r}")
        if not self.service_rate > 0:
            raise ValueError(f"service_rate must be > 0, got {self.service_rate!r}")
        if not self.arrival_rate >= 0:
            raise ValueError(f"arrival_rate must be >= 0, got {self.arrival_rate!r}")

    @classmethod
    def from_params(cls, params: QueueParameters, truncation_level: int = DEFAULT_TRUNCATION):
        return cls(truncation_level, params.arrival_rate, params.service_rate)

    @property
    def n_states(self) -> int:
        return self.truncation_level + 1

    def tail_mass_bound(self) -> float:
        """rho**(K+1): upper bound on the probability mass cut off by truncation."""
        rho = self.arrival_rate / self.service_rate
        return rho ** (self.truncation_level + 1) if rho < 1 else 1.0

    def generator_bands(self):
        """Sub-, main and super-diagonal of the transposed generator ``Q^T``.

        Row i of ``Q^T`` is the inflow balance of state i:
        ``lam * x[i-1] - out_i * x[i] + mu * x[i+1]``.
        """
        lam, mu, n = self.arrival_rate, self.service_rate, self.n_states
        lower = np.full(n - 1, lam)
        upper = np.full(n - 1, mu)
        diag = np.full(n, -(lam + mu))
        diag[0] = -lam
        diag[-1] = -mu
        return lower, diag, upper


@dataclass(frozen=True)
class SteadyStateVector:
    probabilities: np.ndarray
    # True when the chain was solved with lambda >= mu; the vector is then
    # the finite-truncation distribution, not an approximation of anything.
    saturated: bool = False
    tail_mass_bound: float = 0.0

    def __len__(self):
        return len(self.probabilities)

    def balance_residual(self, arrival_rate: float, service_rate: float) -> float:
        """max_i |lam * pi_i - mu * pi_{i+1}|."""
        p = self.probabilities
        if len(p) < 2:
            return 0.0
        return float(np.max(np.abs(arrival_rate * p[:-1] - service_rate * p[1:])))


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower`` and ``upper`` have length n-1; ``diag`` and ``rhs`` length n.
    No pivoting: callers must supply a system where that is safe.
    """
    n = len(diag)
    if len(lower) != n - 1 or len(upper) != n - 1 or len(rhs) != n:
        raise ValueError("band lengths inconsistent with system size")
    c = np.empty(max(n - 1, 0))
    d = np.empty(n)
    denom = diag[0]
    if n > 1:
        c[0] = upper[0] / denom
    d[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        if i < n - 1:
            c[i] = upper[i] / denom
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom
    x = d
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


def solve_steady_state(chain: TruncatedChain) -> SteadyStateVector:
    """Stationary distribution of the truncated chain.

    The anchor is state 0 when lambda <= mu and state K otherwise, so the
    unnormalized solution never exceeds 1 and cannot overflow.
    """
    lower, diag, upper = chain.generator_bands()
    n = chain.n_states
    rhs = np.zeros(n)
    lam, mu = chain.arrival_rate, chain.service_rate
    if lam <= mu:
        diag[0], upper[0] = 1.0, 0.0
        rhs[0] = 1.0
    else:
        diag[-1], lower[-1] = 1.0, 0.0
        rhs[-1] = 1.0
        # Eliminate bottom-up so the anchor row is the first pivot.
        lower, diag, upper, rhs = upper[::-1].copy(), diag[::-1].copy(), lower[::-1].copy(), rhs[::-1].copy()
    x = thomas_solve(lower, diag, upper, rhs)
    if lam > mu:
        x = x[::-1].copy()
    x = np.clip(x, 0.0, None)
    x /= math.fsum(x)
    return SteadyStateVector(x, saturated=lam >= mu, tail_mass_bound=chain.tail_mass_bound())


def metrics_from_distribution(vector: SteadyStateVector, params: QueueParameters) -> SteadyStateMetrics:
    """Derive steady-state metrics from a solved distribution.

    N is the literal truncated sum of i * pi_i and T = N / lambda. For
    lambda = 0, T and W are reported as ``nan``.
    """
    p = vector.probabilities
    n_sys = math.fsum(np.arange(len(p)) * p)
    busy = 1.0 - float(p[0])
    if params.arrival_rate > 0:
        t = n_sys / params.arrival_rate
        w = t - 1.0 / params.service_rate
    else:
        t = w = math.nan
    return SteadyStateMetrics(
        utilization=busy,
        mean_in_system=n_sys,
        mean_response_time=t,
        mean_wait=w,
        mean_queue_length=n_sys - busy,
        prob_empty=float(p[0]),
    )


def oracle_metrics(params: QueueParameters, truncation_level: int = DEFAULT_TRUNCATION) -> SteadyStateMetrics:
    chain = TruncatedChain.from_params(params, truncation_level)
    return metrics_from_distribution(solve_steady_state(chain), params)
