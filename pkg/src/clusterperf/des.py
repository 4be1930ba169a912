"""Seeded discrete-event simulation of a single-server FIFO queue.

Interarrival gaps and service demands come from two independent PCG64
substreams spawned from one seed, so two runs with the same seed and
different rates see the same uniforms. Exponential variates use the inverse
transform ``-ln(u) / rate`` with ``u == 0`` remapped to the smallest positive
double.

Statistics skip the first ``warmup_jobs`` completions. The measurement window
runs from the warm-up-th departure (time 0 when there is no warm-up) to the
last departure.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, NamedTuple, Optional

import numpy as np

from .queueing import QueueParameters

__all__ = [
    "EventKind",
    "Event",
    "SimulationConfig",
    "SimulationReport",
    "exponential_variates",
    "run_simulation",
    "little_law_residual",
    "departure_state_frequencies",
]

_TINY = float(np.nextafter(0.0, 1.0))


class EventKind(IntEnum):
    # Values double as tie-break priority: departures first at equal times.
    DEPARTURE = 0
    ARRIVAL = 1


class Event(NamedTuple):
    time: float
    kind: EventKind
    job_id: int


@dataclass(frozen=True)
class SimulationConfig:
    params: QueueParameters
    seed: int
    total_jobs: int
    warmup_jobs: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.total_jobs < 1:
            raise ValueError(f"total_jobs must be >= 1, got {self.total_jobs!r}")
        if not 0 <= self.warmup_jobs < self.total_jobs:
            raise ValueError(
                f"warmup_jobs must satisfy 0 <= warmup_jobs < total_jobs, "
                f"got warmup_jobs={self.warmup_jobs}, total_jobs={self.total_jobs}"
            )
        if self.params.arrival_rate <= 0:
            raise ValueError("arrival_rate must be > 0 for simulation")

    @classmethod
    def with_default_warmup(cls, params: QueueParameters, seed: int, total_jobs: int):
        """Discard the first 10% of jobs."""
        return cls(params, seed, total_jobs, total_jobs // 10)


@dataclass(frozen=True)
class SimulationReport:
    observed_response_time: float
    observed_wait: float
    observed_utilization: float
    observed_mean_in_system: float
    jobs_completed: int
    elapsed_sim_time: float
    # Absolute simulated time at which the measurement window opened.
    window_start: float = 0.0
    saturated: bool = False
    # counts[i] = post-warm-up departures that left i files behind.
    departure_state_counts: tuple[int, ...] = field(default=(), repr=False)

    @property
    def throughput(self) -> float:
        return self.jobs_completed / self.elapsed_sim_time if self.elapsed_sim_time > 0 else 0.0


def exponential_variates(gen: np.random.Generator, rate: float, size: int) -> np.ndarray:
    u = gen.random(size)
    u[u == 0.0] = _TINY
    return -np.log(u) / rate


def _streams(seed: int):
    arrivals, services = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(arrivals)), np.random.Generator(np.random.PCG64(services))


def run_simulation(
    config: SimulationConfig,
    observer: Optional[Callable[[Event, int], None]] = None,
) -> SimulationReport:
    """Run one replication and return its post-warm-up statistics.

    ``observer``, if given, is called after every processed event with the
    event and the resulting number in system.
    """
    lam = config.params.arrival_rate
    mu = config.params.service_rate
    total, warmup = config.total_jobs, config.warmup_jobs

    arr_gen, svc_gen = _streams(config.seed)
    gaps = exponential_variates(arr_gen, lam, total).tolist()
    demands = exponential_variates(svc_gen, mu, total).tolist()

    arrived_at = [0.0] * total
    started_at = [0.0] * total
    waiting = deque()
    calendar = [Event(gaps[0], EventKind.ARRIVAL, 0)]
    push, pop = heapq.heappush, heapq.heappop
    ARRIVAL = EventKind.ARRIVAL

    in_system = 0
    last_t = 0.0
    area = busy = 0.0
    departed = 0
    window_start = 0.0
    sum_response = sum_wait = 0.0
    counts: list[int] = []

    while calendar:
        ev = pop(calendar)
        t, kind, job = ev
        if departed >= warmup and in_system:
            dt = t - last_t
            area += in_system * dt
            busy += dt
        last_t = t
        if kind is ARRIVAL:
            arrived_at[job] = t
            if job + 1 < total:
                push(calendar, Event(t + gaps[job + 1], ARRIVAL, job + 1))
            if in_system == 0:
                started_at[job] = t
                push(calendar, Event(t + demands[job], EventKind.DEPARTURE, job))
            else:
                waiting.append(job)
            in_system += 1
        else:
            in_system -= 1
            if waiting:
                nxt = waiting.popleft()
                started_at[nxt] = t
                push(calendar, Event(t + demands[nxt], EventKind.DEPARTURE, nxt))
            departed += 1
            if departed > warmup:
                sum_response += t - arrived_at[job]
                sum_wait += started_at[job] - arrived_at[job]
                if in_system >= len(counts):
                    counts.extend([0] * (in_system + 1 - len(counts)))
                counts[in_system] += 1
            elif departed == warmup:
                window_start = t
        if observer is not None:
            observer(ev, in_system)

    completed = total - warmup
    elapsed = last_t - window_start
    return SimulationReport(
        observed_response_time=sum_response / completed,
        observed_wait=sum_wait / completed,
        observed_utilization=busy / elapsed if elapsed > 0 else 0.0,
        observed_mean_in_system=area / elapsed if elapsed > 0 else 0.0,
        jobs_completed=completed,
        elapsed_sim_time=elapsed,
        window_start=window_start,
        saturated=lam >= mu,
        departure_state_counts=tuple(counts),
    )


def little_law_residual(report: SimulationReport, params: QueueParameters | None = None) -> float:
    """Relative gap between time-average N and throughput * mean sojourn.

    ``params`` is accepted for symmetry with the analytical checks and is not
    used: the residual is purely empirical. An empty system gives 0.
    """
    n = report.observed_mean_in_system
    if n == 0.0:
        return 0.0
    return abs(n - report.throughput * report.observed_response_time) / n


def departure_state_frequencies(report: SimulationReport, max_state: int) -> np.ndarray:
    """Empirical P(i left behind at a departure) for i = 0..max_state."""
    counts = np.zeros(max_state + 1)
    head = report.departure_state_counts[: max_state + 1]
    counts[: len(head)] = head
    return counts / report.jobs_completed
