"""Experiment runners that turn scenarios into CSV tables.

Numbers are written in Python's shortest round-trip form (``repr`` of a
float, plain digits for integers), so identical inputs give byte-identical
CSV. Missing values (e.g. closed-form columns of a saturated row) are empty
cells.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import markov, queueing
from .cluster import InsufficientSpaceError, StorageCluster
from .des import SimulationConfig, little_law_residual, run_simulation
from .queueing import QueueParameters
from .scenario import CapacityScenario, IngestScenario, SweepScenario

__all__ = [
    "Table",
    "format_value",
    "SWEEP_BASE_COLUMNS",
    "CAPACITY_COLUMNS",
    "sweep_columns",
    "sweep_row",
    "run_sweep",
    "run_capacity",
    "build_ingest_cluster",
    "run_ingest",
]

METRICS = ("rho", "T", "W", "N", "N_Q", "P0")
SIM_METRICS = ("rho", "T", "W", "N")
SWEEP_BASE_COLUMNS = ("lambda", "mu", "status") + METRICS
CAPACITY_COLUMNS = (
    "nodes",
    "raw_total",
    "usable_total",
    "used_after_workload",
    "avg_used_per_node",
    "usable_fraction",
    "status",
)


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple, ...]

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]

    def write_csv(self, stream) -> None:
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _reldev(value, reference):
    if value is None or reference is None or math.isnan(value) or math.isnan(reference):
        return None
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    return abs(value - reference) / abs(reference)


def sweep_columns(engines) -> tuple[str, ...]:
    cols = list(SWEEP_BASE_COLUMNS)
    if "oracle" in engines:
        cols += [f"{m}_oracle" for m in METRICS]
        cols += [f"reldev_{m}_oracle" for m in METRICS]
    if "sim" in engines:
        cols += [f"{m}_sim" for m in SIM_METRICS]
        cols += [f"reldev_{m}_sim" for m in SIM_METRICS]
        cols.append("little_residual_sim")
    return tuple(cols)


def _simulate(params: QueueParameters, scenario: SweepScenario) -> tuple[dict, float]:
    s = scenario.sim
    reports = [
        run_simulation(SimulationConfig(params, s.seed + k, s.jobs, s.effective_warmup))
        for k in range(s.replications)
    ]
    n = len(reports)
    est = {
        "rho": math.fsum(r.observed_utilization for r in reports) / n,
        "T": math.fsum(r.observed_response_time for r in reports) / n,
        "W": math.fsum(r.observed_wait for r in reports) / n,
        "N": math.fsum(r.observed_mean_in_system for r in reports) / n,
    }
    return est, max(little_law_residual(r, params) for r in reports)


def sweep_row(arrival_rate: float, scenario: SweepScenario) -> tuple:
    """One CSV row for one arrival rate; saturated rates get a flagged row."""
    params = QueueParameters(arrival_rate, scenario.service_rate)
    row = {"lambda": arrival_rate, "mu": scenario.service_rate}
    if params.stable:
        row["status"] = "ok"
        row.update(queueing.metrics(params).as_dict())
    else:
        row["status"] = "saturated"
    if "oracle" in scenario.engines:
        om = markov.oracle_metrics(params, scenario.truncation_level).as_dict()
        for m in METRICS:
            row[f"{m}_oracle"] = om[m]
            row[f"reldev_{m}_oracle"] = _reldev(om[m], row.get(m))
    if "sim" in scenario.engines:
        if arrival_rate > 0:
            est, residual = _simulate(params, scenario)
            for m in SIM_METRICS:
                row[f"{m}_sim"] = est[m]
                row[f"reldev_{m}_sim"] = _reldev(est[m], row.get(m))
            row["little_residual_sim"] = residual
    return tuple(row.get(c) for c in sweep_columns(scenario.engines))


def run_sweep(scenario: SweepScenario, workers: int = 1) -> Table:
    """Rows follow ``scenario.arrival_rates`` order regardless of ``workers``."""
    rates = scenario.arrival_rates
    if workers > 1 and len(rates) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, rates, [scenario] * len(rates)))
    else:
        rows = [sweep_row(lam, scenario) for lam in rates]
    return Table(sweep_columns(scenario.engines), tuple(rows))


def _fresh_cluster(scenario, nodes: int) -> StorageCluster:
    cluster = StorageCluster(scenario.cluster_config())
    for i in range(1, nodes + 1):
        cluster.register_node(f"D{i}", scenario.per_node_raw)
    return cluster


def _ingest(cluster: StorageCluster, workload):
    """Store each file in turn, yielding (file_id, size, manifest or None)."""
    index = len(cluster.metadata) + 1
    for size in workload:
        while f"file{index}" in cluster.metadata:
            index += 1
        file_id = f"file{index}"
        index += 1
        try:
            yield file_id, size, cluster.store_file(file_id, size)
        except InsufficientSpaceError:
            yield file_id, size, None


def _store_workload(cluster: StorageCluster, workload):
    """Returns (stored manifests, ids of files that did not fit)."""
    stored, failed = [], []
    for file_id, _, manifest in _ingest(cluster, workload):
        if manifest is None:
            failed.append(file_id)
        else:
            stored.append(manifest)
    return stored, failed


def run_capacity(scenario: CapacityScenario) -> Table:
    """One row per node count, each on a freshly built cluster."""
    rows = []
    for nodes in scenario.node_counts:
        cluster = _fresh_cluster(scenario, nodes)
        _, failed = _store_workload(cluster, scenario.workload)
        report = cluster.usage_report()
        rows.append(
            (
                nodes,
                report.total_raw,
                report.total_usable,
                report.total_used,
                report.average_used_per_node,
                report.usable_fraction,
                "insufficient_space" if failed else "ok",
            )
        )
    return Table(CAPACITY_COLUMNS, tuple(rows))


def build_ingest_cluster(scenario: IngestScenario, state: StorageCluster | None = None):
    """Cluster after the workload; ``state`` replaces the scenario's node spec."""
    cluster = state if state is not None else _fresh_cluster(scenario, scenario.nodes)
    stored, failed = _store_workload(cluster, scenario.workload)
    return cluster, stored, failed


def run_ingest(scenario: IngestScenario, state: StorageCluster | None = None) -> Table:
    """Per-file usage trajectory: one row after each file of the workload."""
    cluster = state if state is not None else _fresh_cluster(scenario, scenario.nodes)
    node_ids = [u.node_id for u in cluster.usage_report().nodes]
    header = (
        "step",
        "file_id",
        "size",
        "blocks",
        "replicas",
        "under_replicated_blocks",
        "status",
        "total_used",
        "avg_used_per_node",
    ) + tuple(f"used_{n}" for n in node_ids)
    rows = []
    for step, (file_id, size, m) in enumerate(_ingest(cluster, scenario.workload), start=1):
        if m is not None:
            head = (step, file_id, size, len(m.blocks), m.replica_count, m.under_replicated_blocks, "ok")
        else:
            head = (step, file_id, size, 0, 0, 0, "insufficient_space")
        report = cluster.usage_report()
        rows.append(head + (report.total_used, report.average_used_per_node) + tuple(u.used for u in report.nodes))
    return Table(header, tuple(rows))
