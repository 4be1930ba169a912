"""Scenario files: strict JSON documents describing one experiment.

Three kinds exist, told apart by the ``kind`` field:

``sweep``
    M/M/1 metrics over a list of arrival rates, optionally cross-checked by
    the Markov oracle and the simulator.
``capacity``
    Usable capacity and post-workload usage for a range of cluster sizes.
``ingest``
    Store a workload on one cluster and track per-node disk usage.

Sizes are integers (bytes) or strings such as ``"80GB"`` / ``"64MiB"``.
Unknown fields are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema

from .cluster import OVERHEAD_10GB, ClusterConfig, OsOverhead
from .markov import DEFAULT_TRUNCATION
from .units import parse_size

__all__ = [
    "ENGINES",
    "ScenarioError",
    "SimSettings",
    "SweepScenario",
    "CapacityScenario",
    "IngestScenario",
    "parse_scenario",
    "load_scenario",
    "scenario_from_dict",
    "shipped_scenarios",
    "resolve_scenario_path",
]

ENGINES = ("closed_form", "oracle", "sim")


class ScenarioError(ValueError):
    """A scenario file is malformed or violates the schema or domain rules."""


_SIZE = {
    "oneOf": [
        {"type": "integer", "minimum": 0},
        {"type": "string", "pattern": r"^\s*\d+\s*[A-Za-z]*\s*$"},
    ]
}
_OVERHEAD = {
    "oneOf": [
        {"type": "object", "properties": {"bytes": _SIZE}, "required": ["bytes"], "additionalProperties": False},
        {
            "type": "object",
            "properties": {
                "fraction": {
                    "oneOf": [
                        {"type": "number", "minimum": 0, "maximum": 1},
                        {"type": "string"},
                    ]
                }
            },
            "required": ["fraction"],
            "additionalProperties": False,
        },
    ]
}
_CLUSTER_FIELDS = {
    "description": {"type": "string"},
    "per_node_raw": _SIZE,
    "overhead": _OVERHEAD,
    "workload": {"type": "array", "items": _SIZE},
    "replication_factor": {"type": "integer", "minimum": 1},
    "block_size": _SIZE,
    "binary_units": {"type": "boolean"},
}

SCHEMAS = {
    "sweep": {
        "type": "object",
        "properties": {
            "kind": {"const": "sweep"},
            "description": {"type": "string"},
            "arrival_rates": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "service_rate": {"type": "number", "exclusiveMinimum": 0},
            "engines": {
                "type": "array",
                "items": {"enum": list(ENGINES)},
                "uniqueItems": True,
                "minItems": 1,
            },
            "allow_saturation": {"type": "boolean"},
            "sim": {
                "type": "object",
                "properties": {
                    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                    "jobs": {"type": "integer", "minimum": 1},
                    "warmup": {"type": "integer", "minimum": 0},
                    "replications": {"type": "integer", "minimum": 1},
                },
                "additionalProperties": False,
            },
            "oracle": {
                "type": "object",
                "properties": {"truncation_level": {"type": "integer", "minimum": 1}},
                "additionalProperties": False,
            },
        },
        "required": ["kind", "arrival_rates", "service_rate"],
        "additionalProperties": False,
    },
    "capacity": {
        "type": "object",
        "properties": {
            "kind": {"const": "capacity"},
            "node_counts": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            **_CLUSTER_FIELDS,
        },
        "required": ["kind", "node_counts", "per_node_raw"],
        "additionalProperties": False,
    },
    "ingest": {
        "type": "object",
        "properties": {
            "kind": {"const": "ingest"},
            "nodes": {"type": "integer", "minimum": 0},
            **_CLUSTER_FIELDS,
        },
        "required": ["kind", "nodes", "per_node_raw", "workload"],
        "additionalProperties": False,
    },
}


@dataclass(frozen=True)
class SimSettings:
    seed: int = 1
    jobs: int = 1_000_000
    warmup: Optional[int] = None
    # Seeds seed, seed+1, ... are run and their estimates averaged.
    replications: int = 5

    def __post_init__(self):
        if self.warmup is not None and not 0 <= self.warmup < self.jobs:
            raise ScenarioError(f"sim.warmup must satisfy 0 <= warmup < jobs, got warmup={self.warmup}, jobs={self.jobs}")

    @property
    def effective_warmup(self) -> int:
        return self.jobs // 10 if self.warmup is None else self.warmup


@dataclass(frozen=True)
class SweepScenario:
    arrival_rates: tuple[float, ...]
    service_rate: float
    engines: tuple[str, ...] = ("closed_form",)
    allow_saturation: bool = False
    sim: SimSettings = field(default_factory=SimSettings)
    truncation_level: int = DEFAULT_TRUNCATION
    description: str = ""

    def __post_init__(self):
        if not self.arrival_rates:
            raise ScenarioError("arrival_rates: must not be empty")
        if not self.service_rate > 0:
            raise ScenarioError(f"service_rate: must be > 0, got {self.service_rate!r}")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ScenarioError(f"engines: unknown engine(s) {sorted(unknown)}; choose from {list(ENGINES)}")
        for i, lam in enumerate(self.arrival_rates):
            if lam < 0:
                raise ScenarioError(f"arrival_rates[{i}]: rate {lam!r} is negative")
            if lam >= self.service_rate and not self.allow_saturation:
                raise ScenarioError(
                    f"arrival_rates[{i}]: rate {lam!r} >= service_rate {self.service_rate!r}; "
                    "set allow_saturation to emit a flagged row instead"
                )


@dataclass(frozen=True)
class _ClusterScenario:
    per_node_raw: int
    overhead: OsOverhead
    workload: tuple[int, ...] = ()
    replication_factor: int = 3
    block_size: int = ClusterConfig().block_size
    description: str = ""

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(self.block_size, self.replication_factor, self.overhead)


@dataclass(frozen=True)
class CapacityScenario(_ClusterScenario):
    node_counts: tuple[int, ...] = ()


@dataclass(frozen=True)
class IngestScenario(_ClusterScenario):
    nodes: int = 0


Scenario = Union[SweepScenario, CapacityScenario, IngestScenario]


def _field_path(error: jsonschema.ValidationError) -> str:
    out = ""
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _validate(data, kind: str) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    best = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if best is not None:
        raise ScenarioError(f"{_field_path(best)}: {best.message}")


def _overhead(data: dict, binary: bool) -> OsOverhead:
    if "bytes" in data:
        return OsOverhead.absolute(parse_size(data["bytes"], binary))
    frac = data["fraction"]
    try:
        value = Fraction(str(frac)) if isinstance(frac, float) else Fraction(frac)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"overhead.fraction: cannot parse {frac!r} as a number") from None
    if not 0 <= value <= 1:
        raise ScenarioError(f"overhead.fraction: must lie in [0, 1], got {frac!r}")
    return OsOverhead.proportional(value)


def _cluster_fields(data: dict) -> dict:
    binary = data.get("binary_units", False)
    out = {"description": data.get("description", "")}
    try:
        out["per_node_raw"] = parse_size(data["per_node_raw"], binary)
        out["workload"] = tuple(parse_size(s, binary) for s in data.get("workload", ()))
        if "block_size" in data:
            out["block_size"] = parse_size(data["block_size"], binary)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if out.get("block_size", 1) <= 0:
        raise ScenarioError("block_size: must be > 0")
    out["overhead"] = _overhead(data["overhead"], binary) if "overhead" in data else OVERHEAD_10GB
    out["replication_factor"] = data.get("replication_factor", 3)
    return out


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>: scenario must be a JSON object")
    kind = data.get("kind")
    if kind not in SCHEMAS:
        raise ScenarioError(f"kind: expected one of {sorted(SCHEMAS)}, got {kind!r}")
    _validate(data, kind)
    if kind == "sweep":
        sim = data.get("sim", {})
        return SweepScenario(
            arrival_rates=tuple(float(x) for x in data["arrival_rates"]),
            service_rate=float(data["service_rate"]),
            engines=tuple(data.get("engines", ("closed_form",))),
            allow_saturation=data.get("allow_saturation", False),
            sim=SimSettings(**sim),
            truncation_level=data.get("oracle", {}).get("truncation_level", DEFAULT_TRUNCATION),
            description=data.get("description", ""),
        )
    if kind == "capacity":
        return CapacityScenario(node_counts=tuple(data["node_counts"]), **_cluster_fields(data))
    return IngestScenario(nodes=data["nodes"], **_cluster_fields(data))


def shipped_scenarios() -> list[str]:
    root = resources.files("clusterperf") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name_or_path) -> Path:
    """A filesystem path if it exists, else a shipped scenario by name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    stem = path.name[: -len(".json")] if path.name.endswith(".json") else path.name
    if path.parent == Path(".") and stem in shipped_scenarios():
        return Path(str(resources.files("clusterperf") / "scenarios" / f"{stem}.json"))
    raise FileNotFoundError(f"scenario not found: {name_or_path} (shipped: {', '.join(shipped_scenarios())})")


def load_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file (or shipped scenario name).

    Raises:
        FileNotFoundError / OSError: the file cannot be read.
        ScenarioError: syntax, schema or domain violations.
    """
    resolved = resolve_scenario_path(path)
    text = resolved.read_text(encoding="utf-8")
    try:
        return load_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{resolved}: {exc}") from None
