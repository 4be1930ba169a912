"""Command-line entry point.

Exit codes: 0 success (saturated rows are flagged, not fatal), 2 validation
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .cluster import ClusterError, StorageCluster
from .experiments import build_ingest_cluster, run_capacity, run_ingest, run_sweep
from .scenario import (
    ENGINES,
    CapacityScenario,
    IngestScenario,
    ScenarioError,
    SweepScenario,
    parse_scenario,
    shipped_scenarios,
)

log = logging.getLogger("clusterperf")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


class _ValidationFailure(Exception):
    pass


def _engines(text: str) -> tuple[str, ...]:
    engines = tuple(e.strip() for e in text.split(",") if e.strip())
    bad = [e for e in engines if e not in ENGINES]
    if not engines or bad:
        raise argparse.ArgumentTypeError(f"engines must be a comma list from {','.join(ENGINES)}; got {text!r}")
    return engines


def _rates(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rate list {text!r}") from None


def _expect(scenario, kind, name):
    if not isinstance(scenario, kind):
        raise _ValidationFailure(f"{name}: expected a {kind.__name__}, got {type(scenario).__name__}")
    return scenario


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _sweep_overrides(scenario: SweepScenario, args) -> SweepScenario:
    sim = scenario.sim
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.jobs is not None:
        changes["jobs"] = args.jobs
        if args.warmup is None:
            changes["warmup"] = None
    if args.warmup is not None:
        changes["warmup"] = args.warmup
    if args.replications is not None:
        changes["replications"] = args.replications
    if changes:
        sim = dataclasses.replace(sim, **changes)
    updates = {"sim": sim}
    if args.engine is not None:
        updates["engines"] = args.engine
    if args.truncation is not None:
        updates["truncation_level"] = args.truncation
    return dataclasses.replace(scenario, **updates)


def cmd_analyze(args) -> str:
    if args.scenario is not None:
        scenario = _expect(parse_scenario(args.scenario), SweepScenario, args.scenario)
        scenario = dataclasses.replace(scenario, engines=("closed_form",))
    else:
        if args.rates is None or args.mu is None:
            raise _ValidationFailure("analyze needs a scenario or both --rates and --mu")
        scenario = SweepScenario(args.rates, args.mu, allow_saturation=args.allow_saturation)
    return run_sweep(scenario).to_csv()


def cmd_sweep(args) -> str:
    scenario = _expect(parse_scenario(args.scenario), SweepScenario, args.scenario)
    scenario = _sweep_overrides(scenario, args)
    log.info("sweep: %d rates, engines=%s", len(scenario.arrival_rates), ",".join(scenario.engines))
    return run_sweep(scenario, workers=args.workers).to_csv()


def cmd_capacity(args) -> str:
    scenario = _expect(parse_scenario(args.scenario), CapacityScenario, args.scenario)
    return run_capacity(scenario).to_csv()


def _load_state(path):
    if path is None:
        return None
    return StorageCluster.import_json(Path(path).read_text(encoding="utf-8"))


def cmd_ingest(args) -> str:
    scenario = _expect(parse_scenario(args.scenario), IngestScenario, args.scenario)
    return run_ingest(scenario, _load_state(args.state)).to_csv()


def cmd_export_state(args) -> str:
    scenario = _expect(parse_scenario(args.scenario), IngestScenario, args.scenario)
    cluster, _, failed = build_ingest_cluster(scenario, _load_state(args.state))
    if failed:
        log.warning("files that did not fit: %s", ", ".join(failed))
    return cluster.export_json() + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clusterperf",
        description="M/M/1 analytics, oracle and simulation sweeps, and cluster capacity experiments.",
        epilog=f"shipped scenarios: {', '.join(shipped_scenarios())}",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
        return p

    p = add("analyze", cmd_analyze, "closed-form metrics only")
    p.add_argument("scenario", nargs="?", help="sweep scenario file or shipped name")
    p.add_argument("--rates", type=_rates, help="comma-separated arrival rates")
    p.add_argument("--mu", type=float, help="service rate")
    p.add_argument("--allow-saturation", action="store_true")

    p = add("sweep", cmd_sweep, "closed form plus optional oracle/simulation columns")
    p.add_argument("scenario")
    p.add_argument("--engine", type=_engines, help="comma list of closed_form,oracle,sim")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="jobs per simulation run")
    p.add_argument("--warmup", type=int, help="warm-up jobs (default 10%% of --jobs)")
    p.add_argument("--replications", type=int, help="seeds averaged per row")
    p.add_argument("--truncation", type=int, help="oracle truncation level K")
    p.add_argument("--workers", type=int, default=1, help="processes for independent rows")

    p = add("capacity", cmd_capacity, "usable capacity vs node count")
    p.add_argument("scenario")

    p = add("ingest", cmd_ingest, "store a workload and track per-node usage")
    p.add_argument("scenario")
    p.add_argument("--state", help="start from an exported cluster state")

    p = add("export-state", cmd_export_state, "store a workload and dump cluster state as JSON")
    p.add_argument("scenario")
    p.add_argument("--state", help="start from an exported cluster state")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        text = args.func(args)
        _write(text, args.out)
    except (ScenarioError, ClusterError, _ValidationFailure, ValueError) as exc:
        print(f"clusterperf: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"clusterperf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
