import pytest

from clusterperf.des import SimulationConfig, run_simulation
from clusterperf.queueing import QueueParameters

REFERENCE_RATES = (5, 10, 15, 20, 25, 30)
REFERENCE_MU = 32
# Fixed before any run was inspected.
ACCEPTANCE_SEEDS = (1, 2, 3, 4, 5)
GRID_JOBS = 1_000_000
GRID_WARMUP = 100_000


@pytest.fixture(scope="session")
def reference_grid_reports():
    """{(lambda, seed): SimulationReport} over the reference grid at 1e6 jobs."""
    out = {}
    for lam in REFERENCE_RATES:
        params = QueueParameters(lam, REFERENCE_MU)
        for seed in ACCEPTANCE_SEEDS:
            out[lam, seed] = run_simulation(SimulationConfig(params, seed, GRID_JOBS, GRID_WARMUP))
    return out


# -- acceptance reporting ------------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "failed": [], "passed": 0})
    if report.failed:
        entry["failed"].append(item.name)
    elif report.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] else "PASS"
        detail = f" (failed: {', '.join(entry['failed'])})" if entry["failed"] else ""
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}{detail}")
