"""Performance and capacity models for a PC-cluster block storage server."""

from .cluster import ClusterConfig, OsOverhead, StorageCluster, split_into_blocks
from .des import SimulationConfig, SimulationReport, little_law_residual, run_simulation
from .markov import TruncatedChain, metrics_from_distribution, oracle_metrics, solve_steady_state
from .queueing import QueueParameters, SaturatedQueueError, SteadyStateMetrics, metrics

__version__ = "0.1.0"

__all__ = [
    "ClusterConfig",
    "OsOverhead",
    "StorageCluster",
    "split_into_blocks",
    "SimulationConfig",
    "SimulationReport",
    "little_law_residual",
    "run_simulation",
    "TruncatedChain",
    "metrics_from_distribution",
    "oracle_metrics",
    "solve_steady_state",
    "QueueParameters",
    "SaturatedQueueError",
    "SteadyStateMetrics",
    "metrics",
]
