"""Discrete-event simulation of the multi-channel MAC with DISH variants."""

from dish.sim.config import (
    DISH_MODES, IDEAL, MODEL_BASED, MULTI_HOP, REAL, SATURATED, SINGLE_HOP, STABLE, SimConfig,
)
from dish.sim.engine import Simulator, SimulationInvariantError
from dish.sim.metrics import Metrics, ReplicationMetrics, aggregate, collect_metrics
from dish.sim.topology import ConnectivityFailure, NodeSet, generate_topology


def run_once(config, replication=0, *, trace=False, check=False, nodeset=None):
    """One replication; returns (ReplicationMetrics, Simulator)."""
    sim = Simulator(config, nodeset, replication=replication, trace=trace, check=check)
    sim.run()
    return collect_metrics(sim, replication), sim


def run(config, *, check=False):
    """All replications of ``config`` pooled into one Metrics record."""
    records = [run_once(config, r, check=check)[0] for r in range(config.replications)]
    return aggregate(records)


__all__ = [
    "SimConfig", "Simulator", "SimulationInvariantError", "Metrics", "ReplicationMetrics",
    "ConnectivityFailure", "NodeSet", "generate_topology", "run", "run_once", "aggregate",
    "collect_metrics", "DISH_MODES", "IDEAL", "MODEL_BASED", "REAL", "SINGLE_HOP", "MULTI_HOP",
    "STABLE", "SATURATED",
]
