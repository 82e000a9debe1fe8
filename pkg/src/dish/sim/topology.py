"""Node placement and unit-disk neighborhoods."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from dish.sim.config import SINGLE_HOP


class ConnectivityFailure(RuntimeError):
    pass


@dataclass
class NodeSet:
    positions: np.ndarray  # (N, 2) metres
    neighbors: list  # tuple of neighbor ids per node
    range_m: float
    attempts: int = 1

    def __len__(self):
        return len(self.neighbors)

    def degree(self):
        return np.array([len(nb) for nb in self.neighbors])


def _neighbors(positions, range_m):
    tree = cKDTree(positions)
    pairs = tree.query_pairs(range_m, output_type="ndarray")
    nbrs = [[] for _ in range(len(positions))]
    for i, j in pairs:
        nbrs[i].append(int(j))
        nbrs[j].append(int(i))
    return [tuple(sorted(nb)) for nb in nbrs], pairs


def _connected(count, pairs):
    if count <= 1:
        return count == 1
    if len(pairs) == 0:
        return False
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(count, count))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


def nodeset_from_positions(positions, range_m):
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    nbrs, _ = _neighbors(pos, range_m)
    return NodeSet(pos, nbrs, range_m)


def generate_topology(config, rng):
    """Place nodes for ``config`` using generator ``rng``.

    Multi-hop placement is a homogeneous Poisson point process of intensity
    n / range**2, redrawn until the unit-disk graph is connected.
    """
    R = config.range_m
    if config.topology == SINGLE_HOP:
        count = int(config.n)
        # anywhere inside a disk of radius R/2 keeps every pair in range
        rad = 0.5 * R * np.sqrt(rng.random(count)) * (1 - 1e-9)
        ang = 2 * np.pi * rng.random(count)
        pos = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        nbrs, _ = _neighbors(pos, R)
        return NodeSet(pos, nbrs, R)

    mean_count = config.n * (config.area_m / R) ** 2
    for attempt in range(1, config.connect_retries + 1):
        count = int(rng.poisson(mean_count))
        pos = rng.random((count, 2)) * config.area_m
        nbrs, pairs = _neighbors(pos, R)
        if count >= 2 and _connected(count, pairs):
            return NodeSet(pos, nbrs, R, attempts=attempt)
    raise ConnectivityFailure(
        f"no connected placement in {config.connect_retries} draws (n={config.n}/R^2)")
