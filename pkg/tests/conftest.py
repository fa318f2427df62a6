import math

import numpy as np
import pytest

from navdtw.geometry import build_world, precompute_all_pairs
from navdtw.simworld import WorldConfig, generate_path, generate_world, success_threshold


def chain_world(n=5, extra=()):
    """Unit-spaced nodes 0..n-1 on the x axis, joined in order."""
    nodes = [(i, float(i), 0.0) for i in range(n)] + list(extra)
    edges = [(i, i + 1) for i in range(n - 1)]
    return nodes, edges


@pytest.fixture
def chain():
    return build_world(*chain_world())


@pytest.fixture
def chain_oracle(chain):
    return precompute_all_pairs(chain)


def random_connected_world(rng, n):
    """Random points joined by a random spanning tree plus extra edges."""
    xy = rng.uniform(0, 10, size=(n, 2))
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.add((min(a, b), max(a, b)))
    for _ in range(n):
        a, b = rng.integers(n, size=2)
        if a != b:
            edges.add((int(min(a, b)), int(max(a, b))))
    return build_world([(i, x, y) for i, (x, y) in enumerate(xy)], sorted(edges))


def random_walk(rng, world, length):
    node = world.ids[int(rng.integers(world.n_nodes))]
    path = [node]
    for _ in range(length - 1):
        nbrs = world.neighbors[path[-1]]
        path.append(nbrs[int(rng.integers(len(nbrs)))] if nbrs else path[-1])
    return path


@pytest.fixture(scope="session")
def grid_world():
    world = generate_world(WorldConfig(seed=11))
    oracle = precompute_all_pairs(world)
    return world, oracle, success_threshold(world)


def random_episodes(world, n, seed, max_len=12):
    """Reference/query pairs from random walks and waypoint paths."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        if k % 2:
            ref = generate_path(world, rng, n_waypoints=int(rng.integers(1, 4)))
            qry = generate_path(world, rng, n_waypoints=int(rng.integers(1, 4)), start=ref[0])
        else:
            ref = random_walk(rng, world, int(rng.integers(1, max_len)))
            qry = random_walk(rng, world, int(rng.integers(1, max_len)))
        out.append((ref, qry))
    return out


def floyd_warshall(world):
    """Dense all-pairs oracle, independent of the Dijkstra code path."""
    n = world.n_nodes
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    for a, b in world.edges:
        i, j = world.index[a], world.index[b]
        w = math.dist(world.coords[i], world.coords[j])
        d[i, j] = d[j, i] = min(d[i, j], w)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d
