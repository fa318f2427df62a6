import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import dijkstra

from navdtw.geometry import (
    UNREACHABLE,
    UnknownNodeError,
    UnreachableError,
    WorldError,
    build_world,
    euclidean_oracle,
    geodesic_distance,
    grid_approx_distance,
    grid_oracle,
    load_world,
    largest_component,
    point_to_path_distance,
    precompute_all_pairs,
    shortest_path_nodes,
)
from navdtw.simworld import WorldConfig, generate_world

from conftest import chain_world, floyd_warshall, random_connected_world


def test_build_chain(chain):
    assert chain.n_nodes == 5
    assert chain.n_edges == 4
    assert chain.neighbors[2] == (1, 3)


@pytest.mark.parametrize(
    "nodes, edges, message",
    [
        ([(0, 0, 0), (1, 1, 0)], [(0, 99)], "dangling edge endpoint"),
        ([(0, 0, 0), (0, 1, 0)], [], "duplicate node id"),
        ([(0, 0, 0), (1, 1, 0)], [(1, 1)], "self-loop"),
        ([(0, math.nan, 0)], [], "non-finite"),
    ],
)
def test_build_world_rejects(nodes, edges, message):
    with pytest.raises(WorldError, match=message):
        build_world(nodes, edges)


def test_edges_are_undirected():
    w = build_world([(0, 0, 0), (1, 1, 0)], [(1, 0), (0, 1)])
    assert w.n_edges == 1
    assert w.has_edge(0, 1) and w.has_edge(1, 0)


def test_geodesic_chain(chain):
    assert geodesic_distance(chain, 0, 4) == 4.0
    assert geodesic_distance(chain, 2, 2) == 0.0


def test_geodesic_unreachable():
    w = build_world([(0, 0, 0), (1, 1, 0), (2, 5, 0), (3, 6, 0)], [(0, 1), (2, 3)])
    assert geodesic_distance(w, 0, 3) is UNREACHABLE
    oracle = precompute_all_pairs(w)
    with pytest.raises(UnreachableError):
        oracle.distance(0, 3)
    with pytest.raises(UnreachableError):
        oracle.matrix([0, 1], [3])


def test_geodesic_unknown_node(chain):
    with pytest.raises(UnknownNodeError):
        geodesic_distance(chain, 0, 42)
    with pytest.raises(UnknownNodeError):
        precompute_all_pairs(chain).distance(0, 42)


def test_shortest_path_nodes(chain):
    assert shortest_path_nodes(chain, 4, 1) == [4, 3, 2, 1]
    assert shortest_path_nodes(chain, 3, 3) == [3]


def test_all_pairs_table(chain, chain_oracle):
    assert chain_oracle.distance(0, 4) == geodesic_distance(chain, 0, 4) == 4.0
    t = chain_oracle.table
    assert np.array_equal(t, t.T)


def test_all_pairs_zeta0_grid_corners():
    world = generate_world(WorldConfig(zeta=0.0, seed=0))
    oracle = precompute_all_pairs(world)
    # expected value from scipy's Dijkstra on the same 4-connected unit grid
    rows, cols = zip(*world.edges)
    from scipy.sparse import coo_matrix

    g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(225, 225))
    ref = dijkstra(g, directed=False, indices=0)
    assert ref[224] == 28.0
    assert oracle.distance(0, 224) == 28.0


def test_all_pairs_matches_per_query_dijkstra():
    rng = np.random.default_rng(3)
    for _ in range(10):
        w = random_connected_world(rng, int(rng.integers(2, 50)))
        oracle = precompute_all_pairs(w)
        fw = floyd_warshall(w)
        for a, b in itertools.product(w.ids, repeat=2):
            assert oracle.distance(a, b) == geodesic_distance(w, a, b)
        assert np.allclose(oracle.table, fw, rtol=0, atol=1e-12)


def test_triangle_inequality_random_worlds():
    rng = np.random.default_rng(5)
    for _ in range(100):
        w = random_connected_world(rng, int(rng.integers(3, 31)))
        t = precompute_all_pairs(w).table
        assert np.all(np.diag(t) == 0)
        assert np.array_equal(t, t.T)
        # t[a, c] <= t[a, b] + t[b, c] for every triple
        assert np.all(t[:, None, :] <= t[:, :, None] + t[None, :, :] + 1e-12)


def test_euclidean_equals_geodesic_on_complete_world():
    rng = np.random.default_rng(9)
    xy = rng.uniform(-3, 3, size=(12, 2))
    w = build_world([(i, x, y) for i, (x, y) in enumerate(xy)], itertools.combinations(range(12), 2))
    geo, euc = precompute_all_pairs(w), euclidean_oracle(w)
    ids = list(w.ids)
    assert np.allclose(geo.matrix(ids, ids), euc.matrix(ids, ids), rtol=0, atol=1e-12)


def test_euclidean_accepts_points(chain):
    o = euclidean_oracle(chain)
    assert o.distance((0.0, 1.0), 0) == 1.0
    assert o.distance(1, 4) == 3.0


def test_grid_same_snap_is_zero(chain):
    box = build_world([(0, 0, 0), (1, 4, 0), (2, 0, 4), (3, 4, 4)], [])
    o = grid_oracle(box, 1.0)
    assert grid_approx_distance(o, (1.1, 1.2), (0.9, 0.8)) == 0.0


def test_grid_close_to_euclidean_in_free_space():
    box = build_world([(0, 0, 0), (1, 5, 0), (2, 0, 5), (3, 5, 5)], [])
    spacing = 0.25
    o = grid_oracle(box, spacing)
    rng = np.random.default_rng(2)
    for p, q in rng.uniform(0, 5, size=(200, 2, 2)):
        approx = grid_approx_distance(o, p, q)
        assert abs(approx - math.dist(p, q)) <= 2 * spacing


def test_grid_respects_obstacles():
    box = build_world([(0, 0, 0), (1, 4, 0), (2, 0, 4), (3, 4, 4)], [])

    def wall(x, y):  # vertical wall at x=2 with a gap above y=3
        return abs(x - 2) < 0.3 and y < 3

    free = grid_oracle(box, 0.25)
    walled = grid_oracle(box, 0.25, blocked=wall)
    p, q = (1.0, 0.5), (3.0, 0.5)
    assert free.distance(p, q) == pytest.approx(2.0)
    assert walled.distance(p, q) > 2 * math.hypot(1.0, 2.5) - 0.5


def test_grid_rejects_point_outside_box(chain):
    o = grid_oracle(build_world([(0, 0, 0), (1, 2, 2)], []), 0.5)
    with pytest.raises(ValueError, match="outside"):
        grid_approx_distance(o, (3.0, 0.0), (0.0, 0.0))


def test_grid_snap_ties_prefer_lowest_index():
    o = grid_oracle(build_world([(0, 0, 0), (1, 2, 2)], []), 1.0)
    # (0.5, 0.5) is equidistant from four lattice points
    idx = o.snap((0.5, 0.5))
    assert tuple(o.grid_points[idx]) == (0.0, 0.0)


def test_point_to_path_distance(chain_oracle):
    assert point_to_path_distance(chain_oracle, 3, [2, 3, 4]) == 0.0
    assert point_to_path_distance(chain_oracle, 0, [2, 3, 4]) == 2.0
    with pytest.raises(ValueError):
        point_to_path_distance(chain_oracle, 0, [])


def test_world_json_roundtrip(tmp_path, chain):
    p = tmp_path / "w.json"
    p.write_text(json.dumps(chain.to_dict()))
    back = load_world(p)
    assert back.ids == chain.ids and back.edges == chain.edges


def test_world_json_rejects_nan(tmp_path):
    p = tmp_path / "w.json"
    p.write_text('{"nodes":[{"id":0,"x":NaN,"y":0}],"edges":[]}')
    with pytest.raises(WorldError):
        load_world(p)


def test_largest_component():
    w = build_world([(i, i, 0) for i in range(5)], [(0, 1), (2, 3), (3, 4)])
    assert largest_component(w) == [2, 3, 4]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetry_and_identity(seed):
    rng = np.random.default_rng(seed)
    w = random_connected_world(rng, int(rng.integers(2, 20)))
    o = precompute_all_pairs(w)
    for a in w.ids:
        assert o.distance(a, a) == 0.0
        for b in w.ids:
            assert o.distance(a, b) == o.distance(b, a) >= 0
