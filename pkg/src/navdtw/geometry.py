"""Navigation worlds and the distance functions every metric is built on.

A :class:`NavWorld` is a set of 2-D nodes joined by undirected edges whose
weight is the Euclidean length of the segment.  A :class:`DistanceOracle`
answers ``d(a, b)`` in one of three modes:

``geodesic``
    exact shortest-path length along world edges (all pairs precomputed).
``euclidean``
    straight-line distance; items may be node ids or ``(x, y)`` points.
``grid``
    continuous points snapped to a regular lattice whose pairwise
    shortest-path lengths are precomputed once.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path as FsPath
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

MODES = ("geodesic", "euclidean", "grid")


class WorldError(ValueError):
    """Malformed world description."""


class UnknownNodeError(KeyError):
    pass


class UnreachableError(ValueError):
    """Two items have no connecting path under the oracle."""


class _Unreachable:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNREACHABLE"

    def __bool__(self) -> bool:
        return False


#: Returned by :func:`geodesic_distance` when no path exists.
UNREACHABLE = _Unreachable()


@dataclass(frozen=True)
class NavWorld:
    """Immutable node/edge world.  Build with :func:`build_world`."""

    ids: tuple[int, ...]
    coords: np.ndarray = field(repr=False)
    edges: frozenset[tuple[int, int]] = field(repr=False)
    index: dict[int, int] = field(repr=False, compare=False)
    neighbors: dict[int, tuple[int, ...]] = field(repr=False, compare=False)
    weighted: dict[int, tuple[tuple[int, float], ...]] = field(repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def position(self, node: int) -> tuple[float, float]:
        try:
            x, y = self.coords[self.index[node]]
        except KeyError:
            raise UnknownNodeError(node) from None
        return float(x), float(y)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def edge_length(self, a: int, b: int) -> float:
        (ax, ay), (bx, by) = self.position(a), self.position(b)
        return math.hypot(ax - bx, ay - by)

    def edge_lengths(self) -> np.ndarray:
        return np.array([self.edge_length(a, b) for a, b in sorted(self.edges)])

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.coords.min(axis=0)
        hi = self.coords.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n, "x": float(x), "y": float(y)}
                for n, (x, y) in zip(self.ids, self.coords.tolist())
            ],
            "edges": [[a, b] for a, b in sorted(self.edges)],
        }


def build_world(
    nodes: Iterable[tuple[int, float, float]],
    edges: Iterable[Sequence[int]],
) -> NavWorld:
    """Validate ``(id, x, y)`` triples and ``(a, b)`` pairs into a world.

    Duplicate edges (in either orientation) collapse to one.
    """
    ids: list[int] = []
    xy: list[tuple[float, float]] = []
    index: dict[int, int] = {}
    for node_id, x, y in nodes:
        node_id = int(node_id)
        if node_id in index:
            raise WorldError(f"duplicate node id {node_id}")
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise WorldError(f"non-finite coordinate on node {node_id}")
        index[node_id] = len(ids)
        ids.append(node_id)
        xy.append((x, y))
    if not ids:
        raise WorldError("world has no nodes")

    edge_set: set[tuple[int, int]] = set()
    for pair in edges:
        a, b = (int(v) for v in pair)
        for end in (a, b):
            if end not in index:
                raise WorldError(f"dangling edge endpoint {end}")
        if a == b:
            raise WorldError(f"self-loop on node {a}")
        edge_set.add((min(a, b), max(a, b)))

    adjacency: dict[int, list[int]] = {n: [] for n in ids}
    for a, b in edge_set:
        adjacency[a].append(b)
        adjacency[b].append(a)
    coords = np.array(xy, dtype=float)
    coords.setflags(write=False)
    weighted = {
        n: tuple(
            (v, math.hypot(*(coords[index[n]] - coords[index[v]]).tolist()))
            for v in sorted(nbrs)
        )
        for n, nbrs in adjacency.items()
    }
    return NavWorld(
        ids=tuple(ids),
        coords=coords,
        edges=frozenset(edge_set),
        index=index,
        neighbors={n: tuple(sorted(v)) for n, v in adjacency.items()},
        weighted=weighted,
    )


def world_from_dict(data: dict) -> NavWorld:
    try:
        nodes = [(n["id"], n["x"], n["y"]) for n in data["nodes"]]
        edges = [tuple(e) for e in data["edges"]]
    except (KeyError, TypeError) as exc:
        raise WorldError(f"malformed world JSON: {exc!r}") from None
    for e in edges:
        if len(e) != 2:
            raise WorldError(f"edge must have two endpoints, got {list(e)}")
    return build_world(nodes, edges)


def load_world(path: str | FsPath) -> NavWorld:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WorldError(f"{path}: {exc}") from None
    return world_from_dict(data)


def dump_world(world: NavWorld, path: str | FsPath) -> None:
    text = json.dumps(world.to_dict(), allow_nan=False)
    FsPath(path).write_text(text + "\n", encoding="utf-8")


def _dijkstra(world: NavWorld, source: int) -> tuple[dict[int, float], dict[int, int]]:
    dist = {source: 0.0}
    parent: dict[int, int] = {}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in world.weighted[u]:
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _check_node(world: NavWorld, node: int) -> None:
    if node not in world.index:
        raise UnknownNodeError(node)


def geodesic_distance(world: NavWorld, a: int, b: int):
    """Shortest edge-path length from ``a`` to ``b``, or :data:`UNREACHABLE`."""
    _check_node(world, a)
    _check_node(world, b)
    if a == b:
        return 0.0
    # always search from the smaller id so d(a, b) == d(b, a) bit for bit
    a, b = min(a, b), max(a, b)
    dist, _ = _dijkstra(world, a)
    return dist.get(b, UNREACHABLE)


def shortest_path_nodes(world: NavWorld, a: int, b: int) -> list[int]:
    """Node sequence of a shortest path from ``a`` to ``b`` (inclusive)."""
    _check_node(world, a)
    _check_node(world, b)
    _, parent = _dijkstra(world, a)
    if a != b and b not in parent:
        raise UnreachableError(f"no path between {a} and {b}")
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path[::-1]


def hop_distances(world: NavWorld, source: int) -> dict[int, int]:
    """Breadth-first hop counts from ``source`` to every reachable node."""
    _check_node(world, source)
    hops = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in world.neighbors[u]:
                if v not in hops:
                    hops[v] = hops[u] + 1
                    nxt.append(v)
        frontier = nxt
    return hops


def largest_component(world: NavWorld) -> list[int]:
    """Sorted node ids of the biggest connected component (lowest id breaks ties)."""
    seen: set[int] = set()
    best: list[int] = []
    for node in world.ids:
        if node in seen:
            continue
        comp = sorted(hop_distances(world, node))
        seen.update(comp)
        if len(comp) > len(best) or (len(comp) == len(best) and comp[0] < best[0]):
            best = comp
    return best


Item = Hashable  # node id, or an (x, y) point in euclidean / grid mode


@dataclass(frozen=True)
class DistanceOracle:
    """Symmetric distance function ``d(a, b)`` over a world.

    Construct with :func:`precompute_all_pairs`, :func:`euclidean_oracle`
    or :func:`grid_oracle`.
    """

    mode: str
    world: NavWorld
    table: np.ndarray | None = field(default=None, repr=False)
    spacing: float | None = None
    grid_origin: tuple[float, float] | None = None
    grid_shape: tuple[int, int] | None = None
    grid_points: np.ndarray | None = field(default=None, repr=False)
    grid_free: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown distance mode {self.mode!r}")

    # -- item handling -------------------------------------------------
    def _point(self, item) -> tuple[float, float]:
        if isinstance(item, (int, np.integer)):
            return self.world.position(int(item))
        x, y = item
        return float(x), float(y)

    def _slot(self, item) -> int:
        """Row of ``item`` in ``table``."""
        if self.mode == "geodesic":
            if not isinstance(item, (int, np.integer)):
                raise TypeError("geodesic mode needs node ids, got %r" % (item,))
            try:
                return self.world.index[int(item)]
            except KeyError:
                raise UnknownNodeError(item) from None
        return self.snap(self._point(item))

    def snap(self, p: tuple[float, float]) -> int:
        """Index of the nearest free grid point; lowest index wins ties."""
        if self.mode != "grid":
            raise ValueError("snap() needs a grid-mode oracle")
        x0, y0, x1, y1 = self.world.bounds()
        x, y = p
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise ValueError(f"point {p} outside world bounding box")
        d2 = (self.grid_points[:, 0] - x) ** 2 + (self.grid_points[:, 1] - y) ** 2
        d2 = np.where(self.grid_free, d2, np.inf)
        return int(np.argmin(d2))

    # -- queries ---------------------------------------------------------
    def distance(self, a, b) -> float:
        if self.mode == "euclidean":
            (ax, ay), (bx, by) = self._point(a), self._point(b)
            return math.hypot(ax - bx, ay - by)
        value = float(self.table[self._slot(a), self._slot(b)])
        if value == math.inf:
            raise UnreachableError(f"{a!r} and {b!r} are not connected")
        return value

    __call__ = distance

    def matrix(self, rows: Sequence, cols: Sequence) -> np.ndarray:
        """Pairwise distances ``M[i, j] = d(rows[i], cols[j])``."""
        if self.mode == "euclidean":
            a = np.array([self._point(r) for r in rows], dtype=float).reshape(-1, 2)
            b = np.array([self._point(c) for c in cols], dtype=float).reshape(-1, 2)
            return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
        ri = [self._slot(r) for r in rows]
        ci = [self._slot(c) for c in cols]
        out = self.table[np.ix_(ri, ci)]
        if np.isinf(out).any():
            i, j = np.argwhere(np.isinf(out))[0]
            raise UnreachableError(f"{rows[i]!r} and {cols[j]!r} are not connected")
        return out

    def to_path(self, item, path: Sequence) -> float:
        return point_to_path_distance(self, item, path)


def precompute_all_pairs(world: NavWorld) -> DistanceOracle:
    """Geodesic oracle backed by a dense table built from one Dijkstra per node."""
    n = world.n_nodes
    table = np.full((n, n), np.inf)
    for source in world.ids:
        dist, _ = _dijkstra(world, source)
        row = table[world.index[source]]
        for node, d in dist.items():
            row[world.index[node]] = d
    order = np.array(world.ids)
    table = np.where(order[:, None] < order[None, :], table, table.T)
    table.setflags(write=False)
    return DistanceOracle("geodesic", world, table=table)


def euclidean_oracle(world: NavWorld) -> DistanceOracle:
    return DistanceOracle("euclidean", world)


def _grid_offsets(reach: int) -> list[tuple[int, int]]:
    return [
        (dx, dy)
        for dx in range(-reach, reach + 1)
        for dy in range(-reach, reach + 1)
        if (dx or dy) and gcd(abs(dx), abs(dy)) == 1
    ]


def grid_oracle(
    world: NavWorld,
    spacing: float,
    *,
    reach: int = 4,
    blocked: Callable[[float, float], bool] | None = None,
) -> DistanceOracle:
    """Oracle for continuous points in a possibly obstructed plane.

    Lattice points cover the world bounding box at ``spacing``.  Each point
    links to lattice points at primitive offsets up to ``reach`` cells away
    when every lattice point sampled along the offset is free; ``blocked``
    marks obstructed locations.  All-pairs lengths over that lattice are
    computed once.
    """
    if not spacing > 0:
        raise ValueError("grid spacing must be positive")
    x0, y0, x1, y1 = world.bounds()
    nx = int(math.floor((x1 - x0) / spacing + 1e-9)) + 2
    ny = int(math.floor((y1 - y0) / spacing + 1e-9)) + 2
    # one extra column/row so the box edge is always covered
    gx = x0 + spacing * np.arange(nx)
    gy = y0 + spacing * np.arange(ny)
    pts = np.array([(x, y) for x in gx for y in gy])
    free = np.ones(len(pts), dtype=bool)
    if blocked is not None:
        free = np.array([not blocked(float(x), float(y)) for x, y in pts])

    def gid(i, j):
        return i * ny + j

    rows, cols, wts = [], [], []
    for dx, dy in _grid_offsets(reach):
        step = math.hypot(dx, dy) * spacing
        k = max(abs(dx), abs(dy))
        for i in range(max(0, -dx), min(nx, nx - dx)):
            for j in range(max(0, -dy), min(ny, ny - dy)):
                a, b = gid(i, j), gid(i + dx, j + dy)
                if not (free[a] and free[b]):
                    continue
                if k > 1 and not all(
                    free[gid(i + round(dx * t / k), j + round(dy * t / k))]
                    for t in range(1, k)
                ):
                    continue
                rows.append(a)
                cols.append(b)
                wts.append(step)
    graph = coo_matrix((wts, (rows, cols)), shape=(len(pts), len(pts))).tocsr()
    table = shortest_path(graph, method="D", directed=False)
    table = np.triu(table) + np.triu(table, 1).T
    table.setflags(write=False)
    pts.setflags(write=False)
    return DistanceOracle(
        "grid",
        world,
        table=table,
        spacing=float(spacing),
        grid_origin=(x0, y0),
        grid_shape=(nx, ny),
        grid_points=pts,
        grid_free=free,
    )


def grid_approx_distance(oracle: DistanceOracle, p, q) -> float:
    if oracle.mode != "grid":
        raise ValueError("grid_approx_distance needs a grid-mode oracle")
    return oracle.distance(tuple(p), tuple(q))


def point_to_path_distance(oracle: DistanceOracle, node, path: Sequence) -> float:
    """``min over p in path of d(node, p)``."""
    if len(path) == 0:
        raise ValueError("empty path")
    return float(oracle.matrix([node], list(path)).min())


def make_oracle(world: NavWorld, mode: str = "geodesic", *, spacing: float = 0.25) -> DistanceOracle:
    if mode == "geodesic":
        return precompute_all_pairs(world)
    if mode == "euclidean":
        return euclidean_oracle(world)
    if mode == "grid":
        return grid_oracle(world, spacing)
    raise ValueError(f"unknown distance mode {mode!r}")
