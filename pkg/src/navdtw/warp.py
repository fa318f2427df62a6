"""Dynamic time warping between a reference and a query path.

Three routes to the same quantity:

* :func:`dtw_exact`: the quadratic dynamic program, optionally keeping the
  full cumulative-cost table and backtracking an optimal warping;
* :func:`dtw_fast`: FastDTW (coarsen, solve, project, refine in a window),
  coarsening by node sampling so it works on graph nodes;
* :class:`PrefixScorer`: one DP column per consumed query node, for
  per-step nDTW of a growing query.

:func:`enumerate_warpings` lists every valid warping and is only meant as
a brute-force check for small inputs.

Warping indices are 1-based, as ``(reference index, query index)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DistanceOracle

INF = math.inf
MAX_ENUMERATION_CELLS = 64
DEFAULT_RADIUS = 20


@dataclass(frozen=True)
class AlignmentResult:
    cost: float
    warping: list[tuple[int, int]] | None = None
    table: np.ndarray | None = field(default=None, repr=False)


def _check_paths(R: Sequence, Q: Sequence) -> None:
    if len(R) == 0 or len(Q) == 0:
        raise ValueError("DTW needs non-empty reference and query paths")


def _dp_table(D: np.ndarray) -> list[list[float]]:
    n, m = D.shape
    rows = D.tolist()
    C = [[INF] * (m + 1) for _ in range(n + 1)]
    C[0][0] = 0.0
    for i in range(1, n + 1):
        prev, cur, d = C[i - 1], C[i], rows[i - 1]
        for j in range(1, m + 1):
            cur[j] = d[j - 1] + min(prev[j], cur[j - 1], prev[j - 1])
    return C


def _dp_cost(D: np.ndarray) -> float:
    n, m = D.shape
    prev = [0.0] + [INF] * m
    for d in D.tolist():
        cur = [INF] * (m + 1)
        for j in range(1, m + 1):
            cur[j] = d[j - 1] + min(prev[j], cur[j - 1], prev[j - 1])
        prev = cur
    return prev[m]


def _backtrack(C: list[list[float]]) -> list[tuple[int, int]]:
    # ties: diagonal, then reference-advance (i-1, j), then query-advance (i, j-1)
    i, j = len(C) - 1, len(C[0]) - 1
    steps = [(i, j)]
    while (i, j) != (1, 1):
        best = (i - 1, j - 1)
        for cand in ((i - 1, j), (i, j - 1)):
            if C[cand[0]][cand[1]] < C[best[0]][best[1]]:
                best = cand
        i, j = best
        steps.append((i, j))
    return steps[::-1]


def dtw_matrix(D: np.ndarray, *, keep_table: bool = True) -> AlignmentResult:
    """DTW over a precomputed ``|R| x |Q|`` distance matrix."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or 0 in D.shape:
        raise ValueError("distance matrix must be non-empty and 2-D")
    if not keep_table:
        return AlignmentResult(_dp_cost(D))
    C = _dp_table(D)
    return AlignmentResult(C[-1][-1], _backtrack(C), np.array(C))


def dtw_exact(
    R: Sequence, Q: Sequence, oracle: DistanceOracle, *, keep_table: bool = True
) -> AlignmentResult:
    """Minimum cumulative distance over all warpings of ``R`` against ``Q``.

    With ``keep_table=False`` only two DP rows are held and no warping is
    returned.
    """
    _check_paths(R, Q)
    return dtw_matrix(oracle.matrix(list(R), list(Q)), keep_table=keep_table)


def dtw_cost(R: Sequence, Q: Sequence, oracle: DistanceOracle) -> float:
    return dtw_exact(R, Q, oracle, keep_table=False).cost


def warping_cost(D: np.ndarray, warping: Sequence[tuple[int, int]]) -> float:
    return float(sum(D[i - 1, j - 1] for i, j in warping))


def is_valid_warping(warping: Sequence[tuple[int, int]], n: int, m: int) -> bool:
    if not warping or tuple(warping[0]) != (1, 1) or tuple(warping[-1]) != (n, m):
        return False
    return all(
        (b[0] - a[0], b[1] - a[1]) in ((1, 1), (1, 0), (0, 1))
        for a, b in zip(warping, warping[1:])
    )


def enumerate_warpings(n: int, m: int) -> list[list[tuple[int, int]]]:
    """Every warping of an ``n``-long reference against an ``m``-long query.

    Exponential in size; refuses ``n * m > 64``.
    """
    if n < 1 or m < 1:
        raise ValueError("series lengths must be positive")
    if n * m > MAX_ENUMERATION_CELLS:
        raise ValueError(f"enumeration limited to n*m <= {MAX_ENUMERATION_CELLS}")
    out: list[list[tuple[int, int]]] = []

    def extend(path):
        i, j = path[-1]
        if (i, j) == (n, m):
            out.append(list(path))
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            if i + di <= n and j + dj <= m:
                path.append((i + di, j + dj))
                extend(path)
                path.pop()

    extend([(1, 1)])
    return out


# -- FastDTW ---------------------------------------------------------------

def _coarsen(n: int) -> list[int]:
    """Representative fine index for each coarse cell (pairs of nodes).

    The last cell is always represented by the final node, so both
    endpoints survive every halving.
    """
    reps = list(range(0, n, 2))
    reps[-1] = n - 1
    return reps


def _coarsen_odd(n: int) -> list[int]:
    """Like :func:`_coarsen` but sampling the second node of each pair."""
    reps = [min(2 * c + 1, n - 1) for c in range((n + 1) // 2)]
    reps[0] = 0
    reps[-1] = n - 1
    return reps


def _project_window(path, n: int, m: int, radius: int) -> list[tuple[int, int]]:
    """Row-wise ``[lo, hi]`` column window (0-based, inclusive) for the fine grid.

    The low-resolution path is widened by ``radius`` coarse cells in both
    directions before each coarse cell is split into its 2x2 fine block.
    """
    nc, mc = (n + 1) // 2, (m + 1) // 2
    lo = [mc] * nc
    hi = [-1] * nc
    for ci, cj in path:
        lo[ci] = min(lo[ci], cj)
        hi[ci] = max(hi[ci], cj)
    if radius > 0:
        lo2, hi2 = lo[:], hi[:]
        for c in range(nc):
            for k in range(max(0, c - radius), min(nc, c + radius + 1)):
                lo2[k] = min(lo2[k], lo[c] - radius)
                hi2[k] = max(hi2[k], hi[c] + radius)
        lo, hi = lo2, hi2
    window = []
    for i in range(n):
        c = i // 2
        a, b = max(0, lo[c]), min(mc - 1, hi[c])
        window.append((2 * a, min(2 * b + 1, m - 1)))
    return window


def _windowed_dtw(D: np.ndarray, window) -> tuple[float, list[tuple[int, int]]]:
    n, m = D.shape
    rows = D.tolist()
    cells: list[list[float]] = []
    # virtual row -1 holds only the origin C[-1][-1] = 0
    prev_lo, prev = -1, [0.0]
    for i in range(n):
        lo, hi = window[i]
        cur = [INF] * (hi - lo + 1)
        d = rows[i]
        for j in range(lo, hi + 1):
            up = prev[j - prev_lo] if 0 <= j - prev_lo < len(prev) else INF
            diag = prev[j - 1 - prev_lo] if 0 <= j - 1 - prev_lo < len(prev) else INF
            left = cur[j - 1 - lo] if j > lo else INF
            cur[j - lo] = d[j] + min(up, left, diag)
        cells.append(cur)
        prev_lo, prev = lo, cur

    def get(i, j):
        if i < 0 or j < 0:
            return 0.0 if (i, j) == (-1, -1) else INF
        lo, hi = window[i]
        return cells[i][j - lo] if lo <= j <= hi else INF

    i, j = n - 1, m - 1
    cost = get(i, j)
    path = [(i, j)]
    while (i, j) != (0, 0):
        best = (i - 1, j - 1)
        for cand in ((i - 1, j), (i, j - 1)):
            if get(*cand) < get(*best):
                best = cand
        i, j = best
        path.append((i, j))
    return cost, path[::-1]


def _exact_path(D: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    C = _dp_table(D)
    return C[-1][-1], [(i - 1, j - 1) for i, j in _backtrack(C)]


def _fastdtw(D: np.ndarray, radius: int) -> tuple[float, list[tuple[int, int]]]:
    n, m = D.shape
    if n <= radius + 2 or m <= radius + 2:
        return _exact_path(D)
    _, low_path = _fastdtw(D[np.ix_(_coarsen(n), _coarsen(m))], radius)
    return _windowed_dtw(D, _project_window(low_path, n, m, radius))


def _fastdtw_top(D: np.ndarray, radius: int) -> tuple[float, list[tuple[int, int]]]:
    # Node sampling can miss a detour that only the skipped nodes make, so
    # the finest level unions the windows from both sampling parities.
    n, m = D.shape
    if n <= radius + 2 or m <= radius + 2:
        return _exact_path(D)
    windows = []
    for coarsen in (_coarsen, _coarsen_odd):
        _, low_path = _fastdtw(D[np.ix_(coarsen(n), coarsen(m))], radius)
        windows.append(_project_window(low_path, n, m, radius))
    window = [(min(a[0], b[0]), max(a[1], b[1])) for a, b in zip(*windows)]
    return _windowed_dtw(D, window)


def dtw_fast(
    R: Sequence, Q: Sequence, oracle: DistanceOracle, radius: int = DEFAULT_RADIUS
) -> AlignmentResult:
    """FastDTW approximation; never below the exact cost.

    Series are halved by keeping every other node (plus the final one),
    the coarse alignment is widened by ``radius`` coarse cells, projected
    back up, and DTW is re-solved inside that window.  At the finest
    level both halvings (even and odd nodes) are solved and their windows
    merged, which costs about twice the plain recursion.
    """
    _check_paths(R, Q)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    D = oracle.matrix(list(R), list(Q))
    cost, path = _fastdtw_top(D, int(radius))
    return AlignmentResult(cost, [(i + 1, j + 1) for i, j in path])


# -- incremental scoring -----------------------------------------------------

def normalized(cost: float, n_ref: int, d_th: float) -> float:
    return math.exp(-cost / (n_ref * d_th))


class PrefixScorer:
    """nDTW of a query that grows one node at a time against a fixed reference.

    Keeps the current DP column ``C[0..|R|][j]``; each :meth:`step` is
    ``O(|R|)`` and reproduces the batch dynamic program bit for bit.
    """

    def __init__(self, reference: Sequence, oracle: DistanceOracle, d_th: float):
        if len(reference) == 0:
            raise ValueError("empty reference path")
        if not d_th > 0:
            raise ValueError("d_th must be positive")
        self.reference = list(reference)
        self.oracle = oracle
        self.d_th = float(d_th)
        self.steps = 0
        self.query: list = []
        self._column = [0.0] + [INF] * len(self.reference)

    @property
    def cost(self) -> float:
        return self._column[-1]

    @property
    def score(self) -> float | None:
        """nDTW of the query consumed so far (``None`` before the first node)."""
        if self.steps == 0:
            return None
        return normalized(self.cost, len(self.reference), self.d_th)

    def _advance(self, column, q):
        d = self.oracle.matrix(self.reference, [q])[:, 0].tolist()
        new = [INF] * len(column)
        for i in range(1, len(column)):
            new[i] = d[i - 1] + min(column[i], new[i - 1], column[i - 1])
        return new

    def peek(self, q) -> float:
        """Score the query would have after ``step(q)``, without consuming it."""
        col = self._advance(self._column, q)
        return normalized(col[-1], len(self.reference), self.d_th)

    def step(self, q) -> float:
        self._column = self._advance(self._column, q)
        self.steps += 1
        self.query.append(q)
        return self.score

    def copy(self) -> "PrefixScorer":
        other = PrefixScorer.__new__(PrefixScorer)
        other.__dict__.update(self.__dict__)
        other.query = list(self.query)
        other._column = list(self._column)
        return other


def prefix_scorer_new(reference: Sequence, oracle: DistanceOracle, d_th: float) -> PrefixScorer:
    return PrefixScorer(reference, oracle, d_th)


def prefix_scorer_step(scorer: PrefixScorer, q_next) -> float:
    return scorer.step(q_next)
