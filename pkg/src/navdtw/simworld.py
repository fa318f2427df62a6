"""Synthetic jittered-grid worlds, random paths, reward functions and policies.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``.  Stream
order for a world: for each lattice row ``i`` then column ``j``, draw ``x``
then ``y``.  Path sampling uses its own generator seeded separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .geometry import (
    DistanceOracle,
    NavWorld,
    WorldError,
    build_world,
    hop_distances,
    largest_component,
    shortest_path_nodes,
)
from .warp import PrefixScorer

SUCCESS_FACTOR = 1.33


def rng_for(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def derive_seeds(master_seed: int, n: int) -> list[int]:
    """Per-episode seeds that depend only on the master seed and position."""
    ss = np.random.SeedSequence(master_seed)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(n)]


@dataclass(frozen=True)
class WorldConfig:
    grid_size: int = 15
    zeta: float = 0.3
    edge_threshold: float = 1.4
    seed: int = 0

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if self.zeta < 0:
            raise ValueError("zeta must be non-negative")
        if not self.edge_threshold > 0:
            raise ValueError("edge_threshold must be positive")


def generate_world(cfg: WorldConfig) -> NavWorld:
    """Jittered ``grid_size x grid_size`` lattice; edges join nodes within the threshold.

    Node ``(i, j)`` gets id ``i * grid_size + j`` and sits near ``(i, j)``.
    """
    n = cfg.grid_size
    rng = rng_for(cfg.seed)
    nodes = []
    for i in range(n):
        for j in range(n):
            x = float(rng.uniform(i - cfg.zeta, i + cfg.zeta))
            y = float(rng.uniform(j - cfg.zeta, j + cfg.zeta))
            nodes.append((i * n + j, x, y))
    xy = np.array([(x, y) for _, x, y in nodes])
    dist = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    a, b = np.nonzero(np.triu(dist <= cfg.edge_threshold, k=1))
    return build_world(nodes, zip(a.tolist(), b.tolist()))


def success_threshold(world: NavWorld, factor: float = SUCCESS_FACTOR) -> float:
    if world.n_edges == 0:
        raise WorldError("world has no edges")
    return factor * float(world.edge_lengths().mean())


# -- paths -------------------------------------------------------------------

def sample_waypoint(world: NavWorld, node: int, rng: np.random.Generator, hops=(2, 3)) -> int:
    """Uniform choice among nodes exactly 2 or 3 hops away."""
    dist = hop_distances(world, node)
    options = sorted(v for v, h in dist.items() if h in hops)
    if not options:
        raise WorldError(f"no node {hops} hops from {node}")
    return options[int(rng.integers(len(options)))]


def stitch(world: NavWorld, waypoints: Sequence[int]) -> list[int]:
    path = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        path.extend(shortest_path_nodes(world, a, b)[1:])
    return path


def _random_start(world: NavWorld, rng: np.random.Generator) -> int:
    nodes = largest_component(world)
    return nodes[int(rng.integers(len(nodes)))]


def generate_path(
    world: NavWorld,
    seed,
    *,
    n_waypoints: int = 4,
    start: int | None = None,
    hops=(2, 3),
) -> list[int]:
    """Random start, then ``n_waypoints`` hops of 2-3 edges, joined by shortest paths."""
    rng = rng_for(seed)
    if start is None:
        start = _random_start(world, rng)
    if not world.neighbors[start]:
        raise WorldError(f"start node {start} is isolated")
    waypoints = [start]
    for _ in range(n_waypoints):
        waypoints.append(sample_waypoint(world, waypoints[-1], rng, hops))
    return stitch(world, waypoints)


def generate_looped_path(
    world: NavWorld, seed, *, n_waypoints: int = 3, start: int | None = None
) -> list[int]:
    """Like :func:`generate_path` but the last leg returns to the start node."""
    rng = rng_for(seed)
    if start is None:
        start = _random_start(world, rng)
    if not world.neighbors[start]:
        raise WorldError(f"start node {start} is isolated")
    waypoints = [start]
    for _ in range(n_waypoints):
        waypoints.append(sample_waypoint(world, waypoints[-1], rng))
    waypoints.append(start)
    return stitch(world, waypoints)


def generate_query(
    world: NavWorld,
    reference: Sequence[int],
    seed,
    *,
    oracle: DistanceOracle | None = None,
    d_th: float | None = None,
    success_constrained: bool = False,
    n_waypoints: int = 4,
    max_tries: int = 10_000,
) -> list[int]:
    """Random query starting where the reference starts.

    With ``success_constrained`` the query is regenerated until its last
    node is within ``d_th`` of the reference goal.
    """
    rng = rng_for(seed)
    for _ in range(max_tries):
        q = generate_path(world, rng, n_waypoints=n_waypoints, start=reference[0])
        if not success_constrained or oracle.distance(q[-1], reference[-1]) <= d_th:
            return q
    raise RuntimeError("could not sample a successful query")


# -- rewards -----------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeSpec:
    reference: tuple
    d_th: float

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple(self.reference))
        if not self.reference:
            raise ValueError("empty reference")
        if not self.d_th > 0:
            raise ValueError("d_th must be positive")

    @property
    def goal(self):
        return self.reference[-1]


def goal_reward_step(spec: EpisodeSpec, q_i, q_next, oracle: DistanceOracle) -> float:
    return oracle.distance(q_i, spec.goal) - oracle.distance(q_next, spec.goal)


def goal_reward_terminal(spec: EpisodeSpec, q_f, oracle: DistanceOracle) -> float:
    return 1.0 if oracle.distance(q_f, spec.goal) <= spec.d_th else -1.0


def fidelity_reward_step(scorer: PrefixScorer, q_next) -> float:
    """Gain in prefix nDTW from appending ``q_next``; the scorer must hold ``q_1``."""
    if scorer.steps == 0:
        raise ValueError("scorer has not consumed the first query node")
    before = scorer.score
    return scorer.step(q_next) - before


def fidelity_reward_terminal(spec: EpisodeSpec, q_f, oracle: DistanceOracle) -> float:
    err = oracle.distance(q_f, spec.goal)
    if err > spec.d_th:
        return 0.0
    return 1.0 - err / spec.d_th


# -- policies ----------------------------------------------------------------

RewardKind = Literal["goal", "fidelity"]


@dataclass
class Rollout:
    trajectory: list
    step_rewards: list[float] = field(default_factory=list)
    terminal_reward: float = 0.0
    policy: str = ""


def score_trajectory(
    trajectory: Sequence, spec: EpisodeSpec, oracle: DistanceOracle, kind: RewardKind
) -> tuple[list[float], float]:
    """Step and terminal rewards a trajectory earns under reward ``kind``."""
    if kind == "goal":
        steps = [goal_reward_step(spec, a, b, oracle) for a, b in zip(trajectory, trajectory[1:])]
        return steps, goal_reward_terminal(spec, trajectory[-1], oracle)
    if kind == "fidelity":
        scorer = PrefixScorer(spec.reference, oracle, spec.d_th)
        scorer.step(trajectory[0])
        steps = [fidelity_reward_step(scorer, q) for q in trajectory[1:]]
        return steps, fidelity_reward_terminal(spec, trajectory[-1], oracle)
    raise ValueError(f"unknown reward kind {kind!r}")


def random_policy_rollout(
    world: NavWorld,
    spec: EpisodeSpec,
    lengths: Sequence[int],
    seed,
    oracle: DistanceOracle,
    *,
    reward: RewardKind = "goal",
) -> Rollout:
    """Random walk from the reference start.

    The number of moves is drawn from ``lengths``; each move picks a
    neighbour uniformly.
    """
    if len(lengths) == 0:
        raise ValueError("empty length distribution")
    rng = rng_for(seed)
    n_moves = int(lengths[int(rng.integers(len(lengths)))])
    traj = [spec.reference[0]]
    for _ in range(n_moves):
        nbrs = world.neighbors[traj[-1]]
        if not nbrs:
            raise WorldError(f"node {traj[-1]} has no neighbours")
        traj.append(nbrs[int(rng.integers(len(nbrs)))])
    steps, terminal = score_trajectory(traj, spec, oracle, reward)
    return Rollout(traj, steps, terminal, "random")


def greedy_policy_rollout(
    world: NavWorld,
    spec: EpisodeSpec,
    kind: RewardKind,
    horizon: int,
    oracle: DistanceOracle,
) -> Rollout:
    """Move to the neighbour with the best one-step reward; STOP when none is positive.

    Ties go to the smallest node id.  At most ``horizon`` moves are made.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    traj = [spec.reference[0]]
    rewards: list[float] = []
    scorer = None
    if kind == "fidelity":
        scorer = PrefixScorer(spec.reference, oracle, spec.d_th)
        scorer.step(traj[0])
    elif kind != "goal":
        raise ValueError(f"unknown reward kind {kind!r}")

    for _ in range(horizon):
        here = traj[-1]
        best, best_gain = None, 0.0
        for nbr in world.neighbors[here]:
            if kind == "goal":
                gain = goal_reward_step(spec, here, nbr, oracle)
            else:
                gain = scorer.peek(nbr) - scorer.score
            if gain > best_gain:
                best, best_gain = nbr, gain
        if best is None:
            break
        if scorer is not None:
            best_gain = fidelity_reward_step(scorer, best)
        traj.append(best)
        rewards.append(best_gain)

    if kind == "goal":
        terminal = goal_reward_terminal(spec, traj[-1], oracle)
    else:
        terminal = fidelity_reward_terminal(spec, traj[-1], oracle)
    return Rollout(traj, rewards, terminal, f"{kind}-greedy")


def reference_lengths(references: Sequence[Sequence]) -> list[int]:
    """Move counts of the references, used as the random-walk length distribution."""
    return [len(r) - 1 for r in references]


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), math.nan
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))
