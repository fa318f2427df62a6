"""Path-fidelity and success metrics for a (reference, query) episode.

Every metric takes an :class:`EpisodePair`, a :class:`DistanceOracle` and,
where a threshold is involved, a :class:`MetricConfig`.  Scores that are
fractions are reported in ``[0, 1]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DistanceOracle, NavWorld, UnknownNodeError, point_to_path_distance
from .warp import DEFAULT_RADIUS, dtw_cost, dtw_fast, normalized

METRIC_NAMES = ("PL", "NE", "ONE", "SR", "OSR", "AD", "MD", "SPL", "SED", "CLS", "nDTW", "SDTW")

# +1: higher is better, -1: lower is better, 0: informational (optimum is PL(R))
DIRECTIONS = {
    "PL": 0, "NE": -1, "ONE": -1, "SR": 1, "OSR": 1, "AD": -1, "MD": -1,
    "SPL": 1, "SED": 1, "CLS": 1, "nDTW": 1, "SDTW": 1,
}


@dataclass(frozen=True)
class MetricConfig:
    d_th: float
    mode: str = "geodesic"
    fast: bool = False
    radius: int = DEFAULT_RADIUS

    def __post_init__(self):
        if not self.d_th > 0:
            raise ValueError("d_th must be positive")


@dataclass(frozen=True)
class EpisodePair:
    reference: tuple
    query: tuple
    world: NavWorld | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple(self.reference))
        object.__setattr__(self, "query", tuple(self.query))
        if not self.reference or not self.query:
            raise ValueError("reference and query paths must be non-empty")
        if self.world is not None:
            for node in self.reference + self.query:
                if node not in self.world.index:
                    raise UnknownNodeError(node)

    def is_contiguous(self) -> bool:
        """True when consecutive nodes of both paths share a world edge."""
        if self.world is None:
            raise ValueError("episode has no world attached")
        return all(
            a == b or self.world.has_edge(a, b)
            for path in (self.reference, self.query)
            for a, b in zip(path, path[1:])
        )


def action_sequence(path: Sequence) -> list[tuple]:
    return [(a, b) for a, b in zip(path, path[1:])]


def _d(oracle: DistanceOracle, a, b) -> float:
    return oracle.distance(a, b)


# -- goal-only metrics -------------------------------------------------------

def path_length(path: Sequence, oracle: DistanceOracle) -> float:
    """Sum of hop distances.

    ``math.fsum`` rounds the sum once, so a path and any reordering of its
    hops get bit-identical lengths.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    return math.fsum(_d(oracle, a, b) for a, b in zip(path, path[1:]))


def navigation_error(ep: EpisodePair, oracle: DistanceOracle) -> float:
    return _d(oracle, ep.query[-1], ep.reference[-1])


def oracle_navigation_error(ep: EpisodePair, oracle: DistanceOracle) -> float:
    return point_to_path_distance(oracle, ep.reference[-1], ep.query)


def success_rate(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> int:
    return int(navigation_error(ep, oracle) <= cfg.d_th)


def oracle_success_rate(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> int:
    return int(oracle_navigation_error(ep, oracle) <= cfg.d_th)


def _deviations(ep: EpisodePair, oracle: DistanceOracle) -> np.ndarray:
    return oracle.matrix(list(ep.query), list(ep.reference)).min(axis=1)


def average_deviation(ep: EpisodePair, oracle: DistanceOracle) -> float:
    return float(_deviations(ep, oracle).mean())


def max_deviation(ep: EpisodePair, oracle: DistanceOracle) -> float:
    return float(_deviations(ep, oracle).max())


def _spl(ep, oracle, cfg) -> tuple[float, bool]:
    sr = success_rate(ep, oracle, cfg)
    shortest = _d(oracle, ep.query[0], ep.reference[-1])
    if shortest == 0:
        # 0/0: starting on the goal counts as an efficient success
        return float(sr), True
    return sr * shortest / max(path_length(ep.query, oracle), shortest), False


def spl(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    """Success weighted by the ratio of shortest to travelled length."""
    return _spl(ep, oracle, cfg)[0]


# -- whole-path metrics ------------------------------------------------------

def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def sed(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    sr = success_rate(ep, oracle, cfg)
    a_r, a_q = action_sequence(ep.reference), action_sequence(ep.query)
    longest = max(len(a_r), len(a_q))
    if longest == 0:
        return float(sr)
    return sr * (1.0 - edit_distance(a_r, a_q) / longest)


def path_coverage(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    near = oracle.matrix(list(ep.reference), list(ep.query)).min(axis=1)
    return float(np.exp(-near / cfg.d_th).mean())


def _cls_parts(ep, oracle, cfg) -> tuple[float, float]:
    pc = path_coverage(ep, oracle, cfg)
    expected = pc * path_length(ep.reference, oracle)
    denom = expected + abs(expected - path_length(ep.query, oracle))
    # both lengths zero: the query matches the (empty) extent exactly
    ls = expected / denom if denom > 0 else 1.0
    return pc, ls


def cls(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    pc, ls = _cls_parts(ep, oracle, cfg)
    return pc * ls


def dtw_distance(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig | None = None) -> float:
    if cfg is not None and cfg.fast:
        return dtw_fast(ep.reference, ep.query, oracle, cfg.radius).cost
    return dtw_cost(ep.reference, ep.query, oracle)


def ndtw(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    return normalized(dtw_distance(ep, oracle, cfg), len(ep.reference), cfg.d_th)


def sdtw(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    if not success_rate(ep, oracle, cfg):
        return 0.0
    return ndtw(ep, oracle, cfg)


# -- report ------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    PL: float
    NE: float
    ONE: float
    SR: int
    OSR: int
    AD: float
    MD: float
    SPL: float
    SED: float
    CLS: float
    nDTW: float
    SDTW: float
    PC: float = 0.0
    LS: float = 0.0
    spl_degenerate: bool = False

    def scores(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def as_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def direction(name: str) -> int:
        return DIRECTIONS[name]


def full_report(ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> MetricReport:
    """All twelve metrics from one oracle and one config."""
    ne = navigation_error(ep, oracle)
    one = oracle_navigation_error(ep, oracle)
    sr = int(ne <= cfg.d_th)
    dev = _deviations(ep, oracle)
    spl_value, degenerate = _spl(ep, oracle, cfg)
    pc, ls = _cls_parts(ep, oracle, cfg)
    nd = ndtw(ep, oracle, cfg)
    return MetricReport(
        PL=path_length(ep.query, oracle),
        NE=ne,
        ONE=one,
        SR=sr,
        OSR=int(one <= cfg.d_th),
        AD=float(dev.mean()),
        MD=float(dev.max()),
        SPL=spl_value,
        SED=sed(ep, oracle, cfg),
        CLS=pc * ls,
        nDTW=nd,
        SDTW=nd if sr else 0.0,
        PC=pc,
        LS=ls,
        spl_degenerate=degenerate,
    )


METRIC_FUNCTIONS = {
    "PL": lambda ep, o, c: path_length(ep.query, o),
    "NE": lambda ep, o, c: navigation_error(ep, o),
    "ONE": lambda ep, o, c: oracle_navigation_error(ep, o),
    "SR": success_rate,
    "OSR": oracle_success_rate,
    "AD": lambda ep, o, c: average_deviation(ep, o),
    "MD": lambda ep, o, c: max_deviation(ep, o),
    "SPL": spl,
    "SED": sed,
    "CLS": cls,
    "nDTW": ndtw,
    "SDTW": sdtw,
}


def metric_value(name: str, ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    try:
        fn = METRIC_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}") from None
    return fn(ep, oracle, cfg)


def resolve_metric(name: str) -> str:
    """Case-insensitive lookup of a metric name."""
    for canonical in METRIC_NAMES:
        if canonical.lower() == name.lower():
            return canonical
    raise ValueError(f"unknown metric {name!r}")


def oriented_score(name: str, ep: EpisodePair, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    """Metric value flipped so that larger is always better.

    PL has no direction; it is scored by closeness to the reference length.
    """
    value = metric_value(name, ep, oracle, cfg)
    direction = DIRECTIONS[name]
    if direction == 0:
        return -abs(value - path_length(ep.reference, oracle))
    return direction * value


# -- files -------------------------------------------------------------------

class EpisodeFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_episodes(text: str, world: NavWorld | None = None) -> list[EpisodePair]:
    """One ``{"reference": [...], "query": [...]}`` object per non-blank line."""
    episodes = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            ref, qry = record["reference"], record["query"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EpisodeFormatError(lineno, f"malformed episode: {exc}") from None
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in [*ref, *qry]):
            raise EpisodeFormatError(lineno, "node ids must be integers")
        try:
            episodes.append(EpisodePair(ref, qry, world))
        except UnknownNodeError as exc:
            raise EpisodeFormatError(lineno, f"unknown node {exc.args[0]}") from None
        except ValueError as exc:
            raise EpisodeFormatError(lineno, str(exc)) from None
    return episodes


def load_episodes(path, world: NavWorld | None = None) -> list[EpisodePair]:
    with open(path, encoding="utf-8") as fh:
        return parse_episodes(fh.read(), world)


def episodes_to_jsonl(episodes) -> str:
    return "".join(
        json.dumps({"reference": list(ep.reference), "query": list(ep.query)}) + "\n"
        for ep in episodes
    )
