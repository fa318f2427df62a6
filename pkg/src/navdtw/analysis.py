"""Rank correlation against gold rankings and the exact binomial sign test."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from .geometry import DistanceOracle
from .metrics import EpisodePair, MetricConfig, oriented_score, resolve_metric


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, tied values sharing the mean of their positions."""
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    start = 0
    while start < len(order):
        stop = start
        while stop + 1 < len(order) and values[order[stop + 1]] == values[order[start]]:
            stop += 1
        shared = (start + stop) / 2 + 1
        for k in order[start : stop + 1]:
            ranks[k] = shared
        start = stop + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of average ranks.

    Returns ``nan`` when either input is constant.
    """
    if len(a) != len(b):
        raise ValueError("length mismatch")
    if len(a) < 2:
        raise ValueError("need at least two items")
    ra = np.array(average_ranks(a))
    rb = np.array(average_ranks(b))
    ra -= ra.mean()
    rb -= rb.mean()
    denom = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if denom == 0:
        return math.nan
    return float(ra @ rb) / denom


@dataclass(frozen=True)
class RankingSet:
    reference: tuple
    queries: tuple
    gold: tuple  # query indices, best first

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple(self.reference))
        object.__setattr__(self, "queries", tuple(tuple(q) for q in self.queries))
        object.__setattr__(self, "gold", tuple(int(g) for g in self.gold))
        if sorted(self.gold) != list(range(len(self.queries))):
            raise ValueError("gold ranking must be a permutation of query indices")

    def episodes(self) -> list[EpisodePair]:
        return [EpisodePair(self.reference, q) for q in self.queries]

    def gold_scores(self) -> list[float]:
        """Higher is better: the best query gets ``n - 1``, the worst ``0``."""
        n = len(self.gold)
        scores = [0.0] * n
        for pos, k in enumerate(self.gold):
            scores[k] = float(n - 1 - pos)
        return scores

    def to_dict(self) -> dict:
        return {
            "reference": list(self.reference),
            "queries": [list(q) for q in self.queries],
            "gold": list(self.gold),
        }


def load_ranking_sets(path: str | FsPath) -> list[RankingSet]:
    """Read ranking sets from a JSON array or JSONL file."""
    text = FsPath(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        records = json.loads(text)
    else:
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [RankingSet(r["reference"], r["queries"], r["gold"]) for r in records]


def metric_scores(rs: RankingSet, metric: str, oracle: DistanceOracle, cfg: MetricConfig) -> list[float]:
    name = resolve_metric(metric)
    return [oriented_score(name, ep, oracle, cfg) for ep in rs.episodes()]


def rank_queries(rs: RankingSet, metric: str, oracle: DistanceOracle, cfg: MetricConfig) -> list[int]:
    """Query indices, best first under ``metric``; ties keep index order."""
    scores = metric_scores(rs, metric, oracle, cfg)
    return sorted(range(len(scores)), key=lambda k: (-scores[k], k))


def gold_correlation(rs: RankingSet, metric: str, oracle: DistanceOracle, cfg: MetricConfig) -> float:
    """Spearman's rho of a metric's scores with the gold ranking.

    A metric that scores every query the same carries no ordering, so its
    correlation is taken as 0.
    """
    rho = spearman(metric_scores(rs, metric, oracle, cfg), rs.gold_scores())
    return 0.0 if math.isnan(rho) else rho


@dataclass(frozen=True)
class SignTestResult:
    positives: int
    negatives: int
    ties: int
    p_value: float

    @property
    def n(self) -> int:
        return self.positives + self.negatives


def _log_binom_tail(k: int, n: int) -> float:
    """log P(X >= k) for X ~ Binomial(n, 1/2)."""
    if k <= 0:
        return 0.0
    terms = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
        for i in range(k, n + 1)
    ]
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms)) - n * math.log(2)


def sign_test(positives: int, negatives: int, ties: int = 0, *, sided: str = "two") -> SignTestResult:
    """Exact binomial sign test with ``n = positives + negatives`` and ``p = 0.5``.

    ``sided="one"`` gives ``P(X >= positives)``; ``sided="two"`` doubles it
    (clamped at 1).  The tail is summed in log space, so ``n`` in the
    hundreds does not underflow.
    """
    n = positives + negatives
    if n < 1:
        raise ValueError("no informative sets (positives + negatives == 0)")
    if positives < 0 or negatives < 0:
        raise ValueError("counts must be non-negative")
    p = math.exp(_log_binom_tail(positives, n))
    if sided == "two":
        p = min(1.0, 2 * p)
    elif sided != "one":
        raise ValueError("sided must be 'one' or 'two'")
    return SignTestResult(positives, negatives, ties, p)


def compare_metrics(
    sets: Iterable[RankingSet],
    champion: str,
    rivals: Sequence[str],
    oracle: DistanceOracle,
    cfg: MetricConfig,
    *,
    sided: str = "two",
) -> dict[str, SignTestResult]:
    """Per rival, count sets where the champion correlates better with gold."""
    sets = list(sets)
    if not sets:
        raise ValueError("empty ranking-set list")
    names = {m: resolve_metric(m) for m in [champion, *rivals]}
    rhos = {
        m: [gold_correlation(rs, names[m], oracle, cfg) for rs in sets]
        for m in dict.fromkeys([champion, *rivals])
    }
    table = {}
    for rival in rivals:
        pos = neg = ties = 0
        for mine, theirs in zip(rhos[champion], rhos[rival]):
            if mine > theirs:
                pos += 1
            elif mine < theirs:
                neg += 1
            else:
                ties += 1
        table[names[rival]] = sign_test(pos, neg, ties, sided=sided)
    return table


def synthetic_gold(rs: RankingSet, metric: str, oracle: DistanceOracle, cfg: MetricConfig) -> RankingSet:
    """Same set with the gold ranking replaced by ``metric``'s own ranking."""
    return RankingSet(rs.reference, rs.queries, rank_queries(rs, metric, oracle, cfg))


def format_p(p: float) -> str:
    return f"{p:.1e}"
