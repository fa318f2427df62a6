import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from navdtw.geometry import UnreachableError, build_world, euclidean_oracle, precompute_all_pairs
from navdtw.metrics import (
    METRIC_NAMES,
    EpisodePair,
    EpisodeFormatError,
    MetricConfig,
    action_sequence,
    average_deviation,
    cls,
    edit_distance,
    full_report,
    max_deviation,
    metric_value,
    navigation_error,
    ndtw,
    oracle_navigation_error,
    oracle_success_rate,
    parse_episodes,
    path_length,
    sdtw,
    sed,
    spl,
    success_rate,
)

from conftest import chain_world, random_episodes

CFG1 = MetricConfig(1.0)


def ep(r, q):
    return EpisodePair(r, q)


@pytest.fixture
def chain5():
    # chain 0..4 plus node 5 two units above node 1
    world = build_world(*chain_world(extra=[(5, 1.0, 2.0)]))
    world = build_world(
        [(n, *world.position(n)) for n in world.ids], list(world.edges) + [(1, 5)]
    )
    return world, precompute_all_pairs(world)


# -- path length / errors ----------------------------------------------------

def test_path_length(chain_oracle):
    assert path_length([0, 1, 2, 3], chain_oracle) == 3.0
    assert path_length([2], chain_oracle) == 0.0
    assert path_length([0, 2], chain_oracle) == 2.0
    with pytest.raises(ValueError):
        path_length([], chain_oracle)


def test_navigation_error(chain_oracle):
    assert navigation_error(ep([0, 1, 2], [0, 1, 2]), chain_oracle) == 0.0
    assert navigation_error(ep([0, 1, 2, 3, 4], [0, 1, 2]), chain_oracle) == 2.0


def test_navigation_error_unreachable():
    w = build_world([(0, 0, 0), (1, 1, 0), (2, 5, 0)], [(0, 1)])
    with pytest.raises(UnreachableError):
        navigation_error(ep([0, 1], [2]), precompute_all_pairs(w))


def test_oracle_navigation_error(chain_oracle):
    assert oracle_navigation_error(ep([0, 1, 2], [0, 1, 2, 1]), chain_oracle) == 0.0
    assert oracle_navigation_error(ep([0, 1, 2, 3, 4], [0, 1, 2]), chain_oracle) == 2.0
    assert oracle_navigation_error(ep([0, 1, 2, 3, 4], [0, 1, 2, 3, 2, 1]), chain_oracle) == 1.0


def test_success_threshold_inclusive(chain_oracle):
    e = ep([0, 1, 2, 3, 4], [0, 1, 2, 3])  # NE = 1
    assert success_rate(e, chain_oracle, MetricConfig(1.0)) == 1
    assert success_rate(e, chain_oracle, MetricConfig(1.0 - 1e-9)) == 0
    assert success_rate(ep([0, 4], [4]), chain_oracle, CFG1) == 1


def test_oracle_success(chain_oracle):
    e = ep([0, 1, 2], [0, 1, 2, 3, 4])
    assert oracle_success_rate(e, chain_oracle, CFG1) == 1
    assert success_rate(e, chain_oracle, CFG1) == 0
    assert oracle_success_rate(ep([4], [0, 1]), chain_oracle, MetricConfig(0.5)) == 0


# -- deviations --------------------------------------------------------------

def test_deviation_zero_on_subset(chain_oracle):
    e = ep([0, 1, 2, 3, 4], [1, 2, 3])
    assert average_deviation(e, chain_oracle) == 0.0
    assert max_deviation(e, chain_oracle) == 0.0


def test_deviation_mixed(chain5):
    _, oracle = chain5
    e = ep([0, 1, 2, 3, 4], [0, 1, 5])
    # per-node d(q, R): 0, 0, and node 5 is two units from node 1
    assert [min(oracle.distance(q, r) for r in e.reference) for q in e.query] == [0, 0, 2]
    assert average_deviation(e, oracle) == pytest.approx(2 / 3, abs=1e-15)
    assert max_deviation(e, oracle) == 2.0


def test_deviation_parallel_line():
    nodes = [(i, float(i), 0.0) for i in range(5)] + [(10 + i, float(i), 1.0) for i in range(5)]
    w = build_world(nodes, [])
    o = euclidean_oracle(w)
    e = ep(range(5), range(10, 15))
    assert average_deviation(e, o) == 1.0


# -- SPL ---------------------------------------------------------------------

def test_spl_geodesic(chain_oracle):
    assert spl(ep([0, 1, 2, 3], [0, 1, 2, 3]), chain_oracle, CFG1) == 1.0


def test_spl_failure(chain_oracle):
    assert spl(ep([0, 1, 2, 3, 4], [0, 1]), chain_oracle, CFG1) == 0.0


def test_spl_twice_geodesic(chain_oracle):
    # geodesic 0 -> 2 has length 2, the query walks 4
    q = [0, 1, 2, 3, 2]
    assert path_length(q, chain_oracle) == 4.0
    assert spl(ep([0, 1, 2], q), chain_oracle, CFG1) == 0.5


def test_spl_start_at_goal(chain_oracle):
    rep = full_report(ep([2, 3, 2], [2, 1, 2]), chain_oracle, CFG1)
    assert rep.SPL == rep.SR == 1
    assert rep.spl_degenerate


# -- SED ---------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def lev(a, b):
    """Textbook recursive Levenshtein, used as an oracle."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(lev(a[1:], b) + 1, lev(a, b[1:]) + 1, lev(a[1:], b[1:]) + (a[0] != b[0]))


@settings(max_examples=200)
@given(st.lists(st.integers(0, 3), max_size=7), st.lists(st.integers(0, 3), max_size=7))
def test_edit_distance_oracle(a, b):
    assert edit_distance(a, b) == lev(tuple(a), tuple(b))


def test_action_sequence():
    assert action_sequence([3, 4, 5]) == [(3, 4), (4, 5)]
    assert action_sequence([3]) == []


def test_sed_identity(chain_oracle):
    assert sed(ep([0, 1, 2], [0, 1, 2]), chain_oracle, CFG1) == 1.0


def test_sed_failure(chain_oracle):
    assert sed(ep([0, 1, 2, 3, 4], [0, 1]), chain_oracle, CFG1) == 0.0


def test_sed_one_substitution():
    # 2 x 3 grid; the query drops the last of four reference actions
    nodes = [(i * 3 + j, float(i), float(j)) for i in range(2) for j in range(3)]
    edges = [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)]
    o = precompute_all_pairs(build_world(nodes, edges))
    R, Q = [0, 1, 2, 5, 4], [0, 1, 4, 5, 4]
    assert lev(tuple(action_sequence(R)), tuple(action_sequence(Q))) == 2
    R, Q = [0, 1, 2, 5, 4], [0, 1, 2, 5]
    assert lev(tuple(action_sequence(R)), tuple(action_sequence(Q))) == 1
    e = ep(R, Q)  # ends one unit from the goal
    assert sed(e, o, MetricConfig(1.5)) == 0.75


def test_sed_degenerate_paths(chain_oracle):
    assert sed(ep([2], [2]), chain_oracle, CFG1) == 1.0
    # one empty action sequence: ED is the other's length
    assert sed(ep([1, 2], [2]), chain_oracle, CFG1) == 0.0


# -- CLS ---------------------------------------------------------------------

def test_cls_identity(chain_oracle):
    rep = full_report(ep([0, 1, 2, 3], [0, 1, 2, 3]), chain_oracle, CFG1)
    assert (rep.PC, rep.LS, rep.CLS) == (1.0, 1.0, 1.0)


def test_cls_hand_value(chain_oracle):
    e = ep([0, 1, 2, 3, 4], [0, 1, 2])
    rep = full_report(e, chain_oracle, CFG1)
    pc = (3 + math.exp(-1) + math.exp(-2)) / 5
    assert rep.PC == pytest.approx(0.700642944881611, abs=1e-12)
    assert rep.PC == pytest.approx(pc, abs=1e-15)
    assert rep.LS == pytest.approx(0.7773814644603809, abs=1e-12)
    assert cls(e, chain_oracle, CFG1) == pytest.approx(0.5446668385559007, abs=1e-12)


def square_loop():
    # a=0 (0,0), b=1 (1,0), c=2 (1,1), fully connected triangle
    w = build_world([(0, 0, 0), (1, 1, 0), (2, 1, 1)], [(0, 1), (1, 2), (0, 2)])
    return precompute_all_pairs(w)


def test_cls_order_invariant_ndtw_not():
    o = square_loop()
    cfg = MetricConfig(1.0)
    q1 = ep([0, 1, 2, 0], [0, 2, 1, 0])
    q2 = ep([0, 1, 2, 0], [0, 1, 2, 0])
    assert cls(q1, o, cfg) == cls(q2, o, cfg)
    assert ndtw(q2, o, cfg) > ndtw(q1, o, cfg)


# -- nDTW / SDTW ---------------------------------------------------------------

def test_ndtw_identity(chain_oracle):
    assert ndtw(ep([0, 1, 2], [0, 1, 2]), chain_oracle, CFG1) == 1.0


def test_ndtw_chain(chain_oracle):
    assert ndtw(ep([0, 1, 2], [0, 2]), chain_oracle, CFG1) == pytest.approx(0.7165313105737893, abs=1e-15)


def test_ndtw_fast_option(chain_oracle):
    e = ep([0, 1, 2, 3, 4], [0, 2, 4])
    assert ndtw(e, chain_oracle, MetricConfig(1.0, fast=True, radius=0)) >= 0
    assert ndtw(e, chain_oracle, MetricConfig(1.0, fast=True, radius=5)) == ndtw(e, chain_oracle, CFG1)


def test_ndtw_scale_invariant():
    rng = np.random.default_rng(0)
    xy = rng.uniform(0, 5, size=(8, 2))
    w1 = build_world([(i, x, y) for i, (x, y) in enumerate(xy)], [])
    w2 = build_world([(i, 10 * x, 10 * y) for i, (x, y) in enumerate(xy)], [])
    e = ep([0, 1, 2, 3], [0, 4, 5, 6, 7, 3])
    a = ndtw(e, euclidean_oracle(w1), MetricConfig(1.3))
    b = ndtw(e, euclidean_oracle(w2), MetricConfig(13.0))
    assert a == pytest.approx(b, abs=1e-12)


def test_sdtw(chain_oracle):
    assert sdtw(ep([0, 1, 2], [0, 1, 2]), chain_oracle, CFG1) == 1.0
    assert sdtw(ep([0, 1, 2, 3, 4], [0, 1]), chain_oracle, CFG1) == 0.0
    assert sdtw(ep([0, 1, 2], [0, 2]), chain_oracle, CFG1) == pytest.approx(math.exp(-1 / 3), abs=1e-15)


def test_endpoint_forcing(grid_world):
    world, oracle, d_th = grid_world
    cfg = MetricConfig(d_th)
    rng = np.random.default_rng(8)
    for ref, _ in random_episodes(world, 100, seed=3):
        far = max(world.ids, key=lambda n: (oracle.distance(ref[-1], n), -n))
        assert ndtw(ep(ref, ref + [far]), oracle, cfg) < ndtw(ep(ref, ref), oracle, cfg)


# -- report ------------------------------------------------------------------

def test_report_identity(chain_oracle):
    rep = full_report(ep([0, 1, 2, 3], [0, 1, 2, 3]), chain_oracle, CFG1)
    assert (rep.SR, rep.SPL, rep.SED, rep.CLS, rep.nDTW, rep.SDTW) == (1, 1, 1, 1, 1, 1)
    assert rep.NE == rep.ONE == rep.AD == rep.MD == 0


def test_report_failure(chain_oracle):
    rep = full_report(ep([0, 1, 2, 3, 4], [0, 1]), chain_oracle, CFG1)
    assert rep.SR == rep.SPL == rep.SED == rep.SDTW == 0
    assert rep.nDTW > 0 and rep.CLS > 0


def test_report_matches_individual_metrics(grid_world):
    world, oracle, d_th = grid_world
    cfg = MetricConfig(d_th)
    for ref, qry in random_episodes(world, 1000, seed=1):
        e = ep(ref, qry)
        scores = full_report(e, oracle, cfg).scores()
        for name in METRIC_NAMES:
            assert scores[name] == metric_value(name, e, oracle, cfg), name


def test_unknown_metric(chain_oracle):
    with pytest.raises(ValueError):
        metric_value("BLEU", ep([0], [0]), chain_oracle, CFG1)


def test_config_validation():
    with pytest.raises(ValueError):
        MetricConfig(0.0)


def test_episode_validation(chain):
    with pytest.raises(ValueError):
        EpisodePair([], [1])
    with pytest.raises(KeyError):
        EpisodePair([0, 9], [0], chain)
    assert EpisodePair([0, 1], [0, 1, 2], chain).is_contiguous()
    assert not EpisodePair([0, 2], [0], chain).is_contiguous()


def test_parse_episodes_reports_line(chain):
    text = '{"reference":[0,1],"query":[0]}\n\n{"reference":[0],"query":[77]}\n'
    with pytest.raises(EpisodeFormatError, match="line 3"):
        parse_episodes(text, chain)
    with pytest.raises(EpisodeFormatError, match="line 1"):
        parse_episodes("{not json", chain)
