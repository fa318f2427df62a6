"""Trajectory-fidelity metrics for instruction-following navigation.

Dynamic time warping based scores (nDTW, SDTW) alongside the usual goal
and path metrics, synthetic grid worlds for studying them, and the rank
statistics used to compare metrics against human orderings.
"""
from .geometry import (
    UNREACHABLE,
    DistanceOracle,
    NavWorld,
    UnknownNodeError,
    UnreachableError,
    WorldError,
    build_world,
    euclidean_oracle,
    geodesic_distance,
    grid_approx_distance,
    grid_oracle,
    load_world,
    make_oracle,
    point_to_path_distance,
    precompute_all_pairs,
)
from .metrics import EpisodePair, MetricConfig, MetricReport, full_report, ndtw, sdtw
from .warp import PrefixScorer, dtw_exact, dtw_fast, enumerate_warpings

__version__ = "0.1.0"
