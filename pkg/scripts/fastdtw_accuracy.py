"""Relative cost error of FastDTW against exact DTW on long generated paths."""
import argparse
import time

import numpy as np

from navdtw.geometry import precompute_all_pairs
from navdtw.simworld import WorldConfig, generate_path, generate_world, rng_for
from navdtw.warp import dtw_exact, dtw_fast


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--worlds", type=int, default=5)
    ap.add_argument("--pairs", type=int, default=40, help="pairs per world")
    ap.add_argument("--radius", type=int, default=20)
    ap.add_argument("--max-len", type=int, default=500)
    ap.add_argument("--seed", type=int, default=710)
    args = ap.parse_args()

    errors, t_exact, t_fast = [], 0.0, 0.0
    for w_seed in range(args.seed, args.seed + args.worlds):
        world = generate_world(WorldConfig(seed=w_seed))
        oracle = precompute_all_pairs(world)
        rng = rng_for(w_seed)
        for _ in range(args.pairs):
            R = generate_path(world, rng, n_waypoints=int(rng.integers(1, 200)))[: args.max_len]
            Q = generate_path(world, rng, n_waypoints=int(rng.integers(1, 200)), start=R[0])[: args.max_len]
            t0 = time.perf_counter()
            exact = dtw_exact(R, Q, oracle, keep_table=False).cost
            t1 = time.perf_counter()
            approx = dtw_fast(R, Q, oracle, args.radius).cost
            t2 = time.perf_counter()
            t_exact += t1 - t0
            t_fast += t2 - t1
            errors.append((approx - exact) / exact if exact else 0.0)
    e = 100 * np.array(errors)
    print(f"{len(e)} pairs, radius {args.radius}: mean {e.mean():.3f}%, median {np.median(e):.3f}%, "
          f"p99 {np.percentile(e, 99):.2f}%, max {e.max():.2f}%, over 5%: {(e > 5).sum()}")
    print(f"time exact {t_exact:.1f} s, fast {t_fast:.1f} s")


if __name__ == "__main__":
    main()
