"""Goal-greedy, fidelity-greedy and random rollouts on one generated world.

Prints one row per policy with metric means as percentages (distances in
world units), plus the fidelity minus goal nDTW gap in standard errors.

    python3 scripts/run_policy_study.py --episodes 1000 --seed 2024
"""
import argparse
import math

from navdtw.cli import policy_study
from navdtw.geometry import precompute_all_pairs
from navdtw.metrics import METRIC_NAMES, MetricConfig
from navdtw.simworld import WorldConfig, generate_world, success_threshold

FRACTIONS = {"SR", "OSR", "SPL", "SED", "CLS", "nDTW", "SDTW"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--world-seed", type=int, default=1)
    ap.add_argument("--episodes", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--direct", action="store_true", help="non-looping references")
    args = ap.parse_args()

    world = generate_world(WorldConfig(seed=args.world_seed))
    oracle = precompute_all_pairs(world)
    cfg = MetricConfig(success_threshold(world))
    print(f"world seed {args.world_seed}, d_th {cfg.d_th:.3f}, {args.episodes} "
          f"{'direct' if args.direct else 'looped'} references")

    results = {}
    print("policy".ljust(10) + "".join(m.rjust(7) for m in METRIC_NAMES))
    for kind in ("goal", "fidelity", "random"):
        res = policy_study(world, oracle, cfg, episodes=args.episodes, reward=kind,
                           seed=args.seed, looped=not args.direct)
        results[kind] = res
        cells = [
            f"{100 * res[m][0]:7.1f}" if m in FRACTIONS else f"{res[m][0]:7.2f}" for m in METRIC_NAMES
        ]
        print(kind.ljust(10) + "".join(cells))

    f, g = results["fidelity"]["nDTW"], results["goal"]["nDTW"]
    gap = f[0] - g[0]
    print(f"fidelity - goal nDTW gap: {gap:.4f} ({gap / math.hypot(f[1], g[1]):.1f} SE)")


if __name__ == "__main__":
    main()
