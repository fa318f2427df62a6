"""End-to-end ranking study with synthetic gold rankings.

Generates ranking sets (one reference, five queries each), takes the gold
ranking from one metric, and runs the champion-versus-rivals sign tests.
With the champion as gold it should never lose a set.
"""
import argparse

from navdtw.analysis import RankingSet, compare_metrics, format_p, synthetic_gold
from navdtw.geometry import precompute_all_pairs
from navdtw.metrics import MetricConfig
from navdtw.simworld import WorldConfig, derive_seeds, generate_path, generate_query, generate_world, success_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sets", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--gold", default="nDTW")
    ap.add_argument("--champion", default="nDTW")
    ap.add_argument("--rivals", default="PL,NE,ONE,CLS,AD,MD")
    ap.add_argument("--success-constrained", action="store_true")
    args = ap.parse_args()

    world = generate_world(WorldConfig(seed=args.seed))
    oracle = precompute_all_pairs(world)
    d_th = success_threshold(world)
    cfg = MetricConfig(d_th)
    sets = []
    for s in derive_seeds(args.seed, args.sets):
        ref_seed, q_seed = derive_seeds(s, 2)
        ref = generate_path(world, ref_seed)
        queries = [
            generate_query(world, ref, q, oracle=oracle, d_th=d_th, success_constrained=args.success_constrained)
            for q in derive_seeds(q_seed, 5)
        ]
        sets.append(synthetic_gold(RankingSet(ref, queries, range(5)), args.gold, oracle, cfg))

    table = compare_metrics(sets, args.champion, args.rivals.split(","), oracle, cfg)
    print(f"{args.sets} sets, gold = {args.gold}, champion = {args.champion}")
    for rival, res in table.items():
        print(f"  vs {rival:4} +{res.positives:<4} -{res.negatives:<4} ties {res.ties:<4} p = {format_p(res.p_value)}")


if __name__ == "__main__":
    main()
