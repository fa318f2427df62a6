"""``navdtw`` command line: score, gen, study, policy, render.

Exit codes: 0 success, 1 invalid input, 2 internal error.  Every file
output is accompanied by ``<output>.manifest.json`` (``manifest.json``
inside the directory for ``render``).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .analysis import (
    RankingSet,
    compare_metrics,
    format_p,
    load_ranking_sets,
    sign_test,
    synthetic_gold,
)
from .geometry import UnreachableError, WorldError, dump_world, load_world, make_oracle
from .metrics import (
    DIRECTIONS,
    METRIC_NAMES,
    EpisodePair,
    MetricConfig,
    episodes_to_jsonl,
    full_report,
    load_episodes,
    resolve_metric,
)
from .simworld import (
    EpisodeSpec,
    WorldConfig,
    derive_seeds,
    generate_looped_path,
    generate_path,
    generate_query,
    generate_world,
    greedy_policy_rollout,
    mean_and_stderr,
    random_policy_rollout,
    reference_lengths,
    success_threshold,
)
from .svg import render_episode, render_index

FRACTION_METRICS = {"SR", "OSR", "SPL", "SED", "CLS", "nDTW", "SDTW"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- helpers -----------------------------------------------------------------

def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(target, command: str, config: dict, inputs: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {role: _digest(p) for role, p in sorted(inputs.items()) if p},
        "version": __version__,
    }
    target = Path(target)
    name = target / "manifest.json" if target.is_dir() else Path(f"{target}.manifest.json")
    write_atomic(name, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _metric_list(text: str | None) -> list[str]:
    if not text:
        return list(METRIC_NAMES)
    return [resolve_metric(t.strip()) for t in text.split(",") if t.strip()]


def _setup(args):
    world = load_world(args.world)
    oracle = make_oracle(world, args.mode, spacing=args.spacing)
    d_th = args.dth if args.dth is not None else success_threshold(world)
    cfg = MetricConfig(d_th, args.mode, fast=args.fast, radius=args.radius)
    return world, oracle, cfg


def _cfg_snapshot(args, cfg: MetricConfig) -> dict:
    return {
        "d_th": cfg.d_th,
        "mode": cfg.mode,
        "spacing": args.spacing if cfg.mode == "grid" else None,
        "fast": cfg.fast,
        "radius": cfg.radius,
    }


def score_rows(episodes, oracle, cfg, metrics) -> list[dict]:
    rows = []
    for k, ep in enumerate(episodes):
        row: dict = {"episode": k}
        try:
            report = full_report(ep, oracle, cfg).scores()
        except UnreachableError as exc:
            row.update(valid=False, error=str(exc))
            row.update({m: None for m in metrics})
        else:
            row.update(valid=True, error="")
            row.update({m: report[m] for m in metrics})
        rows.append(row)
    return rows


def _csv_value(v, name: str, percent: bool) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if percent and name in FRACTION_METRICS:
        return f"{100 * v:.1f}"
    return repr(v) if isinstance(v, float) else str(v)


def rows_to_csv(rows: list[dict], metrics: list[str], percent: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["episode", "valid", *metrics, "error"]
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_value(row[h], h, percent) for h in header])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

def cmd_score(args) -> int:
    world, oracle, cfg = _setup(args)
    metrics = _metric_list(args.metrics)
    episodes = load_episodes(args.episodes, world)
    rows = score_rows(episodes, oracle, cfg, metrics)
    if args.format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        text = rows_to_csv(rows, metrics, args.percent)
    write_atomic(args.out, text)
    write_manifest(
        args.out, "score",
        {**_cfg_snapshot(args, cfg), "metrics": metrics, "format": args.format, "percent": args.percent},
        {"world": args.world, "episodes": args.episodes},
    )
    bad = sum(not r["valid"] for r in rows)
    if bad:
        print(f"{bad} episode(s) had unreachable node pairs; rows marked invalid", file=sys.stderr)
    return 0


def cmd_gen_world(args) -> int:
    cfg = WorldConfig(args.grid_size, args.zeta, args.threshold, args.seed)
    world = generate_world(cfg)
    write_atomic(args.out, json.dumps(world.to_dict(), allow_nan=False) + "\n")
    write_manifest(
        args.out, "gen world",
        {"grid_size": cfg.grid_size, "zeta": cfg.zeta, "edge_threshold": cfg.edge_threshold, "seed": cfg.seed},
        {},
    )
    return 0


def cmd_gen_paths(args) -> int:
    world = load_world(args.world)
    oracle = make_oracle(world, "geodesic")
    d_th = args.dth if args.dth is not None else success_threshold(world)
    seeds = derive_seeds(args.seed, args.count)
    lines = []
    for s in seeds:
        ref_seed, qry_seed = derive_seeds(s, 2)
        if args.looped:
            ref = generate_looped_path(world, ref_seed, n_waypoints=args.waypoints)
        else:
            ref = generate_path(world, ref_seed, n_waypoints=args.waypoints)
        n_q = args.queries if args.sets else 1
        queries = [
            generate_query(
                world, ref, q_seed, oracle=oracle, d_th=d_th,
                success_constrained=args.success_constrained, n_waypoints=args.waypoints,
            )
            for q_seed in derive_seeds(qry_seed, n_q)
        ]
        if args.sets:
            rs = RankingSet(ref, queries, range(n_q))
            if args.gold_metric:
                rs = synthetic_gold(rs, args.gold_metric, oracle, MetricConfig(d_th))
            lines.append(json.dumps(rs.to_dict()) + "\n")
        else:
            lines.append(episodes_to_jsonl([EpisodePair(ref, queries[0])]))
    write_atomic(args.out, "".join(lines))
    write_manifest(
        args.out, "gen paths",
        {
            "count": args.count, "seed": args.seed, "waypoints": args.waypoints,
            "looped": args.looped, "success_constrained": args.success_constrained,
            "d_th": d_th, "sets": args.sets, "queries": args.queries,
            "gold_metric": args.gold_metric,
        },
        {"world": args.world},
    )
    return 0


def _study_table(args) -> tuple[dict, dict]:
    if args.counts:
        with open(args.counts, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            table = {
                r["rival"]: sign_test(int(r["positives"]), int(r["negatives"]),
                                      int(r.get("ties") or 0), sided=args.sided)
                for r in reader
            }
        return table, {}
    if not (args.world and args.sets):
        raise UsageError("study needs WORLD and SETS, or --counts")
    world, oracle, cfg = _setup(args)
    sets = load_ranking_sets(args.sets)
    if args.synthetic_gold:
        sets = [synthetic_gold(rs, args.synthetic_gold, oracle, cfg) for rs in sets]
    rivals = [r.strip() for r in args.rivals.split(",") if r.strip()]
    table = compare_metrics(sets, args.champion, rivals, oracle, cfg, sided=args.sided)
    return table, _cfg_snapshot(args, cfg)


def study_csv(table: dict, layout: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if layout == "wide":
        writer.writerow(["", *table])
        writer.writerow(["+/-", *(f"{r.positives}/{r.negatives}" for r in table.values())])
        writer.writerow(["sign test", *(format_p(r.p_value) for r in table.values())])
    else:
        writer.writerow(["rival", "positives", "negatives", "ties", "p_value"])
        for rival, r in table.items():
            writer.writerow([rival, r.positives, r.negatives, r.ties, format_p(r.p_value)])
    return buf.getvalue()


def cmd_study(args) -> int:
    table, snapshot = _study_table(args)
    write_atomic(args.out, study_csv(table, args.layout))
    write_manifest(
        args.out, "study",
        {**snapshot, "champion": args.champion, "rivals": args.rivals, "sided": args.sided,
         "synthetic_gold": args.synthetic_gold, "layout": args.layout},
        {"world": args.world, "sets": args.sets, "counts": args.counts},
    )
    return 0


def policy_study(world, oracle, cfg, *, episodes: int, reward: str, seed: int,
                 looped: bool = True, horizon_factor: float = 2.0) -> dict:
    """Mean and standard error of every metric over ``episodes`` rollouts."""
    seeds = derive_seeds(seed, episodes)
    make_ref = generate_looped_path if looped else generate_path
    refs = [make_ref(world, s) for s in seeds]
    lengths = reference_lengths(refs)
    reports = []
    for s, ref in zip(seeds, refs):
        spec = EpisodeSpec(ref, cfg.d_th)
        if reward == "random":
            ro = random_policy_rollout(world, spec, lengths, s + 1, oracle)
        else:
            horizon = max(1, math.ceil(horizon_factor * len(ref)))
            ro = greedy_policy_rollout(world, spec, reward, horizon, oracle)
        reports.append(full_report(EpisodePair(ref, ro.trajectory), oracle, cfg).scores())
    return {m: mean_and_stderr([r[m] for r in reports]) for m in METRIC_NAMES}


def format_summary(summary: dict) -> str:
    cells = []
    for m, (mean, _) in summary.items():
        cells.append(f"{m} {100 * mean:.1f}" if m in FRACTION_METRICS else f"{m} {mean:.2f}")
    return ", ".join(cells)


def cmd_policy(args) -> int:
    world, oracle, cfg = _setup(args)
    summary = policy_study(
        world, oracle, cfg, episodes=args.episodes, reward=args.reward, seed=args.seed,
        looped=not args.direct, horizon_factor=args.horizon_factor,
    )
    print(f"{args.reward}: {format_summary(summary)}")
    if args.out:
        payload = {
            m: {"mean": mean, "stderr": se, "percent": round(100 * mean, 1) if m in FRACTION_METRICS else None}
            for m, (mean, se) in summary.items()
        }
        write_atomic(args.out, json.dumps(payload, indent=1) + "\n")
        write_manifest(
            args.out, "policy",
            {**_cfg_snapshot(args, cfg), "episodes": args.episodes, "reward": args.reward,
             "seed": args.seed, "looped": not args.direct, "horizon_factor": args.horizon_factor},
            {"world": args.world},
        )
    return 0


def cmd_render(args) -> int:
    world, oracle, cfg = _setup(args)
    episodes = load_episodes(args.episodes, world)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from None
    entries = []
    for k, ep in enumerate(episodes):
        try:
            score = full_report(ep, oracle, cfg).nDTW
            caption = f"nDTW = {score:.3f}"
        except UnreachableError:
            score, caption = -math.inf, "nDTW = n/a"
        name = f"episode_{k:05d}.svg"
        write_atomic(out / name, render_episode(world, ep.reference, ep.query, caption))
        entries.append((score, k, name, caption))
    entries.sort(key=lambda e: (-e[0], e[1]))
    write_atomic(out / "index.html", render_index([(e[2], e[3]) for e in entries]))
    write_manifest(out, "render", _cfg_snapshot(args, cfg), {"world": args.world, "episodes": args.episodes})
    return 0


# -- parser ------------------------------------------------------------------

def _add_metric_flags(p) -> None:
    p.add_argument("--dth", type=float, default=None,
                   help="success threshold (default: 1.33 x mean edge length)")
    p.add_argument("--mode", choices=("geodesic", "euclidean", "grid"), default="geodesic")
    p.add_argument("--spacing", type=float, default=0.25, help="grid spacing for --mode grid")
    p.add_argument("--fast", action="store_true", help="use FastDTW instead of exact DTW")
    p.add_argument("--radius", type=int, default=20, help="FastDTW radius")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="navdtw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score episodes against their references")
    p.add_argument("world")
    p.add_argument("episodes")
    _add_metric_flags(p)
    p.add_argument("--metrics", help="comma-separated subset, e.g. nDTW,SDTW,SPL")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--percent", action="store_true", help="fractions as percentages (CSV only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    gen = sub.add_parser("gen", help="generate worlds or paths").add_subparsers(
        dest="what", required=True, parser_class=_Parser)
    g = gen.add_parser("world")
    g.add_argument("--grid-size", type=int, default=15)
    g.add_argument("--zeta", type=float, default=0.3)
    g.add_argument("--threshold", type=float, default=1.4)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_world)

    g = gen.add_parser("paths")
    g.add_argument("world")
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--waypoints", type=int, default=4)
    g.add_argument("--looped", action="store_true", help="references return to their start")
    g.add_argument("--success-constrained", action="store_true")
    g.add_argument("--dth", type=float, default=None)
    g.add_argument("--sets", action="store_true", help="emit ranking sets instead of episodes")
    g.add_argument("--queries", type=int, default=5, help="queries per ranking set")
    g.add_argument("--gold-metric", help="fill gold rankings from this metric")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_paths)

    p = sub.add_parser("study", help="sign tests of a champion metric against rivals")
    p.add_argument("world", nargs="?")
    p.add_argument("sets", nargs="?")
    _add_metric_flags(p)
    p.add_argument("--champion", default="nDTW")
    p.add_argument("--rivals", default="PL,NE,ONE,CLS,AD,MD")
    p.add_argument("--sided", choices=("one", "two"), default="two")
    p.add_argument("--synthetic-gold", metavar="METRIC")
    p.add_argument("--counts", help="CSV of recorded rival,positives,negatives[,ties]")
    p.add_argument("--layout", choices=("long", "wide"), default="long")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("policy", help="roll out a policy and summarise its metrics")
    p.add_argument("world")
    _add_metric_flags(p)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--reward", choices=("goal", "fidelity", "random"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--direct", action="store_true", help="non-looping references")
    p.add_argument("--horizon-factor", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("render", help="SVG drawings of episodes, indexed by nDTW")
    p.add_argument("world")
    p.add_argument("episodes")
    _add_metric_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, WorldError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"navdtw: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"navdtw: internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
