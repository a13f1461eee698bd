"""Command line entry point: run discovery, generate scenes, compare algorithms."""
from __future__ import annotations

import argparse
import contextlib
import sys
import time
from typing import Iterable, Sequence, TextIO

from .autoparam import compute_delta
from .convoy import Candidate, Convoy, QueryParams, accuracy_report, discover, mc2
from .metrics import format_json, format_kv
from .simplify import reduction_ratio, simplify
from .synthetic import PlantedConvoy, SyntheticSpec, generate
from .trajectory import DataError, load_trajectories, write_trajectories

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

ALGOS = ("cmc", "cuts", "cuts+", "cuts*", "mc2")
MC2_HEADER = "# moving clusters (not convoys)"


class UsageError(Exception):
    pass


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _load(path: str):
    if path == "-":
        return load_trajectories(sys.stdin)
    with open(path, encoding="utf-8", newline="") as fh:
        return load_trajectories(fh)


def format_items(items: Iterable[Convoy | Candidate]) -> str:
    """One ``ids start end`` line per item, sorted by start then first id."""
    convoys = sorted((Convoy(c.members, c.start, c.end) for c in items), key=Convoy.sort_key)
    return "".join(c.format() + "\n" for c in convoys)


def format_candidates(cands: Iterable[Candidate]) -> str:
    ordered = sorted(cands, key=lambda c: (c.start, sorted(c.members), c.end))
    return "".join(f"{','.join(sorted(c.members))} {c.start} {c.end} {c.lifetime}\n" for c in ordered)


def parse_candidates(lines: Iterable[str]) -> list[Candidate]:
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        ids, start, end, lifetime = line.split()
        out.append(Candidate(frozenset(ids.split(",")), int(start), int(end), int(lifetime)))
    return out


def _query(args) -> QueryParams:
    try:
        return QueryParams(args.m, args.k, args.e)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _check_tuning(args) -> None:
    if args.delta is not None and args.delta < 0:
        raise UsageError("--delta must be non-negative")
    if args.lam is not None and args.lam < 2:
        raise UsageError("--lambda must be at least 2")
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")


def _run_mc2(objs, args) -> tuple[list[Candidate], dict]:
    if not 0 < args.theta <= 1:
        raise UsageError("--theta must lie in (0, 1]")
    if args.m < 1 or not args.e > 0:
        raise UsageError("mc2 needs m >= 1 and e > 0")
    start = time.perf_counter()
    found = mc2(objs, args.theta, args.e, args.m)
    stats = {
        "algo": "mc2",
        "m": args.m,
        "e": args.e,
        "theta": args.theta,
        "total_ms": (time.perf_counter() - start) * 1e3,
        "moving_clusters": len(found),
    }
    return found, stats


def _execute(objs, algo: str, args):
    """Results and stats for one algorithm; the candidate list is empty unless CuTS ran."""
    if algo == "mc2":
        found, stats = _run_mc2(objs, args)
        return found, stats, []
    q = _query(args)
    _check_tuning(args)
    captured: list[Candidate] = []
    convoys, stats = discover(
        objs, q, algo, delta=args.delta, lam=args.lam, threads=args.threads, on_candidates=captured.extend
    )
    return convoys, stats.as_dict(), captured


def cmd_run(args) -> int:
    if args.candidates and args.algo not in ("cuts", "cuts+", "cuts*"):
        raise UsageError("--candidates needs a CuTS variant")
    objs = _load(args.input)
    found, stats, cands = _execute(objs, args.algo, args)
    with _open_out(args.out) as fh:
        if args.algo == "mc2":
            fh.write(MC2_HEADER + "\n")
        fh.write(format_items(found))
    if args.stats:
        text = format_json(stats) if args.stats_format == "json" else format_kv(stats)
        with _open_out(args.stats) as fh:
            fh.write(text)
    if args.candidates:
        with _open_out(args.candidates) as fh:
            fh.write(format_candidates(cands))
    return EXIT_OK


def cmd_compare(args) -> int:
    objs = _load(args.input)
    ref, _, _ = _execute(objs, args.reference, args)
    trial, _, _ = _execute(objs, args.algo, args)
    fp, fn = accuracy_report(ref, trial)
    report = {
        "reference": args.reference,
        "trial": args.algo,
        "reference_count": len(ref),
        "trial_count": len(trial),
        "false_positive_pct": fp,
        "false_negative_pct": fn,
    }
    with _open_out(args.out) as fh:
        fh.write(format_json(report) if args.stats_format == "json" else format_kv(report))
    return EXIT_OK


def _parse_planted(text: str) -> PlantedConvoy:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"--convoy expects SIZE:START:END[:JITTER], got {text!r}")
    try:
        size, start, end = (int(p) for p in parts[:3])
        jitter = float(parts[3]) if len(parts) == 4 else 0.05
    except ValueError as exc:
        raise UsageError(f"bad --convoy value {text!r}") from exc
    return PlantedConvoy(size, start, end, jitter)


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        n_objects=args.objects,
        n_ticks=args.ticks,
        e=args.e,
        convoys=tuple(_parse_planted(c) for c in args.convoy),
        area=args.area,
        step=args.step,
        missing_prob=args.missing,
        irregular=args.irregular,
        routes=args.routes,
        dispersed=args.dispersed,
    )
    try:
        scene = generate(spec, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _open_out(args.out) as fh:
        write_trajectories(scene.trajectories, fh)
    if args.truth:
        with _open_out(args.truth) as fh:
            fh.write(format_items(scene.planted))
    return EXIT_OK


def cmd_simplify(args) -> int:
    objs = _load(args.input)
    if args.delta is None:
        if args.e is None:
            raise UsageError("give --delta or --e to choose it automatically")
        delta = compute_delta(objs.values(), args.e).delta
    else:
        delta = args.delta
    if delta < 0:
        raise UsageError("--delta must be non-negative")
    ordered = [objs[k] for k in sorted(objs)]
    simplified = [simplify(o, delta, args.simplifier) for o in ordered]
    if args.out:
        with _open_out(args.out) as fh:
            fh.write("obj,t,x,y\n")
            for o, s in zip(ordered, simplified):
                for i in s.vertex_indices():
                    x, y = o.xy[i].tolist()
                    fh.write(f"{o.obj_id},{int(o.ticks[i])},{x!r},{y!r}\n")
    report = {
        "simplifier": args.simplifier,
        "delta": delta,
        "points": sum(len(o) for o in ordered),
        "vertices": sum(s.n_vertices for s in simplified),
        "reduction_ratio": reduction_ratio(ordered, simplified),
        "max_actual_tolerance": max((s.actual_tolerance for s in simplified), default=0.0),
    }
    sys.stdout.write(format_kv(report))
    return EXIT_OK


def _add_query(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="trajectory CSV (obj,t,x,y); '-' for stdin")
    p.add_argument("--m", type=int, required=True, help="minimum number of objects")
    p.add_argument("--k", type=int, default=2, help="minimum lifetime in ticks")
    p.add_argument("--e", type=float, required=True, help="neighbourhood range")
    p.add_argument("--delta", type=float, default=None, help="simplification tolerance (auto if omitted)")
    p.add_argument("--lambda", dest="lam", type=int, default=None, help="partition length in ticks (auto if omitted)")
    p.add_argument("--theta", type=float, default=0.5, help="mc2 overlap threshold")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--stats-format", choices=("kv", "json"), default="kv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convoys", description="Convoy discovery in trajectory data.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="discover convoys (or mc2 moving clusters)")
    _add_query(run)
    run.add_argument("--algo", choices=ALGOS, default="cuts*")
    run.add_argument("--out", default="-", help="result file ('-' for stdout)")
    run.add_argument("--stats", default=None, help="write run statistics here")
    run.add_argument("--candidates", default=None, help="write the filter candidates here")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="false-positive/negative percentages of one algorithm against another")
    _add_query(cmp_)
    cmp_.add_argument("--algo", choices=ALGOS, required=True)
    cmp_.add_argument("--reference", choices=ALGOS[:-1], default="cmc")
    cmp_.add_argument("--out", default="-")
    cmp_.set_defaults(func=cmd_compare)

    gen = sub.add_parser("generate", help="write a seeded synthetic scene")
    gen.add_argument("--objects", type=int, required=True)
    gen.add_argument("--ticks", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--e", type=float, default=10.0, help="range the planted convoys are built for")
    gen.add_argument("--convoy", action="append", default=[], metavar="SIZE:START:END[:JITTER]")
    gen.add_argument("--area", type=float, default=20.0, help="side of the area in multiples of e")
    gen.add_argument("--step", type=float, default=0.3, help="walk step scale in multiples of e")
    gen.add_argument("--missing", type=float, default=0.0, help="probability of dropping a sample")
    gen.add_argument("--irregular", action="store_true", help="ragged object lifetimes")
    gen.add_argument("--routes", type=int, default=0, help="shared routes for noise objects")
    gen.add_argument("--dispersed", action="store_true", help="keep noise objects apart")
    gen.add_argument("--out", default="-")
    gen.add_argument("--truth", default=None, help="write the planted convoys here")
    gen.set_defaults(func=cmd_generate)

    simp = sub.add_parser("simplify", help="simplify trajectories and report the reduction ratio")
    simp.add_argument("--input", required=True)
    simp.add_argument("--simplifier", choices=("dp", "dp+", "dp*"), default="dp")
    simp.add_argument("--delta", type=float, default=None)
    simp.add_argument("--e", type=float, default=None, help="range used to pick delta automatically")
    simp.add_argument("--out", default=None, help="write kept vertices as CSV")
    simp.set_defaults(func=cmd_simplify)
    return parser


def main(argv: Sequence[str] | None = None, stderr: TextIO | None = None) -> int:
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"convoys: error: {exc}", file=err)
        return EXIT_USAGE
    except DataError as exc:
        print(f"convoys: data error: {exc}", file=err)
        return EXIT_DATA
    except OSError as exc:
        print(f"convoys: {exc}", file=err)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
