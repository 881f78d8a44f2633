"""Command-line front end: ``ldpc-prune <command> ...``.

Commands: show, lift, threshold, optimize, simulate. Errors are reported
as a single ``error: <kind>: <message>`` line on stderr with exit code 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import pexit, search, sim
from .protograph import BaseMatrix, export_alist, lift, load_base_matrix, rescale
from .pruning import PruningPattern, bit_schedule, load_pattern, parse_index_list


class CliError(Exception):
    pass


def _base(args) -> BaseMatrix:
    bm = load_base_matrix(args.inp)
    z = getattr(args, "z", None)
    if z is not None and z != bm.z:
        bm = rescale(bm, z)
    return bm


def _pattern(args) -> PruningPattern:
    if getattr(args, "pattern", None):
        pat = load_pattern(args.pattern)
        if args.shorten is not None or args.puncture is not None:
            raise CliError("give either --pattern or --shorten/--puncture, not both")
        return pat
    return PruningPattern(parse_index_list(args.shorten), parse_index_list(args.puncture))


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_show(args):
    bm = _base(args)
    print(f"n={bm.n} m={bm.m} k={bm.k} Z={bm.z} rate={bm.rate}")
    print("column degrees:", " ".join(map(str, bm.column_degrees())))
    print("row degrees:", " ".join(map(str, bm.row_degrees())))


def cmd_lift(args):
    _write(export_alist(lift(_base(args))), args.out)


def cmd_threshold(args):
    bm = _base(args)
    pat = _pattern(args)
    rate = Fraction(args.rate_override) if args.rate_override else None
    query = pexit.ThresholdQuery.from_pattern(
        bm, pat, rate=rate, bracket=(args.lo, args.hi), max_iter=args.max_iter
    )
    res = pexit.threshold(query)
    out = {
        "threshold_db": res.threshold_db if res.converged else None,
        "iterations_at_threshold": res.iterations,
        "rate": str(res.rate),
        "pattern": {"shorten": list(pat.shorten), "puncture": list(pat.puncture)},
    }
    print(json.dumps(out))


def cmd_optimize(args):
    bm = _base(args)
    cfg = search.SearchConfig(bm, args.stages, args.beam, threads=args.threads)
    result = search.run_search(cfg)
    best = result.trace(0)
    payload = {
        "shorten": list(best.shorten),
        "puncture": list(best.puncture),
        "threshold_db": result.best.threshold_db,
    }
    _write(json.dumps(payload) + "\n", args.out)
    log_path = args.log or (str(Path(args.out).with_suffix("")) + ".stages.csv" if args.out else None)
    if log_path:
        Path(log_path).write_text(result.log_csv())


def cmd_simulate(args):
    bm = _base(args)
    pat = _pattern(args)
    if args.ns is not None or args.np is not None:
        n_s, n_p = args.ns or 0, args.np or 0
    else:
        alpha = pat.alpha if args.alpha is None else args.alpha
        beta = pat.beta if args.beta is None else args.beta
        n_s, n_p = alpha * bm.z, beta * bm.z
    sched = bit_schedule(pat, bm, n_s, n_p)
    used = PruningPattern(pat.shorten[: sched.alpha], pat.puncture[: sched.beta])
    plan = sim.SimPlan(
        bm, used, n_s, n_p, sim.parse_snr_range(args.snr),
        max_frames=args.max_frames, min_frame_errors=args.min_fe, seed=args.seed,
        max_iter=args.max_iter, batch=args.batch, noiseless=args.noiseless,
        threads=args.threads,
    )
    logging.getLogger(__name__).info(
        "N=%d transmitted bits, R_tx=%s", sched.n_tx, sched.rate_tx
    )
    points = sim.run_sim(plan)
    _write(sim.to_csv(points), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpc-prune", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $LDPC_PRUNE_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, z=False):
        p.add_argument("--in", dest="inp", required=True, help="base-matrix file")
        p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        if z:
            p.add_argument("--z", type=int, help="rescale shifts to this lifting factor")

    def pattern_opts(p):
        p.add_argument("--shorten", help="comma-separated 1-based columns")
        p.add_argument("--puncture", help="comma-separated 1-based columns")

    p = sub.add_parser("show", help="print dimensions and degree profile")
    common(p, z=True)
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("lift", help="export the lifted matrix as alist")
    common(p, z=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("threshold", help="PEXIT threshold of a pruned base matrix")
    common(p)
    pattern_opts(p)
    p.add_argument("--pattern", help="pattern JSON file")
    p.add_argument("--rate-override", help="rate for Eb/N0 normalisation, e.g. 1/2")
    p.add_argument("--lo", type=float, default=pexit.DEFAULT_BRACKET[0])
    p.add_argument("--hi", type=float, default=pexit.DEFAULT_BRACKET[1])
    p.add_argument("--max-iter", type=int, default=pexit.DEFAULT_MAX_ITER)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("optimize", help="beam search for a joint pruning pattern")
    common(p)
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--beam", type=int, default=8)
    p.add_argument("--out")
    p.add_argument("--log", help="stage log CSV (default: <out>.stages.csv)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo BER/FER sweep")
    common(p, z=True)
    pattern_opts(p)
    p.add_argument("--pattern", help="pattern JSON file")
    p.add_argument("--alpha", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--ns", type=int, help="shortened bits (overrides alpha)")
    p.add_argument("--np", type=int, help="punctured bits (overrides beta)")
    p.add_argument("--snr", required=True, help="start:step:stop in dB Eb/N0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-fe", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=1_000_000)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError, CliError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
