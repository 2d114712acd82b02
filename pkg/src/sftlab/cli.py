"""Command-line entry point: ``sftlab <command> [options]``.

Exit status: 0 on success, 2 when a checked invariant fails, 1 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from . import __version__, experiments
from .errors import InvariantViolation, SftLabError

THREADS_ENV = "SFTLAB_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sftlab", description="Experiments on two-dimensional shifts of finite type.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--threads", type=int, default=None, help=f"worker cap (default ${THREADS_ENV} or 1)")
        return p

    p = add("entropy", "finite-size and strip upper bounds for a Widom-Rowlinson shift")
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--N", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--w", type=_int_list, default=[1, 2])
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--csv", default=None, help="also write the bounds as CSV")

    p = add("wr-sample", "heat-bath sampling under a boundary condition")
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--boundary", choices=("plus", "minus", "free"), default="plus")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--trace", default=None, help="per-sweep CSV of the first chain")

    p = add("wr-peierls", "Peierls constant alpha and its validity regime")
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--d", type=int, default=2)

    p = add("wr-verify", "exhaustive checks of contours, moats and the flip map")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--vx", type=int, default=0)
    p.add_argument("--vy", type=int, default=0)

    p = add("hochman-gen", "build the level-n square of X_k")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="random blank labels; default all 1")

    p = add("hochman-alpha", "level-n corner densities in P_K (CSV when --out ends in .csv)")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--max-k", type=int, required=True)

    p = add("ymn-entropy", "exact window counts for the corner-labelled shifts")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, default=None, help="generation level (default: smallest fitting, at least n+2)")

    p = add("factor-decompose", "split a sliding block code through Y_{m,2n} and check it")
    p.add_argument("--code", choices=("parity", "collapse", "identity", "sw-parity"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--window-radius", type=int, default=50)
    p.add_argument("--windows", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)

    p = add("animals", "lattice animal and enclosing-contour census")
    p.add_argument("--n", type=int, required=True)
    return ap


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _dispatch(args, threads):
    c = args.command
    if c == "entropy":
        return experiments.run_entropy(args.r1, args.r2, args.N, args.w, args.tol, threads, args.csv)
    if c == "wr-sample":
        return experiments.run_wr_sample(args.r1, args.r2, args.k, args.sweeps, args.chains, args.seed,
                                         args.boundary, args.burn_in, threads, args.trace)
    if c == "wr-peierls":
        return experiments.run_wr_peierls(args.r1, args.r2, args.d)
    if c == "wr-verify":
        return experiments.run_wr_verify(args.k, args.r1, args.r2, (args.vx, args.vy))
    if c == "hochman-gen":
        return experiments.run_hochman_gen(args.level, args.k, args.seed)
    if c == "hochman-alpha":
        return experiments.run_hochman_alpha(args.level, args.max_k)
    if c == "ymn-entropy":
        return experiments.run_ymn_entropy(args.m, args.n, args.N, args.K)
    if c == "factor-decompose":
        return experiments.run_factor_decompose(args.code, args.k, args.n, args.window_radius, args.seed, args.windows)
    if c == "animals":
        return experiments.run_animals(args.n)
    raise UsageError(f"unknown command {c!r}")


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "threads")}
    return cfg


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"sftlab: error: {exc}", file=sys.stderr)
        return 1
    threads = _threads(args)
    start = time.perf_counter()
    try:
        results = _dispatch(args, threads)
    except InvariantViolation as exc:
        print(f"sftlab: invariant violated: {exc.name}: {exc.detail}", file=sys.stderr)
        return 2
    except (UsageError, SftLabError, ValueError) as exc:
        print(f"sftlab: error: {exc}", file=sys.stderr)
        return 1
    runtime_ms = round((time.perf_counter() - start) * 1000, 3)

    if args.command == "hochman-alpha" and args.out.endswith(".csv"):
        with open(args.out, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=list(results[0].keys()))
            wr.writeheader()
            wr.writerows(results)
        return 0
    if args.command == "hochman-alpha":
        results = experiments.label_alpha_rows(results)
    report = {
        "config": _config(args),
        "results": results,
        "provenance": {"version": __version__, "seed": getattr(args, "seed", None), "runtime_ms": runtime_ms},
    }
    _write(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
