"""``splat`` command line: gen, solve, peel, gibbs, compare, verify.

Exit codes: 0 success (verify: every property passed), 1 I/O error,
2 usage error, 10 satisfiable (solve), 20 failure (solve failed, a peel
run had no assignment, SP did not converge in compare, or a verify
property failed).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from splat.assignment import WeightParams, read_assignment, save_assignment
from splat.decimation import SolverConfig, solve
from splat.formula import DimacsError, random_ksat, read_dimacs, save_dimacs, write_dimacs
from splat.gibbs import compare_topk, gibbs_run, write_comparison_csv, write_tau_csv
from splat.peeling import peel_to_core, write_trace_csv
from splat.sp import sp_run
from splat.suites import SUITES, run_suite

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_SAT = 10
EXIT_FAIL = 20

log = logging.getLogger("splat")


class UsageError(Exception):
    pass


def _unit(name: str, lo: float = 0.0, hi: float = 1.0):
    def parse(text: str) -> float:
        v = float(text)
        if not lo <= v <= hi:
            raise argparse.ArgumentTypeError(f"{name} must be in [{lo}, {hi}]")
        return v

    return parse


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# ------------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    f = random_ksat(args.n, args.k, args.alpha, args.seed)
    comments = [f"random {args.k}-SAT n={args.n} alpha={args.alpha} seed={args.seed}"]
    if args.output:
        save_dimacs(f, args.output, comments)
    else:
        sys.stdout.write(write_dimacs(f, comments))
    return EXIT_OK


# ----------------------------------------------------------------- solve


def _solver_config(args, seed) -> SolverConfig:
    try:
        return SolverConfig(
            rho=args.rho, beta=args.beta, bias_tol=args.bias_tol, sp_tol=args.tol,
            max_sweeps=args.max_sweeps, restarts=args.restarts, noise=args.noise,
            walksat_flips=args.walksat_flips, seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_solve(args) -> int:
    f = read_dimacs(args.formula)
    cfg = _solver_config(args, args.seed)
    t0 = time.perf_counter()
    rep = solve(f, cfg)
    text = rep.to_text() + f"seconds {time.perf_counter() - t0:.3f}\n"
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    if rep.sat:
        out = args.output or f"{args.formula}.sol"
        save_assignment(rep.assignment, out)
        return EXIT_SAT
    return EXIT_FAIL


# ------------------------------------------------------------------ peel


def _peel_job(job):
    f, x, cfg, seed = job
    if x is None:
        rep = solve(f, cfg)
        if not rep.sat:
            return None, rep.status.value
        x = rep.assignment
    return peel_to_core(f, x, seed), "ok"


def _run_path(base: Path, r: int) -> Path:
    return base.with_name(f"{base.stem}.run{r}{base.suffix or '.csv'}")


def cmd_peel(args) -> int:
    f = read_dimacs(args.formula)
    x = read_assignment(args.assignment) if args.assignment else None
    cfg = _solver_config(args, args.seed) if args.solve_first else None
    jobs = []
    for r in range(args.runs):
        run_cfg = None
        if cfg is not None:
            # each run solves with its own seed, so runs start from different solutions
            run_cfg = _solver_config(args, args.seed + r)
        jobs.append((f, x, run_cfg, args.seed + r))
    results = _map(_peel_job, jobs, args.jobs)
    base = Path(args.output)
    failed = 0
    with open(base, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["run", "stars", "unconstrained"])
        for r, (res, status) in enumerate(results):
            if res is None:
                failed += 1
                print(f"run {r} no-assignment {status}")
                continue
            write_trace_csv(res.trace, _run_path(base, r))
            for s, u in res.trace.rows():
                wr.writerow([r, s, u])
            n_core = int(np.sum(res.core != 2))
            print(f"run {r} steps {len(res.trace) - 1} trivial {'yes' if res.trivial else 'no'} core_nonstar {n_core}")
    return EXIT_FAIL if failed else EXIT_OK


# ----------------------------------------------------------------- gibbs


def cmd_gibbs(args) -> int:
    f = read_dimacs(args.formula)
    res = gibbs_run(f, WeightParams.from_rho(args.rho), args.steps, args.burn_in, args.seed)
    write_tau_csv(res, args.output)
    print(f"steps {res.steps} burn_in {res.burn_in} mean_bias {float(res.bias.mean()):.6f}")
    return EXIT_OK


# --------------------------------------------------------------- compare


def _compare_job(job):
    f, sp_rho, gibbs_rho, topk, steps, seed, tol, max_sweeps = job
    sp = sp_run(f, sp_rho, tol, max_sweeps, seed=seed, shuffle=np.random.default_rng(seed))
    if not sp.converged:
        return sp_rho, gibbs_rho, None
    res = gibbs_run(f, WeightParams.from_rho(gibbs_rho), steps, None, seed)
    return sp_rho, gibbs_rho, compare_topk(sp.fields, res.tau, topk)


def cmd_compare(args) -> int:
    f = read_dimacs(args.formula)
    if args.topk > f.n:
        raise UsageError(f"--topk {args.topk} exceeds n={f.n}")
    jobs = [
        (f, sr, gr, args.topk, args.steps, args.seed, args.tol, args.max_sweeps)
        for sr in args.sp_rho
        for gr in args.gibbs_rho
    ]
    results = _map(_compare_job, jobs, args.jobs)
    alpha = f.m / f.n
    rows = []
    failed = False
    for sr, gr, err in results:
        if err is None:
            failed = True
            print(f"sp_rho {sr} gibbs_rho {gr} sp-nonconvergence")
            continue
        rows.append((alpha, sr, gr, err))
        print(f"sp_rho {sr} gibbs_rho {gr} l1_topk {err:.6f}")
    write_comparison_csv(rows, args.output)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    ok = True
    for suite in args.suite:
        t0 = time.perf_counter()
        res = run_suite(suite, args.trials, args.seed, args.jobs)
        for line in res.lines():
            print(line)
        print(f"{suite} {'passed' if res.passed else 'failed'} in {time.perf_counter() - t0:.1f}s")
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--rho", type=_unit("rho"), default=d.rho)
    p.add_argument("--beta", type=_unit("beta"), default=d.beta, help="fraction of unset variables fixed per round")
    p.add_argument("--bias-tol", type=float, default=d.bias_tol)
    p.add_argument("--tol", type=float, default=d.sp_tol, help="SP convergence tolerance")
    p.add_argument("--max-sweeps", type=_positive_int, default=d.max_sweeps)
    p.add_argument("--restarts", type=_nonneg_int, default=d.restarts)
    p.add_argument("--walksat-flips", type=_nonneg_int, default=None,
                   help=f"default: {d.flips_scale} * remaining / n")
    p.add_argument("--noise", type=_unit("noise"), default=d.noise)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splat", description="SP(rho) solver and experiment suite for k-SAT.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="random k-SAT formula in DIMACS format")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="survey-inspired decimation plus WalkSAT")
    p.add_argument("formula")
    _add_solver_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="assignment file (default: FORMULA.sol)")
    p.add_argument("--report", help="also write the report here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("peel", help="peeling traces from satisfying assignments")
    p.add_argument("formula")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--assignment")
    src.add_argument("--solve-first", action="store_true")
    _add_solver_flags(p)
    p.add_argument("--runs", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("-o", "--output", required=True, help="combined CSV; per-run files go next to it")
    p.set_defaults(func=cmd_peel)

    p = sub.add_parser("gibbs", help="Gibbs occupancy estimates on the weighted MRF")
    p.add_argument("formula")
    p.add_argument("--rho", type=_unit("rho"), default=0.5)
    p.add_argument("--steps", type=_positive_int, default=None, help="default: 10^4 * n")
    p.add_argument("--burn-in", type=_nonneg_int, default=None, help="default: steps / 5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("compare", help="SP(rho) biases against Gibbs biases on the top-k variables")
    p.add_argument("formula")
    p.add_argument("--sp-rho", type=_unit("sp-rho"), nargs="+", default=[0.9])
    p.add_argument("--gibbs-rho", type=_unit("gibbs-rho"), nargs="+", default=[0.5, 0.9])
    p.add_argument("--topk", type=_positive_int, default=50)
    p.add_argument("--steps", type=_positive_int, default=None, help="Gibbs steps (default: 10^4 * n)")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-sweeps", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="randomized checks against brute-force references")
    p.add_argument("--suite", choices=sorted(SUITES), nargs="+", required=True)
    p.add_argument("--trials", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SPLAT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (OSError, DimacsError) as exc:
        print(f"splat: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"splat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
