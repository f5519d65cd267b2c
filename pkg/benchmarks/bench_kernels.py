"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Each kernel runs on identical inputs in both backends; the table reports
the best wall time of ``--repeat`` runs and the speedup. The pure-Python
backend is slow by design, so the default sizes are modest.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from splat import _backend
from splat.assignment import WeightParams
from splat.decimation import walksat as run_walksat
from splat.formula import random_ksat
from splat.gibbs import _Chain
from splat.mrf_bp import bp_init
from splat.sp import sp_init


def _csr(f):
    g = f.graph
    return f.clause_ptr, f.edge_var, f.edge_sign, f.edge_clause, g.var_ptr, g.var_edges


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n: int):
    """(name, setup) pairs; ``setup(mod)`` returns a zero-argument callable."""
    f = random_ksat(n, 3, 4.2, 0)
    cp, ev, es, ec, vp, ve = _csr(f)

    def sp(mod):
        m = sp_init(f, 1, 0.95)
        return lambda: mod.sp_sweep(cp, ev, es, vp, ve, m.order, m.eta.copy(), m.eta_c.copy(), m.pi.copy(), 0.95, False)

    def bp(mod):
        w = WeightParams(0.05, 0.95)
        m = bp_init(f, w, 1)
        return lambda: mod.bp_sweep(cp, ev, es, vp, ve, m.order, m.eta.copy(), m.r.copy(), 0.05, 0.95)

    def walksat(mod):
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, f.n).astype(np.int8)
        truecnt = np.add.reduceat((x[ev] != es).astype(np.int64), cp[:-1]).astype(np.int64)
        ids = np.nonzero(truecnt == 0)[0]
        unsat = np.full(f.m, -1, dtype=np.int64)
        unsat[: len(ids)] = ids
        pos = np.full(f.m, -1, dtype=np.int64)
        pos[ids] = np.arange(len(ids))
        rand = rng.random((20 * n, 3))

        def run():
            mod.walksat_chunk(cp, ev, es, ec, vp, ve, x.copy(), truecnt.copy(), unsat.copy(), pos.copy(),
                              np.array([len(ids)], dtype=np.int64), rand, 0.5)

        return run

    def gibbs(mod):
        w = WeightParams(0.5, 0.5)
        rand = np.random.default_rng(0).random((20 * n, 2))

        def run():
            ch = _Chain(f, w, False)
            mod.gibbs_chunk(cp, ev, es, ec, vp, ve, ch.x, ch.nsat, ch.nstar, ch.satsum, ch.ucount, rand,
                            0, 0, 0.5, 0.5, ch.last, ch.occ, ch.hist, ch.code, ch.pow3)

        return run

    easy = random_ksat(n, 3, 3.0, 0)
    x = run_walksat(easy, seed=0, max_flips=10**7).assignment
    ecp, eev, ees, eec, evp, eve = _csr(easy)
    rand = np.random.default_rng(0).random(n)

    def peel(mod):
        def run():
            mod.peel(ecp, eev, ees, eec, evp, eve, x.copy(), np.ones(n, dtype=np.uint8), rand,
                     np.zeros(n + 1, dtype=np.int64), np.zeros(n + 1, dtype=np.int64))

        return run

    return [("sp_sweep", sp), ("bp_sweep", bp), ("walksat 20n flips", walksat), ("gibbs 20n steps", gibbs),
            ("peel", peel)]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = _backend.available_backends()
    mods = {name: _backend.get_kernels(name) for name in names}
    print(f"n={args.n}, alpha=4.2 (peel: a solution at alpha=3.0), best of {args.repeat}; backends: {', '.join(names)}")
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name in names) + ("  speedup" if len(names) == 2 else ""))
    for label, setup in cases(args.n):
        times = [_best(setup(mods[name]), args.repeat) for name in names]
        row = f"{label:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>6.1f}x"
        print(row, flush=True)


if __name__ == "__main__":
    main()
