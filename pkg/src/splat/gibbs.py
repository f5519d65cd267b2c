"""Single-site Gibbs sampling of p_W over valid partial assignments.

The chain starts at all-``*`` (valid for every formula with clause width
at least 2), picks a site uniformly, and redraws it from its conditional
distribution over {0, 1, *}. Per-clause counts (satisfying literals,
stars, sum of satisfying variable ids) and per-variable counts of clauses
having the variable as unique satisfier are maintained incrementally, so
a step costs O(degree * width).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from splat._backend import kernels as _k
from splat.assignment import (
    STAR,
    InvalidAssignmentError,
    WeightParams,
    _clause_counts,
    as_assignment,
    classify,
    invalid_clauses,
)
from splat.formula import Formula
from splat.sp import BiasField

_CHUNK = 1 << 16
MAX_HIST_N = 14


def _status_factor(report, j: int, x: np.ndarray, w: WeightParams) -> float:
    if x[j] == STAR:
        return w.omega_star
    return 1.0 if report.parents[j] else w.omega_o


def conditional_weights(f: Formula, x, i: int, w: WeightParams) -> np.ndarray:
    """Unnormalized p_W(x_i = b | rest) for b = 0, 1, * by direct recomputation.

    Zero where setting x_i = b invalidates a clause of i; otherwise the
    product of status weights over i and the variables sharing a clause
    with i.
    """
    x = as_assignment(x, f.n)
    if len(invalid_clauses(f, x)):
        raise InvalidAssignmentError("conditional weights need a valid assignment")
    hood = [i] + f.graph.variable_neighbors(i)
    out = np.zeros(3)
    for b in range(3):
        y = x.copy()
        y[i] = b
        try:
            rep = classify(f, y)
        except InvalidAssignmentError:
            continue
        wb = 1.0
        for j in hood:
            wb *= _status_factor(rep, j, y, w)
        out[b] = wb
    return out


@dataclass
class GibbsResult:
    tau: np.ndarray  # (n, 3) occupancy frequencies of 0, 1, * after burn-in
    steps: int
    burn_in: int
    x: np.ndarray  # final state
    state_counts: np.ndarray | None = None  # base-3 state histogram after burn-in

    @property
    def bias(self) -> np.ndarray:
        return np.abs(self.tau[:, 0] - self.tau[:, 1])


class _Chain:
    """Mutable chain state plus the kernel's incremental caches."""

    def __init__(self, f: Formula, w: WeightParams, record_states: bool):
        self.f = f
        self.w = w
        n = f.n
        self.x = np.full(n, STAR, dtype=np.int8)
        self.nsat = np.zeros(f.m, dtype=np.int64)
        self.nstar = f.widths.astype(np.int64).copy()
        self.satsum = np.zeros(f.m, dtype=np.int64)
        self.ucount = np.zeros(n, dtype=np.int64)
        self.last = np.zeros(n, dtype=np.int64)
        self.occ = np.zeros((n, 3), dtype=np.int64)
        if record_states:
            if n > MAX_HIST_N:
                raise ValueError(f"state histogram needs n <= {MAX_HIST_N}")
            self.pow3 = 3 ** np.arange(n, dtype=np.int64)
            self.hist = np.zeros(3**n, dtype=np.int64)
        else:
            self.pow3 = np.zeros(n, dtype=np.int64)
            self.hist = np.zeros(0, dtype=np.int64)
        self.code = np.array([int(np.dot(self.pow3, self.x.astype(np.int64)))], dtype=np.int64)
        self.t = 0

    def reset(self, x: np.ndarray) -> None:
        """Move to a given valid state and rebuild the caches."""
        f = self.f
        if len(invalid_clauses(f, x)):
            raise InvalidAssignmentError("the chain must start at a valid assignment")
        self.x[:] = x
        nsat, nstar, satsum = _clause_counts(f, self.x)
        self.nsat[:] = nsat
        self.nstar[:] = nstar
        self.satsum[:] = satsum
        self.ucount[:] = [len(p) for p in classify(f, self.x).parents]
        self.code[0] = int(np.dot(self.pow3, self.x.astype(np.int64)))

    def run(self, rand: np.ndarray, burn_in: int) -> None:
        f, g = self.f, self.f.graph
        ret = _k.gibbs_chunk(
            f.clause_ptr, f.edge_var, f.edge_sign, f.edge_clause, g.var_ptr, g.var_edges,
            self.x, self.nsat, self.nstar, self.satsum, self.ucount, rand,
            self.t, burn_in, float(self.w.omega_o), float(self.w.omega_star),
            self.last, self.occ, self.hist, self.code, self.pow3,
        )
        if ret < 0:
            raise ValueError(f"all conditional weights vanish at site {-1 - ret}; the state has zero weight")
        self.t += len(rand)

    def check(self) -> None:
        """Compare caches with a full recomputation."""
        f = self.f
        if len(invalid_clauses(f, self.x)):
            raise AssertionError(f"chain left the valid set at step {self.t}")
        nsat, nstar, satsum = _clause_counts(f, self.x)
        if not (np.array_equal(nsat, self.nsat) and np.array_equal(nstar, self.nstar)):
            raise AssertionError(f"clause caches diverged at step {self.t}")
        if not np.array_equal(satsum, self.satsum):
            raise AssertionError(f"satisfier sums diverged at step {self.t}")
        rep = classify(f, self.x)
        uc = np.array([len(p) for p in rep.parents], dtype=np.int64)
        if not np.array_equal(uc, self.ucount):
            raise AssertionError(f"parent counts diverged at step {self.t}")

    def flush(self, steps: int, burn_in: int) -> None:
        lo = np.maximum(self.last, burn_in)
        held = np.maximum(steps - lo, 0)
        self.occ[np.arange(self.f.n), self.x] += held
        self.last[:] = steps


def gibbs_run(
    f: Formula,
    w: WeightParams,
    steps: int | None = None,
    burn_in: int | None = None,
    seed=None,
    record_states: bool = False,
    debug: bool = False,
    check_every: int = 1000,
    x0=None,
) -> GibbsResult:
    """Run the chain and estimate per-variable occupancies after burn-in.

    Defaults: ``steps = 10**4 * n`` and ``burn_in = steps // 5``. With
    ``debug`` the caches are checked against a full recomputation every
    ``check_every`` steps. ``x0`` replaces the all-``*`` start state.
    """
    if x0 is None and f.m and f.widths.min() < 2:
        raise ValueError("the all-* start state needs clause width >= 2")
    if steps is None:
        steps = 10_000 * max(f.n, 1)
    if burn_in is None:
        burn_in = steps // 5
    if not steps > burn_in >= 0:
        raise ValueError("need steps > burn_in >= 0")
    rng = np.random.default_rng(seed)
    chain = _Chain(f, w, record_states)
    if x0 is not None:
        chain.reset(as_assignment(x0, f.n))
    chunk = check_every if debug else _CHUNK
    while chain.t < steps:
        rows = min(chunk, steps - chain.t)
        chain.run(rng.random((rows, 2)), burn_in)
        if debug:
            chain.check()
    chain.flush(steps, burn_in)
    tau = chain.occ / float(steps - burn_in)
    return GibbsResult(tau, steps, burn_in, chain.x.copy(), chain.hist if record_states else None)


def kernel_step(f: Formula, w: WeightParams, x, site: int, u: float) -> np.ndarray:
    """One kernel step from ``x`` at a given site, with value uniform ``u``.

    The new value is the first b whose cumulative conditional weight
    exceeds ``u`` times the total; used to probe the kernel against
    ``conditional_weights``.
    """
    chain = _Chain(f, w, False)
    chain.reset(as_assignment(x, f.n))
    chain.run(np.array([[(site + 0.5) / f.n, u]]), 0)
    return chain.x.copy()


def compare_topk(sp_fields: BiasField | np.ndarray, tau: np.ndarray, k: int = 50) -> float:
    """Mean |(mu0 - mu1) - (tau0 - tau1)| over the k variables of largest SP bias."""
    mu = sp_fields.mu if isinstance(sp_fields, BiasField) else np.asarray(sp_fields)
    tau = np.asarray(tau)
    if not 0 < k <= len(mu):
        raise ValueError(f"k={k} outside (0, {len(mu)}]")
    sp_signed = mu[:, 0] - mu[:, 1]
    top = np.argsort(-np.abs(sp_signed), kind="stable")[:k]
    return float(np.mean(np.abs(sp_signed[top] - (tau[top, 0] - tau[top, 1]))))


def write_tau_csv(res: GibbsResult, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["var", "tau0", "tau1", "taustar", "bias"])
        for i, (a, b, c) in enumerate(res.tau.tolist()):
            wr.writerow([i, repr(a), repr(b), repr(c), repr(abs(a - b))])


def write_comparison_csv(rows, path) -> None:
    """``rows``: iterable of (alpha, sp_rho, gibbs_rho, l1_topk)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["alpha", "sp_rho", "gibbs_rho", "l1_topk"])
        for r in rows:
            wr.writerow([repr(float(v)) for v in r])
