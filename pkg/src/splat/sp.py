"""SP(rho) message passing: clause-to-variable surveys and bias fields.

``eta[e]`` is the survey sent along edge ``e`` from its clause to its
variable and ``eta_c[e]`` its complement ``1 - eta[e]``, tracked
separately so that surveys close to 1 keep a precise complement.
``pi[e]`` holds the variable-to-clause triplet
``(Pi^u, Pi^s, Pi^*)`` last used to update the clause of ``e``.

Sweeps are Gauss-Seidel over clauses in ``order``: for each clause the
incoming triplets are refreshed from the current surveys and the
outgoing surveys are recomputed immediately, so later clauses in the
same sweep already see them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from splat._backend import kernels as _k
from splat.assignment import STAR, InvalidAssignmentError, as_assignment, invalid_clauses
from splat.formula import Formula


class ZeroDenominatorError(ArithmeticError):
    """A normalizing sum vanished; ``edge`` (or ``var``) identifies where."""

    def __init__(self, msg: str, edge: int | None = None, var: int | None = None):
        super().__init__(msg)
        self.edge = edge
        self.var = var


@dataclass
class SpMessages:
    eta: np.ndarray  # (E,)
    eta_c: np.ndarray  # (E,) 1 - eta
    pi: np.ndarray  # (E, 3) columns U, S, STAR
    order: np.ndarray  # clause permutation used by every sweep

    def copy(self) -> "SpMessages":
        return SpMessages(self.eta.copy(), self.eta_c.copy(), self.pi.copy(), self.order.copy())

    def set_eta(self, eta: np.ndarray) -> None:
        self.eta[:] = eta
        self.eta_c[:] = 1.0 - self.eta


@dataclass(frozen=True)
class BiasField:
    mu: np.ndarray  # (n, 3): mu(0), mu(1), mu(*)

    @property
    def bias(self) -> np.ndarray:
        return np.abs(self.mu[:, 0] - self.mu[:, 1])

    @property
    def signed(self) -> np.ndarray:
        return self.mu[:, 0] - self.mu[:, 1]


@dataclass(frozen=True)
class SweepStats:
    max_delta: float
    bound_violations: int
    worst_excess: float


@dataclass
class SpResult:
    converged: bool
    sweeps: int
    fields: BiasField
    messages: SpMessages
    bound_violations: int = 0
    worst_excess: float = 0.0


def excluded_products(f: Formula, fac: np.ndarray):
    """Per edge p on variable j: products of ``fac`` over the other edges of j,
    split into same-sign (agree) and opposite-sign (disagree) groups."""
    key = f.edge_var * 2 + f.edge_sign.astype(np.int64)
    zero = fac == 0.0
    prod = np.ones(2 * f.n)
    np.multiply.at(prod, key[~zero], fac[~zero])
    nz = np.bincount(key[zero], minlength=2 * f.n)
    own_prod = np.where(zero, prod[key], prod[key] / np.where(zero, 1.0, fac))
    own_nz = nz[key] - zero
    agree = np.where(own_nz > 0, 0.0, own_prod)
    okey = key ^ 1
    disagree = np.where(nz[okey] > 0, 0.0, prod[okey])
    return agree, disagree


def pi_from_eta(f: Formula, eta: np.ndarray, rho: float, eta_c: np.ndarray | None = None) -> np.ndarray:
    """Variable-to-clause triplets for every edge from the surveys ``eta``."""
    ps, pu = excluded_products(f, 1.0 - eta if eta_c is None else eta_c)
    pi = np.empty((f.num_edges, 3))
    pi[:, 0] = (1.0 - rho * pu) * ps
    pi[:, 1] = (1.0 - ps) * pu
    pi[:, 2] = ps * pu
    return pi


def sp_init(f: Formula, seed=None, rho: float = 1.0, eta: np.ndarray | None = None) -> SpMessages:
    """Random surveys in (0, 1) and a seed-determined clause order.

    ``eta`` overrides the random surveys (the order is still drawn from
    ``seed``).
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(f.m).astype(np.int64)
    if eta is None:
        eta = rng.random(f.num_edges)
        eta[eta == 0.0] = 0.5
    else:
        eta = np.array(eta, dtype=np.float64)
        if eta.shape != (f.num_edges,):
            raise ValueError(f"eta has shape {eta.shape}, expected ({f.num_edges},)")
    return SpMessages(eta, 1.0 - eta, pi_from_eta(f, eta, rho), order)


def _sweep(f: Formula, msgs: SpMessages, rho: float, check_bound: bool) -> SweepStats:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho={rho} outside [0, 1]")
    g = f.graph
    delta, viol, worst, zero_edge = _k.sp_sweep(
        f.clause_ptr, f.edge_var, f.edge_sign, g.var_ptr, g.var_edges, msgs.order,
        msgs.eta, msgs.eta_c, msgs.pi, float(rho), bool(check_bound),
    )
    if zero_edge >= 0:
        a = int(f.edge_clause[zero_edge])
        v = int(f.edge_var[zero_edge])
        raise ZeroDenominatorError(
            f"Pi^u + Pi^s + Pi^* = 0 on edge {zero_edge} (variable {v} -> clause {a})", edge=int(zero_edge)
        )
    return SweepStats(float(delta), int(viol), float(worst))


def sp_sweep(f: Formula, msgs: SpMessages, rho: float) -> tuple[SpMessages, float]:
    """One in-place sweep; returns the messages and max |eta_new - eta_old|."""
    return msgs, _sweep(f, msgs, rho, False).max_delta


def sp_sweep_checked(f: Formula, msgs: SpMessages, rho: float) -> SweepStats:
    """Sweep and test every new survey against the product bound
    ``prod_j min(1, (1 - rho) + rho * sum_{b in C^u_a(j)} eta_{b->j})``
    evaluated on the surveys used for that update."""
    return _sweep(f, msgs, rho, True)


def _segment_products(values: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Product of ``values[ptr[i]:ptr[i+1]]`` for each i; empty segments give 1."""
    n = len(ptr) - 1
    out = np.ones(n)
    nonempty = ptr[1:] > ptr[:-1]
    if len(values) and nonempty.any():
        out[nonempty] = np.multiply.reduceat(values, ptr[:-1][nonempty])
    return out


def sp_fields(f: Formula, eta: np.ndarray, rho: float, eta_c: np.ndarray | None = None) -> BiasField:
    """Normalized (mu(0), mu(1), mu(*)) per variable from the surveys."""
    g = f.graph
    fac = (1.0 - eta if eta_c is None else eta_c)[g.var_edges]
    sign = f.edge_sign[g.var_edges]
    p_plus = _segment_products(np.where(sign == 0, fac, 1.0), g.var_ptr)
    p_minus = _segment_products(np.where(sign == 1, fac, 1.0), g.var_ptr)
    mu = np.empty((f.n, 3))
    mu[:, 0] = (1.0 - rho * p_minus) * p_plus
    mu[:, 1] = (1.0 - rho * p_plus) * p_minus
    mu[:, 2] = p_plus * p_minus
    tot = mu.sum(axis=1)
    bad = np.nonzero(tot <= 0.0)[0]
    if len(bad):
        raise ZeroDenominatorError(f"field of variable {bad[0]} vanishes", var=int(bad[0]))
    return BiasField(mu / tot[:, None])


def sp_run(
    f: Formula,
    rho: float,
    tol: float = 1e-3,
    max_sweeps: int = 1000,
    seed=None,
    msgs: SpMessages | None = None,
    check_bound: bool = False,
    damping: float = 0.0,
    shuffle=None,
) -> SpResult:
    """Sweep until the largest survey change drops below ``tol``.

    ``msgs`` warm-starts from existing messages (modified in place).
    ``damping`` mixes the previous sweep's surveys back in (off by default).
    ``shuffle``, a numpy Generator, redraws the clause order before every
    sweep; by default the order in ``msgs`` is kept fixed.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must be in [0, 1)")
    if msgs is None:
        msgs = sp_init(f, seed, rho)
    converged = False
    sweeps = 0
    viol = 0
    worst = 0.0
    while sweeps < max_sweeps:
        prev = msgs.eta.copy() if damping else None
        if shuffle is not None:
            msgs.order = shuffle.permutation(f.m).astype(np.int64)
        st = _sweep(f, msgs, rho, check_bound)
        sweeps += 1
        viol += st.bound_violations
        worst = max(worst, st.worst_excess)
        delta = st.max_delta
        if damping:
            msgs.set_eta((1.0 - damping) * msgs.eta + damping * prev)
            delta = float(np.max(np.abs(msgs.eta - prev), initial=0.0))
        if delta < tol:
            converged = True
            break
    return SpResult(converged, sweeps, sp_fields(f, msgs.eta, rho, msgs.eta_c), msgs, viol, worst)


@dataclass
class CoreFixedPoint:
    fields: BiasField
    core: np.ndarray
    sweeps: int
    converged: bool


def sp_fixed_point_from_assignment(f: Formula, x, max_sweeps: int = 10_000, seed=0) -> CoreFixedPoint:
    """SP(1) started from the indicator messages of a valid partial assignment.

    Initial triplets: ``Pi^u = [x_i = J]``, ``Pi^s = [x_i = 1 - J]`` and
    ``Pi^* = [x_i = *]`` (a star variable needs unit star mass, otherwise
    its triplet would sum to zero). Sweeps run until no survey changes.
    ``core`` reads the fields: ``b`` where ``mu(b) = 1``; variables whose
    field is not an indicator are reported as ``-1``.
    """
    x = as_assignment(x, f.n)
    bad = invalid_clauses(f, x)
    if len(bad):
        raise InvalidAssignmentError(f"assignment invalid for clauses {bad[:10].tolist()}")
    xv = x[f.edge_var]
    star = xv == STAR
    # per-edge Pi^u / (Pi^u + Pi^s + Pi^*) is 1 exactly when the variable is set to J
    unsat = ((~star) & (xv == f.edge_sign)).astype(np.float64)
    eta = _clause_products_excluding(f, unsat)
    msgs = sp_init(f, seed, 1.0, eta=eta)
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        _, delta = sp_sweep(f, msgs, 1.0)
        sweeps += 1
        if delta == 0.0:
            converged = True
            break
    fields = sp_fields(f, msgs.eta, 1.0, msgs.eta_c)
    core = np.full(f.n, -1, dtype=np.int8)
    for b in range(3):
        core[fields.mu[:, b] == 1.0] = b
    return CoreFixedPoint(fields, core, sweeps, converged)


def _clause_products_excluding(f: Formula, r: np.ndarray) -> np.ndarray:
    """For every edge p in clause a: product of r over the other edges of a."""
    out = np.empty(f.num_edges)
    ptr = f.clause_ptr.tolist()
    rl = r.tolist()
    for a in range(f.m):
        s, e = ptr[a], ptr[a + 1]
        for p in range(s, e):
            prod = 1.0
            for q in range(s, e):
                if q != p:
                    prod *= rl[q]
            out[p] = prod
    return out


def metastability_probe(f: Formula, rho: float, eps: float, t_max: int, seed=None) -> np.ndarray:
    """Max survey after each of ``t_max`` sweeps from surveys uniform on (0, eps)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must be in (0, 1]")
    rng = np.random.default_rng(seed)
    eta = eps * rng.random(f.num_edges)
    eta[eta == 0.0] = 0.5 * eps
    msgs = sp_init(f, rng, rho, eta=eta)
    traj = np.empty(t_max)
    for t in range(t_max):
        sp_sweep(f, msgs, rho)
        traj[t] = msgs.eta.max(initial=0.0)
    return traj


def default_probe_length(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def write_fields_csv(fields: BiasField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["var", "mu0", "mu1", "mustar", "bias"])
        for i, (m0, m1, ms) in enumerate(fields.mu.tolist()):
            w.writerow([i, repr(m0), repr(m1), repr(ms), repr(abs(m0 - m1))])
