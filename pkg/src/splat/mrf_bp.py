"""Belief propagation on the extended MRF over (x, P), in triplet form.

Clause-to-variable messages ``eta[e] = (eta^u, eta^s, eta^*)`` are kept
normalized to sum 1. Variable-to-clause messages ``r[e] = (R^u, R^s, R^*)``
are unnormalized. Both use columns ``U, S, STAR = 0, 1, 2``.

With ``omega_o + omega_star = 1`` and ``eta^u = eta^*`` initially, these
updates reproduce SP(omega_star) under ``eta_SP = eta^s / (eta^s + eta^u)``;
:func:`reduction_check` runs both in lockstep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from splat._backend import kernels as _k
from splat.assignment import WeightParams
from splat.formula import Formula
from splat.sp import ZeroDenominatorError, _segment_products, excluded_products, sp_init, sp_sweep_checked

U, S, STAR = 0, 1, 2


@dataclass
class BpMessages:
    eta: np.ndarray  # (E, 3) clause -> variable, rows sum to 1
    r: np.ndarray  # (E, 3) variable -> clause
    order: np.ndarray

    def copy(self) -> "BpMessages":
        return BpMessages(self.eta.copy(), self.r.copy(), self.order.copy())


@dataclass(frozen=True)
class MarginalField:
    F: np.ndarray  # (n, 3): F(0), F(1), F(*)

    @property
    def bias(self) -> np.ndarray:
        return np.abs(self.F[:, 0] - self.F[:, 1])


@dataclass
class BpResult:
    converged: bool
    sweeps: int
    fields: MarginalField
    messages: BpMessages


def variable_message(agree: np.ndarray, disagree: np.ndarray, w: WeightParams) -> tuple[float, float, float]:
    """(R^s, R^u, R^*) from the incoming triplets of C^s (``agree``) and C^u (``disagree``).

    Both arguments are ``(count, 3)`` arrays of clause-to-variable triplets.
    """
    agree = np.asarray(agree, dtype=np.float64).reshape(-1, 3)
    disagree = np.asarray(disagree, dtype=np.float64).reshape(-1, 3)
    a_ss = np.prod(agree[:, S] + agree[:, STAR])
    a_u = np.prod(agree[:, U])
    a_st = np.prod(agree[:, STAR])
    d_ss = np.prod(disagree[:, S] + disagree[:, STAR])
    d_u = np.prod(disagree[:, U])
    d_st = np.prod(disagree[:, STAR])
    smooth = 1.0 - w.omega_o
    r_s = d_u * a_ss
    r_u = a_u * (d_ss - smooth * d_st)
    r_st = d_u * (a_ss - smooth * a_st) + w.omega_star * (a_st * d_st)
    return float(r_s), float(r_u), float(r_st)


def clause_message(r_others: np.ndarray) -> tuple[float, float, float]:
    """Unnormalized (eta^u, eta^s, eta^*) from the other variables' (R^u, R^s, R^*) rows."""
    r = np.asarray(r_others, dtype=np.float64).reshape(-1, 3)
    ru, rs, rst = r[:, U], r[:, S], r[:, STAR]
    prod_u = np.prod(ru)
    prod_us = np.prod(ru + rst)
    corr = 0.0
    for k in range(len(r)):
        corr += (rs[k] - rst[k]) * np.prod(np.delete(ru, k))
    return float(prod_us + corr - prod_u), float(prod_u), float(prod_us - prod_u)


def clause_message_k3(rj, rk) -> tuple[float, float, float]:
    """Closed form of :func:`clause_message` for a 3-clause (two other variables)."""
    uj, sj, tj = rj
    uk, sk, tk = rk
    eta_s = uj * uk
    eta_u = tj * tk + sj * uk + uj * sk
    eta_st = tj * tk + tj * uk + uj * tk
    return eta_u, eta_s, eta_st


def _normalize(t: tuple[float, float, float], edge: int | None = None) -> tuple[float, float, float]:
    tot = t[0] + t[1] + t[2]
    if tot <= 0.0:
        raise ZeroDenominatorError(f"clause message vanishes on edge {edge}", edge=edge)
    return t[0] / tot, t[1] / tot, t[2] / tot


def bp_variable_update(f: Formula, msgs: BpMessages, w: WeightParams, edge: int) -> tuple[float, float, float]:
    """(R^s, R^u, R^*) along ``edge`` (variable -> clause) from the current eta."""
    g = f.graph
    j = int(f.edge_var[edge])
    sign = f.edge_sign[edge]
    others = g.edges_of(j)
    others = others[others != edge]
    same = f.edge_sign[others] == sign
    return variable_message(msgs.eta[others[same]], msgs.eta[others[~same]], w)


def bp_clause_update(f: Formula, msgs: BpMessages, edge: int) -> tuple[float, float, float]:
    """Normalized (eta^u, eta^s, eta^*) along ``edge`` from the stored R of the clause's other edges."""
    a = int(f.edge_clause[edge])
    idx = np.arange(f.clause_ptr[a], f.clause_ptr[a + 1])
    return _normalize(clause_message(msgs.r[idx[idx != edge]]), edge)


def variable_messages(f: Formula, eta: np.ndarray, w: WeightParams) -> np.ndarray:
    """All (R^u, R^s, R^*) rows at once from clause messages ``eta``."""
    a_ss, d_ss = excluded_products(f, eta[:, S] + eta[:, STAR])
    a_u, d_u = excluded_products(f, eta[:, U])
    a_st, d_st = excluded_products(f, eta[:, STAR])
    smooth = 1.0 - w.omega_o
    r = np.empty((f.num_edges, 3))
    r[:, S] = d_u * a_ss
    r[:, U] = a_u * (d_ss - smooth * d_st)
    r[:, STAR] = d_u * (a_ss - smooth * a_st) + w.omega_star * (a_st * d_st)
    return r


def bp_init(f: Formula, w: WeightParams, seed=None, eta: np.ndarray | None = None) -> BpMessages:
    """Random normalized clause messages (or ``eta`` if given) and a seeded clause order.

    The order is drawn exactly as in :func:`splat.sp.sp_init`, so the same
    seed gives the same schedule in both engines.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(f.m).astype(np.int64)
    if eta is None:
        eta = rng.random((f.num_edges, 3)) + 1e-3
    eta = np.array(eta, dtype=np.float64).reshape(f.num_edges, 3)
    tot = eta.sum(axis=1)
    if np.any(tot <= 0):
        raise ValueError("initial clause messages must have positive mass")
    eta /= tot[:, None]
    return BpMessages(eta, variable_messages(f, eta, w), order)


def bp_sweep(f: Formula, msgs: BpMessages, w: WeightParams) -> float:
    """One in-place Gauss-Seidel sweep; returns max change of any eta component."""
    g = f.graph
    delta, zero_edge = _k.bp_sweep(
        f.clause_ptr, f.edge_var, f.edge_sign, g.var_ptr, g.var_edges, msgs.order,
        msgs.eta, msgs.r, float(w.omega_o), float(w.omega_star),
    )
    if zero_edge >= 0:
        raise ZeroDenominatorError(f"clause message vanishes on edge {zero_edge}", edge=int(zero_edge))
    return float(delta)


def bp_fields(f: Formula, eta: np.ndarray, w: WeightParams) -> MarginalField:
    g = f.graph
    e = eta[g.var_edges]
    neg = (f.edge_sign[g.var_edges] == 1)[:, None]
    ptr = g.var_ptr

    def prod(vals, mask):
        return _segment_products(np.where(mask, vals, 1.0), ptr)

    pos = ~neg
    ss = e[:, S] + e[:, STAR]
    smooth = 1.0 - w.omega_o
    F = np.empty((f.n, 3))
    F[:, 0] = prod(e[:, U], pos[:, 0]) * (prod(ss, neg[:, 0]) - smooth * prod(e[:, STAR], neg[:, 0]))
    F[:, 1] = prod(e[:, U], neg[:, 0]) * (prod(ss, pos[:, 0]) - smooth * prod(e[:, STAR], pos[:, 0]))
    F[:, 2] = w.omega_star * _segment_products(e[:, STAR], ptr)
    F = np.maximum(F, 0.0)
    tot = F.sum(axis=1)
    bad = np.nonzero(tot <= 0.0)[0]
    if len(bad):
        raise ZeroDenominatorError(f"field of variable {bad[0]} vanishes", var=int(bad[0]))
    return MarginalField(F / tot[:, None])


def bp_run(
    f: Formula,
    w: WeightParams,
    tol: float = 1e-10,
    max_sweeps: int = 1000,
    seed=None,
    msgs: BpMessages | None = None,
) -> BpResult:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if msgs is None:
        msgs = bp_init(f, w, seed)
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        delta = bp_sweep(f, msgs, w)
        sweeps += 1
        if delta < tol:
            converged = True
            break
    return BpResult(converged, sweeps, bp_fields(f, msgs.eta, w), msgs)


@dataclass(frozen=True)
class ReductionReport:
    max_discrepancy: float  # max |eta_SP - eta^s / (eta^s + eta^u)|
    max_star_gap: float  # max |eta^u - eta^*| (normalized BP messages)
    max_pi_discrepancy: float  # max |Pi^u/(Pi total) - R^u/(R^u + R^*)|
    max_rs_gap: float  # max |R^s - R^*| / (R^u + R^*)
    bound_violations: int
    worst_excess: float
    sweeps: int  # completed lockstep sweeps
    stopped_at_edge: int | None = None  # shared zero-denominator edge (-1: engines disagreed)


def _embed(eta: np.ndarray, eta_c: np.ndarray) -> np.ndarray:
    """BP triplets (1 - eta, eta, 1 - eta), normalized, for SP surveys ``eta``."""
    trip = np.empty((len(eta), 3))
    trip[:, S] = eta
    trip[:, U] = eta_c
    trip[:, STAR] = eta_c
    return trip / trip.sum(axis=1)[:, None]


def reduction_check(f: Formula, rho: float, sweeps: int = 100, seed=None, resync: bool = False) -> ReductionReport:
    """Run SP(rho) and BP with (omega_o, omega_star) = (1 - rho, rho) in lockstep.

    BP starts from ``eta^s = eta0``, ``eta^u = eta^* = 1 - eta0`` where
    ``eta0`` is the random SP initialization, and both engines sweep
    clauses in the same order. The SP sweeps also count violations of the
    product bound on surveys.

    With ``resync`` the BP messages are reset to the embedding of the
    current SP surveys before every sweep, so each sweep compares one
    application of both maps from identical states. Without it the two
    trajectories run freely; where SP does not converge, rounding
    differences between the two evaluations can grow without bound.
    """
    w = WeightParams.from_rho(rho)
    sp = sp_init(f, seed, rho)
    bp = bp_init(f, w, seed, eta=_embed(sp.eta, sp.eta_c))
    assert np.array_equal(sp.order, bp.order)
    disc = star_gap = pi_disc = rs_gap = worst = 0.0
    viol = 0
    done = 0
    stopped = None
    for _ in range(sweeps):
        if resync:
            bp.eta[:] = _embed(sp.eta, sp.eta_c)
        sp_fail = bp_fail = None
        try:
            st = sp_sweep_checked(f, sp, rho)
        except ZeroDenominatorError as exc:
            sp_fail = exc.edge
        try:
            bp_sweep(f, bp, w)
        except ZeroDenominatorError as exc:
            bp_fail = exc.edge
        if sp_fail is not None or bp_fail is not None:
            # both engines must hit the degenerate state on the same edge
            stopped = sp_fail if sp_fail == bp_fail else -1
            if sp_fail != bp_fail:
                disc = math.inf
            break
        done += 1
        viol += st.bound_violations
        worst = max(worst, st.worst_excess)
        e = bp.eta
        with np.errstate(invalid="ignore", divide="ignore"):
            ident = e[:, S] / (e[:, S] + e[:, U])
            pi_tot = sp.pi.sum(axis=1)
            r_tot = bp.r[:, U] + bp.r[:, STAR]
            pi_u = sp.pi[:, U] / pi_tot
            r_u = bp.r[:, U] / r_tot
            rs = np.abs(bp.r[:, S] - bp.r[:, STAR]) / r_tot
        disc = max(disc, float(np.max(np.abs(ident - sp.eta), initial=0.0)))
        star_gap = max(star_gap, float(np.max(np.abs(e[:, U] - e[:, STAR]), initial=0.0)))
        ok = (pi_tot > 0) & (r_tot > 0)
        pi_disc = max(pi_disc, float(np.max(np.abs(pi_u - r_u)[ok], initial=0.0)))
        rs_gap = max(rs_gap, float(np.max(rs[ok], initial=0.0)))
    return ReductionReport(disc, star_gap, pi_disc, rs_gap, viol, worst, done, stopped)


def write_fields_csv(fields: MarginalField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["var", "f0", "f1", "fstar", "bias"])
        for i, (a, b, c) in enumerate(fields.F.tolist()):
            w.writerow([i, repr(a), repr(b), repr(c), repr(abs(a - b))])
