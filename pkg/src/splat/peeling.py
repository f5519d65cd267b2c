"""Peeling partial assignments down to cores.

A star-step turns one unconstrained variable of a valid partial
assignment into ``*``. Repeating star-steps until no unconstrained
variable is left reaches the core, which does not depend on the order of
the steps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from splat._backend import kernels as _k
from splat.assignment import STAR, InvalidAssignmentError, as_assignment, invalid_clauses
from splat.formula import Formula


@dataclass(frozen=True)
class PeelTrace:
    """``(n_star, n_o)`` after each step, starting from the input assignment."""

    stars: np.ndarray
    unconstrained: np.ndarray

    def __len__(self) -> int:
        return len(self.stars)

    def rows(self) -> list[tuple[int, int]]:
        return list(zip(self.stars.tolist(), self.unconstrained.tolist()))


@dataclass(frozen=True)
class CoreResult:
    core: np.ndarray
    trivial: bool
    trace: PeelTrace


def _check_valid(f: Formula, x: np.ndarray) -> None:
    bad = invalid_clauses(f, x)
    if len(bad):
        raise InvalidAssignmentError(f"assignment invalid for clauses {bad[:10].tolist()}")


def _peel(f: Formula, x: np.ndarray, mask: np.ndarray, rand: np.ndarray):
    g = f.graph
    y = x.copy()
    ts = np.zeros(f.n + 1, dtype=np.int64)
    tu = np.zeros(f.n + 1, dtype=np.int64)
    steps = _k.peel(
        f.clause_ptr, f.edge_var, f.edge_sign, f.edge_clause, g.var_ptr, g.var_edges,
        y, mask, rand, ts, tu,
    )
    return y, PeelTrace(ts[: steps + 1].copy(), tu[: steps + 1].copy())


def peel_to_core(f: Formula, x, seed=None) -> CoreResult:
    """Peel uniformly random unconstrained variables until none remain."""
    x = as_assignment(x, f.n).copy()
    _check_valid(f, x)
    rand = np.random.default_rng(seed).random(f.n)
    core, trace = _peel(f, x, np.ones(f.n, dtype=np.uint8), rand)
    return CoreResult(core, bool(np.all(core == STAR)), trace)


def core_restricted(f: Formula, x, S: Iterable[int]) -> np.ndarray:
    """Core_S(x): the minimal y <= x reachable through star-steps labeled in S."""
    x = as_assignment(x, f.n).copy()
    _check_valid(f, x)
    mask = np.zeros(f.n, dtype=np.uint8)
    idx = np.fromiter((int(i) for i in S), dtype=np.int64)
    mask[idx] = 1
    core, _ = _peel(f, x, mask, np.zeros(f.n))
    return core


def write_trace_csv(trace: PeelTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stars", "unconstrained"])
        w.writerows(trace.rows())


@dataclass(frozen=True)
class PureLiteralOutcome:
    success: bool
    assignment: np.ndarray | None


def pure_literal(f: Formula) -> PureLiteralOutcome:
    """Iterated pure-literal rule; succeeds iff it empties the formula.

    On success unassigned variables are set to 0 in the returned full
    assignment (they occur in no remaining clause).
    """
    values = np.full(f.n, -1, dtype=np.int8)
    cur = f
    while cur.m > 0:
        occ = np.zeros((f.n, 2), dtype=np.int64)
        np.add.at(occ, (cur.edge_var, cur.edge_sign.astype(np.int64)), 1)
        pos_only = (occ[:, 0] > 0) & (occ[:, 1] == 0)
        neg_only = (occ[:, 1] > 0) & (occ[:, 0] == 0)
        lits = [(int(i), 1) for i in np.nonzero(pos_only)[0]]
        lits += [(int(i), 0) for i in np.nonzero(neg_only)[0]]
        if not lits:
            return PureLiteralOutcome(False, None)
        # pure literals satisfy every clause they touch, so only dropping happens
        idx = np.asarray([i for i, _ in lits])
        values[idx] = [b for _, b in lits]
        keep = ~np.isin(np.arange(cur.m), cur.edge_clause[np.isin(cur.edge_var, idx)])
        cur = _subformula(cur, keep)
    values[values < 0] = 0
    assert f.is_satisfied_by(values)
    return PureLiteralOutcome(True, values)


def _subformula(f: Formula, keep: np.ndarray) -> Formula:
    widths = f.widths[keep]
    edge_keep = keep[f.edge_clause]
    ptr = np.zeros(len(widths) + 1, dtype=np.int64)
    np.cumsum(widths, out=ptr[1:])
    return Formula(f.n, ptr, f.edge_var[edge_keep].copy(), f.edge_sign[edge_keep].copy())


def core_size_floor(alpha: float, k: int) -> float:
    """c(alpha, k) = (alpha e^2)^(-1/(k-2)): lower bound on the non-star fraction of a non-trivial core."""
    if k < 3:
        raise ValueError("core size bound needs k >= 3")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (alpha * math.e**2) ** (-1.0 / (k - 2))
