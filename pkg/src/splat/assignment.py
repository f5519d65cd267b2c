"""Partial assignments over {0, 1, *} and the weight function W.

A partial assignment is an ``int8`` numpy vector with values 0, 1 or
``STAR`` (= 2). The string form used on disk is one character per
variable from ``"01*"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from splat.formula import Formula

STAR = 2


class InvalidAssignmentError(ValueError):
    """Partial assignment invalid for the formula (some clause is forced or violated)."""


class Status(enum.IntEnum):
    STAR = 0
    CONSTRAINED = 1
    UNCONSTRAINED = 2


@dataclass(frozen=True)
class WeightParams:
    """Weights of unconstrained and star variables; constrained weight is 1."""

    omega_o: float
    omega_star: float

    def __post_init__(self):
        for name in ("omega_o", "omega_star"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @classmethod
    def from_rho(cls, rho: float) -> "WeightParams":
        return cls(1.0 - rho, rho)


def as_assignment(x, n: int | None = None) -> np.ndarray:
    if isinstance(x, str):
        return parse_assignment(x)
    arr = np.asarray(x, dtype=np.int8)
    if arr.ndim != 1:
        raise ValueError("assignment must be one-dimensional")
    if n is not None and len(arr) != n:
        raise ValueError(f"assignment has length {len(arr)}, formula has n={n}")
    if np.any((arr < 0) | (arr > STAR)):
        raise ValueError("assignment values must be 0, 1 or STAR")
    return arr


def parse_assignment(text: str) -> np.ndarray:
    text = text.strip()
    table = {"0": 0, "1": 1, "*": STAR}
    try:
        return np.asarray([table[c] for c in text], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"bad assignment character {exc.args[0]!r}") from None


def format_assignment(x: Sequence[int] | np.ndarray) -> str:
    return "".join("01*"[int(v)] for v in x)


def read_assignment(path) -> np.ndarray:
    with open(path) as fh:
        return parse_assignment(fh.readline())


def save_assignment(x, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_assignment(x) + "\n")


@dataclass(frozen=True)
class ClauseStatus:
    valid: bool
    sat_count: int
    star_count: int
    constrained_var: int | None


def clause_status(f: Formula, x, a: int) -> ClauseStatus:
    x = as_assignment(x, f.n)
    s, e = f.clause_ptr[a], f.clause_ptr[a + 1]
    sat = star = 0
    last_sat = -1
    for v, j in zip(f.edge_var[s:e].tolist(), f.edge_sign[s:e].tolist()):
        xv = int(x[v])
        if xv == STAR:
            star += 1
        elif xv != j:
            sat += 1
            last_sat = v
    valid = not (sat == 0 and star <= 1)
    constrained = last_sat if (sat == 1 and star == 0) else None
    return ClauseStatus(valid, sat, star, constrained)


def _clause_counts(f: Formula, x: np.ndarray):
    """Per-clause satisfying/star counts and the sum of satisfying variable ids."""
    xv = x[f.edge_var]
    star = xv == STAR
    sat = (~star) & (xv != f.edge_sign)
    if f.m == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    starts = f.clause_ptr[:-1]
    nsat = np.add.reduceat(np.append(sat, False).astype(np.int64), starts)
    nstar = np.add.reduceat(np.append(star, False).astype(np.int64), starts)
    satsum = np.add.reduceat(np.append(np.where(sat, f.edge_var, 0), 0), starts)
    return nsat, nstar, satsum


def invalid_clauses(f: Formula, x) -> np.ndarray:
    x = as_assignment(x, f.n)
    nsat, nstar, _ = _clause_counts(f, x)
    return np.nonzero((nsat == 0) & (nstar <= 1))[0]


def is_valid(f: Formula, x) -> bool:
    return len(invalid_clauses(f, x)) == 0


@dataclass(frozen=True)
class StatusReport:
    status: np.ndarray  # Status codes per variable
    parents: list[list[int]]  # P(i): clauses where i is the unique satisfying variable

    @property
    def stars(self) -> np.ndarray:
        return np.nonzero(self.status == Status.STAR)[0]

    @property
    def constrained(self) -> np.ndarray:
        return np.nonzero(self.status == Status.CONSTRAINED)[0]

    @property
    def unconstrained(self) -> np.ndarray:
        return np.nonzero(self.status == Status.UNCONSTRAINED)[0]

    @property
    def n_star(self) -> int:
        return int(np.sum(self.status == Status.STAR))

    @property
    def n_c(self) -> int:
        return int(np.sum(self.status == Status.CONSTRAINED))

    @property
    def n_o(self) -> int:
        return int(np.sum(self.status == Status.UNCONSTRAINED))


def classify(f: Formula, x) -> StatusReport:
    """Split variables into star / constrained / unconstrained and build parent sets."""
    x = as_assignment(x, f.n)
    nsat, nstar, satsum = _clause_counts(f, x)
    bad = np.nonzero((nsat == 0) & (nstar <= 1))[0]
    if len(bad):
        raise InvalidAssignmentError(f"assignment invalid for clauses {bad[:10].tolist()}")
    parents: list[list[int]] = [[] for _ in range(f.n)]
    for a in np.nonzero((nsat == 1) & (nstar == 0))[0].tolist():
        parents[int(satsum[a])].append(a)
    status = np.full(f.n, Status.UNCONSTRAINED, dtype=np.int8)
    status[x == STAR] = Status.STAR
    status[[i for i in range(f.n) if parents[i]]] = Status.CONSTRAINED
    return StatusReport(status, parents)


def counts(f: Formula, x) -> tuple[int, int, int] | None:
    """(n_star, n_c, n_o) for a valid x, None if x is invalid."""
    try:
        r = classify(f, x)
    except InvalidAssignmentError:
        return None
    return r.n_star, r.n_c, r.n_o


def log_weight(f: Formula, x, w: WeightParams) -> float:
    """log W(x); -inf for invalid x or a zero weight factor."""
    c = counts(f, x)
    if c is None:
        return -math.inf
    n_star, _, n_o = c
    total = 0.0
    for cnt, omega in ((n_o, w.omega_o), (n_star, w.omega_star)):
        if cnt == 0:
            continue
        if omega == 0.0:
            return -math.inf
        total += cnt * math.log(omega)
    return total


def weight(f: Formula, x, w: WeightParams) -> float:
    """W(x) = omega_o^{n_o} * omega_star^{n_star} for valid x, else 0.

    Underflows to 0 for large n; use :func:`log_weight` there.
    """
    c = counts(f, x)
    if c is None:
        return 0.0
    n_star, _, n_o = c
    return w.omega_o**n_o * w.omega_star**n_star
