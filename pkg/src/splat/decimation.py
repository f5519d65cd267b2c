"""Survey-inspired decimation: SP(rho), fix the most biased variables,
simplify, repeat; hand the remainder to WalkSAT."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from splat._backend import kernels as _k
from splat.assignment import format_assignment
from splat.formula import Formula, assign_literals
from splat.sp import BiasField, ZeroDenominatorError, sp_init, sp_run

log = logging.getLogger(__name__)

_CHUNK = 1 << 16


class SolveStatus(str, enum.Enum):
    SAT = "sat"
    CONTRADICTION = "contradiction"
    SP_NONCONVERGENCE = "sp-nonconvergence"
    WALKSAT_EXHAUSTED = "walksat-exhausted"


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 0.95
    beta: float = 0.01
    bias_tol: float = 0.05
    sp_tol: float = 1e-3
    max_sweeps: int = 1000
    restarts: int = 3
    damping: float = 0.0  # first attempt of every round
    restart_damping: float = 0.5  # fresh restarts after a non-converged attempt
    shuffle: bool = True  # fresh clause order every sweep
    noise: float = 0.5
    walksat_flips: int | None = None  # None: flips_scale * remaining / n
    flips_scale: int = 100_000
    seed: int | None = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must be in [0, 1]")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if self.bias_tol < 0.0:
            raise ValueError("bias_tol must be nonnegative")
        if self.sp_tol <= 0.0 or self.max_sweeps < 1 or self.restarts < 0:
            raise ValueError("need sp_tol > 0, max_sweeps >= 1, restarts >= 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must be in [0, 1]")
        if not (0.0 <= self.damping < 1.0 and 0.0 <= self.restart_damping < 1.0):
            raise ValueError("damping values must be in [0, 1)")
        if self.walksat_flips is not None and self.walksat_flips < 0:
            raise ValueError("walksat_flips must be nonnegative")


@dataclass(frozen=True)
class RoundLog:
    round: int
    fixed: int  # decimated plus unit-implied variables
    max_bias: float
    sweeps: int
    unset: int  # unset variables after the round


@dataclass
class SolveReport:
    status: SolveStatus
    assignment: np.ndarray | None
    rounds: list[RoundLog] = field(default_factory=list)
    walksat_flips: int = 0
    message: str = ""

    @property
    def sat(self) -> bool:
        return self.status is SolveStatus.SAT

    def to_text(self) -> str:
        lines = [f"status {self.status.value}"]
        if self.message:
            lines.append(f"message {self.message}")
        for r in self.rounds:
            lines.append(f"round {r.round} fixed {r.fixed} max_bias {r.max_bias:.6f} sweeps {r.sweeps} unset {r.unset}")
        lines.append(f"walksat_flips {self.walksat_flips}")
        if self.assignment is not None:
            lines.append(f"assignment {format_assignment(self.assignment)}")
        return "\n".join(lines) + "\n"


def decimate_round(fields: BiasField, beta: float, unset: np.ndarray | None = None) -> list[tuple[int, int]]:
    """The max(1, ceil(beta * #unset)) unset variables of largest bias, with values.

    Each goes to argmax(mu(0), mu(1)). Ties (in bias and in the argmax)
    go to the lower index / value 0.
    """
    n = len(fields.mu)
    cand = np.arange(n) if unset is None else np.nonzero(unset)[0]
    if len(cand) == 0:
        return []
    count = max(1, math.ceil(beta * len(cand)))
    b = fields.bias[cand]
    # stable sort on -bias keeps index order among equal biases
    pick = cand[np.argsort(-b, kind="stable")[:count]]
    mu = fields.mu
    return [(int(i), 1 if mu[i, 1] > mu[i, 0] else 0) for i in pick]


@dataclass(frozen=True)
class WalksatOutcome:
    sat: bool
    assignment: np.ndarray
    flips: int


def walksat(f: Formula, seed=None, max_flips: int = 100_000, noise: float = 0.5, x0=None) -> WalksatOutcome:
    """WalkSAT from a random (or given) full assignment."""
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must be in [0, 1]")
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=f.n).astype(np.int8) if x0 is None else np.array(x0, dtype=np.int8)
    sat_lit = (x[f.edge_var] != f.edge_sign).astype(np.int64)
    truecnt = np.add.reduceat(np.append(sat_lit, 0), f.clause_ptr[:-1]) if f.m else np.zeros(0, dtype=np.int64)
    truecnt = truecnt.astype(np.int64)
    unsat_ids = np.nonzero(truecnt == 0)[0]
    unsat = np.full(max(f.m, 1), -1, dtype=np.int64)
    unsat[: len(unsat_ids)] = unsat_ids
    pos = np.full(max(f.m, 1), -1, dtype=np.int64)
    pos[unsat_ids] = np.arange(len(unsat_ids))
    nunsat = np.array([len(unsat_ids)], dtype=np.int64)
    g = f.graph
    flips = 0
    while nunsat[0] > 0 and flips < max_flips:
        rows = min(_CHUNK, max_flips - flips)
        flips += _k.walksat_chunk(
            f.clause_ptr, f.edge_var, f.edge_sign, f.edge_clause, g.var_ptr, g.var_edges,
            x, truecnt, unsat, pos, nunsat, rng.random((rows, 3)), float(noise),
        )
    return WalksatOutcome(bool(nunsat[0] == 0), x, int(flips))


def _converged_sp(cur: Formula, cfg: SolverConfig, rng, warm: np.ndarray | None):
    """SP with up to cfg.restarts fresh restarts; returns (result, sweeps) or (None, sweeps).

    The first attempt warm-starts from ``warm`` (if any) and uses
    ``cfg.damping``; restarts draw fresh surveys and a fresh clause order and
    use ``cfg.restart_damping``.
    """
    total = 0
    for attempt in range(cfg.restarts + 1):
        seed = int(rng.integers(2**63))
        eta = warm if (attempt == 0 and warm is not None) else None
        msgs = sp_init(cur, seed, cfg.rho, eta=eta)
        damping = cfg.damping if attempt == 0 else cfg.restart_damping
        res = sp_run(
            cur, cfg.rho, cfg.sp_tol, cfg.max_sweeps, msgs=msgs, damping=damping,
            shuffle=rng if cfg.shuffle else None,
        )
        total += res.sweeps
        if res.converged:
            return res, total
        log.debug("SP did not converge (attempt %d)", attempt)
    return None, total


def solve(f: Formula, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Decimate with SP(cfg.rho) until the biases are small, then run WalkSAT."""
    rng = np.random.default_rng(cfg.seed)
    values = np.full(f.n, -1, dtype=np.int8)
    rounds: list[RoundLog] = []

    out = assign_literals(f, [])
    if out.contradiction:
        return SolveReport(SolveStatus.CONTRADICTION, None, rounds, message="unit propagation on input")
    values[out.values >= 0] = out.values[out.values >= 0]
    cur = out.formula
    warm = None
    while cur.m > 0:
        try:
            res, sweeps = _converged_sp(cur, cfg, rng, warm)
        except ZeroDenominatorError as exc:
            return SolveReport(SolveStatus.CONTRADICTION, None, rounds, message=str(exc))
        if res is None:
            return SolveReport(SolveStatus.SP_NONCONVERGENCE, None, rounds, message=f"after {sweeps} sweeps")
        unset = values < 0
        max_bias = float(res.fields.bias[unset].max(initial=0.0))
        if max_bias < cfg.bias_tol:
            rounds.append(RoundLog(len(rounds), 0, max_bias, sweeps, int(unset.sum())))
            break
        picks = decimate_round(res.fields, cfg.beta, unset)
        out = assign_literals(cur, picks)
        if out.contradiction:
            return SolveReport(SolveStatus.CONTRADICTION, None, rounds, message=f"round {len(rounds)}")
        newly = (out.values >= 0) & unset
        values[newly] = out.values[newly]
        rounds.append(RoundLog(len(rounds), int(newly.sum()), max_bias, sweeps, int((values < 0).sum())))
        log.info("round %d fixed %d max_bias %.4f unset %d", len(rounds) - 1, int(newly.sum()), max_bias, rounds[-1].unset)
        warm = res.messages.eta[out.kept_edges]
        cur = out.formula

    flips = 0
    x = values.copy()
    if cur.m > 0:
        remaining = int((values < 0).sum())
        budget = cfg.walksat_flips
        if budget is None:
            budget = math.ceil(cfg.flips_scale * remaining / max(f.n, 1))
        ws = walksat(cur, int(rng.integers(2**63)), budget, cfg.noise)
        flips = ws.flips
        if not ws.sat:
            return SolveReport(SolveStatus.WALKSAT_EXHAUSTED, None, rounds, flips, f"{budget} flips")
        x[values < 0] = ws.assignment[values < 0]
    x[x < 0] = 0
    if not f.is_satisfied_by(x):
        raise AssertionError("solver produced an assignment that does not satisfy the input formula")
    return SolveReport(SolveStatus.SAT, x, rounds, flips)
