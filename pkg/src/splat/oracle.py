"""Brute-force reference computations for tiny formulas.

Everything here enumerates explicitly: all 3**n partial assignments,
reachable sets by breadth-first search over single star-steps, parent-set
configurations of the extended MRF, and peeling orders. Size guards raise
``OracleSizeError`` instead of truncating.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from splat.assignment import (
    STAR,
    InvalidAssignmentError,
    WeightParams,
    as_assignment,
    classify,
    invalid_clauses,
)
from splat.formula import Formula
from splat.peeling import core_restricted

MAX_N = 14
MAX_PGEN_N = 8
MAX_JOINT_PARENTS = 4096


class OracleSizeError(ValueError):
    pass


def _guard(n: int, limit: int = MAX_N) -> None:
    if n > limit:
        raise OracleSizeError(f"n={n} exceeds the enumeration limit {limit}")


def decode_states(n: int) -> np.ndarray:
    """(3**n, n) table mapping base-3 state codes to assignments."""
    _guard(n)
    codes = np.arange(3**n, dtype=np.int64)
    return ((codes[:, None] // (3 ** np.arange(n, dtype=np.int64))) % 3).astype(np.int8)


def encode(x) -> int:
    x = np.asarray(x, dtype=np.int64)
    return int(np.dot(3 ** np.arange(len(x), dtype=np.int64), x))


def _bits(mask: np.ndarray) -> np.ndarray:
    """Row-wise bitmask of a boolean (N, n) array."""
    return (mask.astype(np.int64) << np.arange(mask.shape[1], dtype=np.int64)).sum(axis=1)


def _clause_scan(f: Formula, X: np.ndarray):
    """Validity per row of X and, for valid rows, the constrained mask."""
    valid = np.ones(len(X), dtype=bool)
    cp = f.clause_ptr
    for a in range(f.m):
        v = f.edge_var[cp[a] : cp[a + 1]]
        xa = X[:, v]
        nsat = ((xa != STAR) & (xa != f.edge_sign[cp[a] : cp[a + 1]])).sum(axis=1)
        nstar = (xa == STAR).sum(axis=1)
        valid &= ~((nsat == 0) & (nstar <= 1))
    Xv = X[valid]
    cons = np.zeros(Xv.shape, dtype=bool)
    for a in range(f.m):
        v = f.edge_var[cp[a] : cp[a + 1]]
        xa = Xv[:, v]
        sat = (xa != STAR) & (xa != f.edge_sign[cp[a] : cp[a + 1]])
        unique = (sat.sum(axis=1) == 1) & ((xa == STAR).sum(axis=1) == 0)
        for t, j in enumerate(v.tolist()):
            cons[:, j] |= unique & sat[:, t]
    return valid, cons


@dataclass
class EnumerationTable:
    """All valid partial assignments with their weights W(x)."""

    states: np.ndarray  # (N, n) int8
    codes: np.ndarray  # base-3 code of each row
    weights: np.ndarray
    n_star: np.ndarray
    n_o: np.ndarray
    unconstrained: np.ndarray  # bitmask of unconstrained variables per row

    @property
    def Z(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return zip(self.states, self.weights.tolist())

    def index(self) -> dict[int, int]:
        return {c: r for r, c in enumerate(self.codes.tolist())}


def enumerate_valid(f: Formula, w: WeightParams = WeightParams(1.0, 1.0)) -> EnumerationTable:
    """Every valid x in {0, 1, *}^n, weighted by omega_o^n_o * omega_*^n_*."""
    _guard(f.n)
    X = decode_states(f.n)
    valid, cons = _clause_scan(f, X)
    states = X[valid]
    star = states == STAR
    unc = ~star & ~cons
    n_star = star.sum(axis=1)
    n_o = unc.sum(axis=1)
    weights = np.power(float(w.omega_o), n_o) * np.power(float(w.omega_star), n_star)
    codes = np.nonzero(valid)[0].astype(np.int64)
    return EnumerationTable(states, codes, weights, n_star, n_o, _bits(unc))


def exact_marginals(f: Formula, w: WeightParams, table: EnumerationTable | None = None) -> np.ndarray:
    """(n, 3) marginals of p_W over {0, 1, *} by direct summation."""
    if table is None:
        table = enumerate_valid(f, w)
    Z = table.Z
    if Z <= 0.0:
        raise ValueError("partition function vanishes for these weights")
    out = np.empty((f.n, 3))
    for b in range(3):
        out[:, b] = (table.weights[:, None] * (table.states == b)).sum(axis=0)
    return out / Z


def satisfying_assignments(f: Formula) -> np.ndarray:
    """All full satisfying assignments as rows (n <= 20)."""
    _guard(f.n, 20)
    X = ((np.arange(2**f.n, dtype=np.int64)[:, None] >> np.arange(f.n)) & 1).astype(np.int8)
    ok = np.ones(len(X), dtype=bool)
    cp = f.clause_ptr
    for a in range(f.m):
        s, e = cp[a], cp[a + 1]
        ok &= (X[:, f.edge_var[s:e]] != f.edge_sign[s:e]).any(axis=1)
    return X[ok]


def find_satisfying(f: Formula, seed=None) -> np.ndarray | None:
    """A satisfying assignment by DPLL with unit propagation, or None if unsatisfiable.

    Branching variables and first values are drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    clauses = [list(zip(f.edge_var[f.clause_ptr[a] : f.clause_ptr[a + 1]].tolist(),
                        f.edge_sign[f.clause_ptr[a] : f.clause_ptr[a + 1]].tolist())) for a in range(f.m)]
    var_order = rng.permutation(f.n).tolist()
    first = rng.integers(0, 2, size=f.n).tolist()

    def propagate(vals):
        changed = True
        while changed:
            changed = False
            for c in clauses:
                free = None
                nfree = 0
                sat = False
                for v, j in c:
                    if vals[v] < 0:
                        nfree += 1
                        free = (v, j)
                    elif vals[v] != j:
                        sat = True
                        break
                if sat:
                    continue
                if nfree == 0:
                    return False
                if nfree == 1:
                    vals[free[0]] = 1 - free[1]
                    changed = True
        return True

    stack = [[-1] * f.n]
    while stack:
        vals = stack.pop()
        if not propagate(vals):
            continue
        nxt = next((v for v in var_order if vals[v] < 0), None)
        if nxt is None:
            return np.array(vals, dtype=np.int8)
        for b in (1 - first[nxt], first[nxt]):
            child = list(vals)
            child[nxt] = b
            stack.append(child)
    return None


@dataclass
class StateSpace:
    """Per-code validity, unconstrained masks and weights for all 3**n states."""

    n: int
    valid: np.ndarray  # bool per code
    unconstrained: np.ndarray  # bitmask per code (0 for invalid codes)
    constrained: np.ndarray  # bitmask per code
    n_star: np.ndarray
    n_o: np.ndarray


def state_space(f: Formula) -> StateSpace:
    _guard(f.n)
    X = decode_states(f.n)
    valid, cons = _clause_scan(f, X)
    star = X[valid] == STAR
    unc_bits = np.zeros(len(X), dtype=np.int64)
    con_bits = np.zeros(len(X), dtype=np.int64)
    unc_bits[valid] = _bits(~star & ~cons)
    con_bits[valid] = _bits(cons)
    n_star = (X == STAR).sum(axis=1)
    n_o = np.zeros(len(X), dtype=np.int64)
    n_o[valid] = (~star & ~cons).sum(axis=1)
    return StateSpace(f.n, valid, unc_bits, con_bits, n_star, n_o)


def _require_valid(f: Formula, x: np.ndarray) -> None:
    bad = invalid_clauses(f, x)
    if len(bad):
        raise InvalidAssignmentError(f"x violates clauses {bad[:10].tolist()}")


def reachable(f: Formula, x, space: StateSpace | None = None) -> list[int]:
    """Codes of Reachable(x): x and everything below it by star-steps.

    A star-step turns one unconstrained variable into ``*``. Visited states
    are memoized by code (which fixes both the star mask and the values).
    """
    x = as_assignment(x, f.n)
    _require_valid(f, x)
    if space is None:
        space = state_space(f)
    pow3 = [3**j for j in range(f.n)]
    unc = space.unconstrained
    start = encode(x)
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        u = int(unc[c])
        j = 0
        while u:
            if u & 1:
                # x_j in {0, 1} -> STAR adds (2 - x_j) * 3^j
                d = c + (2 - (c // pow3[j]) % 3) * pow3[j]
                if d not in seen:
                    seen.add(d)
                    queue.append(d)
            u >>= 1
            j += 1
    return sorted(seen)


def downset_sum(f: Formula, x, w: WeightParams, space: StateSpace | None = None) -> float:
    """Total weight W(y) over y in Reachable(x)."""
    if space is None:
        space = state_space(f)
    codes = np.array(reachable(f, x, space), dtype=np.int64)
    wt = np.power(float(w.omega_o), space.n_o[codes]) * np.power(float(w.omega_star), space.n_star[codes])
    return float(math.fsum(wt.tolist()))


@dataclass
class SigmaTauReport:
    ok: bool
    consistent: int  # |Consistent(x)|
    reachable: int  # |Reachable(x)|
    problems: list[str]

    def __bool__(self) -> bool:
        return self.ok


def sigma_tau_check(f: Formula, x) -> SigmaTauReport:
    """Check that the tau(y), y in Reachable(x), partition Consistent(x) and
    that z lies in tau(y) exactly when sigma(z) = y.

    Consistent(x) = {z : z_j in {x_j, *}}; sigma(z) = Core_{S_*(z)}(x);
    tau(y) = {z : S_*(y) <= S_*(z) <= S_*(y) | S_c(y)}.
    """
    x = as_assignment(x, f.n)
    _require_valid(f, x)
    space = state_space(f)
    n = f.n
    free = [j for j in range(n) if x[j] != STAR]
    base_star = sum(1 << j for j in range(n) if x[j] == STAR)
    R = reachable(f, x, space)
    pow3 = np.array([3**j for j in range(n)], dtype=np.int64)

    def star_bits(code: int) -> int:
        return sum(1 << j for j in range(n) if (code // int(pow3[j])) % 3 == STAR)

    r_star = np.array([star_bits(c) for c in R], dtype=np.int64)
    r_con = space.constrained[np.array(R, dtype=np.int64)]
    problems: list[str] = []
    zs = 0
    for sub in range(1 << len(free)):
        T = [free[t] for t in range(len(free)) if (sub >> t) & 1]
        zmask = base_star | sum(1 << j for j in T)
        zs += 1
        s = core_restricted(f, x, T)
        sig = encode(s)
        inside = ((r_star & ~zmask) == 0) & ((zmask & ~(r_star | r_con)) == 0)
        hits = np.nonzero(inside)[0]
        if len(hits) != 1:
            problems.append(f"z with stars {zmask:b} lies in {len(hits)} tau sets")
        if sig not in R:
            problems.append(f"sigma of z with stars {zmask:b} is not reachable")
        for h in hits.tolist():
            if R[h] != sig:
                problems.append(f"z with stars {zmask:b} in tau(y) but sigma(z) != y")
    return SigmaTauReport(not problems, zs, len(R), problems)


def parent_options(f: Formula, i: int) -> list[tuple[int, ...]]:
    """The admissible parent sets of variable i: subsets of C+(i) or of C-(i)."""
    g = f.graph
    out: list[tuple[int, ...]] = [()]
    for side in (g.positive(i), g.negative(i)):
        for r in range(1, len(side) + 1):
            out.extend(itertools.combinations(side, r))
    return out


def _psi_i(xi: int, P: tuple[int, ...], side_of: dict[int, int], w: WeightParams) -> float:
    if not P:
        return w.omega_star if xi == STAR else w.omega_o
    # the clauses in P share one sign J; x_i must satisfy them
    return 1.0 if xi != STAR and xi != side_of[P[0]] else 0.0


def _clause_terms(f: Formula, x: np.ndarray):
    """Per clause: validity and the set of variables it constrains."""
    cp = f.clause_ptr
    val = []
    cons = []
    for a in range(f.m):
        v = f.edge_var[cp[a] : cp[a + 1]].tolist()
        J = f.edge_sign[cp[a] : cp[a + 1]].tolist()
        sat = [j for j, s in zip(v, J) if x[j] != STAR and x[j] != s]
        nstar = sum(1 for j in v if x[j] == STAR)
        val.append(not (len(sat) == 0 and nstar <= 1))
        cons.append({sat[0]} if len(sat) == 1 and nstar == 0 else set())
    return val, cons


@dataclass
class PgenReport:
    max_discrepancy: float  # max_x |sum_P prod Psi - W(x)|
    states: int
    unique_parents: bool  # exactly one compatible P per valid x, none per invalid x
    joint: bool  # whether the sum over P ran over the full product space


def verify_pgen(f: Formula, w: WeightParams, joint: bool | None = None) -> PgenReport:
    """Evaluate prod_i Psi_i * prod_a Psi_a summed over parent sets, for every x.

    With ``joint`` the sum runs over the full product of parent-set choices
    (feasible only when that product is small); otherwise it runs variable
    by variable, which is the same sum regrouped because each Psi_a depends
    on a P_i only through the indicator [a in P_i].
    """
    _guard(f.n, MAX_PGEN_N)
    opts = [parent_options(f, i) for i in range(f.n)]
    size = math.prod(len(o) for o in opts)
    if joint is None:
        joint = size <= MAX_JOINT_PARENTS
    elif joint and size > MAX_JOINT_PARENTS:
        raise OracleSizeError(f"{size} joint parent configurations exceed {MAX_JOINT_PARENTS}")
    g = f.graph
    clauses_of = [g.clauses_of(i) for i in range(f.n)]
    side = []
    for i in range(f.n):
        e = g.edges_of(i)
        side.append(dict(zip(f.edge_clause[e].tolist(), f.edge_sign[e].tolist())))
    worst = 0.0
    unique = True
    X = decode_states(f.n)
    for x in X:
        val, cons = _clause_terms(f, x)
        val_all = all(val)
        # delta factor of variable i: [a in P_i] must equal [a constrains i] for all a in C(i)
        want = [frozenset(a for a in clauses_of[i] if i in cons[a]) for i in range(f.n)]
        if joint:
            total = 0.0
            compatible = 0
            for P in itertools.product(*opts):
                if not all(frozenset(P[i]) == want[i] for i in range(f.n)):
                    continue
                if not val_all:
                    continue
                compatible += 1
                term = 1.0
                for i in range(f.n):
                    term *= _psi_i(int(x[i]), P[i], side[i], w)
                total += term
        else:
            total = 1.0 if val_all else 0.0
            compatible = 1 if val_all else 0
            for i in range(f.n):
                s = 0.0
                c = 0
                for P in opts[i]:
                    if frozenset(P) == want[i]:
                        c += 1
                        s += _psi_i(int(x[i]), P, side[i], w)
                total *= s
                compatible *= c
        valid = val_all
        if valid:
            rep = classify(f, x)
            W = float(w.omega_o) ** rep.n_o * float(w.omega_star) ** rep.n_star
        else:
            W = 0.0
        if compatible != (1 if valid else 0):
            unique = False
        worst = max(worst, abs(total - W))
    return PgenReport(worst, len(X), unique, bool(joint))


@dataclass
class ExactCore:
    core: np.ndarray
    order_independent: bool
    orders: int


def _peel_in_order(f: Formula, x: np.ndarray, order: list[int]) -> np.ndarray:
    """Repeatedly star the first unconstrained variable in ``order``."""
    y = x.copy()
    while True:
        rep = classify(f, y)
        unc = set(rep.unconstrained.tolist())
        nxt = next((j for j in order if j in unc), None)
        if nxt is None:
            return y
        y[nxt] = STAR


def exact_core(f: Formula, x, orders: int = 20, seed=0, exhaustive_upto: int = 6) -> ExactCore:
    """Peel x under many variable orders and report whether all agree.

    All permutations are tried when at most ``exhaustive_upto`` variables
    are non-star; otherwise ``orders`` random ones.
    """
    x = as_assignment(x, f.n)
    _require_valid(f, x)
    free = [j for j in range(f.n) if x[j] != STAR]
    if len(free) <= exhaustive_upto:
        perms = [list(p) for p in itertools.permutations(free)]
    else:
        rng = np.random.default_rng(seed)
        perms = [rng.permutation(free).tolist() for _ in range(max(orders, 1))]
    cores = [_peel_in_order(f, x, p) for p in perms]
    same = all(np.array_equal(c, cores[0]) for c in cores)
    return ExactCore(cores[0], same, len(perms))


def transition_matrix(f: Formula, w: WeightParams, table: EnumerationTable | None = None) -> np.ndarray:
    """Single-site Gibbs transition matrix over the valid states of ``table``.

    Built from the reference conditionals: pick a site uniformly, redraw it
    from p_W(x_i | rest).
    """
    from splat.gibbs import conditional_weights

    if table is None:
        table = enumerate_valid(f, w)
    idx = table.index()
    N = len(table)
    P = np.zeros((N, N))
    pow3 = [3**j for j in range(f.n)]
    for r, (x, c) in enumerate(zip(table.states, table.codes.tolist())):
        for i in range(f.n):
            cw = conditional_weights(f, x, i, w)
            tot = cw.sum()
            if tot <= 0.0:
                continue
            for b in range(3):
                if cw[b] > 0.0:
                    d = c + (b - int(x[i])) * pow3[i]
                    P[r, idx[d]] += cw[b] / tot / f.n
    return P
