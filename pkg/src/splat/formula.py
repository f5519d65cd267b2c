"""CNF formulas, DIMACS I/O, random k-SAT ensembles and factor-graph neighborhoods.

Variables are 0-based internally. A clause is a sequence of ``(var, J)``
pairs where ``J`` is the *unsatisfying* value of the variable for that
clause: a positive literal ``x_v`` has ``J = 0`` and a negated literal has
``J = 1``. Clause ``a`` is satisfied by ``x`` iff ``x_v != J_{a,v}`` for
some ``v`` in the clause.

Storage is CSR-style: edge ``e`` (one per literal occurrence) has
``edge_var[e]`` and ``edge_sign[e]``, and clause ``a`` owns edges
``clause_ptr[a]:clause_ptr[a + 1]``. The same edge ids index every message
array in :mod:`splat.sp` and :mod:`splat.mrf_bp`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Clause = tuple[tuple[int, int], ...]


class DimacsError(ValueError):
    """Malformed DIMACS input."""


class FormulaError(ValueError):
    """Clause data violating the formula invariants."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Formula:
    n: int
    clause_ptr: np.ndarray
    edge_var: np.ndarray
    edge_sign: np.ndarray

    @classmethod
    def from_clauses(cls, n: int, clauses: Iterable[Sequence[tuple[int, int]]]) -> "Formula":
        ptr = [0]
        variables: list[int] = []
        signs: list[int] = []
        for a, clause in enumerate(clauses):
            seen = set()
            if len(clause) == 0:
                raise FormulaError(f"clause {a} is empty")
            for v, j in clause:
                v, j = int(v), int(j)
                if not 0 <= v < n:
                    raise FormulaError(f"clause {a}: variable {v} out of range [0, {n})")
                if j not in (0, 1):
                    raise FormulaError(f"clause {a}: sign {j} not in {{0, 1}}")
                if v in seen:
                    raise FormulaError(f"clause {a}: repeated variable {v}")
                seen.add(v)
                variables.append(v)
                signs.append(j)
            ptr.append(len(variables))
        return cls(
            n=int(n),
            clause_ptr=_frozen(np.asarray(ptr, dtype=np.int64)),
            edge_var=_frozen(np.asarray(variables, dtype=np.int64)),
            edge_sign=_frozen(np.asarray(signs, dtype=np.int8)),
        )

    @classmethod
    def from_literals(cls, n: int, clauses: Iterable[Sequence[int]]) -> "Formula":
        """Build from signed 1-based literals, DIMACS style (``-3`` is not-x3)."""
        return cls.from_clauses(
            n, [[(abs(lit) - 1, 0 if lit > 0 else 1) for lit in c] for c in clauses]
        )

    @property
    def m(self) -> int:
        return len(self.clause_ptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.edge_var)

    @cached_property
    def widths(self) -> np.ndarray:
        return _frozen(np.diff(self.clause_ptr))

    @property
    def k(self) -> int | None:
        """Common clause width, or None for mixed widths or no clauses."""
        if self.m == 0:
            return None
        w = self.widths
        return int(w[0]) if np.all(w == w[0]) else None

    @cached_property
    def edge_clause(self) -> np.ndarray:
        return _frozen(np.repeat(np.arange(self.m, dtype=np.int64), self.widths))

    def clause(self, a: int) -> Clause:
        s, e = self.clause_ptr[a], self.clause_ptr[a + 1]
        return tuple(zip(self.edge_var[s:e].tolist(), self.edge_sign[s:e].tolist()))

    @property
    def clauses(self) -> list[Clause]:
        return [self.clause(a) for a in range(self.m)]

    def literals(self, a: int) -> list[int]:
        return [v + 1 if j == 0 else -(v + 1) for v, j in self.clause(a)]

    def is_satisfied_by(self, x: Sequence[int] | np.ndarray) -> bool:
        return bool(np.all(self.satisfied_clauses(x)))

    def satisfied_clauses(self, x: Sequence[int] | np.ndarray) -> np.ndarray:
        """Boolean mask over clauses for a full 0/1 assignment."""
        x = np.asarray(x)
        lit_true = x[self.edge_var] != self.edge_sign
        if self.m == 0:
            return np.zeros(0, dtype=bool)
        counts = np.add.reduceat(np.append(lit_true, False).astype(np.int64), self.clause_ptr[:-1])
        return counts > 0

    @cached_property
    def graph(self) -> "FactorGraph":
        return neighborhoods(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Formula):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.clause_ptr, other.clause_ptr)
            and np.array_equal(self.edge_var, other.edge_var)
            and np.array_equal(self.edge_sign, other.edge_sign)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.clause_ptr.tobytes(), self.edge_var.tobytes(), self.edge_sign.tobytes()))

    def __repr__(self) -> str:
        return f"Formula(n={self.n}, m={self.m}, k={self.k})"


@dataclass(frozen=True)
class FactorGraph:
    """Variable-side adjacency of a formula.

    ``var_edges[var_ptr[i]:var_ptr[i + 1]]`` lists the edges touching
    variable ``i`` in increasing clause order.
    """

    formula: Formula
    var_ptr: np.ndarray
    var_edges: np.ndarray

    def edges_of(self, i: int) -> np.ndarray:
        return self.var_edges[self.var_ptr[i] : self.var_ptr[i + 1]]

    def clauses_of(self, i: int) -> list[int]:
        """C(i)."""
        return self.formula.edge_clause[self.edges_of(i)].tolist()

    def positive(self, i: int) -> list[int]:
        """C+(i): clauses satisfied by x_i = 1 (J = 0)."""
        e = self.edges_of(i)
        return self.formula.edge_clause[e[self.formula.edge_sign[e] == 0]].tolist()

    def negative(self, i: int) -> list[int]:
        """C-(i): clauses satisfied by x_i = 0 (J = 1)."""
        e = self.edges_of(i)
        return self.formula.edge_clause[e[self.formula.edge_sign[e] == 1]].tolist()

    def _sign(self, a: int, i: int) -> int:
        f = self.formula
        s, e = f.clause_ptr[a], f.clause_ptr[a + 1]
        hit = np.nonzero(f.edge_var[s:e] == i)[0]
        if len(hit) == 0:
            raise KeyError(f"variable {i} not in clause {a}")
        return int(f.edge_sign[s + hit[0]])

    def agree(self, a: int, i: int) -> list[int]:
        """C^s_a(i): other clauses of i with the same preferred value as a."""
        j = self._sign(a, i)
        return [b for b, sb in self._others(a, i) if sb == j]

    def disagree(self, a: int, i: int) -> list[int]:
        """C^u_a(i): other clauses of i preferring the opposite value."""
        j = self._sign(a, i)
        return [b for b, sb in self._others(a, i) if sb != j]

    def _others(self, a: int, i: int):
        e = self.edges_of(i)
        f = self.formula
        return [(b, sb) for b, sb in zip(f.edge_clause[e].tolist(), f.edge_sign[e].tolist()) if b != a]

    def variable_neighbors(self, i: int) -> list[int]:
        """Variables sharing at least one clause with i (excluding i)."""
        f = self.formula
        out: set[int] = set()
        for a in self.clauses_of(i):
            out.update(f.edge_var[f.clause_ptr[a] : f.clause_ptr[a + 1]].tolist())
        out.discard(i)
        return sorted(out)


def neighborhoods(f: Formula) -> FactorGraph:
    order = np.lexsort((f.edge_clause, f.edge_var)) if f.num_edges else np.zeros(0, dtype=np.int64)
    counts = np.bincount(f.edge_var, minlength=f.n) if f.num_edges else np.zeros(f.n, dtype=np.int64)
    ptr = np.zeros(f.n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return FactorGraph(f, _frozen(ptr), _frozen(order.astype(np.int64)))


# --------------------------------------------------------------------------
# DIMACS


def parse_dimacs(text: str) -> Formula:
    n = m = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if n is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if n < 0 or m < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            continue
        if n is None:
            raise DimacsError(f"line {lineno}: clause before header")
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(f"line {lineno}: non-integer token in {line!r}") from None
        for lit in lits:
            if lit == 0:
                if not current:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(current)
                current = []
                continue
            if abs(lit) > n:
                raise DimacsError(f"line {lineno}: literal {lit} out of range for n={n}")
            if any(abs(lit) == abs(other) for other in current):
                raise DimacsError(f"line {lineno}: repeated variable {abs(lit)} in clause")
            current.append(lit)
    if n is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        raise DimacsError("last clause not terminated by 0")
    if len(clauses) != m:
        raise DimacsError(f"header declares {m} clauses, found {len(clauses)}")
    return Formula.from_literals(n, clauses)


def write_dimacs(f: Formula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.n} {f.m}")
    for a in range(f.m):
        lines.append(" ".join(str(lit) for lit in f.literals(a)) + " 0")
    return "\n".join(lines) + "\n"


def read_dimacs(path) -> Formula:
    with open(path) as fh:
        return parse_dimacs(fh.read())


def save_dimacs(f: Formula, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(write_dimacs(f, comments))


# --------------------------------------------------------------------------
# random ensemble


def num_clauses(n: int, alpha: float) -> int:
    """round(alpha * n), halves rounded up."""
    return int(math.floor(alpha * n + 0.5))


def random_ksat(n: int, k: int, alpha: float, seed=None) -> Formula:
    """Uniform random k-SAT: m clauses drawn independently with replacement.

    Each clause has k distinct variables chosen uniformly without
    replacement and independent uniform signs.
    """
    if k < 2 or n < k:
        raise ValueError(f"need n >= k >= 2, got n={n}, k={k}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rng = np.random.default_rng(seed)
    m = num_clauses(n, alpha)
    variables = rng.integers(0, n, size=(m, k))
    bad = _rows_with_repeats(variables)
    while bad.any():
        variables[bad] = rng.integers(0, n, size=(int(bad.sum()), k))
        bad = _rows_with_repeats(variables)
    signs = rng.integers(0, 2, size=(m, k))
    return Formula(
        n=n,
        clause_ptr=_frozen(np.arange(0, m * k + 1, k, dtype=np.int64)),
        edge_var=_frozen(variables.reshape(-1).astype(np.int64)),
        edge_sign=_frozen(signs.reshape(-1).astype(np.int8)),
    )


def random_tree_formula(n: int, k: int, m: int, seed=None) -> Formula:
    """Random formula whose factor graph is a forest.

    Each clause joins k variables taken from k distinct connected components
    (union-find), so no cycle can form. Raises if fewer than k components
    remain before m clauses are placed.
    """
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    if m and n < 1 + m * (k - 1):
        raise ValueError(f"a forest with {m} clauses of width {k} needs n >= {1 + m * (k - 1)}")
    rng = np.random.default_rng(seed)
    parent = list(range(n))

    def root(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    clauses = []
    for _ in range(m):
        comps: dict[int, list[int]] = {}
        for v in range(n):
            comps.setdefault(root(v), []).append(v)
        keys = sorted(comps)
        pick = rng.choice(len(keys), size=k, replace=False)
        vs = [int(rng.choice(comps[keys[c]])) for c in pick]
        for v in vs[1:]:
            parent[root(v)] = root(vs[0])
        clauses.append([(v, int(rng.integers(0, 2))) for v in vs])
    return Formula.from_clauses(n, clauses)


def _rows_with_repeats(rows: np.ndarray) -> np.ndarray:
    s = np.sort(rows, axis=1)
    return np.any(s[:, 1:] == s[:, :-1], axis=1)


# --------------------------------------------------------------------------
# conditioning


@dataclass
class SimplifyOutcome:
    formula: Formula | None
    implied: list[tuple[int, int]] = field(default_factory=list)
    contradiction: bool = False
    kept_clauses: np.ndarray | None = None
    kept_edges: np.ndarray | None = None
    values: np.ndarray | None = None


def condition(f: Formula, i: int, b: int) -> SimplifyOutcome:
    """Fix x_i = b, simplify, and run unit propagation to completion."""
    if not 0 <= i < f.n:
        raise IndexError(f"variable {i} out of range")
    return assign_literals(f, [(i, b)])


def simplify(f: Formula) -> SimplifyOutcome:
    """Unit-propagate the clauses already present."""
    return assign_literals(f, [])


def assign_literals(f: Formula, literals: Iterable[tuple[int, int]]) -> SimplifyOutcome:
    """Fix a batch of variables, then simplify with unit propagation.

    Satisfied clauses are dropped and falsified literals are removed. Any
    clause reduced to one literal forces that literal (reported in
    ``implied``); an emptied clause sets ``contradiction`` and no formula
    is returned. ``values`` holds the resulting values (-1 for unset).
    ``kept_clauses``/``kept_edges`` map the new formula's clauses and
    edges back to ``f``.
    """
    g = f.graph
    ptr, ev, es, ec = f.clause_ptr, f.edge_var.tolist(), f.edge_sign.tolist(), f.edge_clause.tolist()
    var_ptr, var_edges = g.var_ptr.tolist(), g.var_edges.tolist()
    values = [-1] * f.n
    remaining = f.widths.tolist()
    satisfied = [False] * f.m
    implied: list[tuple[int, int]] = []
    queue: deque[tuple[int, int, bool]] = deque((int(i), int(b), False) for i, b in literals)
    for a, w in enumerate(remaining):
        if w == 1:
            e = int(ptr[a])
            queue.append((ev[e], 1 - es[e], True))

    contradiction = False
    while queue:
        i, b, forced = queue.popleft()
        if b not in (0, 1):
            raise ValueError(f"value {b} not in {{0, 1}}")
        if values[i] != -1:
            if values[i] != b:
                contradiction = True
                break
            continue
        values[i] = b
        if forced:
            implied.append((i, b))
        for e in var_edges[var_ptr[i] : var_ptr[i + 1]]:
            a = ec[e]
            if satisfied[a]:
                continue
            if es[e] != b:
                satisfied[a] = True
                continue
            remaining[a] -= 1
            if remaining[a] == 0:
                contradiction = True
                break
            if remaining[a] == 1:
                for q in range(ptr[a], ptr[a + 1]):
                    if values[ev[q]] == -1:
                        queue.append((ev[q], 1 - es[q], True))
                        break
        if contradiction:
            break

    vals = np.asarray(values, dtype=np.int8)
    if contradiction:
        return SimplifyOutcome(None, implied, True, values=vals)

    new_ptr = [0]
    kept_clauses: list[int] = []
    kept_edges: list[int] = []
    for a in range(f.m):
        if satisfied[a]:
            continue
        for q in range(ptr[a], ptr[a + 1]):
            if values[ev[q]] == -1:
                kept_edges.append(q)
        kept_clauses.append(a)
        new_ptr.append(len(kept_edges))
    ke = np.asarray(kept_edges, dtype=np.int64)
    newf = Formula(
        n=f.n,
        clause_ptr=_frozen(np.asarray(new_ptr, dtype=np.int64)),
        edge_var=_frozen(f.edge_var[ke].copy()),
        edge_sign=_frozen(f.edge_sign[ke].copy()),
    )
    return SimplifyOutcome(newf, implied, False, np.asarray(kept_clauses, dtype=np.int64), ke, vals)
