import numpy as np
import pytest
from hypothesis import given, settings

from conftest import formulas, lit
from splat.formula import (
    DimacsError,
    Formula,
    FormulaError,
    assign_literals,
    condition,
    num_clauses,
    parse_dimacs,
    random_ksat,
    random_tree_formula,
    read_dimacs,
    save_dimacs,
    simplify,
    write_dimacs,
)


def test_literal_convention():
    f = lit(3, [[1, -2, 3]])
    assert f.clause(0) == ((0, 0), (1, 1), (2, 0))
    assert f.literals(0) == [1, -2, 3]
    # J is the unsatisfying value
    assert not f.is_satisfied_by([0, 1, 0])
    assert f.is_satisfied_by([1, 1, 0])


def test_parse_dimacs_basic():
    text = "c comment\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n"
    f = parse_dimacs(text)
    assert f.n == 3 and f.m == 2
    assert f.literals(0) == [1, -2]
    assert f.literals(1) == [2, 3, -1]
    assert f.widths.tolist() == [2, 3]
    assert f.k is None


@pytest.mark.parametrize(
    "text",
    [
        "1 2 0\n",
        "p cnf 2 1\n1 2\n",
        "p cnf 2 1\n1 3 0\n",
        "p cnf 2 1\n1 1 0\n",
        "p cnf 2 2\n1 2 0\n",
        "p cnf 2 1\n0\n",
        "p cnf 2 1\n1 x 0\n",
        "p cnf 2\n1 0\n",
        "p cnf 2 1\np cnf 2 1\n1 0\n",
        "",
    ],
)
def test_parse_dimacs_rejects(text):
    with pytest.raises(DimacsError):
        parse_dimacs(text)


@given(formulas(max_n=8, max_m=12))
@settings(max_examples=60, deadline=None)
def test_dimacs_roundtrip(f):
    assert parse_dimacs(write_dimacs(f, ["x"])) == f


def test_dimacs_file_roundtrip(tmp_path):
    f = random_ksat(20, 3, 4.0, 1)
    p = tmp_path / "f.cnf"
    save_dimacs(f, p)
    assert read_dimacs(p) == f


def test_from_clauses_validation():
    with pytest.raises(FormulaError):
        Formula.from_clauses(2, [[]])
    with pytest.raises(FormulaError):
        Formula.from_clauses(2, [[(2, 0)]])
    with pytest.raises(FormulaError):
        Formula.from_clauses(2, [[(0, 2)]])
    with pytest.raises(FormulaError):
        Formula.from_clauses(2, [[(0, 0), (0, 1)]])


def test_arrays_are_read_only():
    f = random_ksat(10, 3, 2.0, 0)
    with pytest.raises(ValueError):
        f.edge_var[0] = 1


def test_random_ksat_shape_and_determinism():
    f = random_ksat(100, 3, 4.2, 5)
    assert f.m == 420 and f.k == 3
    assert f == random_ksat(100, 3, 4.2, 5)
    assert f != random_ksat(100, 3, 4.2, 6)
    for a in range(f.m):
        vs = [v for v, _ in f.clause(a)]
        assert len(set(vs)) == 3


def test_num_clauses_rounding():
    assert num_clauses(5, 0.8) == 4
    assert num_clauses(10, 0.25) == 3
    assert num_clauses(1000, 4.2) == 4200


def test_random_ksat_rejects():
    with pytest.raises(ValueError):
        random_ksat(2, 3, 1.0)
    with pytest.raises(ValueError):
        random_ksat(10, 3, 0.0)


def test_tree_formula_is_forest():
    for seed in range(20):
        f = random_tree_formula(10, 3, 4, seed)
        # forest check: variables + clauses - edges = number of components >= 1, no cycle
        parent = list(range(f.n + f.m))

        def root(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for e in range(f.num_edges):
            a, b = root(int(f.edge_var[e])), root(f.n + int(f.edge_clause[e]))
            assert a != b
            parent[a] = b
    with pytest.raises(ValueError):
        random_tree_formula(4, 3, 2)


def test_graph_neighborhoods():
    f = lit(4, [[1, 2, -3], [-1, 3, 4], [2, -4]])
    g = f.graph
    assert g.clauses_of(0) == [0, 1]
    assert g.positive(0) == [0]
    assert g.negative(0) == [1]
    # clause 0 has x1 positive; clauses where x1 appears with the same sign / opposite sign
    assert g.agree(0, 1) == [2]
    assert g.disagree(0, 2) == [1]
    assert sorted(g.variable_neighbors(0)) == [1, 2, 3]


def test_assign_literals_propagates():
    f = lit(3, [[1, 2], [-2, 3], [-1, -3, 2]])
    out = condition(f, 0, 0)
    assert not out.contradiction
    assert out.values.tolist() == [0, 1, 1]
    assert (1, 1) in out.implied and (2, 1) in out.implied
    assert out.formula.m == 0


def test_assign_literals_contradiction():
    f = lit(2, [[1, 2], [1, -2]])
    assert assign_literals(f, [(0, 0)]).contradiction
    g = lit(1, [[1], [-1]])
    assert simplify(g).contradiction


def test_assign_literals_maps_edges():
    f = lit(4, [[1, 2, 3], [-1, 3, 4], [2, 3, 4]])
    out = assign_literals(f, [(0, 1)])
    assert out.kept_clauses.tolist() == [1, 2]
    # clause 1 lost its x1 literal
    assert out.formula.clause(0) == ((2, 0), (3, 0))
    assert np.array_equal(f.edge_var[out.kept_edges], out.formula.edge_var)


@given(formulas(max_n=7, max_m=10))
@settings(max_examples=80, deadline=None)
def test_simplify_preserves_solutions(f):
    from splat.oracle import satisfying_assignments

    sols = satisfying_assignments(f)
    out = simplify(f)
    if out.contradiction:
        assert len(sols) == 0
        return
    fixed = out.values >= 0
    kept = [s for s in sols if np.array_equal(s[fixed], out.values[fixed])]
    # every solution agrees with the forced values
    assert len(kept) == len(sols)
    for s in kept:
        assert out.formula.is_satisfied_by(s)
