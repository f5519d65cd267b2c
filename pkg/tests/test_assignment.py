import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import formulas_with_x, lit
from splat.assignment import (
    STAR,
    InvalidAssignmentError,
    Status,
    WeightParams,
    as_assignment,
    classify,
    clause_status,
    counts,
    format_assignment,
    invalid_clauses,
    is_valid,
    log_weight,
    parse_assignment,
    read_assignment,
    save_assignment,
    weight,
)


def test_string_roundtrip(tmp_path):
    x = parse_assignment("01*1")
    assert x.tolist() == [0, 1, STAR, 1]
    assert format_assignment(x) == "01*1"
    p = tmp_path / "x.sol"
    save_assignment(x, p)
    assert read_assignment(p).tolist() == x.tolist()
    with pytest.raises(ValueError):
        parse_assignment("01?")


def test_as_assignment_checks():
    with pytest.raises(ValueError):
        as_assignment([0, 3])
    with pytest.raises(ValueError):
        as_assignment([0, 1], n=3)
    with pytest.raises(ValueError):
        as_assignment([[0]])


def test_weight_params_range():
    with pytest.raises(ValueError):
        WeightParams(1.2, 0.5)
    w = WeightParams.from_rho(0.95)
    assert w.omega_star == 0.95 and math.isclose(w.omega_o, 0.05)


def test_clause_validity_rule():
    f = lit(3, [[1, 2, 3]])
    # no satisfying literal and at most one star: invalid
    assert not is_valid(f, [0, 0, 0])
    assert not is_valid(f, [0, 0, STAR])
    # two stars with no satisfier is fine
    assert is_valid(f, [0, STAR, STAR])
    assert is_valid(f, [STAR, STAR, STAR])
    st = clause_status(f, [1, 0, 0], 0)
    assert st.valid and st.constrained_var == 0
    assert clause_status(f, [1, 0, STAR], 0).constrained_var is None
    assert invalid_clauses(f, [0, 0, STAR]).tolist() == [0]


def test_classify_and_weight():
    f = lit(3, [[1, 2, 3], [-1, 2]])
    x = [1, 0, 0]
    # clause 0 constrains x1; clause 1 constrained? literal -1 false, 2 false -> invalid
    assert not is_valid(f, x)
    x = [1, 1, 0]
    rep = classify(f, x)
    assert rep.parents[1] == [1]
    assert rep.status.tolist() == [Status.UNCONSTRAINED, Status.CONSTRAINED, Status.UNCONSTRAINED]
    assert counts(f, x) == (0, 1, 2)
    w = WeightParams(0.3, 0.6)
    assert math.isclose(weight(f, x, w), 0.3**2)
    assert math.isclose(log_weight(f, x, w), 2 * math.log(0.3))
    y = [STAR, STAR, STAR]
    assert counts(f, y) == (3, 0, 0)
    assert math.isclose(weight(f, y, w), 0.6**3)


def test_invalid_weight_and_classify():
    f = lit(2, [[1, 2]])
    w = WeightParams(0.5, 0.5)
    assert weight(f, [0, 0], w) == 0.0
    assert log_weight(f, [0, 0], w) == -math.inf
    assert counts(f, [0, 0]) is None
    with pytest.raises(InvalidAssignmentError):
        classify(f, [0, 0])


def test_zero_omega_log_weight():
    f = lit(2, [[1, 2]])
    assert log_weight(f, [STAR, STAR], WeightParams(0.5, 0.0)) == -math.inf
    assert weight(f, [STAR, STAR], WeightParams(0.5, 0.0)) == 0.0


@given(formulas_with_x(max_n=7, max_m=8))
@settings(max_examples=150, deadline=None)
def test_classify_matches_definitions(fx):
    f, x = fx
    valid = is_valid(f, x)
    per_clause = [clause_status(f, x, a) for a in range(f.m)]
    assert valid == all(c.valid for c in per_clause)
    if not valid:
        return
    rep = classify(f, x)
    for i in range(f.n):
        is_constrained = any(c.constrained_var == i for c in per_clause)
        if x[i] == STAR:
            assert rep.status[i] == Status.STAR
        elif is_constrained:
            assert rep.status[i] == Status.CONSTRAINED
        else:
            assert rep.status[i] == Status.UNCONSTRAINED
    assert rep.n_star + rep.n_c + rep.n_o == f.n
    assert sum(len(p) for p in rep.parents) == sum(c.constrained_var is not None for c in per_clause)
    # a full assignment is valid exactly when it satisfies the formula
    if np.all(x != STAR):
        assert valid == f.is_satisfied_by(x)
