import numpy as np
import pytest
from hypothesis import given, settings

from conftest import formulas_with_x, lit
from splat import oracle
from splat.assignment import STAR, InvalidAssignmentError, WeightParams, is_valid
from splat.formula import Formula, random_ksat
from splat.gibbs import (
    compare_topk,
    conditional_weights,
    gibbs_run,
    kernel_step,
    write_comparison_csv,
    write_tau_csv,
)
from splat.sp import BiasField

S = STAR


def test_conditional_weights_example():
    f = lit(3, [[1, 2, 3]])
    w = WeightParams(0.3, 0.6)
    cw = conditional_weights(f, [1, S, S], 0, w)
    assert np.allclose(cw, [0.3 * 0.36, 0.3 * 0.36, 0.6**3])


def test_conditional_weights_unique_satisfier_cannot_star():
    f = lit(3, [[1, 2, 3]])
    cw = conditional_weights(f, [1, 0, 0], 0, WeightParams(0.5, 0.5))
    assert cw[STAR] == 0.0 and cw[0] == 0.0 and cw[1] > 0


def test_conditional_weights_isolated():
    f = lit(3, [[1, 2]])
    w = WeightParams(0.2, 0.7)
    assert np.allclose(conditional_weights(f, [S, S, 0], 2, w), [0.2, 0.2, 0.7])
    with pytest.raises(InvalidAssignmentError):
        conditional_weights(f, [0, 0, 0], 2, w)


@given(formulas_with_x(max_n=6, max_m=6))
@settings(max_examples=100, deadline=None)
def test_conditional_weights_ratio_of_weights(fx):
    from splat.assignment import weight

    f, x = fx
    if not is_valid(f, x):
        return
    w = WeightParams(0.3, 0.6)
    for i in range(f.n):
        cw = conditional_weights(f, x, i, w)
        full = []
        for b in range(3):
            y = x.copy()
            y[i] = b
            full.append(weight(f, y, w))
        full = np.array(full)
        # the same distribution up to a positive constant
        assert np.allclose(cw / cw.sum(), full / full.sum(), rtol=0, atol=1e-12)


@pytest.mark.parametrize(
    "w, expect",
    [(WeightParams(0.5, 0.5), [1 / 3, 1 / 3, 1 / 3]), (WeightParams(0.25, 0.5), [0.25, 0.25, 0.5])],
)
def test_zero_clause_occupancy(backend, w, expect):
    f = Formula.from_clauses(3, [])
    res = gibbs_run(f, w, steps=100_000 * 3, seed=0)
    assert np.abs(res.tau - np.array(expect)).max() < 0.02
    assert np.allclose(res.tau.sum(axis=1), 1.0)


def test_debug_mode_checks_caches(backend):
    f = random_ksat(12, 3, 3.0, 1)
    res = gibbs_run(f, WeightParams(0.3, 0.6), steps=20_000, seed=2, debug=True, check_every=1000)
    assert is_valid(f, res.x)


def test_stationary_small(backend):
    f = random_ksat(5, 3, 1.0, 3)
    w = WeightParams.from_rho(0.5)
    table = oracle.enumerate_valid(f, w)
    res = gibbs_run(f, w, steps=1_000_000, burn_in=100_000, seed=0, record_states=True)
    counts = res.state_counts
    assert counts.sum() == 900_000
    assert counts.sum() == counts[table.codes].sum()
    emp = counts[table.codes] / counts.sum()
    assert 0.5 * np.abs(emp - table.weights / table.Z).sum() < 0.05


def test_detailed_balance_matrix():
    f = random_ksat(4, 3, 1.0, 0)
    w = WeightParams.from_rho(0.7)
    table = oracle.enumerate_valid(f, w)
    P = oracle.transition_matrix(f, w, table)
    assert np.allclose(P.sum(axis=1), 1.0)
    pi = table.weights / table.Z
    flow = pi[:, None] * P
    assert np.abs(flow - flow.T).max() < 1e-12


def test_kernel_step_matches_conditionals(backend):
    f = random_ksat(5, 3, 1.2, 4)
    w = WeightParams(0.35, 0.55)
    table = oracle.enumerate_valid(f, w)
    for x in table.states[:40]:
        for i in range(f.n):
            cw = conditional_weights(f, x, i, w)
            cum = np.concatenate([[0.0], np.cumsum(cw)]) / cw.sum()
            for b in range(3):
                if cw[b] > 0:
                    assert kernel_step(f, w, x, i, 0.5 * (cum[b] + cum[b + 1]))[i] == b


def test_run_arguments(backend):
    f = lit(3, [[1, 2, 3]])
    w = WeightParams(0.5, 0.5)
    with pytest.raises(ValueError):
        gibbs_run(f, w, steps=10, burn_in=10)
    with pytest.raises(ValueError):
        gibbs_run(lit(2, [[1]]), w, steps=10)
    res = gibbs_run(lit(2, [[1]]), w, steps=1000, x0=[1, S], seed=0)
    assert np.all(res.tau[0] == [0, 1, 0])
    with pytest.raises(InvalidAssignmentError):
        gibbs_run(f, w, steps=10, x0=[0, 0, 0])
    with pytest.raises(ValueError):
        gibbs_run(random_ksat(20, 3, 1.0, 0), w, steps=10, record_states=True)
    res = gibbs_run(f, w, seed=0)
    assert res.steps == 30_000 and res.burn_in == 6_000


def test_deterministic(backend):
    f = random_ksat(30, 3, 3.5, 2)
    w = WeightParams.from_rho(0.5)
    a = gibbs_run(f, w, steps=50_000, seed=9)
    b = gibbs_run(f, w, steps=50_000, seed=9)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.x, b.x)


def test_compare_topk():
    mu = np.array([[0.9, 0.05, 0.05], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
    tau = mu.copy()
    assert compare_topk(BiasField(mu), tau, k=3) == 0.0
    sp = np.array([[1.0, 0.0, 0.0]] * 4)
    gib = np.array([[0.0, 1.0, 0.0]] * 4)
    assert compare_topk(sp, gib, k=4) == 2.0
    with pytest.raises(ValueError):
        compare_topk(sp, gib, k=5)


def test_csv_outputs(tmp_path):
    f = lit(3, [[1, 2, 3]])
    res = gibbs_run(f, WeightParams(0.5, 0.5), steps=1000, seed=0)
    p = tmp_path / "tau.csv"
    write_tau_csv(res, p)
    assert p.read_text().splitlines()[0] == "var,tau0,tau1,taustar,bias"
    q = tmp_path / "cmp.csv"
    write_comparison_csv([(4.0, 0.9, 0.5, 0.1)], q)
    assert q.read_text().splitlines() == ["alpha,sp_rho,gibbs_rho,l1_topk", "4.0,0.9,0.5,0.1"]
