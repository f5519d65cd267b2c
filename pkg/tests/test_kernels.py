"""The compiled kernels and their pure-Python twins give bit-identical results."""

import numpy as np
import pytest

from splat import _backend
from splat.assignment import STAR, WeightParams
from splat.formula import random_ksat
from splat.gibbs import _Chain
from splat.mrf_bp import bp_init
from splat.sp import sp_init

pytestmark = pytest.mark.skipif(
    "cython" not in _backend.available_backends(), reason="compiled kernels not built"
)


@pytest.fixture(scope="module")
def mods():
    return _backend.get_kernels("python"), _backend.get_kernels("cython")


def _csr(f):
    g = f.graph
    return f.clause_ptr, f.edge_var, f.edge_sign, f.edge_clause, g.var_ptr, g.var_edges


def _twins(*arrays):
    return [a.copy() for a in arrays], [a.copy() for a in arrays]


def _same(xs, ys):
    for a, b in zip(xs, ys):
        assert np.array_equal(a, b) and a.tobytes() == b.tobytes()


def test_backend_selection():
    assert _backend.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


@pytest.mark.parametrize("rho", [0.0, 0.5, 0.95, 1.0])
def test_sp_sweep(mods, rho):
    f = random_ksat(300, 3, 4.2, 1)
    cp, ev, es, _, vp, ve = _csr(f)
    m = sp_init(f, 2, rho)
    (a_eta, a_c, a_pi), (b_eta, b_c, b_pi) = _twins(m.eta, m.eta_c, m.pi)
    for _ in range(5):
        ra = mods[0].sp_sweep(cp, ev, es, vp, ve, m.order, a_eta, a_c, a_pi, rho, True)
        rb = mods[1].sp_sweep(cp, ev, es, vp, ve, m.order, b_eta, b_c, b_pi, rho, True)
        assert tuple(ra) == tuple(rb)
        _same([a_eta, a_c, a_pi], [b_eta, b_c, b_pi])


def test_bp_sweep(mods):
    f = random_ksat(200, 3, 4.0, 3)
    cp, ev, es, _, vp, ve = _csr(f)
    w = WeightParams(0.2, 0.7)
    m = bp_init(f, w, 4)
    (a_eta, a_r), (b_eta, b_r) = _twins(m.eta, m.r)
    for _ in range(5):
        ra = mods[0].bp_sweep(cp, ev, es, vp, ve, m.order, a_eta, a_r, 0.2, 0.7)
        rb = mods[1].bp_sweep(cp, ev, es, vp, ve, m.order, b_eta, b_r, 0.2, 0.7)
        assert tuple(ra) == tuple(rb)
        _same([a_eta, a_r], [b_eta, b_r])


def test_walksat_chunk(mods):
    f = random_ksat(200, 3, 4.0, 5)
    cp, ev, es, ec, vp, ve = _csr(f)
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, f.n).astype(np.int8)
    sat_lit = (x[ev] != es).astype(np.int64)
    truecnt = np.add.reduceat(sat_lit, cp[:-1]).astype(np.int64)
    ids = np.nonzero(truecnt == 0)[0]
    unsat = np.full(f.m, -1, dtype=np.int64)
    unsat[: len(ids)] = ids
    pos = np.full(f.m, -1, dtype=np.int64)
    pos[ids] = np.arange(len(ids))
    nunsat = np.array([len(ids)], dtype=np.int64)
    rand = rng.random((5000, 3))
    A, B = _twins(x, truecnt, unsat, pos, nunsat)
    fa = mods[0].walksat_chunk(cp, ev, es, ec, vp, ve, *A, rand, 0.5)
    fb = mods[1].walksat_chunk(cp, ev, es, ec, vp, ve, *B, rand, 0.5)
    assert fa == fb
    _same(A, B)


def test_gibbs_chunk(mods):
    f = random_ksat(10, 3, 3.0, 6)
    cp, ev, es, ec, vp, ve = _csr(f)
    w = WeightParams(0.3, 0.6)
    rand = np.random.default_rng(1).random((20_000, 2))
    outs = []
    for mod in mods:
        ch = _Chain(f, w, record_states=True)
        ret = mod.gibbs_chunk(
            cp, ev, es, ec, vp, ve, ch.x, ch.nsat, ch.nstar, ch.satsum, ch.ucount, rand,
            0, 5000, 0.3, 0.6, ch.last, ch.occ, ch.hist, ch.code, ch.pow3,
        )
        outs.append((ret, [ch.x, ch.nsat, ch.nstar, ch.satsum, ch.ucount, ch.last, ch.occ, ch.hist, ch.code]))
    assert outs[0][0] == outs[1][0]
    _same(outs[0][1], outs[1][1])


def test_peel(mods):
    from splat import oracle

    f = random_ksat(60, 3, 3.5, 7)
    x = oracle.find_satisfying(f, 0)
    cp, ev, es, ec, vp, ve = _csr(f)
    rand = np.random.default_rng(2).random(f.n)
    mask = np.ones(f.n, dtype=np.uint8)
    outs = []
    for mod in mods:
        y = x.copy()
        ts = np.zeros(f.n + 1, dtype=np.int64)
        tu = np.zeros(f.n + 1, dtype=np.int64)
        steps = mod.peel(cp, ev, es, ec, vp, ve, y, mask, rand, ts, tu)
        outs.append((steps, [y, ts, tu]))
    assert outs[0][0] == outs[1][0]
    _same(outs[0][1], outs[1][1])
    assert np.all((outs[0][1][0] == x) | (outs[0][1][0] == STAR))


def test_solver_identical_across_backends(mods, monkeypatch):
    import importlib

    from conftest import KERNEL_USERS
    from splat.decimation import SolverConfig, solve

    f = random_ksat(300, 3, 3.8, 8)
    reports = []
    for mod in mods:
        for name in KERNEL_USERS:
            monkeypatch.setattr(importlib.import_module(name), "_k", mod)
        reports.append(solve(f, SolverConfig(seed=1)))
    a, b = reports
    assert a.status == b.status and a.rounds == b.rounds
    assert np.array_equal(a.assignment, b.assignment)
