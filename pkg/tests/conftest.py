import numpy as np
import pytest
from hypothesis import strategies as st

from splat import _backend
from splat.formula import Formula

# modules that bind the kernel module at import time
KERNEL_USERS = ("splat.sp", "splat.mrf_bp", "splat.decimation", "splat.gibbs", "splat.peeling")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical or large-n checks")


@pytest.fixture(params=_backend.available_backends())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    import importlib

    mod = _backend.get_kernels(request.param)
    for name in KERNEL_USERS:
        monkeypatch.setattr(importlib.import_module(name), "_k", mod)
    return request.param


@st.composite
def formulas(draw, max_n=7, max_m=10, max_k=3):
    """Small formulas with distinct variables per clause (widths 1..max_k)."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(0, max_m))
    clauses = []
    for _ in range(m):
        k = draw(st.integers(1, min(max_k, n)))
        vs = draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))
        signs = draw(st.lists(st.integers(0, 1), min_size=k, max_size=k))
        clauses.append(list(zip(vs, signs)))
    return Formula.from_clauses(n, clauses)


@st.composite
def formulas_with_x(draw, **kw):
    f = draw(formulas(**kw))
    x = np.array(draw(st.lists(st.integers(0, 2), min_size=f.n, max_size=f.n)), dtype=np.int8)
    return f, x


def lit(n, clauses):
    return Formula.from_literals(n, clauses)


# small hand-checked formulas used across modules
LATTICE_A = Formula.from_literals(4, [[-1, -2, 3], [2, -3, -4]])
LATTICE_B = Formula.from_literals(5, [[-1, 2, 3], [1, -2, 3], [2, -3, 1], [2, -3, 5], [1, 5, -4]])
BIJECTION = Formula.from_literals(4, [[1, 2, 3], [-2, -3, 4]])
FIG3 = Formula.from_literals(5, [[1, -2, -3], [-1, 2, 4], [-2, 3, 5], [-2, 4, 5]])


ACCEPTANCE_LINES: list[str] = []


def acceptance_line(tag: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
