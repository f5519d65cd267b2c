"""Randomized verification suites behind ``splat verify``.

Each suite is a per-trial function ``trial(seed) -> list[Check]``; trials
are independent, so they can be spread over processes. ``run_suite``
aggregates checks by name: a property passes when every trial passes it,
and its reported value is the worst one seen.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from splat import oracle
from splat.assignment import WeightParams
from splat.formula import Formula, random_ksat, random_tree_formula
from splat.gibbs import conditional_weights, gibbs_run, kernel_step
from splat.mrf_bp import bp_run, reduction_check
from splat.peeling import peel_to_core
from splat.sp import sp_fixed_point_from_assignment

IDENTITY_WEIGHTS = (WeightParams(0.5, 0.5), WeightParams(0.2, 0.8))
IDENTITY_SUB = WeightParams(0.3, 0.5)
EQUIVALENCE_RHOS = (0.0, 0.5, 0.9, 1.0)


@dataclass
class Check:
    name: str
    passed: bool
    value: float = 0.0  # worst error (or failure count) behind the verdict
    info: bool = False  # reported but never fails the suite


@dataclass
class PropertyResult:
    name: str
    passed: bool
    worst: float
    failures: int
    trials: int
    info: bool = False


@dataclass
class SuiteResult:
    suite: str
    properties: list[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed or p.info for p in self.properties)

    def lines(self) -> list[str]:
        out = []
        for p in self.properties:
            tag = "INFO" if p.info else ("PASS" if p.passed else "FAIL")
            out.append(f"{tag} {self.suite}/{p.name} worst={p.worst:.3e} failures={p.failures}/{p.trials}")
        return out


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _ksat_exact_m(n: int, m: int, k: int, seed) -> Formula:
    """Random k-SAT with exactly m clauses."""
    return random_ksat(n, k, m / n, seed)


# ---------------------------------------------------------------- identity


def identity_trial(seed: int, samples: int = 50) -> list[Check]:
    """Downset sums of up to ``samples`` valid x of one formula (n <= 10, m <= 15)."""
    rng = _rng(seed)
    n = int(rng.integers(3, 11))
    m = int(rng.integers(1, 16))
    f = _ksat_exact_m(n, m, 3, rng)
    space = oracle.state_space(f)
    table = oracle.enumerate_valid(f)
    rows = np.arange(len(table))
    if len(rows) > samples:
        rows = rng.choice(rows, size=samples, replace=False)
    eq_err = 0.0
    ineq_bad = 0
    stated_bad = 0
    for r in rows.tolist():
        codes = np.array(oracle.reachable(f, table.states[r], space), dtype=np.int64)
        n_o = space.n_o[codes]
        n_s = space.n_star[codes]
        ns_x = int(table.n_star[r])
        for w in IDENTITY_WEIGHTS:
            total = math.fsum((w.omega_o**n_o * w.omega_star**n_s).tolist())
            eq_err = max(eq_err, abs(total - w.omega_star**ns_x))
        w = IDENTITY_SUB
        total = math.fsum((w.omega_o**n_o * w.omega_star**n_s).tolist())
        # the smoothing argument gives W(Consistent(x)) as the lower bound
        floor = w.omega_star**ns_x * (w.omega_o + w.omega_star) ** (n - ns_x)
        if total < floor * (1.0 - 1e-12):
            ineq_bad += 1
        if total < w.omega_star**ns_x * (1.0 - 1e-12):
            stated_bad += 1
    return [
        Check("equality", eq_err < 1e-12, eq_err),
        Check("inequality", ineq_bad == 0, float(ineq_bad)),
        # the bound omega_*^n_*(x) alone fails whenever x has a non-star variable
        # and omega_o + omega_* < 1; kept visible as a counterexample count
        Check("inequality-without-smoothing-factor", stated_bad == 0, float(stated_bad), info=True),
    ]


# ------------------------------------------------------------- equivalence


def equivalence_trial(seed: int, sweeps: int = 100, resync: bool = True) -> list[Check]:
    """SP(rho) against BP on the weighted MRF for one n=50, alpha=4.2 formula."""
    f = random_ksat(50, 3, 4.2, seed)
    disc = 0.0
    viol = 0
    worst_excess = 0.0
    for rho in EQUIVALENCE_RHOS:
        rep = reduction_check(f, rho, sweeps, seed, resync=resync)
        disc = max(disc, rep.max_discrepancy)
        viol += rep.bound_violations
        worst_excess = max(worst_excess, rep.worst_excess)
    name = "sp-equals-bp" if resync else "sp-equals-bp-free-running"
    return [
        Check(name, disc < 1e-10, disc),
        Check("sum-product-bound", viol == 0, worst_excess),
    ]


# -------------------------------------------------------------------- core


def core_trial(seed: int) -> list[Check]:
    """SP(1) from a satisfying assignment lands on its peeled core."""
    rng = _rng(seed)
    for _ in range(20):
        n = int(rng.integers(5, 41))
        alpha = float(rng.uniform(1.0, 4.2))
        f = random_ksat(n, 3, alpha, rng)
        x = oracle.find_satisfying(f, rng)
        if x is not None:
            break
    else:
        return [Check("found-satisfying", False, 1.0)]
    fp = sp_fixed_point_from_assignment(f, x, seed=seed)
    peel = peel_to_core(f, x, seed)
    other = peel_to_core(f, x, seed + 1)
    exact = oracle.exact_core(f, x, orders=20, seed=seed)
    mism = int(np.sum(fp.core != peel.core))
    return [
        Check("sp1-converges", fp.converged, float(fp.sweeps)),
        Check("sp1-fields-equal-core", fp.converged and mism == 0, float(mism)),
        Check("core-order-independent",
              exact.order_independent and np.array_equal(peel.core, other.core)
              and np.array_equal(peel.core, exact.core), 0.0),
    ]


# -------------------------------------------------------------------- pgen


def pgen_trial(seed: int) -> list[Check]:
    """p_gen = p_W by enumeration, and the sigma/tau partition for a few x."""
    rng = _rng(seed)
    n = int(rng.integers(2, 9))
    k = min(3, n)
    m = int(rng.integers(1, max(2, int(1.5 * n)) + 1))
    f = _ksat_exact_m(n, m, k, rng)
    w = WeightParams(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.05, 1.0)))
    rep = oracle.verify_pgen(f, w)
    table = oracle.enumerate_valid(f)
    picks = rng.choice(len(table), size=min(3, len(table)), replace=False).tolist()
    sat = oracle.satisfying_assignments(f)
    xs = [table.states[r] for r in picks]
    if len(sat):
        xs.append(sat[int(rng.integers(len(sat)))])
    bad = sum(0 if oracle.sigma_tau_check(f, x).ok else 1 for x in xs)
    return [
        Check("pgen-equals-pw", rep.max_discrepancy < 1e-12, rep.max_discrepancy),
        Check("unique-parent-sets", rep.unique_parents, 0.0),
        Check("sigma-tau-partition", bad == 0, float(bad)),
    ]


# -------------------------------------------------------------------- tree


def tree_trial(seed: int) -> list[Check]:
    """BP on an acyclic formula reproduces the exact p_W marginals."""
    rng = _rng(seed)
    n = int(rng.integers(3, 11))
    k = int(rng.integers(2, 4))
    m = int(rng.integers(1, (n - 1) // (k - 1) + 1))
    f = random_tree_formula(n, k, m, rng)
    w = WeightParams(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.05, 1.0)))
    res = bp_run(f, w, tol=1e-14, max_sweeps=500, seed=seed)
    err = float(np.abs(res.fields.F - oracle.exact_marginals(f, w)).max())
    return [Check("bp-exact-on-trees", err < 1e-8, err)]


# ----------------------------------------------------------- gibbs-balance


def gibbs_balance_trial(seed: int, steps: int = 2_000_000) -> list[Check]:
    """Detailed balance and kernel agreement (n <= 6), stationarity (n <= 8)."""
    rng = _rng(seed)
    n = int(rng.integers(3, 9))
    k = min(3, n)
    m = int(rng.integers(1, n + 1))
    f = _ksat_exact_m(n, m, k, rng)
    w = WeightParams.from_rho(float(rng.uniform(0.2, 0.8)))
    table = oracle.enumerate_valid(f, w)
    pi = table.weights / table.Z
    out = []
    if n <= 6:
        P = oracle.transition_matrix(f, w, table)
        flow = pi[:, None] * P
        bal = float(np.abs(flow - flow.T).max())
        out.append(Check("detailed-balance", bal < 1e-12, bal))
        mism = 0
        for x in table.states:
            for i in range(n):
                cw = conditional_weights(f, x, i, w)
                cum = np.concatenate([[0.0], np.cumsum(cw)]) / cw.sum()
                for b in range(3):
                    if cw[b] > 0.0:
                        y = kernel_step(f, w, x, i, 0.5 * (cum[b] + cum[b + 1]))
                        mism += int(y[i] != b)
        out.append(Check("kernel-matches-conditionals", mism == 0, float(mism)))
    res = gibbs_run(f, w, steps=steps, burn_in=steps // 10, seed=seed, record_states=True)
    counts = res.state_counts
    total = int(counts.sum())
    leak = total - int(counts[table.codes].sum())  # visits to invalid states
    emp = counts[table.codes] / total
    tv = 0.5 * (float(np.abs(emp - pi).sum()) + leak / total)
    out.append(Check("stationary-tv", tv <= 0.05 and leak == 0, tv))
    return out


SUITES = {
    "identity": (identity_trial, 100),
    "equivalence": (equivalence_trial, 20),
    "core": (core_trial, 50),
    "pgen": (pgen_trial, 50),
    "tree": (tree_trial, 50),
    "gibbs-balance": (gibbs_balance_trial, 10),
}


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Trial t uses seed + t, so ``--seed 0`` runs formulas 0..trials-1."""
    return [seed + t for t in range(trials)]


def aggregate(suite: str, per_trial: list[list[Check]]) -> SuiteResult:
    names: list[str] = []
    for checks in per_trial:
        for c in checks:
            if c.name not in names:
                names.append(c.name)
    out = SuiteResult(suite)
    for name in names:
        cs = [c for checks in per_trial for c in checks if c.name == name]
        fails = sum(not c.passed for c in cs)
        out.properties.append(
            PropertyResult(name, fails == 0, max(c.value for c in cs), fails, len(cs), any(c.info for c in cs))
        )
    return out


def run_suite(suite: str, trials: int | None = None, seed: int = 0, jobs: int = 1) -> SuiteResult:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    fn, default_trials = SUITES[suite]
    seeds = trial_seeds(seed, default_trials if trials is None else trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            per_trial = list(ex.map(fn, seeds))
    else:
        per_trial = [fn(s) for s in seeds]
    return aggregate(suite, per_trial)
