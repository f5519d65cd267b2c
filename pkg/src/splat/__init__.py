"""SP(rho) message passing for k-SAT, as belief propagation on a weighted
Markov random field over partial assignments."""

from splat._backend import BACKEND, available_backends
from splat.assignment import STAR, WeightParams, classify, is_valid, weight
from splat.decimation import SolverConfig, SolveReport, SolveStatus, solve, walksat
from splat.formula import Formula, parse_dimacs, random_ksat, read_dimacs, write_dimacs
from splat.gibbs import compare_topk, gibbs_run
from splat.mrf_bp import bp_run, reduction_check
from splat.peeling import core_restricted, peel_to_core, pure_literal
from splat.sp import sp_fields, sp_run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "STAR",
    "Formula",
    "SolveReport",
    "SolveStatus",
    "SolverConfig",
    "WeightParams",
    "available_backends",
    "bp_run",
    "classify",
    "compare_topk",
    "core_restricted",
    "gibbs_run",
    "is_valid",
    "parse_dimacs",
    "peel_to_core",
    "pure_literal",
    "random_ksat",
    "read_dimacs",
    "reduction_check",
    "solve",
    "sp_fields",
    "sp_run",
    "walksat",
    "weight",
]
