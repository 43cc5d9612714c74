from .embedding import abs2_inner, embed_complex, hermitian_rows, real_inner, unembed
from .problems import (MinPowerResult, ScaLayout, build_sca_subproblem, min_power_feasible,
                       penalized_objective, sca_lower_bound, surrogate_objective)
from .program import (INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, ConicProgram, ConicSolution,
                      LinearEq, LinearLeq, QuadLeqAffine, SocLeq, solve)

__all__ = [
    "abs2_inner", "embed_complex", "hermitian_rows", "real_inner", "unembed",
    "MinPowerResult", "ScaLayout", "build_sca_subproblem", "min_power_feasible",
    "penalized_objective", "sca_lower_bound", "surrogate_objective",
    "INFEASIBLE", "NUMERICAL_FAILURE", "OPTIMAL", "ConicProgram", "ConicSolution",
    "LinearEq", "LinearLeq", "QuadLeqAffine", "SocLeq", "solve",
]
