"""Feasible sequential linear programming with accelerated feasibility iterations."""

from .anderson import AaConfig, AndersonMemory, aa_feasibility_iterations, aa_gamma, aa_gamma_d1, aa_update
from .inner import InnerConfig, InnerResult, InnerStatus, contraction_estimate, feasibility_iterations
from .lp import BoxedLp, LpOutcome, LpStatus, build_plp, dump_boxed_lp, load_boxed_lp, solve_lp
from .model import (
    Classification,
    EvalCounters,
    EvaluationError,
    JacobianSnapshot,
    ModelError,
    StructuredNlp,
    active_set,
    classify_solution,
    eval_equality_residual,
    infeasibility,
    take_snapshot,
    zero_order_mismatch,
)
from .outer import FslpConfig, SolveReport, SolveStatus, make_config, solve, trust_region_update
from .problems import (
    Lcg64,
    Obstacle,
    OcpSpec,
    ProblemError,
    analytic_min_time,
    build_p2p_ocp,
    circle_problem,
    init_feasible,
    perturbed_test_set,
)

__version__ = "0.1.0"
