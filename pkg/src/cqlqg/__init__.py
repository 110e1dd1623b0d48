"""Locally optimal coherent quantum LQG controller synthesis.

The package finds stabilizing, physically realizable quantum controllers for
linear quantum plants by gradient descent over the Hamiltonian
parameterization u = (R, b, e), using the analytic gradient of the LQG cost
and an adaptive Armijo stepsize rule.  See the module docstrings of
:mod:`cqlqg.model`, :mod:`cqlqg.cost` and :mod:`cqlqg.descent` for the
underlying identities, and :mod:`cqlqg.cli` for the command-line interface.
"""

from .errors import (
    BacktrackExhaustedError,
    CqlqgError,
    DegenerateEquationError,
    DimensionError,
    NoStabilizerError,
    NumericError,
    ParseError,
    StabilityError,
    ValidationError,
)
from .linalg import (
    SpectralReport,
    asym,
    block,
    frobenius_inner,
    kron_solve,
    solve_ale,
    spectral_report,
    sym,
)
from .model import (
    CcrStructure,
    ClosedLoop,
    ControllerParams,
    ControllerRealization,
    PlantModel,
    PrResiduals,
    assemble_closed_loop,
    build_canonical_ccr,
    check_ccr_preservation,
    derive_plant_theta1,
    pr_residuals,
    random_pr_plant,
    random_symplectic,
    realize_controller,
    symplectic_transform,
)
from .cost import (
    AuxPair,
    CostGradient,
    Evaluation,
    GramianSet,
    cost_at,
    cost_equivalent_forms,
    cost_rational_oracle,
    evaluate,
    finite_diff_gradient,
    finite_diff_second_gateaux,
    gateaux_second,
    gradient,
    gramians,
    lqg_cost,
)
from .descent import (
    DescentConfig,
    DescentResult,
    IterationRecord,
    MultiStartResult,
    armijo_stepsize,
    descend,
    multi_start,
    random_stabilizing_init,
    search_horizon,
)
from .example import EXAMPLE_MIN_COST, example_optimum, example_plant, example_problem
from .problem import Problem, load_params, load_problem, save_params, save_problem

__version__ = "0.1.0"

__all__ = [
    "AuxPair",
    "BacktrackExhaustedError",
    "CcrStructure",
    "ClosedLoop",
    "ControllerParams",
    "ControllerRealization",
    "CostGradient",
    "CqlqgError",
    "DegenerateEquationError",
    "DescentConfig",
    "DescentResult",
    "DimensionError",
    "EXAMPLE_MIN_COST",
    "Evaluation",
    "GramianSet",
    "IterationRecord",
    "MultiStartResult",
    "NoStabilizerError",
    "NumericError",
    "ParseError",
    "PlantModel",
    "PrResiduals",
    "Problem",
    "SpectralReport",
    "StabilityError",
    "ValidationError",
    "armijo_stepsize",
    "assemble_closed_loop",
    "asym",
    "block",
    "build_canonical_ccr",
    "check_ccr_preservation",
    "cost_at",
    "cost_equivalent_forms",
    "cost_rational_oracle",
    "derive_plant_theta1",
    "descend",
    "evaluate",
    "example_optimum",
    "example_plant",
    "example_problem",
    "finite_diff_gradient",
    "finite_diff_second_gateaux",
    "frobenius_inner",
    "gateaux_second",
    "gradient",
    "gramians",
    "kron_solve",
    "load_params",
    "load_problem",
    "lqg_cost",
    "multi_start",
    "pr_residuals",
    "random_pr_plant",
    "random_stabilizing_init",
    "random_symplectic",
    "realize_controller",
    "save_params",
    "save_problem",
    "search_horizon",
    "solve_ale",
    "spectral_report",
    "sym",
    "symplectic_transform",
]
