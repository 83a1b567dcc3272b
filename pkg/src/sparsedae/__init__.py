"""Sparse index-1 DAE and stiff ODE solver.

Symbolic residual definition, automatic sparsity detection with analytic
Jacobians, four A-stable single-step implicit methods, and step-doubling
adaptive error control with Richardson extrapolation.
"""

from .errors import (
    EmptyRow,
    InitializationFailed,
    InvalidGrid,
    NonFiniteResidual,
    NonFiniteValue,
    ProblemFileError,
    SingularMatrix,
    SparseDaeError,
    UnboundSymbol,
    UnknownObservable,
    UnsupportedSystem,
)
from .expr import Branch, Const, Expr, Param, Piecewise, U, diff, eval_expr, exp, free_unknowns, ln, piecewise, substitute
from .grammar import format_expr, parse_expr
from .jacobian import JacobianAssembler, SparsityPattern, SymbolicJacobian, assemble, detect_pattern, differentiate
from .linalg import Factorization, SparseMatrix, factorize, read_matrix_market, solve, write_matrix_market
from .newton import NewtonOutcome, default_ctol, newton_solve
from .problemfile import load_problem, parse_problem_text
from .problems import (
    ORACLES,
    GridSpec,
    decay,
    example1,
    example1_piecewise,
    example2,
    example3,
    example4,
    example5,
    example6,
    make_builtin,
    probe,
)
from .stepper import (
    SolverOptions,
    Status,
    Stepper,
    StepTrial,
    Trajectory,
    error_norm,
    integrate,
    integrate_fixed,
    next_h,
    richardson,
)
from .system import (
    DaeSystem,
    MethodKind,
    MethodResidual,
    build_residual,
    initialization_residual,
    state_update,
)

__version__ = "0.1.0"
