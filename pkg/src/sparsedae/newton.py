"""Modified Newton iteration with a frozen LU factorization.

The iteration never refactorizes: every correction is a triangular solve
against the Factorization handed in, however stale it may be.  Running out
of the iteration budget is not an error (the step-doubling error estimator
is the safety net); a non-finite residual evaluation is the only hard
failure and is reported to the caller for step rejection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codegen import CompiledResidual
from .errors import NonFiniteResidual
from .linalg import Factorization, solve


@dataclass
class NewtonOutcome:
    uu: np.ndarray
    iterations: int
    correction_norm: float
    converged: bool


def default_ctol(atol: float) -> float:
    """Newton correction tolerance derived from the step tolerance."""
    if atol <= 0:
        raise ValueError("atol must be positive")
    return 0.01 * atol


def newton_solve(
    res: CompiledResidual,
    f: Factorization,
    uu0: np.ndarray,
    max_iter: int,
    ctol: float,
) -> NewtonOutcome:
    """Iterate uu <- uu - F^-1 R(uu) up to ``max_iter`` times, declaring
    convergence early once the infinity norm of the correction drops to
    ``ctol``.  ``res`` must already be bound to (h, Y0, params); ``f`` may be
    a stale assembly of its Jacobian."""
    uu = np.array(uu0, dtype=float)
    if len(uu) != res.n:
        raise ValueError(f"uu0 length {len(uu)} != residual size {res.n}")
    corr_norm = np.inf
    for it in range(1, max_iter + 1):
        r = res.evaluate(uu)  # raises NonFiniteResidual
        delta = solve(f, r)
        uu -= delta
        corr_norm = float(np.max(np.abs(delta))) if len(delta) else 0.0
        if not np.isfinite(corr_norm):
            raise NonFiniteResidual("Newton correction went non-finite")
        if corr_norm <= ctol:
            return NewtonOutcome(uu=uu, iterations=it, correction_norm=corr_norm, converged=True)
    return NewtonOutcome(uu=uu, iterations=max_iter, correction_norm=corr_norm, converged=False)
