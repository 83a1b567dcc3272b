"""Modified Newton iteration against frozen LU factors."""

import numpy as np
import pytest

from sparsedae import expr as ex
from sparsedae.codegen import CompiledResidual, ParamLayout
from sparsedae.errors import NonFiniteResidual
from sparsedae.linalg import SparseMatrix, factorize
from sparsedae.newton import NewtonOutcome, default_ctol, newton_solve


def make_residual(exprs, params=None):
    layout = ParamLayout(sorted(params or {}))
    res = CompiledResidual(exprs, layout)
    res.set_params(params or {})
    return res


def test_linear_system_converges_in_one_iteration():
    # R(u) = A u - rhs with the exact Jacobian factorized
    exprs = [2.0 * ex.U(1) + ex.U(2) - 3.0,
             ex.U(1) + 3.0 * ex.U(2) - 4.0]
    res = make_residual(exprs)
    f = factorize(SparseMatrix.from_dense(np.array([[2.0, 1.0], [1.0, 3.0]])))
    out = newton_solve(res, f, np.zeros(2), max_iter=5, ctol=1e-12)
    assert out.converged
    assert out.iterations <= 2  # exact solve, second pass only confirms
    assert out.uu == pytest.approx([1.0, 1.0])


def test_quadratic_convergence_with_fresh_jacobian():
    # u^2 - 2 = 0 from u0 = 1.5 with J evaluated at u0 and frozen:
    # linear contraction, but still reaches sqrt(2)
    res = make_residual([ex.U(1) * ex.U(1) - 2.0])
    f = factorize(SparseMatrix.from_dense(np.array([[3.0]])))  # 2*u0
    out = newton_solve(res, f, np.array([1.5]), max_iter=30, ctol=1e-13)
    assert out.converged
    assert out.uu[0] == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_budget_exhaustion_is_not_an_error():
    # badly scaled frozen Jacobian: converges too slowly to finish
    res = make_residual([ex.U(1) * ex.U(1) - 2.0])
    f = factorize(SparseMatrix.from_dense(np.array([[40.0]])))
    out = newton_solve(res, f, np.array([1.5]), max_iter=3, ctol=1e-13)
    assert isinstance(out, NewtonOutcome)
    assert not out.converged
    assert out.iterations == 3
    assert np.isfinite(out.correction_norm)


def test_early_exit_on_small_correction():
    res = make_residual([ex.U(1) - 1.0])
    f = factorize(SparseMatrix.from_dense(np.array([[1.0]])))
    out = newton_solve(res, f, np.array([1.0 + 1e-15]), max_iter=50, ctol=1e-8)
    assert out.converged
    assert out.iterations == 1


def test_nonfinite_residual_raises():
    res = make_residual([ex.ln(ex.U(1))])
    f = factorize(SparseMatrix.from_dense(np.array([[1.0]])))
    with pytest.raises(NonFiniteResidual):
        newton_solve(res, f, np.array([-0.5]), max_iter=5, ctol=1e-10)


def test_never_factorizes_only_solves():
    res = make_residual([ex.U(1) * ex.U(1) - 2.0])
    f = factorize(SparseMatrix.from_dense(np.array([[3.0]])))
    out = newton_solve(res, f, np.array([1.5]), max_iter=30, ctol=1e-13)
    # one triangular solve per iteration, no refactorization side channel
    assert f.solve_count == out.iterations


def test_uu0_length_validated():
    res = make_residual([ex.U(1) - 1.0])
    f = factorize(SparseMatrix.from_dense(np.array([[1.0]])))
    with pytest.raises(ValueError):
        newton_solve(res, f, np.zeros(2), max_iter=5, ctol=1e-10)


def test_default_ctol():
    assert default_ctol(1e-6) == pytest.approx(1e-8)
    with pytest.raises(ValueError):
        default_ctol(0.0)


def test_parameters_enter_through_bindings():
    res = make_residual([ex.Param("k") * ex.U(1) - 6.0], params={"k": 2.0})
    f = factorize(SparseMatrix.from_dense(np.array([[2.0]])))
    out = newton_solve(res, f, np.zeros(1), max_iter=5, ctol=1e-12)
    assert out.uu[0] == pytest.approx(3.0)
    res.set_params({"k": 3.0})
    f2 = factorize(SparseMatrix.from_dense(np.array([[3.0]])))
    out2 = newton_solve(res, f2, np.zeros(1), max_iter=5, ctol=1e-12)
    assert out2.uu[0] == pytest.approx(2.0)
