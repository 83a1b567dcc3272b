"""Method residual construction and the increment formulation."""

import numpy as np
import pytest

from sparsedae import expr as ex
from sparsedae.errors import UnsupportedSystem
from sparsedae.system import (
    CN_EXPLICIT_PREFIX,
    DaeSystem,
    MethodKind,
    MethodResidual,
    build_residual,
    initialization_residual,
    state_update,
)


def simple_dae():
    # y' = z, 0 = y^2 + z^2 - 1
    return DaeSystem(
        ode_rhs=(ex.U(2),),
        alg_residual=(ex.U(1) * ex.U(1) + ex.U(2) * ex.U(2) - 1.0,),
        var_names=("y", "z"),
        y0z0=(0.0, 0.95),
    )


def ode_only():
    return DaeSystem(
        ode_rhs=(ex.neg(ex.U(1)),),
        alg_residual=(),
        var_names=("y",),
        y0z0=(1.0,),
    )


def eval_rows(mr: MethodResidual, uu, y0, h, extra=None):
    params = {f"Y0_{k + 1}": v for k, v in enumerate(y0)}
    params["h"] = h
    params.update(extra or {})
    return [ex.eval_expr(r, uu, params) for r in mr.rows]


def test_method_properties():
    assert [k.order for k in MethodKind] == [1, 2, 2, 3]
    assert [k.extrapolated_order for k in MethodKind] == [2, 4, 4, 4]
    assert all(k.a_stable for k in MethodKind)
    assert [k.l_stable for k in MethodKind] == [True, False, False, True]
    assert [k.stage_multiplier for k in MethodKind] == [1, 1, 1, 2]


def test_row_counts():
    sysd = simple_dae()
    for kind in MethodKind:
        mr = build_residual(sysd, kind)
        assert len(mr.rows) == kind.stage_multiplier * 2


def test_h_zero_root_moves_only_algebraic():
    # at h=0 with g(Y0)=0 the residual root is uu=0
    sysd = simple_dae()
    y0 = [0.6, 0.8]
    for kind in MethodKind:
        mr = build_residual(sysd, kind)
        uu = [0.0] * (kind.stage_multiplier * 2)
        extra = {f"{CN_EXPLICIT_PREFIX}1": 0.8} if kind is MethodKind.CN else None
        assert eval_rows(mr, uu, y0, 0.0, extra) == pytest.approx([0.0] * len(uu))


def test_backward_euler_rows_by_hand():
    # row 1: uu1 - h*(uu2 + z0); row 2: (uu1+y0)^2 + (uu2+z0)^2 - 1
    mr = build_residual(simple_dae(), MethodKind.EB)
    got = eval_rows(mr, [0.1, -0.2], [0.0, 1.0], 0.5)
    assert got[0] == pytest.approx(0.1 - 0.5 * 0.8)
    assert got[1] == pytest.approx(0.1 ** 2 + 0.8 ** 2 - 1.0)


def test_midpoint_ode_row_uses_half_increment():
    mr = build_residual(simple_dae(), MethodKind.IMPTRAP)
    got = eval_rows(mr, [0.1, -0.2], [0.0, 1.0], 0.5)
    # f at uu/2 + Y0: z = -0.1 + 1.0
    assert got[0] == pytest.approx(0.1 - 0.5 * 0.9)
    # constraint is projected at the endpoint, not the midpoint
    assert got[1] == pytest.approx(0.1 ** 2 + 0.8 ** 2 - 1.0)


def test_cn_explicit_term_is_a_parameter():
    mr = build_residual(simple_dae(), MethodKind.CN)
    assert mr.explicit_param_names() == [f"{CN_EXPLICIT_PREFIX}1"]
    got = eval_rows(mr, [0.1, -0.2], [0.0, 1.0], 0.5,
                    {f"{CN_EXPLICIT_PREFIX}1": 1.0})
    assert got[0] == pytest.approx(0.1 - 0.25 * 0.8 - 0.25 * 1.0)


def test_two_stage_rows_by_hand():
    mr = build_residual(ode_only(), MethodKind.RAD)
    assert len(mr.rows) == 2
    uu = [0.2, -0.1]
    y0 = [1.0]
    h = 0.3
    got = eval_rows(mr, uu, y0, h)
    # endpoint block: 5/2 uu1 - 9/2 uu2 - h*f(uu1 + y0)
    assert got[0] == pytest.approx(2.5 * 0.2 - 4.5 * (-0.1) - h * (-(0.2 + 1.0)))
    # interior block: 1/2 uu1 + 3/2 uu2 - h*f(uu2 + y0)
    assert got[1] == pytest.approx(0.5 * 0.2 + 1.5 * (-0.1) - h * (-(-0.1 + 1.0)))


def test_state_update_takes_first_block():
    y0 = np.array([1.0, 2.0])
    assert state_update(y0, np.array([0.1, 0.2]), MethodKind.EB) == pytest.approx([1.1, 2.2])
    got = state_update(y0, np.array([0.1, 0.2, 9.0, 9.0]), MethodKind.RAD)
    assert got == pytest.approx([1.1, 2.2])
    with pytest.raises(ValueError):
        state_update(y0, np.array([0.1]), MethodKind.EB)


def test_endpoint_projection_needs_algebraic_reference():
    # a constraint that touches only ODE variables cannot be projected
    bad = DaeSystem(
        ode_rhs=(ex.U(2), ex.neg(ex.U(1))),
        alg_residual=(ex.U(1) - 1.0,),
        var_names=("a", "b", "c"),
        y0z0=(1.0, 0.0, 0.0),
    )
    for kind in (MethodKind.CN, MethodKind.IMPTRAP):
        with pytest.raises(UnsupportedSystem):
            build_residual(bad, kind)
    # EB tolerates it: every variable is implicit at the endpoint anyway
    build_residual(bad, MethodKind.EB)


def test_initialization_residual_is_the_method_residual():
    sysd = simple_dae()
    a = initialization_residual(sysd, MethodKind.EB)
    b = build_residual(sysd, MethodKind.EB)
    assert a.rows == b.rows


def test_system_validation():
    with pytest.raises(ValueError):
        DaeSystem(ode_rhs=(ex.U(1),), alg_residual=(), var_names=("x", "y"),
                  y0z0=(0.0, 0.0))
    with pytest.raises(ValueError):
        DaeSystem(ode_rhs=(ex.Param("k") * ex.U(1),), alg_residual=(),
                  var_names=("x",), y0z0=(0.0,))  # undeclared parameter
