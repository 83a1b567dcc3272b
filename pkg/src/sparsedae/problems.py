"""Built-in benchmark problems.

ex1  oscillatory index-1 DAE:      y' = z,  y^2 + z^2 = 1
ex2  Van der Pol (stiff ODE pair), mu = 2
ex3  DAE needing consistent initialization: -100 ln(z) + 2y = 5
ex4  1-D reaction-diffusion PDE pair, cell-centered FD with ghost nodes
ex5  2-D diffusion with quadratic consumption on the unit square
ex6  2-D electrolyte concentration/potential (tertiary current distribution)

The PDE problems make every ghost node a first-class algebraic unknown whose
defining equation is the boundary condition; that is what produces system
sizes 2N+4, NM+2N+2M, and 2NM+4N+4M.

ex6's physical parameters are not calibrated against published data; the
defaults Dx=Dy=Da=delta=1 are placeholders and all four are settable.  The
electrode rows at x=0 use face averages: the concentration flux balances
Da*c_face*phi_face and the potential flux balances Da*phi_face.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as ex
from .errors import InvalidGrid, UnknownObservable
from .system import DaeSystem


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid; M/dy are unused for 1-D problems."""

    n: int
    m: int
    dx: float
    dy: float


def example1() -> DaeSystem:
    y, z = ex.U(1), ex.U(2)
    return DaeSystem(
        ode_rhs=(z,),
        alg_residual=(y * y + z * z - 1.0,),
        var_names=("y", "z"),
        y0z0=(0.0, 0.95),
    )


def example1_piecewise() -> DaeSystem:
    """ex1 with a piecewise right-hand side: y' = z * (1 if z >= 0.7 else 1/2)."""
    y, z = ex.U(1), ex.U(2)
    gain = ex.piecewise((ex.Branch(z, ">=", 0.7, ex.Const(1.0)),), ex.Const(0.5))
    return DaeSystem(
        ode_rhs=(z * gain,),
        alg_residual=(y * y + z * z - 1.0,),
        var_names=("y", "z"),
        y0z0=(0.0, 0.95),
    )


def example2() -> DaeSystem:
    x, y = ex.U(1), ex.U(2)
    mu = ex.Param("mu")
    return DaeSystem(
        ode_rhs=(mu * (1.0 - y * y) * x - y, x),
        alg_residual=(),
        var_names=("x", "y"),
        y0z0=(0.0, 2.0),
        params={"mu": 2.0},
    )


def example3() -> DaeSystem:
    y, z = ex.U(1), ex.U(2)
    return DaeSystem(
        ode_rhs=(-2.0 * y + z * z,),
        alg_residual=(-100.0 * ex.ln(z) + 2.0 * y - 5.0,),
        var_names=("y", "z"),
        y0z0=(2.0, 1.0),
    )


def decay() -> DaeSystem:
    """Linear decay y' = -y, y(0) = 1; exact solution exp(-t)."""
    return DaeSystem(
        ode_rhs=(-ex.U(1),),
        alg_residual=(),
        var_names=("y",),
        y0z0=(1.0,),
    )


def example4(n: int) -> DaeSystem:
    """1-D PDE pair with ghost nodes; 2n+4 unknowns.

    Layout: c_1..c_n (ODE), then z_1..z_n, c_0, c_{n+1}, z_0, z_{n+1}."""
    if n < 2:
        raise InvalidGrid("example4 needs N >= 2")
    dx = 1.0 / n
    inv_dx2 = 1.0 / (dx * dx)

    def c(i):  # 0..n+1 with ghosts
        if i == 0:
            return ex.U(2 * n + 1)
        if i == n + 1:
            return ex.U(2 * n + 2)
        return ex.U(i)

    def z(i):
        if i == 0:
            return ex.U(2 * n + 3)
        if i == n + 1:
            return ex.U(2 * n + 4)
        return ex.U(n + i)

    odes = tuple(
        (c(i + 1) - 2.0 * c(i) + c(i - 1)) * inv_dx2 - c(i) * (1.0 + z(i))
        for i in range(1, n + 1)
    )
    alg: List[ex.Expr] = [
        (z(i + 1) - 2.0 * z(i) + z(i - 1)) * inv_dx2 - (1.0 - c(i) * c(i)) * ex.exp(-z(i))
        for i in range(1, n + 1)
    ]
    alg.append((c(1) - c(0)) / dx)
    alg.append((c(n) + c(n + 1)) * 0.5 - 1.0)
    alg.append((z(1) - z(0)) / dx)
    alg.append((z(n) + z(n + 1)) * 0.5)

    names = ([f"c_{i}" for i in range(1, n + 1)]
             + [f"z_{i}" for i in range(1, n + 1)]
             + ["c_0", f"c_{n + 1}", "z_0", f"z_{n + 1}"])
    init = [1.0] * n + [0.0] * n + [1.0, 1.0, 0.0, 0.0]
    observables = {
        "c_x0": ((2 * n + 1, 0.5), (1, 0.5)),
        "z_x0": ((2 * n + 3, 0.5), (n + 1, 0.5)),
    }
    return DaeSystem(
        ode_rhs=odes,
        alg_residual=tuple(alg),
        var_names=tuple(names),
        y0z0=tuple(init),
        observables=observables,
    )


def example5(n: int, m: int, phi: float = 0.5, c0: float = 0.0) -> DaeSystem:
    """2-D diffusion-consumption on the unit square; n*m + 2n + 2m unknowns.

    Interior cells are ODE variables; the four ghost layers are algebraic
    (no corner ghosts: the five-point stencil never touches them).  ``c0``
    sets the interior initial value; with the walls held at 1, c0=0 starts
    a sharp boundary layer while c0=1 starts from wall equilibrium."""
    if n < 2 or m < 2:
        raise InvalidGrid("example5 needs N, M >= 2")
    dx, dy = 1.0 / n, 1.0 / m
    inv_dx2, inv_dy2 = 1.0 / (dx * dx), 1.0 / (dy * dy)
    nm = n * m

    def cell(i, j):
        return ex.U((j - 1) * n + i)

    def gw(j):
        return ex.U(nm + j)

    def ge(j):
        return ex.U(nm + m + j)

    def gs(i):
        return ex.U(nm + 2 * m + i)

    def gn(i):
        return ex.U(nm + 2 * m + n + i)

    p2 = ex.Param("phi") * ex.Param("phi")
    odes = []
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            cc = cell(i, j)
            cw = cell(i - 1, j) if i > 1 else gw(j)
            ce = cell(i + 1, j) if i < n else ge(j)
            cs = cell(i, j - 1) if j > 1 else gs(i)
            cn = cell(i, j + 1) if j < m else gn(i)
            odes.append((ce - 2.0 * cc + cw) * inv_dx2
                        + (cn - 2.0 * cc + cs) * inv_dy2
                        - p2 * cc * cc)

    alg: List[ex.Expr] = []
    for j in range(1, m + 1):  # zero flux at x=0
        alg.append((cell(1, j) - gw(j)) / dx)
    for j in range(1, m + 1):  # Dirichlet c=1 at x=1
        alg.append((cell(n, j) + ge(j)) * 0.5 - 1.0)
    for i in range(1, n + 1):  # zero flux at y=0
        alg.append((cell(i, 1) - gs(i)) / dy)
    for i in range(1, n + 1):  # Dirichlet c=1 at y=1
        alg.append((cell(i, m) + gn(i)) * 0.5 - 1.0)

    names = [f"c_{i}_{j}" for j in range(1, m + 1) for i in range(1, n + 1)]
    names += [f"cW_{j}" for j in range(1, m + 1)]
    names += [f"cE_{j}" for j in range(1, m + 1)]
    names += [f"cS_{i}" for i in range(1, n + 1)]
    names += [f"cN_{i}" for i in range(1, n + 1)]
    init = ([float(c0)] * nm + [float(c0)] * m + [2.0 - c0] * m
            + [float(c0)] * n + [2.0 - c0] * n)

    i0, j0 = max(1, n // 2), max(1, m // 2)
    observables = {
        "c_origin": ((nm + 1, 0.5), (1, 0.5)),                      # x=0 edge of cell (1,1)
        "c_center": (((j0 - 1) * n + i0, 1.0),),
    }
    return DaeSystem(
        ode_rhs=tuple(odes),
        alg_residual=tuple(alg),
        var_names=tuple(names),
        y0z0=tuple(init),
        params={"phi": float(phi)},
        observables=observables,
    )


def example6(n: int, m: Optional[int] = None, dx_coeff: float = 1.0,
             dy_coeff: float = 1.0, da: float = 1.0, delta: float = 1.0) -> DaeSystem:
    """2-D electrolyte model; 2nm + 4n + 4m unknowns, M defaults to 2N.

    Domain is x in [0, 0.1], y in [0, 1] with dx = 0.1/N, dy = 1/M.  The
    electrode occupies 0 < y <= 1/2 (grid rows j = 1..M/2); M must be even
    so the split falls between cells."""
    if m is None:
        m = 2 * n
    if n < 2 or m < 2:
        raise InvalidGrid("example6 needs N >= 2, M >= 2")
    if m % 2 != 0:
        raise InvalidGrid("example6 needs even M (electrode edge at y = H/2)")
    dx, dy = 0.1 / n, 1.0 / m
    nm = n * m
    half = m // 2

    Dx, Dy = ex.Param("Dx"), ex.Param("Dy")
    Da, Delta = ex.Param("Da"), ex.Param("delta")

    def c(i, j):
        return ex.U((j - 1) * n + i)

    def p(i, j):
        return ex.U(nm + (j - 1) * n + i)

    gc0 = 2 * nm

    def cgw(j):
        return ex.U(gc0 + j)

    def cge(j):
        return ex.U(gc0 + m + j)

    def cgs(i):
        return ex.U(gc0 + 2 * m + i)

    def cgn(i):
        return ex.U(gc0 + 2 * m + n + i)

    gp0 = 2 * nm + 2 * m + 2 * n

    def pgw(j):
        return ex.U(gp0 + j)

    def pge(j):
        return ex.U(gp0 + m + j)

    def pgs(i):
        return ex.U(gp0 + 2 * m + i)

    def pgn(i):
        return ex.U(gp0 + 2 * m + n + i)

    def neighbors(i, j, center, west, east, south, north):
        cw = west(j) if i == 1 else center(i - 1, j)
        ce_ = east(j) if i == n else center(i + 1, j)
        cs = south(i) if j == 1 else center(i, j - 1)
        cn = north(i) if j == m else center(i, j + 1)
        return cw, ce_, cs, cn

    inv_dx2, inv_dy2 = 1.0 / (dx * dx), 1.0 / (dy * dy)
    odes = []
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            cc = c(i, j)
            cw, ce_, cs, cn = neighbors(i, j, c, cgw, cge, cgs, cgn)
            odes.append(Dx * ((ce_ - 2.0 * cc + cw) * inv_dx2)
                        + Dy * ((cn - 2.0 * cc + cs) * inv_dy2))

    alg: List[ex.Expr] = []
    # potential rows: flux divergence with face-averaged concentrations
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            cc, pc = c(i, j), p(i, j)
            cw, ce_, cs, cn = neighbors(i, j, c, cgw, cge, cgs, cgn)
            pw, pe, ps, pn = neighbors(i, j, p, pgw, pge, pgs, pgn)
            flux_e = Dx * ((ce_ + cc) * 0.5) * ((pe - pc) / dx)
            flux_w = Dx * ((cc + cw) * 0.5) * ((pc - pw) / dx)
            flux_n = Dy * ((cc + cn) * 0.5) * ((pn - pc) / dy)
            flux_s = Dy * ((cc + cs) * 0.5) * ((pc - ps) / dy)
            alg.append((flux_e - flux_w) / dx + (flux_n - flux_s) / dy)

    # concentration ghosts
    for j in range(1, m + 1):  # x = 0: electrode kinetics / insulation
        if j <= half:
            face_c = (cgw(j) + c(1, j)) * 0.5
            face_p = (pgw(j) + p(1, j)) * 0.5
            alg.append(Dx * (c(1, j) - cgw(j)) / dx - Da * face_c * face_p)
        else:
            alg.append((c(1, j) - cgw(j)) / dx)
    for j in range(1, m + 1):  # x = L: applied flux
        alg.append(Dx * (cge(j) - c(n, j)) / dx - Delta)
    for i in range(1, n + 1):  # y = 0: zero flux
        alg.append((c(i, 1) - cgs(i)) / dy)
    for i in range(1, n + 1):  # y = H: zero flux
        alg.append((cgn(i) - c(i, m)) / dy)

    # potential ghosts
    for j in range(1, m + 1):  # x = 0
        if j <= half:
            face_p = (pgw(j) + p(1, j)) * 0.5
            alg.append(Dx * (p(1, j) - pgw(j)) / dx - Da * face_p)
        else:
            alg.append((p(1, j) - pgw(j)) / dx)
    for j in range(1, m + 1):  # x = L: applied current
        alg.append(Dx * ((cge(j) + c(n, j)) * 0.5) * ((pge(j) - p(n, j)) / dx) - Delta)
    for i in range(1, n + 1):  # y = 0
        alg.append((p(i, 1) - pgs(i)) / dy)
    for i in range(1, n + 1):  # y = H
        alg.append((pgn(i) - p(i, m)) / dy)

    names = [f"c_{i}_{j}" for j in range(1, m + 1) for i in range(1, n + 1)]
    names += [f"phi_{i}_{j}" for j in range(1, m + 1) for i in range(1, n + 1)]
    for fld in ("c", "phi"):
        names += [f"{fld}W_{j}" for j in range(1, m + 1)]
        names += [f"{fld}E_{j}" for j in range(1, m + 1)]
        names += [f"{fld}S_{i}" for i in range(1, n + 1)]
        names += [f"{fld}N_{i}" for i in range(1, n + 1)]

    init = [1.0] * nm + [0.0] * nm + [1.0] * (2 * m + 2 * n) + [0.0] * (2 * m + 2 * n)

    i0, j0 = max(1, n // 2), half
    observables = {
        "c_xmid_y0": ((gc0 + 2 * m + i0, 0.5), ((1 - 1) * n + i0, 0.5)),
        "phi_xmid_y0": ((gp0 + 2 * m + i0, 0.5), (nm + (1 - 1) * n + i0, 0.5)),
        "c_x0_ymid": ((gc0 + j0, 0.5), ((j0 - 1) * n + 1, 0.5)),
        "phi_x0_ymid": ((gp0 + j0, 0.5), (nm + (j0 - 1) * n + 1, 0.5)),
    }
    return DaeSystem(
        ode_rhs=tuple(odes),
        alg_residual=tuple(alg),
        var_names=tuple(names),
        y0z0=tuple(init),
        params={"Dx": float(dx_coeff), "Dy": float(dy_coeff),
                "Da": float(da), "delta": float(delta)},
        observables=observables,
    )


def probe(state: np.ndarray, sys: DaeSystem, observable: str) -> float:
    """Named observable value (two-cell averages etc.) from one state record."""
    try:
        combo = sys.observables[observable]
    except KeyError:
        raise UnknownObservable(
            f"{observable!r}; available: {sorted(sys.observables) or 'none'}"
        )
    return float(sum(w * state[k - 1] for k, w in combo))


# exact-solution oracles for order studies
ORACLES: Dict[str, Callable[[float], np.ndarray]] = {
    "ex1": lambda t: np.array([math.sin(t), math.cos(t)]),
    "decay": lambda t: np.array([math.exp(-t)]),
}


BUILTIN_GRIDDED = {"ex4", "ex5", "ex6"}


def make_builtin(name: str, n: int = 4, m: Optional[int] = None,
                 phi: float = 0.5, c0: float = 0.0,
                 dx_coeff: float = 1.0, dy_coeff: float = 1.0,
                 da: float = 1.0, delta: float = 1.0) -> DaeSystem:
    """CLI-facing constructor for the builtin problems."""
    if name == "ex1":
        return example1()
    if name == "ex1pw":
        return example1_piecewise()
    if name == "ex2":
        return example2()
    if name == "ex3":
        return example3()
    if name == "decay":
        return decay()
    if name == "ex4":
        return example4(n)
    if name == "ex5":
        return example5(n, m if m is not None else n, phi, c0)
    if name == "ex6":
        return example6(n, m, dx_coeff, dy_coeff, da, delta)
    raise KeyError(f"unknown builtin problem {name!r}")
