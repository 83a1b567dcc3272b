"""Compilation of expression lists into fast numeric callables.

Tree-walking evaluation is fine for a handful of equations but far too slow
for the 10^4-row residuals coming out of 2-D discretizations.  Here each
expression list is printed as one flat Python function body and compiled
once per (system, method); evaluation then runs at plain-arithmetic speed.

Generated functions share a single calling convention::

    fn(u, b, h, p, out)

where ``u`` is the unknown vector (0-based ndarray), ``b`` the base-state
values bound to the Y0_* parameter slots, ``h`` the step size, ``p`` the
remaining parameter values in a fixed order, and ``out`` the output buffer.

No common-subexpression elimination is attempted; entries are emitted
row-major as written.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence

import numpy as np

from . import expr as ex
from .errors import NonFiniteValue

BASE_PREFIX = "Y0_"


class ParamLayout:
    """Fixed slot assignment for every non-base, non-h parameter name."""

    def __init__(self, names: Sequence[str]):
        self.names = list(names)
        self.slot = {n: i for i, n in enumerate(self.names)}

    def vector(self, values: Dict[str, float]) -> np.ndarray:
        p = np.empty(len(self.names))
        for n, i in self.slot.items():
            p[i] = values[n]
        return p


def _emit(e: ex.Expr, layout: ParamLayout) -> str:
    if isinstance(e, ex.Const):
        return repr(e.value)
    if isinstance(e, ex.U):
        return f"u[{e.index - 1}]"
    if isinstance(e, ex.Param):
        if e.name == "h":
            return "h"
        if e.name.startswith(BASE_PREFIX):
            return f"b[{int(e.name[len(BASE_PREFIX):]) - 1}]"
        return f"p[{layout.slot[e.name]}]"
    if isinstance(e, ex.Add):
        return "(" + " + ".join(_emit(t, layout) for t in e.terms) + ")"
    if isinstance(e, ex.Mul):
        return "(" + " * ".join(_emit(f, layout) for f in e.factors) + ")"
    if isinstance(e, ex.Div):
        return f"({_emit(e.num, layout)} / {_emit(e.den, layout)})"
    if isinstance(e, ex.Pow):
        return f"({_emit(e.base, layout)} ** {repr(e.exponent)})"
    if isinstance(e, ex.Neg):
        return f"(-{_emit(e.arg, layout)})"
    if isinstance(e, ex.ExpF):
        return f"exp({_emit(e.arg, layout)})"
    if isinstance(e, ex.LnF):
        return f"log({_emit(e.arg, layout)})"
    if isinstance(e, ex.Piecewise):
        s = _emit(e.default, layout)
        for b in reversed(e.branches):
            cond = f"{_emit(b.test, layout)} {b.op} {repr(b.threshold)}"
            s = f"({_emit(b.value, layout)} if {cond} else {s})"
        return s
    raise TypeError(f"unhandled node {type(e).__name__}")


def compile_exprs(exprs: Sequence[ex.Expr], layout: ParamLayout, tag: str = "residual"):
    """Compile a list of expressions into ``fn(u, b, h, p, out)``."""
    lines = [f"def _{tag}(u, b, h, p, out, exp=exp, log=log):"]
    if not exprs:
        lines.append("    pass")
    for i, e in enumerate(exprs):
        lines.append(f"    out[{i}] = {_emit(e, layout)}")
    source = "\n".join(lines)
    ns = {"exp": math.exp, "log": math.log}
    code = compile(source, f"<generated {tag}>", "exec")
    exec(code, ns)
    return ns[f"_{tag}"]


class CompiledResidual:
    """A method residual plus its numeric bindings, ready for Newton.

    ``set_base``/``set_h``/``set_params`` rebind values without touching the
    compiled structure.  ``evaluate`` raises NonFiniteResidual on any
    overflow, domain error, or non-finite output.
    """

    def __init__(self, exprs: Sequence[ex.Expr], layout: ParamLayout):
        self.n = len(exprs)
        self.layout = layout
        self._fn = compile_exprs(exprs, layout)
        self.b = np.zeros(0)
        self.h = 0.0
        self.p = np.zeros(len(layout.names))
        self._out = np.empty(self.n)

    def set_base(self, base: np.ndarray) -> None:
        self.b = np.asarray(base, dtype=float)

    def set_h(self, h: float) -> None:
        self.h = float(h)

    def set_params(self, values: Dict[str, float]) -> None:
        for name, v in values.items():
            self.p[self.layout.slot[name]] = v

    def evaluate(self, uu: np.ndarray, out: np.ndarray = None) -> np.ndarray:
        from .errors import NonFiniteResidual

        if out is None:
            out = self._out
        try:
            self._fn(uu, self.b, self.h, self.p, out)
        except (ZeroDivisionError, OverflowError, ValueError):
            raise NonFiniteResidual("residual evaluation left the domain")
        if not np.isfinite(out).all():
            raise NonFiniteResidual("residual evaluation produced non-finite values")
        return out
