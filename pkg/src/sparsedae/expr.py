"""Symbolic scalar expression trees.

Expressions are built over 1-based unknown indices (the ``uu`` vector solved
for at each time step) and late-bound named parameters.  The node set is
deliberately small: arithmetic, integer/real powers, exp, ln, and piecewise
branches whose conditions compare a subexpression against a constant.

Trees are immutable; construction goes through the smart constructors
(``add``, ``mul``, ...) which do local constant folding and zero/one
elimination only.  No canonicalization beyond that: structural zeros are what
the sparsity detection relies on, not canonical forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from .errors import NonFiniteValue, UnboundSymbol

Number = Union[int, float]

_COMPARE_OPS = ("<", "<=", ">", ">=")


class Expr:
    """Base node. Subclasses are frozen dataclasses; safe to share across threads."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, other):
        return pow_(self, other)

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class U(Expr):
    """Unknown, 1-based index into the uu vector."""

    index: int


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Pow(Expr):
    """Power with a constant real exponent.  General a^b is lowered to
    exp(b*ln(a)) at construction time."""

    base: Expr
    exponent: float


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class ExpF(Expr):
    arg: Expr


@dataclass(frozen=True)
class LnF(Expr):
    arg: Expr


@dataclass(frozen=True)
class Branch:
    """One piecewise branch: taken when ``test <op> threshold`` holds."""

    test: Expr
    op: str
    threshold: float
    value: Expr


@dataclass(frozen=True)
class Piecewise(Expr):
    """First matching branch wins; boundary values follow listed order."""

    branches: tuple
    default: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    raise TypeError(f"cannot build an expression from {type(x).__name__}")


def _is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# --- smart constructors -------------------------------------------------


def add(*terms) -> Expr:
    flat = []
    const = 0.0
    for t in terms:
        t = _coerce(t)
        if isinstance(t, Add):
            flat.extend(t.terms)
        elif isinstance(t, Const):
            const += t.value
        else:
            flat.append(t)
    # fold constants inherited through flattening
    kept = []
    for t in flat:
        if isinstance(t, Const):
            const += t.value
        else:
            kept.append(t)
    if const != 0.0:
        kept.append(Const(const))
    if not kept:
        return ZERO
    if len(kept) == 1:
        return kept[0]
    return Add(tuple(kept))


def mul(*factors) -> Expr:
    flat = []
    const = 1.0
    for f in factors:
        f = _coerce(f)
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    kept = []
    for f in flat:
        if isinstance(f, Const):
            const *= f.value
        else:
            kept.append(f)
    if const == 0.0:
        return ZERO
    if not kept:
        return Const(const)
    if const != 1.0:
        kept.insert(0, Const(const))
    if len(kept) == 1:
        return kept[0]
    return Mul(tuple(kept))


def div(num, den) -> Expr:
    num, den = _coerce(num), _coerce(den)
    if _is_const(num, 0.0):
        return ZERO
    if _is_const(den, 1.0):
        return num
    if isinstance(num, Const) and isinstance(den, Const):
        if den.value == 0.0:
            raise ZeroDivisionError("constant division by zero")
        return Const(num.value / den.value)
    return Div(num, den)


def neg(e) -> Expr:
    e = _coerce(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def pow_(base, exponent) -> Expr:
    base = _coerce(base)
    if isinstance(exponent, Expr):
        if isinstance(exponent, Const):
            exponent = exponent.value
        else:
            # general a^b: lowered with ln-domain error semantics
            return exp(mul(exponent, ln(base)))
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def exp(e) -> Expr:
    e = _coerce(e)
    if isinstance(e, Const):
        return Const(math.exp(e.value))
    return ExpF(e)


def ln(e) -> Expr:
    e = _coerce(e)
    if isinstance(e, Const):
        if e.value <= 0.0:
            raise NonFiniteValue("ln of a non-positive constant")
        return Const(math.log(e.value))
    return LnF(e)


def piecewise(branches: Sequence[Branch], default) -> Expr:
    default = _coerce(default)
    branches = tuple(branches)
    for b in branches:
        if b.op not in _COMPARE_OPS:
            raise ValueError(f"unsupported comparison {b.op!r}")
    if not branches:
        return default
    return Piecewise(branches, default)


# --- evaluation ---------------------------------------------------------


def eval_expr(e: Expr, uu: Sequence[float], params: Mapping[str, float]) -> float:
    """Numeric value of ``e`` at the 1-based unknown vector ``uu``.

    Raises UnboundSymbol for a missing unknown index or parameter name and
    NonFiniteValue for overflow, ln of a non-positive argument, or division
    by zero.  Deterministic and side-effect free.
    """
    try:
        v = _eval(e, uu, params)
    except (ZeroDivisionError, OverflowError):
        raise NonFiniteValue("evaluation overflowed or divided by zero")
    except ValueError:
        raise NonFiniteValue("ln of a non-positive argument")
    if not math.isfinite(v):
        raise NonFiniteValue("evaluation produced a non-finite value")
    return v


def _eval(e: Expr, uu, params) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, U):
        if not 1 <= e.index <= len(uu):
            raise UnboundSymbol(f"unknown index {e.index} outside 1..{len(uu)}")
        return float(uu[e.index - 1])
    if isinstance(e, Param):
        try:
            return float(params[e.name])
        except KeyError:
            raise UnboundSymbol(f"parameter {e.name!r} is not bound")
    if isinstance(e, Add):
        return sum(_eval(t, uu, params) for t in e.terms)
    if isinstance(e, Mul):
        v = 1.0
        for f in e.factors:
            v *= _eval(f, uu, params)
        return v
    if isinstance(e, Div):
        return _eval(e.num, uu, params) / _eval(e.den, uu, params)
    if isinstance(e, Pow):
        return _eval(e.base, uu, params) ** e.exponent
    if isinstance(e, Neg):
        return -_eval(e.arg, uu, params)
    if isinstance(e, ExpF):
        return math.exp(_eval(e.arg, uu, params))
    if isinstance(e, LnF):
        return math.log(_eval(e.arg, uu, params))
    if isinstance(e, Piecewise):
        for b in e.branches:
            t = _eval(b.test, uu, params)
            if _compare(t, b.op, b.threshold):
                return _eval(b.value, uu, params)
        return _eval(e.default, uu, params)
    raise TypeError(f"unhandled node {type(e).__name__}")


def _compare(lhs: float, op: str, rhs: float) -> bool:
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    return lhs >= rhs


# --- differentiation ----------------------------------------------------


def diff(e: Expr, k: int) -> Expr:
    """Exact symbolic partial derivative d e / d uu_k.

    Structurally-zero results come back as the zero constant (the smart
    constructors fold them).  Piecewise derivatives keep the conditions and
    differentiate the branch values; jumps at branch boundaries are ignored.
    """
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, U):
        return ONE if e.index == k else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, k) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        fs = e.factors
        for i in range(len(fs)):
            d = diff(fs[i], k)
            if _is_const(d, 0.0):
                continue
            terms.append(mul(*(fs[:i] + (d,) + fs[i + 1:])))
        return add(*terms) if terms else ZERO
    if isinstance(e, Div):
        dn, dd = diff(e.num, k), diff(e.den, k)
        if _is_const(dd, 0.0):
            return div(dn, e.den)
        return div(add(mul(dn, e.den), neg(mul(e.num, dd))), mul(e.den, e.den))
    if isinstance(e, Pow):
        db = diff(e.base, k)
        if _is_const(db, 0.0):
            return ZERO
        return mul(Const(e.exponent), pow_(e.base, e.exponent - 1.0), db)
    if isinstance(e, Neg):
        return neg(diff(e.arg, k))
    if isinstance(e, ExpF):
        da = diff(e.arg, k)
        if _is_const(da, 0.0):
            return ZERO
        return mul(e, da)
    if isinstance(e, LnF):
        da = diff(e.arg, k)
        if _is_const(da, 0.0):
            return ZERO
        return div(da, e.arg)
    if isinstance(e, Piecewise):
        return piecewise(
            tuple(Branch(b.test, b.op, b.threshold, diff(b.value, k)) for b in e.branches),
            diff(e.default, k),
        )
    raise TypeError(f"unhandled node {type(e).__name__}")


# --- structural queries -------------------------------------------------


def free_unknowns(e: Expr) -> list:
    """Sorted, duplicate-free list of unknown indices appearing in ``e``."""
    out = set()
    _collect(e, out)
    return sorted(out)


def _collect(e: Expr, out: set) -> None:
    if isinstance(e, U):
        out.add(e.index)
    elif isinstance(e, Add):
        for t in e.terms:
            _collect(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            _collect(f, out)
    elif isinstance(e, Div):
        _collect(e.num, out)
        _collect(e.den, out)
    elif isinstance(e, (Pow, Neg, ExpF, LnF)):
        _collect(e.base if isinstance(e, Pow) else e.arg, out)
    elif isinstance(e, Piecewise):
        for b in e.branches:
            _collect(b.test, out)
            _collect(b.value, out)
        _collect(e.default, out)


def free_params(e: Expr) -> set:
    """Set of parameter names appearing in ``e``."""
    out = set()
    _collect_params(e, out)
    return out


def _collect_params(e: Expr, out: set) -> None:
    if isinstance(e, Param):
        out.add(e.name)
    elif isinstance(e, Add):
        for t in e.terms:
            _collect_params(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            _collect_params(f, out)
    elif isinstance(e, Div):
        _collect_params(e.num, out)
        _collect_params(e.den, out)
    elif isinstance(e, (Pow, Neg, ExpF, LnF)):
        _collect_params(e.base if isinstance(e, Pow) else e.arg, out)
    elif isinstance(e, Piecewise):
        for b in e.branches:
            _collect_params(b.test, out)
            _collect_params(b.value, out)
        _collect_params(e.default, out)


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace unknowns by expressions; rebuilds through the smart constructors."""
    if isinstance(e, U):
        return mapping.get(e.index, e)
    if isinstance(e, (Const, Param)):
        return e
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Div):
        return div(substitute(e.num, mapping), substitute(e.den, mapping))
    if isinstance(e, Pow):
        return pow_(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, ExpF):
        return exp(substitute(e.arg, mapping))
    if isinstance(e, LnF):
        return ln(substitute(e.arg, mapping))
    if isinstance(e, Piecewise):
        return piecewise(
            tuple(
                Branch(substitute(b.test, mapping), b.op, b.threshold, substitute(b.value, mapping))
                for b in e.branches
            ),
            substitute(e.default, mapping),
        )
    raise TypeError(f"unhandled node {type(e).__name__}")
