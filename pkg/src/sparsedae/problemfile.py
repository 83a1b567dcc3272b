"""Problem-file reader.

Sections::

    [params]      name = value
    [odes]        name' = expr
    [algebraic]   expr = 0          (general lhs = rhs also accepted)
    [init]        name = value      (one line per variable, guesses allowed
                                     for algebraic variables)

Variable order follows the file: ODE variables in [odes] order, then the
remaining [init] names in their order (the algebraic variables).
"""

from __future__ import annotations

from typing import Dict, List, Tuple

from .errors import ProblemFileError
from .grammar import ExprSyntaxError, parse_expr
from .system import DaeSystem

_SECTIONS = ("params", "odes", "algebraic", "init")


def _split_sections(lines):
    section = None
    out = {s: [] for s in _SECTIONS}
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ProblemFileError(no, f"unknown section [{name}]")
            section = name
            continue
        if section is None:
            raise ProblemFileError(no, "content before any section header")
        out[section].append((no, line))
    return out

def parse_problem_text(text: str) -> DaeSystem:
    sections = _split_sections(text.splitlines())

    params: Dict[str, float] = {}
    for no, line in sections["params"]:
        name, _, value = line.partition("=")
        if not _:
            raise ProblemFileError(no, "expected 'name = value'")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise ProblemFileError(no, f"bad numeric value {value.strip()!r}")

    ode_defs: List[Tuple[int, str, str]] = []
    for no, line in sections["odes"]:
        lhs, _, rhs = line.partition("=")
        if not _:
            raise ProblemFileError(no, "expected \"name' = expr\"")
        lhs = lhs.strip()
        if not lhs.endswith("'"):
            raise ProblemFileError(no, "ODE left-hand side must end with '")
        ode_defs.append((no, lhs[:-1].strip(), rhs.strip()))

    init: Dict[str, float] = {}
    init_order: List[str] = []
    for no, line in sections["init"]:
        name, _, value = line.partition("=")
        if not _:
            raise ProblemFileError(no, "expected 'name = value'")
        name = name.strip()
        if name in init:
            raise ProblemFileError(no, f"duplicate initial value for {name!r}")
        try:
            init[name] = float(value)
        except ValueError:
            raise ProblemFileError(no, f"bad numeric value {value.strip()!r}")
        init_order.append(name)

    ode_names = [name for _, name, _ in ode_defs]
    for no, name, _ in ode_defs:
        if name not in init:
            raise ProblemFileError(no, f"ODE variable {name!r} has no [init] entry")
    alg_names = [n for n in init_order if n not in set(ode_names)]
    var_names = ode_names + alg_names

    def parse_rhs(no: int, text_: str):
        try:
            return parse_expr(text_, var_names)
        except ExprSyntaxError as e:
            raise ProblemFileError(no, str(e))

    ode_rhs = tuple(parse_rhs(no, rhs) for no, _, rhs in ode_defs)

    alg: List = []
    for no, line in sections["algebraic"]:
        lhs, _, rhs = line.partition("=")
        if not _:
            raise ProblemFileError(no, "expected 'expr = 0'")
        left = parse_rhs(no, lhs.strip())
        right = parse_rhs(no, rhs.strip())
        alg.append(left - right)

    if len(alg) != len(alg_names):
        raise ProblemFileError(
            0,
            f"{len(alg)} algebraic equations but {len(alg_names)} algebraic "
            f"variables ({alg_names}); counts must match",
        )

    try:
        return DaeSystem(
            ode_rhs=ode_rhs,
            alg_residual=tuple(alg),
            var_names=tuple(var_names),
            y0z0=tuple(init[n] for n in var_names),
            params=params,
        )
    except ValueError as e:
        raise ProblemFileError(0, str(e))


def load_problem(path: str) -> DaeSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_text(fh.read())
