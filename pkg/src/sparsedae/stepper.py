"""Adaptive step-doubling integrator driver.

Each step solves the method residual once with step h and twice with h/2,
all three Newton solves sharing one frozen LU factorization.  The two
results give the local error estimate; accepted steps are advanced with
Richardson extrapolation.  The Jacobian is refactorized only when flagged:
at the start, after any step whose error estimate exceeds 0.1, and after
every rejection (a rejection also divides h by 4).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, TextIO, Tuple

import numpy as np

from .codegen import CompiledResidual, ParamLayout, compile_exprs
from .errors import InitializationFailed, NonFiniteResidual
from .jacobian import JacobianAssembler, detect_pattern, differentiate
from .linalg import Factorization, factorize
from .newton import default_ctol, newton_solve
from .system import DaeSystem, MethodKind, MethodResidual, build_residual, state_update

_INIT_MAX_ITER = 100
_MAX_CONSECUTIVE_REJECTS = 40


class Status(enum.Enum):
    SUCCESS = "Success"
    TOO_MANY_STEPS = "TooManySteps"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass
class SolverOptions:
    """Integration controls.  Unset hinit/hmax/rtol take the suggested
    defaults hinit = min(1e-6, tf*atol), hmax = tf/20, rtol = 10*atol."""

    tf: float
    atol: float = 1e-6
    hinit: Optional[float] = None
    hmax: Optional[float] = None
    ntot: int = 1000
    iter: int = 5
    method: MethodKind = MethodKind.IMPTRAP
    rtol: Optional[float] = None
    growth: float = 3.0
    safety: float = 0.9
    reject_divisor: float = 4.0
    jac_refresh_err: float = 0.1
    extrapolate: bool = True
    fixed_h: Optional[float] = None
    norm: str = "inf"                  # "inf" or "rms"
    err_denominator: str = "literal"   # "literal" or "standard"

    def __post_init__(self):
        if self.tf <= 0:
            raise ValueError("tf must be positive")
        if self.atol <= 0:
            raise ValueError("atol must be positive")
        if self.hinit is None:
            self.hinit = min(1e-6, self.tf * self.atol)
        if self.hmax is None:
            self.hmax = self.tf / 20.0
        if self.rtol is None:
            self.rtol = 10.0 * self.atol
        if not (0 < self.hinit <= self.hmax <= self.tf):
            raise ValueError("need 0 < hinit <= hmax <= tf")
        if self.ntot < 1 or self.iter < 1:
            raise ValueError("ntot and iter must be at least 1")
        if self.norm not in ("inf", "rms"):
            raise ValueError("norm must be 'inf' or 'rms'")
        if self.err_denominator not in ("literal", "standard"):
            raise ValueError("err_denominator must be 'literal' or 'standard'")


@dataclass
class StepTrial:
    """One attempted step: full-step and two-half-steps results plus the
    componentwise and scalar error estimates."""

    y_h: Optional[np.ndarray]
    y_h2: Optional[np.ndarray]
    y_err: Optional[np.ndarray]
    err: float
    h: float


@dataclass
class Trajectory:
    """Accepted-step records plus step/rejection/factorization counters.

    Counters cover the time-stepping loop; the single factorization used by
    consistent initialization is reported separately in ``init_lu``.
    """

    var_names: Tuple[str, ...]
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    jac_updates: int = 0
    lu_count: int = 0
    init_lu: int = 0
    status: Status = Status.SUCCESS
    message: str = ""

    def record(self, t: float, state: np.ndarray) -> None:
        self.times.append(float(t))
        self.states.append(np.array(state))

    @property
    def final_time(self) -> float:
        return self.times[-1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def summary(self) -> str:
        return (f"# accepted={self.accepted}, rejected={self.rejected}, "
                f"jac_updates={self.jac_updates}, lu={self.lu_count}, "
                f"status={self.status.value}")

    def write_csv(self, fh: TextIO) -> None:
        fh.write("t," + ",".join(self.var_names) + "\n")
        for t, s in zip(self.times, self.states):
            fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in s) + "\n")
        fh.write(self.summary() + "\n")


# --- the three controller formulas ---------------------------------------


def error_norm(y_err: np.ndarray, yref: np.ndarray, atol: float, rtol: float,
               norm: str = "inf", denominator: str = "literal") -> float:
    """Scalar error measure of the step-doubling estimate.

    The default ("literal") denominator is atol + |y_err_i|*rtol; the
    "standard" alternative uses the solution magnitude, atol + |yref_i|*rtol.
    ODE and algebraic components are both included.
    """
    a = np.abs(np.asarray(y_err, dtype=float))
    if denominator == "literal":
        w = a / (atol + a * rtol)
    else:
        w = a / (atol + np.abs(np.asarray(yref, dtype=float)) * rtol)
    if len(w) == 0:
        return 0.0
    if norm == "rms":
        return float(np.sqrt(np.mean(w * w)))
    return float(np.max(w))


def next_h(h_old: float, err: float, p: int, hmax: float,
           growth: float = 3.0, safety: float = 0.9) -> float:
    """h_new = min(hmax, h_old * min(growth, safety * (1/err)^(1/(p+1))))."""
    if err <= 0.0:
        factor = growth
    else:
        factor = min(growth, safety * (1.0 / err) ** (1.0 / (p + 1)))
    return min(hmax, h_old * factor)


def richardson(y_h: np.ndarray, y_h2: np.ndarray, p: int, extrapolate: bool = True) -> np.ndarray:
    """(2^p * y_h2 - y_h) / (2^p - 1) on every component; the plain
    two-half-steps value when extrapolation is disabled."""
    y_h2 = np.asarray(y_h2, dtype=float)
    if not extrapolate:
        return y_h2.copy()
    y_h = np.asarray(y_h, dtype=float)
    if y_h.shape != y_h2.shape:
        raise ValueError("length mismatch")
    w = float(2 ** p)
    return (w * y_h2 - y_h) / (w - 1.0)


# --- engine ---------------------------------------------------------------


class Stepper:
    """Holds the compiled residual/Jacobian machinery for one (system,
    method) pair and drives the integration loop."""

    def __init__(self, sys: DaeSystem, options: SolverOptions):
        self.system = sys
        self.options = options
        self.kind = options.method
        self.residual_sym: MethodResidual = build_residual(sys, self.kind)
        self.pattern = detect_pattern(self.residual_sym)
        self.sym_jac = differentiate(self.residual_sym, self.pattern)
        names = sorted(sys.params) + self.residual_sym.explicit_param_names()
        self.layout = ParamLayout(names)
        self.res = CompiledResidual(self.residual_sym.rows, self.layout)
        self.res.set_params(sys.params)
        self.assembler = JacobianAssembler(self.sym_jac, self.layout)
        self.n = self.residual_sym.n
        self.n_t = sys.n_total
        self._uu0 = np.zeros(self.n)
        self.ctol = default_ctol(options.atol)
        if self.kind is MethodKind.CN:
            self._f_fn = compile_exprs(sys.ode_rhs, self.layout, tag="odes")
            self._f_out = np.empty(sys.n_ode)
        else:
            self._f_fn = None

    # -- bindings ---------------------------------------------------------

    def _bind(self, base: np.ndarray, h: float) -> None:
        self.res.set_base(base)
        self.res.set_h(h)
        if self._f_fn is not None:
            # CN explicit term: f evaluated at the sub-step's base state
            try:
                self._f_fn(base, base, h, self.res.p, self._f_out)
            except (ZeroDivisionError, OverflowError, ValueError):
                raise NonFiniteResidual("explicit right-hand side left the domain")
            if not np.isfinite(self._f_out).all():
                raise NonFiniteResidual("explicit right-hand side is non-finite")
            n_p = len(self.layout.names) - len(self._f_out)
            self.res.p[n_p:] = self._f_out

    def _factorize(self, base: np.ndarray, h: float, t: float) -> Factorization:
        self._bind(base, h)
        a = self.assembler.assemble(self._uu0, self.res.b, h, self.res.p)
        return factorize(a, stamp=(t, h))

    def _solve_once(self, base: np.ndarray, h: float, f: Factorization) -> np.ndarray:
        self._bind(base, h)
        out = newton_solve(self.res, f, self._uu0, self.options.iter, self.ctol)
        return state_update(base, out.uu, self.kind)

    # -- initialization and stepping ----------------------------------------

    def initialize(self) -> Tuple[np.ndarray, Factorization]:
        """Consistent initialization: Newton on the h=0 residual with a
        fresh factorization.  Returns the corrected state."""
        state0 = self.system.initial_state()
        f = self._factorize(state0, 0.0, 0.0)
        ctol = min(self.ctol, 1e-10)
        out = newton_solve(self.res, f, self._uu0, _INIT_MAX_ITER, ctol)
        if not out.converged:
            raise InitializationFailed(
                f"h=0 Newton stalled (last correction {out.correction_norm:.3e}); "
                "the algebraic constraints could not be satisfied from the given guesses"
            )
        return state_update(state0, out.uu, self.kind), f

    def attempt_step(self, state: np.ndarray, t: float, h: float,
                     f: Factorization) -> StepTrial:
        """One full step and two half steps from (t, state), all against the
        frozen factorization ``f``.  A non-finite residual comes back as an
        err = +inf trial."""
        opt = self.options
        try:
            y_h = self._solve_once(state, h, f)
            mid = self._solve_once(state, 0.5 * h, f)
            y_h2 = self._solve_once(mid, 0.5 * h, f)
        except NonFiniteResidual:
            return StepTrial(y_h=None, y_h2=None, y_err=None, err=math.inf, h=h)
        p = self.kind.order
        y_err = (y_h2 - y_h) / (2 ** p - 1)
        err = error_norm(y_err, y_h2, opt.atol, opt.rtol, opt.norm, opt.err_denominator)
        return StepTrial(y_h=y_h, y_h2=y_h2, y_err=y_err, err=err, h=h)

    # -- drivers ------------------------------------------------------------

    def integrate(self) -> Trajectory:
        opt = self.options
        traj = Trajectory(var_names=self.system.var_names)
        state, _ = self.initialize()
        traj.init_lu = 1
        traj.record(0.0, state)

        p = self.kind.order
        t = 0.0
        h = opt.hinit
        landing = False
        if h >= opt.tf - t:
            h = opt.tf - t
            landing = True
        refresh = True
        frozen: Optional[Factorization] = None
        h_floor = max(1e-14 * opt.tf, 1e-3 * opt.hinit)
        consecutive_rejects = 0

        while True:
            if t >= opt.tf:
                traj.status = Status.SUCCESS
                break
            if traj.accepted >= opt.ntot:
                traj.status = Status.TOO_MANY_STEPS
                break
            if h < h_floor:
                traj.status = Status.STEP_UNDERFLOW
                break
            if refresh:
                frozen = self._factorize(state, h, t)
                traj.jac_updates += 1
                traj.lu_count += 1
                refresh = False

            trial = self.attempt_step(state, t, h, frozen)
            if trial.err > 1.0:
                traj.rejected += 1
                consecutive_rejects += 1
                if consecutive_rejects > _MAX_CONSECUTIVE_REJECTS:
                    traj.status = Status.STEP_UNDERFLOW
                    break
                h = h / opt.reject_divisor
                landing = False
                refresh = True
                continue

            consecutive_rejects = 0
            state = richardson(trial.y_h, trial.y_h2, p, opt.extrapolate)
            t = opt.tf if landing else t + h
            traj.accepted += 1
            traj.record(t, state)
            if trial.err > opt.jac_refresh_err:
                refresh = True
            hn = next_h(h, trial.err, p, opt.hmax, opt.growth, opt.safety)
            if hn >= opt.tf - t:
                hn = opt.tf - t
                landing = True
            h = hn

        traj.message = (f"integration {traj.status.value}; "
                        f"number of failed steps={traj.rejected}")
        return traj

    def integrate_fixed(self) -> Trajectory:
        """Fixed-step mode for order verification: every step accepted,
        Jacobian refreshed every step, extrapolation per options."""
        opt = self.options
        h = opt.fixed_h
        if h is None or h <= 0:
            raise ValueError("fixed_h must be set and positive")
        nsteps = round(opt.tf / h)
        if nsteps < 1 or abs(nsteps * h - opt.tf) > 1e-12 * opt.tf:
            raise ValueError("fixed_h must divide tf")
        traj = Trajectory(var_names=self.system.var_names)
        state, _ = self.initialize()
        traj.init_lu = 1
        traj.record(0.0, state)
        p = self.kind.order
        for k in range(nsteps):
            t = k * h
            frozen = self._factorize(state, h, t)
            traj.jac_updates += 1
            traj.lu_count += 1
            trial = self.attempt_step(state, t, h, frozen)
            if trial.y_h is None:
                raise NonFiniteResidual(f"fixed step at t={t} left the domain")
            state = richardson(trial.y_h, trial.y_h2, p, opt.extrapolate)
            traj.accepted += 1
            traj.record(opt.tf if k == nsteps - 1 else (k + 1) * h, state)
        traj.message = f"integration {traj.status.value}; number of failed steps=0"
        return traj


def integrate(sys: DaeSystem, options: SolverOptions) -> Trajectory:
    """Adaptive integration of ``sys`` from t=0 to options.tf."""
    return Stepper(sys, options).integrate()


def integrate_fixed(sys: DaeSystem, options: SolverOptions) -> Trajectory:
    """Fixed-step integration (options.fixed_h) for convergence studies."""
    return Stepper(sys, options).integrate_fixed()
