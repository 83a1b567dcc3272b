"""Acceptance suite: one test (one pass/fail line under ``pytest -v``) per
numbered criterion, at the stated tolerances.

The expensive trajectories are computed once in module-scoped fixtures and
shared; criterion 8 re-checks the factorization counters over every
trajectory the other criteria produced.
"""

import math
import time

import numpy as np
import pytest

from sparsedae import expr as ex
from sparsedae.problems import (
    ORACLES,
    example1,
    example2,
    example3,
    example4,
    example5,
    example6,
    probe,
)
from sparsedae.stepper import SolverOptions, Status, Stepper, integrate, integrate_fixed
from sparsedae.system import MethodKind, build_residual
from sparsedae.jacobian import detect_pattern

# trajectories recorded for the counter invariants of criterion 8
_RUNS = {}


def _register(tag, traj):
    _RUNS[tag] = traj
    return traj


# --- shared expensive runs -------------------------------------------------


@pytest.fixture(scope="module")
def ex2_runs():
    out = {}
    for kind in MethodKind:
        t0 = time.perf_counter()
        traj = integrate(example2(), SolverOptions(
            tf=10.0, atol=1e-6, hmax=0.1, ntot=6000, method=kind,
            err_denominator="standard"))
        out[kind] = (traj, time.perf_counter() - t0)
        _register(f"ex2-{kind.value}", traj)
    return out


def _ex4_options(**over):
    kw = dict(tf=1.0, atol=1e-6, hmax=0.05, hinit=1e-4, ntot=4000,
              method=MethodKind.IMPTRAP, err_denominator="standard",
              extrapolate=False)
    kw.update(over)
    return SolverOptions(**kw)


@pytest.fixture(scope="module")
def ex4_runs():
    out = {}
    for n in (4, 8, 16, 32, 64):
        out[n] = _register(f"ex4-{n}", integrate(example4(n), _ex4_options()))
    t0 = time.perf_counter()
    out[128] = _register("ex4-128", integrate(example4(128), _ex4_options()))
    out["t128"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def ex5_large_run():
    t0 = time.perf_counter()
    traj = integrate(example5(64, 64, c0=1.0), SolverOptions(
        tf=5.0, atol=1e-6, hmax=0.25, hinit=1e-4, ntot=4000,
        method=MethodKind.IMPTRAP, err_denominator="standard",
        extrapolate=False))
    return _register("ex5-64", traj), time.perf_counter() - t0


# --- criteria --------------------------------------------------------------


def test_criterion_01_consistent_initialization():
    t0 = time.perf_counter()
    st = Stepper(example1(), SolverOptions(tf=1.0, atol=1e-6))
    state, _ = st.initialize()
    t1 = time.perf_counter() - t0
    assert abs(state[1] - 1.0) < 1e-9

    t0 = time.perf_counter()
    st = Stepper(example3(), SolverOptions(tf=1.0, atol=1e-6))
    state, _ = st.initialize()
    t3 = time.perf_counter() - t0
    assert abs(state[1] - 0.990049833749168) < 1e-9
    assert abs(state[1] - math.exp(-0.01)) < 1e-9
    assert t1 < 0.1 and t3 < 0.1


def test_criterion_02_step_count_corridor_small_dae():
    traj = _register("ex1-corridor", integrate(example1(), SolverOptions(
        tf=1.0, atol=1e-4, hinit=1e-5, hmax=0.05, iter=5,
        method=MethodKind.IMPTRAP, err_denominator="literal")))
    assert traj.status is Status.SUCCESS
    assert 24 <= traj.accepted <= 36
    # growth capped at 3x from h = 1e-5 fixes the first accepted times
    first = traj.times[1:5]
    for got, want in zip(first, (1e-5, 4e-5, 1.3e-4, 4e-4)):
        assert abs(got - want) < 1e-12


def test_criterion_03_van_der_pol_accuracy_and_counts(ex2_runs):
    ref = np.array([-1.08904705944854, 0.841554375093746])
    corridors = {MethodKind.CN: 299, MethodKind.IMPTRAP: 278,
                 MethodKind.EB: 2687, MethodKind.RAD: 114}
    for kind, (traj, dt) in ex2_runs.items():
        assert traj.status is Status.SUCCESS, kind
        center = corridors[kind]
        assert 0.6 * center <= traj.accepted <= 1.4 * center, (
            f"{kind.value}: {traj.accepted} accepted, corridor "
            f"[{0.6 * center:.0f}, {1.4 * center:.0f}]")
        assert dt < 5.0, f"{kind.value} took {dt:.2f}s"
        if kind is not MethodKind.EB:  # first order is not accuracy-competitive
            assert np.abs(traj.final_state - ref).max() < 5e-4, kind


def test_criterion_04_observed_orders():
    hs = [0.02, 0.01, 0.005, 0.0025]
    oracle = ORACLES["ex1"](1.0)
    want = {MethodKind.EB: (1.0, 0.15, 2.0, 0.2),
            MethodKind.CN: (2.0, 0.2, 4.0, 0.4),
            MethodKind.IMPTRAP: (2.0, 0.2, 4.0, 0.4),
            MethodKind.RAD: (3.0, 0.2, 4.0, 0.4)}
    for kind, (p_raw, tol_raw, p_ex, tol_ex) in want.items():
        slopes = []
        for extrapolate in (False, True):
            errs = []
            for h in hs:
                traj = integrate_fixed(example1(), SolverOptions(
                    tf=1.0, atol=1e-12, hinit=h, hmax=1.0, fixed_h=h,
                    ntot=2000, iter=12, method=kind, extrapolate=extrapolate))
                errs.append(np.abs(traj.final_state - oracle).max())
            slopes.append(float(np.polyfit(np.log(hs), np.log(errs), 1)[0]))
        assert abs(slopes[0] - p_raw) < tol_raw, (kind, slopes)
        assert abs(slopes[1] - p_ex) < tol_ex, (kind, slopes)


def test_criterion_05_reaction_diffusion_convergence(ex4_runs):
    failures = []

    # probe targets; an independent stiff reference integration agrees with
    # this solver's t=1 values to 7e-10, while these constants instead match
    # the steady state of the same semi-discrete system to 8e-10, so the
    # 5e-6 comparison below fails by the transient-vs-steady offset (~5.6e-3)
    for n, want_c, want_z in ((4, 0.708501773693253, -0.276198079090988),
                              (64, 0.706246833067691, -0.273486190782169)):
        traj = ex4_runs[n]
        sysn = example4(n)
        got_c = probe(traj.final_state, sysn, "c_x0")
        got_z = probe(traj.final_state, sysn, "z_x0")
        for name, got, want in (("c", got_c, want_c), ("z", got_z, want_z)):
            if abs(got - want) >= 5e-6:
                failures.append(
                    f"N={n} {name}_x0: got {got:.12f}, expected {want:.12f} "
                    f"(off by {abs(got - want):.2e}, tolerance 5e-6)")

    seq = [probe(ex4_runs[n].final_state, example4(n), "c_x0")
           for n in (4, 8, 16, 32, 64)]
    diffs = np.diff(seq)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        failures.append(f"probe sequence not monotone: {seq}")

    t128 = ex4_runs[128]
    if not (30 <= t128.accepted <= 45):
        failures.append(f"N=128 accepted={t128.accepted}, corridor [30, 45]")
    if t128.rejected not in (0, 1):
        failures.append(f"N=128 rejected={t128.rejected}, expected 0 or 1")
    if ex4_runs["t128"] >= 30.0:
        failures.append(f"N=128 runtime {ex4_runs['t128']:.1f}s >= 30s")

    assert not failures, "\n".join(failures)


def test_criterion_06_system_size_identities():
    assert example4(128).n_total == 260
    assert example5(64, 64).n_total == 4352
    assert example6(64, 128).n_total == 17152
    assert example6(128, 256).n_total == 67072


def test_criterion_07_jacobian_matches_finite_differences():
    rng = np.random.default_rng(42)
    cases = [example1(), example2(), example3(), example4(6),
             example5(4, 5), example6(4, 8)]
    for sysn in cases:
        base = np.asarray(sysn.y0z0, dtype=float)
        for kind in MethodKind:
            st = Stepper(sysn, SolverOptions(tf=1.0, atol=1e-6, method=kind))
            h = 0.01
            st._bind(base, h)
            a = st.assembler.assemble(np.zeros(st.n), st.res.b, h, st.res.p)
            for _ in range(20):
                d = rng.standard_normal(st.n)
                eps = 1e-6
                rp = st.res.evaluate(eps * d).copy()
                rm = st.res.evaluate(-eps * d).copy()
                fd = (rp - rm) / (2 * eps)
                jd = a.matvec(d)
                rel = np.abs(jd - fd).max() / (1.0 + np.abs(jd).max())
                assert rel < 1e-5, (sysn.n_total, kind, rel)


def test_criterion_08_one_lu_per_jacobian_update():
    assert _RUNS, "no recorded trajectories (earlier criteria did not run?)"
    for tag, traj in _RUNS.items():
        assert traj.lu_count <= traj.jac_updates + 1, tag
        assert traj.jac_updates <= traj.accepted + traj.rejected + 1, tag
        assert traj.init_lu == 1, tag


def test_criterion_09_two_stage_block_sparsity():
    sysn = example5(8, 8)
    n_t, n_ode = sysn.n_total, sysn.n_ode
    pat = detect_pattern(build_residual(sysn, MethodKind.RAD))
    ours = [len(pat.rows[i]) for i in range(n_ode)]  # endpoint-block ODE rows
    assert max(ours) <= 6

    # reference builder in classic stage-value form: the endpoint row couples
    # to the right-hand side evaluated at both stages, doubling the stencil
    a21, a22 = 0.75, 0.25
    h = ex.Param("h")
    stage1 = {k: ex.add(ex.U(k), ex.Param(f"Y0_{k}")) for k in range(1, n_t + 1)}
    stage2 = {k: ex.add(ex.U(n_t + k), ex.Param(f"Y0_{k}")) for k in range(1, n_t + 1)}
    for i, f in enumerate(sysn.ode_rhs, start=1):
        row = ex.U(n_t + i) - h * (ex.mul(a21, ex.substitute(f, stage1))
                                   + ex.mul(a22, ex.substitute(f, stage2)))
        assert len(ex.free_unknowns(row)) == 10


def test_criterion_10_large_grid_scale_check(ex5_large_run):
    traj, dt = ex5_large_run
    assert traj.status is Status.SUCCESS
    assert traj.rejected == 0
    assert 30 <= traj.accepted <= 45, traj.accepted
    assert dt < 60.0, f"took {dt:.1f}s"

    # electrolyte model: probe differences shrink under grid refinement
    probes = {}
    for n, m in ((4, 8), (8, 16), (16, 32)):
        sysn = example6(n, m)
        t = integrate(sysn, SolverOptions(
            tf=0.1, atol=1e-6, hinit=1e-6, ntot=4000,
            method=MethodKind.IMPTRAP, err_denominator="standard",
            extrapolate=False))
        assert t.status is Status.SUCCESS, (n, m)
        probes[n] = np.array([probe(t.final_state, sysn, o)
                              for o in ("c_x0_ymid", "phi_x0_ymid")])
    d_coarse = np.abs(probes[8] - probes[4]).max()
    d_fine = np.abs(probes[16] - probes[8]).max()
    assert d_fine < d_coarse

    # no reaction and no applied current: concentration stays identically 1
    atol = 1e-6
    sys0 = example6(8, 16, da=0.0, delta=0.0)
    t0 = integrate(sys0, SolverOptions(
        tf=0.5, atol=atol, hinit=1e-5, err_denominator="standard"))
    assert t0.status is Status.SUCCESS
    c = t0.final_state[:8 * 16]
    assert np.abs(c - 1.0).max() <= 10 * atol
