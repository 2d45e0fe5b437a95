"""Acceptance criteria, runnable from the CLI (verify) and from pytest.

Each criterion returns a CriterionResult with the measured quantities in
`details`, so failures show the numbers, and prints nothing by itself.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, linalg, operators, reference, scheme
from .diagnostics import FieldSeries, nikolskii_translation
from .experiments import fit_exponent
from .grid import Grid, PressureField, ScalarCellField, VelocityField
from .linalg import SolverConfig
from .manufactured import (random_solenoidal, taylor_green_pressure,
                           taylor_green_velocity)
from .obstacle import Obstacle
from .scheme import FlowState, SchemeParams


@dataclass
class CriterionResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0


def _zero_forcing(t, grid):
    return VelocityField.zeros(grid)


def _decay_params(dt, t_final, mu, lam=1.0, eta=1e-6):
    return SchemeParams(dt=dt, t_final=t_final, lam=lam, eta=eta, mu=mu)


def _div_sweep_slope(grid, mu, v0, p0):
    eps_list, div_list = [], []
    for denom in (40, 80, 160, 320):
        dt = 1.0 / denom
        params = _decay_params(dt, 0.5, mu)
        res = scheme.run(v0, p0, _zero_forcing, None, params)
        div_l2t = math.sqrt(sum(dt * r.div_norm**2 for r in res.records))
        eps_list.append(params.epsilon)
        div_list.append(div_l2t)
    slope, resid = fit_exponent(eps_list, div_list)
    return slope, resid, eps_list, div_list


def a1_divergence_scaling() -> CriterionResult:
    """Time-integrated divergence scales like sqrt(eps) in an eps = dt sweep.

    Point-sampled vortex data is exactly divergence-free on the square-cell
    staggered grid, so the initial-divergence transient that makes the
    sqrt(eps) estimate sharp is absent and the measured exponent sits near
    1 (stronger divergence control than the bound asks). The companion
    measurement perturbs the initial data with a smooth gradient (fixed
    nonzero discrete divergence); there the settling transient dominates
    and the exponent falls inside the stated window. Both are reported;
    the pass/fail verdict follows the stated configuration.
    """
    t0 = time.perf_counter()
    grid = Grid(32, 32)
    mu = 0.05
    v0 = taylor_green_velocity(0.0, grid, mu)
    p0 = taylor_green_pressure(0.0, grid, mu)
    slope, resid, eps_list, div_list = _div_sweep_slope(grid, mu, v0, p0)

    x, y = grid.cell_coords()
    bump = PressureField(grid, 0.05 * np.sin(2 * np.pi * x) * np.sin(np.pi * y))
    v0_rough = v0 + operators.gradient(bump.project_mean_zero())
    slope_rough, _, _, div_rough = _div_sweep_slope(grid, mu, v0_rough, p0)

    passed = 0.4 <= slope <= 0.65
    return CriterionResult(
        "A1", passed,
        f"divergence-eps slope {slope:.3f} (target [0.40, 0.65]); "
        f"with non-solenoidal initial data the slope is {slope_rough:.3f}",
        {"eps": eps_list, "div_l2t": div_list, "slope": slope,
         "fit_residual": resid, "slope_nonsolenoidal_data": slope_rough,
         "div_l2t_nonsolenoidal": div_rough},
        time.perf_counter() - t0)


def a2_energy_stability() -> CriterionResult:
    """Unforced decay: kinetic energy never increases, ledger stays finite."""
    t0 = time.perf_counter()
    grid = Grid(32, 32)
    mu = 0.05
    worst_inc = -math.inf
    finite = True
    details = {}
    for denom in (40, 160):
        dt = 1.0 / denom
        params = _decay_params(dt, 1.0, mu)
        v0 = taylor_green_velocity(0.0, grid, mu)
        p0 = taylor_green_pressure(0.0, grid, mu)
        res = scheme.run(v0, p0, _zero_forcing, None, params)
        report = diagnostics.energy_ledger_check(
            res.records, params, initial_kinetic=diagnostics.kinetic_energy(v0))
        worst_inc = max(worst_inc, report.max_kinetic_increase)
        finite = finite and report.all_finite
        details[f"dt=1/{denom}"] = {
            "max_kinetic_increase": report.max_kinetic_increase,
            "max_ledger": report.max_total,
            "terms": report.totals,
        }
    passed = worst_inc <= 1e-10 and finite
    return CriterionResult(
        "A2", passed,
        f"max relative kinetic-energy increase {worst_inc:.2e} "
        f"(target <= 1e-10), ledger finite: {finite}",
        details, time.perf_counter() - t0)


def a3_manufactured_convergence() -> CriterionResult:
    """First-order-in-time convergence to the manufactured vortex.

    The vortex has a nonzero tangential wall trace, so the study imposes
    that trace as prediction wall data (the normal trace is zero); with
    homogeneous no-slip walls an O(1) boundary layer would swamp the
    temporal error being measured.
    """
    t0 = time.perf_counter()
    grid = Grid(64, 64)
    mu = 0.1
    from .manufactured import taylor_green_wall_slip
    dts, errs = [], []
    for denom in (40, 80, 160, 320):
        dt = 1.0 / denom
        params = _decay_params(dt, 0.25, mu)
        v0 = taylor_green_velocity(0.0, grid, mu)
        p0 = taylor_green_pressure(0.0, grid, mu)
        err2 = 0.0

        def sink(state):
            nonlocal err2
            if state.n == 0:
                return
            exact = taylor_green_velocity(state.t, grid, mu)
            diff = state.v - exact
            err2 += dt * operators.inner(diff, diff)

        scheme.run(v0, p0, _zero_forcing, None, params, snapshot_sink=sink,
                   wall_slip_fn=lambda t: taylor_green_wall_slip(t, grid, mu))
        dts.append(dt)
        errs.append(math.sqrt(err2))
    slope, resid = fit_exponent(dts, errs)
    passed = slope >= 0.8
    return CriterionResult(
        "A3", passed,
        f"temporal order {slope:.3f} (target >= 0.8)",
        {"dt": dts, "space_time_error": errs, "slope": slope, "fit_residual": resid},
        time.perf_counter() - t0)


def a4_splitting_limit() -> CriterionResult:
    """One-step agreement with the coupled monolithic solve as eps shrinks.

    The remaining gap at eps -> 0 is the explicit-pressure splitting error,
    which is independent of eps; the smooth low-amplitude data below keeps
    that floor well under the 1e-5 target so the eps branch is what is
    measured. Fixed by the criterion: 8x8 grid, one step, random solenoidal
    v0, dt = 0.01, eps in {1e-4, 1e-6, 1e-8, 1e-10}.
    """
    t0 = time.perf_counter()
    grid = Grid(8, 8)
    rng = np.random.default_rng(0)
    v0 = random_solenoidal(grid, rng, amplitude=0.01)
    p0 = PressureField.zeros(grid)
    dt = 0.01
    errs = []
    tight_pred = SolverConfig("bicgstab", rtol=1e-13, max_iter=50000)
    tight_corr = SolverConfig("cg", rtol=1e-13, max_iter=50000)
    for eps in (1e-4, 1e-6, 1e-8, 1e-10):
        params = SchemeParams(dt=dt, t_final=2 * dt, lam=eps / dt, mu=1e-3,
                              prediction_solver=tight_pred,
                              correction_solver=tight_corr)
        state = FlowState.initial(v0, p0)
        new, _ = scheme.step(state, _zero_forcing, None, params)
        vc, _ = reference.coupled_step(v0, p0, VelocityField.zeros(grid), None, params)
        rel = math.sqrt(operators.inner(new.v - vc, new.v - vc)
                        / operators.inner(vc, vc))
        errs.append(rel)
    decreasing = all(errs[i] > errs[i + 1] for i in range(len(errs) - 1))
    passed = decreasing and errs[-1] <= 1e-5
    return CriterionResult(
        "A4", passed,
        f"errors {['%.3e' % e for e in errs]}, strictly decreasing: {decreasing}, "
        f"final {errs[-1]:.2e} (target <= 1e-5)",
        {"eps": [1e-4, 1e-6, 1e-8, 1e-10], "errors": errs},
        time.perf_counter() - t0)


def _rotating_disk(t_final):
    return Obstacle(shape="disk", radius=0.15, center=(0.5, 0.5),
                    omega=1.0, t_max=t_final)


def a5_slip_scaling() -> CriterionResult:
    """Slip error ~ sqrt(eta) and penalization energy ~ eta for the rotor.

    Both windows presume the stability-ledger bounds are saturated. At this
    resolution the penalization layer sqrt(mu eta) is subgrid for every eta
    in the stated list, so the discrete interior mismatch scales like eta
    (quadratic integral ~ eta^2), and the band quadrature carries an
    eta-independent floor of order (h |grad v|)^2 that the interface slip
    signal sinks below. The details report the raw fits, the measured
    floor, and the floor-corrected slip exponent; the verdict follows the
    stated windows.
    """
    t0 = time.perf_counter()
    grid = Grid(64, 64)
    dt = 1.0 / 128
    t_final = 0.25
    etas, slips, pens = [], [], []
    for eta in (1e-2, 1e-3, 1e-4, 1e-5):
        params = SchemeParams(dt=dt, t_final=t_final, lam=1.0, eta=eta, mu=1e-2)
        obstacle = _rotating_disk(t_final)
        res = scheme.run(VelocityField.zeros(grid), PressureField.zeros(grid),
                         _zero_forcing, obstacle, params)
        etas.append(eta)
        slips.append(sum(dt * r.slip_error for r in res.records))
        pens.append(sum(dt * r.penalization_energy for r in res.records))
    slip_slope, slip_resid = fit_exponent(etas, slips)
    pen_slope, pen_resid = fit_exponent(etas, pens)
    floor = slips[-1]
    excess = [s - floor for s in slips[:-1]]
    corrected_slope = None
    if all(e > 0 for e in excess):
        corrected_slope, _ = fit_exponent(etas[:-1], excess)
    passed = 0.35 <= slip_slope <= 0.75 and 0.8 <= pen_slope <= 1.2
    return CriterionResult(
        "A5", passed,
        f"slip slope {slip_slope:.3f} (target [0.35, 0.75]), "
        f"penalization slope {pen_slope:.3f} (target [0.8, 1.2]); "
        f"band floor {floor:.2e}, floor-corrected slip slope "
        f"{corrected_slope if corrected_slope is None else round(corrected_slope, 3)}",
        {"eta": etas, "accumulated_slip": slips, "accumulated_penalization": pens,
         "slip_slope": slip_slope, "penalization_slope": pen_slope,
         "slip_fit_residual": slip_resid, "penalization_fit_residual": pen_resid,
         "band_floor": floor, "floor_corrected_slip_slope": corrected_slope},
        time.perf_counter() - t0)


def a6_interior_rigid_motion() -> CriterionResult:
    """At eta = 1e-8 the fluid inside the disk moves rigidly."""
    t0 = time.perf_counter()
    grid = Grid(64, 64)
    dt = 1.0 / 128
    t_final = 0.25
    params = SchemeParams(dt=dt, t_final=t_final, lam=1.0, eta=1e-8, mu=1e-2)
    obstacle = _rotating_disk(t_final)
    res = scheme.run(VelocityField.zeros(grid), PressureField.zeros(grid),
                     _zero_forcing, obstacle, params)
    state = res.final_state
    uc, vc = operators.velocity_at_cell_centers(state.v)
    cx, cy = obstacle.center_at(state.t)
    x, y = grid.cell_coords()
    dist = np.hypot(x - cx, y - cy)
    h = max(grid.hx, grid.hy)
    core = dist <= obstacle.radius - 2 * h
    us = -obstacle.omega * (y - cy)
    vs = obstacle.omega * (x - cx)
    err = np.sqrt((uc - us) ** 2 + (vc - vs) ** 2)
    max_err = float(err[core].max())
    vs_max = float(np.hypot(us, vs)[dist <= obstacle.radius].max())
    passed = max_err <= 1e-3 * vs_max
    return CriterionResult(
        "A6", passed,
        f"max core |v - v_s| = {max_err:.3e} (target <= {1e-3 * vs_max:.3e})",
        {"max_core_error": max_err, "max_solid_speed": vs_max,
         "core_cells": int(core.sum())},
        time.perf_counter() - t0)


def a7_translation_estimator() -> CriterionResult:
    """Square-root translation bound on normalized random-walk series."""
    t0 = time.perf_counter()
    grid = Grid(4, 4)
    n_steps = 32
    dt = 1.0 / 16
    worst_margin = 0.0
    all_ok = True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        vals = [ScalarCellField.zeros(grid)]
        for _ in range(n_steps - 1):
            inc = ScalarCellField(grid, rng.standard_normal(grid.shape_p))
            vals.append(vals[-1] + inc)
        # normalize so sum of squared increment norms and sup norm are <= 1
        inc_sq = sum(diagnostics.l2_norm(vals[k + 1] - vals[k]) ** 2
                     for k in range(len(vals) - 1))
        sup = max(diagnostics.l2_norm(v) for v in vals)
        scale = max(math.sqrt(inc_sq), sup, 1.0)
        vals = [v * (1.0 / scale) for v in vals]
        series = FieldSeries(dt=dt, snapshots=vals)
        t_total = series.t_final
        bound_c = 2.0 * max(math.sqrt(t_total), 2.0)
        for h in np.geomspace(dt / 4, t_total / 2, 9):
            integral = nikolskii_translation(series, float(h), form="L1")
            ratio = integral / (bound_c * math.sqrt(h))
            worst_margin = max(worst_margin, ratio)
            all_ok = all_ok and integral <= bound_c * math.sqrt(h)

    # hand-computed overlap value on the two-snapshot unit-jump series
    two = FieldSeries(dt=1.0, snapshots=[
        ScalarCellField.zeros(grid),
        ScalarCellField(grid, np.ones(grid.shape_p)),
    ])
    val = nikolskii_translation(two, 0.5, form="L1")
    exact_ok = abs(val - 0.5) <= 1e-14
    passed = all_ok and exact_ok
    return CriterionResult(
        "A7", passed,
        f"bound satisfied for 20 series (worst ratio {worst_margin:.3f}), "
        f"two-snapshot overlap {val!r} vs 0.5 exact: {exact_ok}",
        {"worst_bound_ratio": worst_margin, "two_snapshot_value": val},
        time.perf_counter() - t0)


def a8_operator_algebra() -> CriterionResult:
    """Adjointness, curl(grad), convective skewness and correction SPD."""
    t0 = time.perf_counter()
    grid = Grid(9, 7, 1.2, 0.9)
    layout = linalg.face_layout(grid)
    rng = np.random.default_rng(123)
    checks = {"adjoint": 0.0, "curl_grad": 0.0, "skew": 0.0, "spd_sym": 0.0}
    spd_ok = True

    params = SchemeParams(dt=0.05, t_final=0.1, lam=0.8, mu=1e-2)
    corr = linalg.assemble_correction(grid, params).matrix
    for _ in range(100):
        p = PressureField(grid, rng.standard_normal(grid.shape_p)).project_mean_zero()
        vel = layout.unpack(rng.standard_normal(layout.n))
        lhs = operators.inner(operators.gradient(p), vel)
        rhs = -operators.cell_inner(p, operators.divergence(vel))
        scale = abs(lhs) + abs(rhs) + 1e-30
        checks["adjoint"] = max(checks["adjoint"], abs(lhs - rhs) / scale)

        gp = operators.gradient(p)
        cg_val = np.abs(operators.curl(gp)).max()
        gp_scale = max(np.abs(gp.u).max(), np.abs(gp.v).max(), 1e-30) / min(grid.hx, grid.hy)
        checks["curl_grad"] = max(checks["curl_grad"], cg_val / gp_scale)

        adv = layout.unpack(rng.standard_normal(layout.n))
        cmat = linalg.convection_matrix(grid, adv)
        w = rng.standard_normal(layout.n)
        quad = abs(w @ (cmat @ w))
        denom = np.linalg.norm(cmat @ w) * np.linalg.norm(w) + 1e-30
        checks["skew"] = max(checks["skew"], quad / denom)

        x = rng.standard_normal(layout.n)
        y = rng.standard_normal(layout.n)
        sym = abs(x @ (corr @ y) - y @ (corr @ x)) / (
            np.linalg.norm(corr @ x) * np.linalg.norm(y) + 1e-30)
        checks["spd_sym"] = max(checks["spd_sym"], sym)
        spd_ok = spd_ok and (x @ (corr @ x) > 0)

    passed = (checks["adjoint"] <= 1e-12 and checks["curl_grad"] <= 1e-12
              and checks["skew"] <= 1e-10 and checks["spd_sym"] <= 1e-12
              and spd_ok)
    return CriterionResult(
        "A8", passed,
        f"adjoint {checks['adjoint']:.2e}, curl(grad) {checks['curl_grad']:.2e}, "
        f"skew {checks['skew']:.2e}, SPD sym {checks['spd_sym']:.2e}, "
        f"positive: {spd_ok} (100 instances each)",
        {**checks, "positive_definite": spd_ok},
        time.perf_counter() - t0)


CRITERIA = {
    "A1": a1_divergence_scaling,
    "A2": a2_energy_stability,
    "A3": a3_manufactured_convergence,
    "A4": a4_splitting_limit,
    "A5": a5_slip_scaling,
    "A6": a6_interior_rigid_motion,
    "A7": a7_translation_estimator,
    "A8": a8_operator_algebra,
}


def run_criterion(name: str) -> CriterionResult:
    return CRITERIA[name]()


def run_all(names=None):
    results = []
    for name in names or sorted(CRITERIA):
        results.append(run_criterion(name))
    return results
