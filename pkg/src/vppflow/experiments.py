"""Experiment drivers: single runs, parameter sweeps, and output emission.

All quantitative output goes through CSV with %.17g formatting, so a rerun
of the same configuration is byte-identical. Optional field dumps use the
legacy VTK STRUCTURED_POINTS ASCII layout documented in the README.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import diagnostics, operators
from .config import RunConfig
from .grid import Grid, PressureField, VelocityField
from .manufactured import taylor_green_pressure, taylor_green_velocity
from .scheme import RunResult, run

_FMT = "%.17g"


class OutputError(OSError):
    """Raised after writing the partial-output marker on I/O failure."""


def fit_exponent(xs, ys):
    """Least-squares slope of log(y) vs log(x); returns (slope, residual).

    The residual is the RMS misfit of the fitted line in log space.
    """
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    coeffs = np.polyfit(lx, ly, 1)
    fit = np.polyval(coeffs, lx)
    residual = float(np.sqrt(np.mean((ly - fit) ** 2)))
    return float(coeffs[0]), residual


# ----------------------------------------------------------------------
# Initial condition and forcing selectors
# ----------------------------------------------------------------------

def make_initial(cfg: RunConfig, grid: Grid):
    kind = cfg.initial.kind
    if kind == "zero":
        return VelocityField.zeros(grid), PressureField.zeros(grid)
    if kind == "taylor-green":
        return (taylor_green_velocity(0.0, grid, cfg.mu),
                taylor_green_pressure(0.0, grid, cfg.mu))
    if kind == "file":
        path = dict(cfg.initial.options)["path"]
        data = np.load(path)
        vel = VelocityField(grid, data["u"], data["v"])
        p = PressureField(grid, data["p"]) if "p" in data else PressureField.zeros(grid)
        return vel, p.project_mean_zero()
    raise ValueError(f"unknown initial condition {kind!r}")


def make_forcing(cfg: RunConfig):
    kind = cfg.forcing.kind
    if kind in ("zero", "taylor-green"):
        # the manufactured vortex solves the unforced equations exactly;
        # its wall trace is supplied separately (make_wall_slip)
        return lambda t, grid: VelocityField.zeros(grid)
    if kind == "constant":
        opts = dict(cfg.forcing.options)
        fx, fy = opts.get("fx", 0.0), opts.get("fy", 0.0)

        def constant(t, grid):
            return VelocityField(grid, np.full(grid.shape_u, fx),
                                 np.full(grid.shape_v, fy))
        return constant
    if kind == "file":
        path = dict(cfg.forcing.options)["path"]
        data = np.load(path)

        def from_file(t, grid):
            return VelocityField(grid, data["u"], data["v"])
        return from_file
    raise ValueError(f"unknown forcing {kind!r}")


def make_wall_slip(cfg: RunConfig, grid: Grid):
    """Wall-velocity function for the manufactured study, else None.

    Selecting the manufactured forcing means running the manufactured
    problem: zero body force plus the vortex's tangential wall trace.
    """
    if cfg.forcing.kind != "taylor-green":
        return None
    from .manufactured import taylor_green_wall_slip
    return lambda t: taylor_green_wall_slip(t, grid, cfg.mu)


# ----------------------------------------------------------------------
# Output writers
# ----------------------------------------------------------------------

def write_records_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(diagnostics.CSV_COLUMNS) + "\n")
        for rec in records:
            vals = [getattr(rec, c) for c in diagnostics.CSV_COLUMNS]
            fh.write(",".join(_FMT % v if isinstance(v, float) else str(v)
                              for v in vals) + "\n")


def write_vtk(path, state):
    """Legacy VTK STRUCTURED_POINTS ASCII dump of cell-centered fields."""
    grid = state.v.grid
    uc, vc = operators.velocity_at_cell_centers(state.v)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"vppflow step {state.n} t={_FMT % state.t}\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx} {grid.ny} 1\n")
        fh.write(f"ORIGIN {_FMT % (grid.hx / 2)} {_FMT % (grid.hy / 2)} 0\n")
        fh.write(f"SPACING {_FMT % grid.hx} {_FMT % grid.hy} 1\n")
        fh.write(f"POINT_DATA {grid.ncells}\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                fh.write(_FMT % state.p.p[i, j] + "\n")
        fh.write("VECTORS velocity double\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                fh.write(f"{_FMT % uc[i, j]} {_FMT % vc[i, j]} 0\n")


# ----------------------------------------------------------------------
# Drivers
# ----------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: RunConfig
    run_result: RunResult
    csv_path: str
    snapshots: list | None = None
    manufactured_error: float | None = None


def run_single(cfg: RunConfig, out_dir: str, tag: str = "",
               quiet: bool = True) -> ExperimentResult:
    grid = Grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)
    params = cfg.scheme_params()
    obstacle = cfg.make_obstacle() if cfg.obstacle.shape != "none" else None
    v0, p0 = make_initial(cfg, grid)
    forcing = make_forcing(cfg)
    wall_slip = make_wall_slip(cfg, grid)

    snapshots = None
    snapshot_sink = None
    if cfg.output.retain_snapshots:
        if grid.nx > 64 or grid.ny > 64:
            raise ValueError("snapshot retention is limited to grids up to 64x64")
        snapshots = []
        snapshot_sink = lambda state: snapshots.append(
            (state.t, state.v.copy(), state.p.copy()))

    dump_every = cfg.output.dump_every
    os.makedirs(out_dir, exist_ok=True)
    csv_name = cfg.output.csv if not tag else f"{tag}_{cfg.output.csv}"
    csv_path = os.path.join(out_dir, csv_name)

    def dump_sink(state):
        if dump_every > 0 and state.n % dump_every == 0:
            write_vtk(os.path.join(out_dir, f"{tag or 'fields'}_{state.n:06d}.vtk"),
                      state)

    sinks = [dump_sink] if dump_every > 0 else []
    if snapshot_sink is not None:
        sinks.append(snapshot_sink)

    # manufactured studies accumulate the space-time velocity error
    err_acc = [0.0]
    if cfg.initial.kind == "taylor-green":
        def error_sink(state):
            if state.n == 0:
                return
            exact = taylor_green_velocity(state.t, grid, cfg.mu)
            diff = state.v - exact
            err_acc[0] += params.dt * operators.inner(diff, diff)
        sinks.append(error_sink)

    def snapshot_fanout(state):
        for s in sinks:
            s(state)

    try:
        result = run(v0, p0, forcing, obstacle, params,
                     snapshot_sink=snapshot_fanout if sinks else None,
                     wall_slip_fn=wall_slip)
        write_records_csv(csv_path, result.records)
    except OSError as exc:
        marker = os.path.join(out_dir, "PARTIAL_OUTPUT")
        try:
            with open(marker, "w", encoding="utf-8") as fh:
                fh.write(f"experiment aborted mid-output: {exc}\n")
        except OSError:
            pass
        raise OutputError(f"I/O failure while writing results: {exc}") from exc
    if not quiet:
        print(f"wrote {csv_path} ({len(result.records)} steps, "
              f"initial divergence {result.initial_divergence:.3e})")
    manufactured_error = (math.sqrt(err_acc[0])
                          if cfg.initial.kind == "taylor-green" else None)
    return ExperimentResult(cfg, result, csv_path, snapshots, manufactured_error)


_SUMMARY_COLUMNS = [
    "parameter", "value", "dt", "eps", "eta", "steps",
    "final_kinetic_energy", "final_div_norm", "final_pressure_norm",
    "time_integrated_div", "accumulated_slip", "accumulated_penalization",
]


def run_sweep(cfg: RunConfig, out_dir: str, quiet: bool = True):
    """Run every sweep member and write a per-run plus a summary CSV.

    The summary carries one row per run and, in the trailing comment
    lines, the fitted log-log exponent of the time-integrated divergence
    (dt/lambda sweeps) or of the accumulated slip error (eta sweeps).
    """
    if cfg.sweep is None:
        raise ValueError("configuration has no [sweep] section")
    members = cfg.sweep_configs()
    rows = []
    results = []
    for idx, member in enumerate(members):
        tag = f"{cfg.sweep.parameter}{idx}"
        res = run_single(member, out_dir, tag=tag, quiet=quiet)
        recs = res.run_result.records
        dt = member.dt
        div_l2t = math.sqrt(sum(dt * r.div_norm**2 for r in recs))
        slip = sum(dt * r.slip_error for r in recs)
        pen = sum(dt * r.penalization_energy for r in recs)
        last = recs[-1]
        row = {
            "parameter": cfg.sweep.parameter,
            "value": getattr(member, {"dt": "dt", "eta": "eta", "lambda": "lam"}[cfg.sweep.parameter]),
            "dt": member.dt,
            "eps": member.epsilon,
            "eta": member.eta,
            "steps": len(recs),
            "final_kinetic_energy": last.kinetic_energy,
            "final_div_norm": last.div_norm,
            "final_pressure_norm": last.pressure_norm,
            "time_integrated_div": div_l2t,
            "accumulated_slip": slip,
            "accumulated_penalization": pen,
        }
        if res.manufactured_error is not None:
            row["manufactured_error"] = res.manufactured_error
        rows.append(row)
        results.append(res)

    xs = [row["eps" if cfg.sweep.parameter in ("dt", "lambda") else "eta"]
          for row in rows]
    exponents = {}
    if len(rows) >= 2:
        ys = [row["time_integrated_div"] for row in rows]
        if all(y > 0 for y in ys):
            exponents["div_exponent"], exponents["div_fit_residual"] = fit_exponent(xs, ys)
        ys = [row["accumulated_slip"] for row in rows]
        if all(y > 0 for y in ys):
            exponents["slip_exponent"], exponents["slip_fit_residual"] = fit_exponent(xs, ys)
        if all("manufactured_error" in row for row in rows):
            ys = [row["manufactured_error"] for row in rows]
            if all(y > 0 for y in ys) and cfg.sweep.parameter == "dt":
                (exponents["manufactured_error_exponent"],
                 exponents["manufactured_error_fit_residual"]) = \
                    fit_exponent([row["dt"] for row in rows], ys)

    summary = os.path.join(out_dir, "sweep_summary.csv")
    with open(summary, "w", encoding="utf-8", newline="\n") as fh:
        cols = list(_SUMMARY_COLUMNS)
        if all("manufactured_error" in row for row in rows):
            cols.append("manufactured_error")
        cols += sorted(exponents)
        fh.write(",".join(cols) + "\n")
        for row in rows:
            vals = [row[c] if c in row else exponents[c] for c in cols]
            fh.write(",".join(_FMT % v if isinstance(v, float) else str(v)
                              for v in vals) + "\n")
    if not quiet:
        print(f"wrote {summary}")
        for key, val in exponents.items():
            print(f"  {key} = {val:.4f}")
    return results, rows, exponents
