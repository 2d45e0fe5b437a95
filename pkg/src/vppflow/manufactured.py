"""Manufactured fields: decaying vortex solution and random solenoidal data.

The vortex pair

    v = (sin(pi x) cos(pi y), -cos(pi x) sin(pi y)) exp(-2 pi^2 mu t)
    p = 1/4 (cos(2 pi x) + cos(2 pi y)) exp(-4 pi^2 mu t)

solves the unforced incompressible momentum equation on the unit square:
the time derivative cancels the viscous term exactly and the convective
term cancels the pressure gradient, so the manufactured forcing is
identically zero. Tests verify both cancellations by finite-differencing
the analytic expressions.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, PressureField, VelocityField


def _require_unit_square(grid: Grid):
    if not (abs(grid.lx - 1.0) < 1e-14 and abs(grid.ly - 1.0) < 1e-14):
        raise ValueError("the manufactured vortex is defined on the unit square")


def taylor_green_velocity(t: float, grid: Grid, mu: float) -> VelocityField:
    _require_unit_square(grid)
    decay = np.exp(-2.0 * np.pi**2 * mu * t)
    return VelocityField.from_functions(
        grid,
        lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y) * decay,
        lambda x, y: -np.cos(np.pi * x) * np.sin(np.pi * y) * decay,
    )


def taylor_green_pressure(t: float, grid: Grid, mu: float) -> PressureField:
    _require_unit_square(grid)
    decay = np.exp(-4.0 * np.pi**2 * mu * t)
    x, y = grid.cell_coords()
    p = 0.25 * (np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y)) * decay
    return PressureField(grid, p).project_mean_zero()


def taylor_green(t: float, grid: Grid, mu: float):
    """Velocity, pressure and the (identically zero) forcing at time t."""
    vel = taylor_green_velocity(t, grid, mu)
    p = taylor_green_pressure(t, grid, mu)
    return vel, p, VelocityField.zeros(grid)


def taylor_green_forcing(t: float, grid: Grid, mu: float) -> VelocityField:
    """Forcing that makes the vortex an exact solution: zero everywhere."""
    _require_unit_square(grid)
    return VelocityField.zeros(grid)


def taylor_green_wall_slip(t: float, grid: Grid, mu: float):
    """Tangential wall trace of the vortex (its normal trace vanishes)."""
    from .linalg import WallSlip
    _require_unit_square(grid)
    decay = np.exp(-2.0 * np.pi**2 * mu * t)
    return WallSlip.from_functions(
        grid,
        lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y) * decay,
        lambda x, y: -np.cos(np.pi * x) * np.sin(np.pi * y) * decay,
    )


def random_solenoidal(grid: Grid, rng: np.random.Generator,
                      amplitude: float = 1.0, modes: int = 3) -> VelocityField:
    """Exactly discretely divergence-free random field with v.n = 0 on walls.

    Built from a random low-mode stream function sampled at grid nodes:
    u = d(psi)/dy, v = -d(psi)/dx by node differences, which makes the MAC
    divergence vanish identically and zeroes the normal boundary faces.
    """
    nx, ny = grid.nx, grid.ny
    xn = np.linspace(0.0, grid.lx, nx + 1)
    yn = np.linspace(0.0, grid.ly, ny + 1)
    x, y = np.meshgrid(xn, yn, indexing="ij")
    psi = np.zeros((nx + 1, ny + 1))
    for k in range(1, modes + 1):
        for m in range(1, modes + 1):
            psi += rng.standard_normal() * np.sin(k * np.pi * x / grid.lx) \
                * np.sin(m * np.pi * y / grid.ly)
    # constant (zero) boundary stream function, exact rather than sin(k pi)
    psi[0, :] = psi[-1, :] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    u = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    v = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    vel = VelocityField(grid, u, v)
    scale = vel.max_abs()
    if scale > 0:
        vel = vel * (amplitude / scale)
    return vel
