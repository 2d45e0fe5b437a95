"""Matrix-free discrete differential operators on the MAC grid.

All stencils are second-order central differences. Boundary closures:

* divergence needs no ghosts (normal faces lie on the boundary),
* gradient is set to zero on boundary faces, which makes it the exact
  negative adjoint of divergence for fields with zero normal boundary
  velocity,
* tangential ghost values use reflection (ghost = -inside), realizing a
  homogeneous Dirichlet wall at distance h/2,
* curl is returned on interior nodes only, where its stencil is complete;
  this keeps curl(gradient(p)) exactly zero.
"""

from __future__ import annotations

import numpy as np

from .grid import ScalarCellField, VelocityField


def divergence(vel: VelocityField) -> ScalarCellField:
    """Cell-centered divergence: sum of face fluxes over the cell area."""
    g = vel.grid
    d = (vel.u[1:, :] - vel.u[:-1, :]) / g.hx + (vel.v[:, 1:] - vel.v[:, :-1]) / g.hy
    return ScalarCellField(g, d)


def gradient(p) -> VelocityField:
    """Face-centered gradient of a cell field, zero on boundary faces."""
    g = p.grid
    arr = p.data if isinstance(p, ScalarCellField) else p.p
    gu = np.zeros(g.shape_u)
    gv = np.zeros(g.shape_v)
    gu[1:-1, :] = (arr[1:, :] - arr[:-1, :]) / g.hx
    gv[:, 1:-1] = (arr[:, 1:] - arr[:, :-1]) / g.hy
    return VelocityField(g, gu, gv)


def curl(vel: VelocityField) -> np.ndarray:
    """dv/dx - du/dy at interior grid nodes, shape (nx-1, ny-1)."""
    g = vel.grid
    dvdx = (vel.v[1:, 1:-1] - vel.v[:-1, 1:-1]) / g.hx
    dudy = (vel.u[1:-1, 1:] - vel.u[1:-1, :-1]) / g.hy
    return dvdx - dudy


def _shear_at_nodes(vel: VelocityField) -> np.ndarray:
    """du/dy + dv/dx at all (nx+1)x(ny+1) nodes, Dirichlet ghosts.

    At wall nodes the one-sided difference (value - (-value))/h realizes
    the reflected ghost of a no-slip wall.
    """
    g = vel.grid
    nx, ny = g.nx, g.ny
    dudy = np.empty((nx + 1, ny + 1))
    dudy[:, 1:ny] = (vel.u[:, 1:] - vel.u[:, :-1]) / g.hy
    dudy[:, 0] = 2.0 * vel.u[:, 0] / g.hy
    dudy[:, ny] = -2.0 * vel.u[:, ny - 1] / g.hy
    dvdx = np.empty((nx + 1, ny + 1))
    dvdx[1:nx, :] = (vel.v[1:, :] - vel.v[:-1, :]) / g.hx
    dvdx[0, :] = 2.0 * vel.v[0, :] / g.hx
    dvdx[nx, :] = -2.0 * vel.v[nx - 1, :] / g.hx
    return dudy + dvdx


def strain_divergence(vel: VelocityField, mu: float) -> VelocityField:
    """div(2 mu D(v)) for a field with homogeneous Dirichlet walls.

    Normal strains live at cell centers, the shear du/dy + dv/dx at nodes.
    The result is zero on boundary faces (those rows are eliminated).
    """
    g = vel.grid
    nx, ny = g.nx, g.ny
    exx = (vel.u[1:, :] - vel.u[:-1, :]) / g.hx          # (nx, ny)
    eyy = (vel.v[:, 1:] - vel.v[:, :-1]) / g.hy          # (nx, ny)
    gam = _shear_at_nodes(vel)                           # (nx+1, ny+1)

    ru = np.zeros(g.shape_u)
    rv = np.zeros(g.shape_v)
    ru[1:nx, :] = (
        2.0 * mu * (exx[1:, :] - exx[:-1, :]) / g.hx
        + mu * (gam[1:nx, 1:] - gam[1:nx, :-1]) / g.hy
    )
    rv[:, 1:ny] = (
        2.0 * mu * (eyy[:, 1:] - eyy[:, :-1]) / g.hy
        + mu * (gam[1:, 1:ny] - gam[:-1, 1:ny]) / g.hx
    )
    return VelocityField(g, ru, rv)


def inner(a: VelocityField, b: VelocityField) -> float:
    """L2 inner product of two velocity fields (boundary faces half weight)."""
    g = a.grid
    wu = g.u_face_weights()
    wv = g.v_face_weights()
    return float(np.sum(wu * a.u * b.u) + np.sum(wv * a.v * b.v))


def cell_inner(a, b) -> float:
    """L2 inner product of two cell fields."""
    arr_a = a.data if isinstance(a, ScalarCellField) else a.p
    arr_b = b.data if isinstance(b, ScalarCellField) else b.p
    return float(a.grid.cell_area * np.sum(arr_a * arr_b))


def velocity_at_cell_centers(vel: VelocityField) -> tuple[np.ndarray, np.ndarray]:
    """Average face samples to cell centers, shapes (nx, ny)."""
    uc = 0.5 * (vel.u[1:, :] + vel.u[:-1, :])
    vc = 0.5 * (vel.v[:, 1:] + vel.v[:, :-1])
    return uc, vc
