"""Monolithic coupled reference step, solved densely.

One implicit step of the penalized momentum equation with the exact
incompressibility constraint, as a saddle-point system in (v, p) plus a
scalar multiplier pinning the pressure mean:

    [ A   G   0 ] [v]   [f + v^n/dt + chi/eta v_s]
    [ D   0   e ] [p] = [0]
    [ 0  a^T   0 ] [g]   [0]

A is the same discrete momentum operator the split scheme assembles, G and
D the packed gradient/divergence. Solving by dense LU keeps this path free
of the iterative solvers' failure modes; grids above 32x32 are rejected.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .grid import PressureField, VelocityField


class SingularSystem(RuntimeError):
    """The augmented coupled matrix was reported singular."""


def coupled_step(v_prev: VelocityField, p_prev: PressureField, forcing: VelocityField,
                 obstacle, params, t_next: float | None = None,
                 max_cells: int = 32 * 32):
    """Solve one fully coupled step; returns (v_new, p_new).

    forcing is the body force at t^{n+1}; the obstacle indicator and solid
    velocity are evaluated at t_next (defaults to one step from t = 0).
    p_prev only fixes the problem data through its absence from the
    momentum rows: the pressure unknown here is the full p^{n+1}.
    """
    grid = v_prev.grid
    if grid.ncells > max_cells:
        raise ValueError(f"coupled oracle restricted to {max_cells} cells, "
                         f"got {grid.ncells}")
    if t_next is None:
        t_next = params.dt
    layout = linalg.face_layout(grid)
    n = layout.n
    nc = grid.ncells

    a = linalg.assemble_prediction(grid, obstacle, params, v_prev, t_next).matrix
    g = linalg.gradient_matrix(grid)
    d = linalg.divergence_matrix(grid)

    size = n + nc + 1
    mat = np.zeros((size, size))
    mat[:n, :n] = a.toarray()
    mat[:n, n:n + nc] = g.toarray()
    mat[n:n + nc, :n] = d.toarray()
    mat[n:n + nc, -1] = 1.0
    mat[-1, n:n + nc] = grid.cell_area

    rhs_field = forcing + (1.0 / params.dt) * v_prev
    rhs = np.zeros(size)
    rhs[:n] = layout.pack(rhs_field)
    if obstacle is not None and obstacle.shape != "none":
        chi_u, chi_v = obstacle.sample_chi_faces(t_next, grid)
        vs = obstacle.sample_solid_velocity(t_next, grid)
        rhs[:n] += linalg.penalization_diagonal(grid, chi_u, chi_v) \
            * layout.pack(vs) / params.eta

    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"coupled step matrix is singular: {exc}") from exc

    v_new = layout.unpack(sol[:n])
    p_new = PressureField(grid, sol[n:n + nc].reshape(grid.shape_p)).project_mean_zero()
    return v_new, p_new
