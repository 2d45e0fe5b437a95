"""Sparse operator assembly and iterative solvers.

Unknown ordering packs interior u faces first (i = 1..nx-1, all j, row
major) and interior v faces after (all i, j = 1..ny-1). Boundary faces
carry prescribed values (zero for both the Dirichlet prediction and the
normal-zero correction) and are eliminated from every system, so the
reduced space has the uniform face weight hx*hy and plain vector dot
products realize the discrete L2 pairing up to that constant factor.

Operator structure:

* divergence_matrix D maps packed faces to cells; the discrete gradient
  satisfies G = -D^T exactly, which makes grad and div adjoint.
* the viscous block is mu times strain_energy_matrix, built variationally
  from the discrete strain energy 2(exx^2 + eyy^2) + gamma^2, so
  -div(2 mu D(.)) is symmetric positive semi-definite by construction and
  reproduces the operators.strain_divergence stencil row by row.
* convection_matrix antisymmetrizes the staggered divergence-form flux
  matrix, C = (K - K^T)/2. This is a second-order discretization of the
  advective form plus half the advecting field's divergence, and it makes
  the convective quadratic form vanish exactly, not just to O(h^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import Grid, VelocityField


class NonConvergence(Exception):
    """Iterative solve stopped above tolerance; carries the residual reached."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    method: str = "cg"          # "cg" or "bicgstab"
    rtol: float = 1e-10
    max_iter: int = 10000

    def __post_init__(self):
        if not 0.0 < self.rtol < 1.0:
            raise ValueError(f"rtol must be in (0, 1), got {self.rtol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.method not in ("cg", "bicgstab"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class FaceLayout:
    """Index bookkeeping between packed vectors and staggered arrays."""

    grid: Grid

    @property
    def nu(self) -> int:
        return (self.grid.nx - 1) * self.grid.ny

    @property
    def nv(self) -> int:
        return self.grid.nx * (self.grid.ny - 1)

    @property
    def n(self) -> int:
        return self.nu + self.nv

    def pack(self, vel: VelocityField) -> np.ndarray:
        return np.concatenate([vel.u[1:-1, :].ravel(), vel.v[:, 1:-1].ravel()])

    def unpack(self, vec: np.ndarray) -> VelocityField:
        g = self.grid
        u = np.zeros(g.shape_u)
        v = np.zeros(g.shape_v)
        u[1:-1, :] = vec[: self.nu].reshape(g.nx - 1, g.ny)
        v[:, 1:-1] = vec[self.nu :].reshape(g.nx, g.ny - 1)
        return VelocityField(g, u, v)

    def u_index(self, i, j):
        """Packed index of interior u face (i = 1..nx-1)."""
        return (i - 1) * self.grid.ny + j

    def v_index(self, i, j):
        """Packed index of interior v face (j = 1..ny-1)."""
        return self.nu + i * (self.grid.ny - 1) + (j - 1)


@dataclass(frozen=True)
class SparseOperator:
    """CSR matrix over the packed face (or cell) ordering."""

    matrix: sp.csr_matrix
    layout: FaceLayout
    name: str = ""

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec


@lru_cache(maxsize=32)
def face_layout(grid: Grid) -> FaceLayout:
    return FaceLayout(grid)


def _u_index_grid(layout: FaceLayout):
    g = layout.grid
    idx = -np.ones((g.nx + 1, g.ny), dtype=np.int64)
    ii, jj = np.meshgrid(np.arange(1, g.nx), np.arange(g.ny), indexing="ij")
    idx[1:-1, :] = layout.u_index(ii, jj)
    return idx


def _v_index_grid(layout: FaceLayout):
    g = layout.grid
    idx = -np.ones((g.nx, g.ny + 1), dtype=np.int64)
    ii, jj = np.meshgrid(np.arange(g.nx), np.arange(1, g.ny), indexing="ij")
    idx[:, 1:-1] = layout.v_index(ii, jj)
    return idx


@lru_cache(maxsize=32)
def divergence_matrix(grid: Grid) -> sp.csr_matrix:
    """Cells x faces divergence over the packed interior unknowns."""
    layout = face_layout(grid)
    nx, ny = grid.nx, grid.ny
    uidx = _u_index_grid(layout)
    vidx = _v_index_grid(layout)
    cell = np.arange(grid.ncells).reshape(nx, ny)

    rows, cols, vals = [], [], []

    def add(r, c, v):
        keep = c >= 0
        rows.append(r[keep])
        cols.append(c[keep])
        vals.append(v[keep] if isinstance(v, np.ndarray) else np.full(keep.sum(), v))

    add(cell.ravel(), uidx[1:, :].ravel(), np.full(grid.ncells, 1.0 / grid.hx))
    add(cell.ravel(), uidx[:-1, :].ravel(), np.full(grid.ncells, -1.0 / grid.hx))
    add(cell.ravel(), vidx[:, 1:].ravel(), np.full(grid.ncells, 1.0 / grid.hy))
    add(cell.ravel(), vidx[:, :-1].ravel(), np.full(grid.ncells, -1.0 / grid.hy))

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.ncells, layout.n),
    )
    return mat.tocsr()


@lru_cache(maxsize=32)
def gradient_matrix(grid: Grid) -> sp.csr_matrix:
    """Faces x cells gradient; exactly -divergence_matrix^T."""
    return (-divergence_matrix(grid).T).tocsr()


@lru_cache(maxsize=32)
def strain_energy_matrix(grid: Grid) -> sp.csr_matrix:
    """Positive semi-definite matrix S with x^T S x = 2|exx|^2 + 2|eyy|^2 + |gamma|^2.

    The viscous operator -div(2 mu D(.)) on the packed unknowns is mu * S.
    """
    layout = face_layout(grid)
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hx, grid.hy
    uidx = _u_index_grid(layout)
    vidx = _v_index_grid(layout)

    def build(rows, cols, vals, shape):
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
        keep = c >= 0
        return sp.coo_matrix((v[keep], (r[keep], c[keep])), shape=shape).tocsr()

    ncell = grid.ncells
    cell = np.arange(ncell)

    # exx = du/dx at cells
    bxx = build(
        [cell, cell],
        [uidx[1:, :].ravel(), uidx[:-1, :].ravel()],
        [np.full(ncell, 1.0 / hx), np.full(ncell, -1.0 / hx)],
        (ncell, layout.n),
    )
    # eyy = dv/dy at cells
    byy = build(
        [cell, cell],
        [vidx[:, 1:].ravel(), vidx[:, :-1].ravel()],
        [np.full(ncell, 1.0 / hy), np.full(ncell, -1.0 / hy)],
        (ncell, layout.n),
    )

    # gamma = du/dy + dv/dx at nodes, ghost reflection doubles the wall term
    nnode = (nx + 1) * (ny + 1)
    node = np.arange(nnode).reshape(nx + 1, ny + 1)
    rows, cols, vals = [], [], []

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(1, ny), indexing="ij")
    rows += [node[:, 1:-1].ravel()] * 2
    cols += [uidx[ii, jj].ravel(), uidx[ii, jj - 1].ravel()]
    vals += [np.full(ii.size, 1.0 / hy), np.full(ii.size, -1.0 / hy)]

    i0 = np.arange(nx + 1)
    rows += [node[:, 0], node[:, ny]]
    cols += [uidx[i0, 0], uidx[i0, ny - 1]]
    vals += [np.full(nx + 1, 2.0 / hy), np.full(nx + 1, -2.0 / hy)]

    ii, jj = np.meshgrid(np.arange(1, nx), np.arange(ny + 1), indexing="ij")
    rows += [node[1:-1, :].ravel()] * 2
    cols += [vidx[ii, jj].ravel(), vidx[ii - 1, jj].ravel()]
    vals += [np.full(ii.size, 1.0 / hx), np.full(ii.size, -1.0 / hx)]

    j0 = np.arange(ny + 1)
    rows += [node[0, :], node[nx, :]]
    cols += [vidx[0, j0], vidx[nx - 1, j0]]
    vals += [np.full(ny + 1, 2.0 / hx), np.full(ny + 1, -2.0 / hx)]

    bgam = build(rows, cols, vals, (nnode, layout.n))

    # trapezoidal node quadrature: wall nodes count half, corners a quarter;
    # with the doubled ghost coefficients this reproduces the reflection
    # stencil of operators.strain_divergence exactly
    wnode = np.ones((nx + 1, ny + 1))
    wnode[0, :] *= 0.5
    wnode[-1, :] *= 0.5
    wnode[:, 0] *= 0.5
    wnode[:, -1] *= 0.5
    wdiag = sp.diags(wnode.ravel())

    s = 2.0 * (bxx.T @ bxx) + 2.0 * (byy.T @ byy) + bgam.T @ wdiag @ bgam
    return s.tocsr()


def convection_matrix(grid: Grid, vel_prev: VelocityField) -> sp.csr_matrix:
    """Skew-symmetric linearized convection built from the previous velocity.

    K is the staggered divergence-form flux matrix with centered
    interpolation; its antisymmetrization (K - K^T)/2 equals the advective
    form plus half the advecting divergence to second order and gives
    x^T C x = 0 in exact arithmetic.
    """
    if not (np.all(np.isfinite(vel_prev.u)) and np.all(np.isfinite(vel_prev.v))):
        raise ValueError("advecting velocity contains non-finite entries")
    layout = face_layout(grid)
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hx, grid.hy
    up, vp = vel_prev.u, vel_prev.v
    uidx = _u_index_grid(layout)
    vidx = _v_index_grid(layout)

    rows, cols, vals = [], [], []

    def add(r, c, v):
        keep = c.ravel() >= 0
        rows.append(r.ravel()[keep])
        cols.append(c.ravel()[keep])
        vals.append(v.ravel()[keep])

    # --- u momentum rows (interior faces i = 1..nx-1, all j) ---
    ii, jj = np.meshgrid(np.arange(1, nx), np.arange(ny), indexing="ij")
    row = uidx[ii, jj]
    uc_e = 0.5 * (up[ii, jj] + up[ii + 1, jj])      # advecting u at east cell
    uc_w = 0.5 * (up[ii - 1, jj] + up[ii, jj])      # west cell
    vn_n = 0.5 * (vp[ii - 1, jj + 1] + vp[ii, jj + 1])  # advecting v at north node
    vn_s = 0.5 * (vp[ii - 1, jj] + vp[ii, jj])          # south node

    add(row, uidx[ii, jj], (uc_e - uc_w) / (2 * hx))
    add(row, uidx[ii + 1, jj], uc_e / (2 * hx))
    add(row, uidx[ii - 1, jj], -uc_w / (2 * hx))
    # wall nodes contribute no flux: the centered average of w vanishes there
    north = jj + 1 < ny
    add(row[north], uidx[ii, jj][north], (vn_n / (2 * hy))[north])
    add(row[north], uidx[ii, np.minimum(jj + 1, ny - 1)][north], (vn_n / (2 * hy))[north])
    south = jj > 0
    add(row[south], uidx[ii, jj][south], (-vn_s / (2 * hy))[south])
    add(row[south], uidx[ii, np.maximum(jj - 1, 0)][south], (-vn_s / (2 * hy))[south])

    # --- v momentum rows (interior faces j = 1..ny-1, all i) ---
    ii, jj = np.meshgrid(np.arange(nx), np.arange(1, ny), indexing="ij")
    row = vidx[ii, jj]
    vc_n = 0.5 * (vp[ii, jj] + vp[ii, jj + 1])
    vc_s = 0.5 * (vp[ii, jj - 1] + vp[ii, jj])
    ue_e = 0.5 * (up[ii + 1, jj - 1] + up[ii + 1, jj])
    ue_w = 0.5 * (up[ii, jj - 1] + up[ii, jj])

    add(row, vidx[ii, jj], (vc_n - vc_s) / (2 * hy))
    add(row, vidx[ii, jj + 1], vc_n / (2 * hy))
    add(row, vidx[ii, jj - 1], -vc_s / (2 * hy))
    east = ii + 1 < nx
    add(row[east], vidx[ii, jj][east], (ue_e / (2 * hx))[east])
    add(row[east], vidx[np.minimum(ii + 1, nx - 1), jj][east], (ue_e / (2 * hx))[east])
    west = ii > 0
    add(row[west], vidx[ii, jj][west], (-ue_w / (2 * hx))[west])
    add(row[west], vidx[np.maximum(ii - 1, 0), jj][west], (-ue_w / (2 * hx))[west])

    k = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(layout.n, layout.n),
    ).tocsr()
    c = (0.5 * (k - k.T)).tocsr()
    c.eliminate_zeros()
    return c


def penalization_diagonal(grid: Grid, chi_u: np.ndarray, chi_v: np.ndarray) -> np.ndarray:
    """Pack face-sampled obstacle masks into a diagonal over the unknowns."""
    layout = face_layout(grid)
    return np.concatenate([chi_u[1:-1, :].ravel(), chi_v[:, 1:-1].ravel()])


@dataclass(frozen=True)
class WallSlip:
    """Prescribed tangential wall velocities (normal traces must stay zero).

    Used by manufactured-solution studies whose exact solution does not
    vanish on the walls; the homogeneous solver path is the g = 0 case.
    """

    u_bottom: np.ndarray    # u at (x_i, 0),  length nx+1
    u_top: np.ndarray       # u at (x_i, ly), length nx+1
    v_left: np.ndarray      # v at (0, y_j),  length ny+1
    v_right: np.ndarray     # v at (lx, y_j), length ny+1

    @classmethod
    def from_functions(cls, grid: Grid, fu, fv) -> "WallSlip":
        xi = np.arange(grid.nx + 1) * grid.hx
        yj = np.arange(grid.ny + 1) * grid.hy
        return cls(
            u_bottom=np.asarray(fu(xi, np.zeros_like(xi)), dtype=float),
            u_top=np.asarray(fu(xi, np.full_like(xi, grid.ly)), dtype=float),
            v_left=np.asarray(fv(np.zeros_like(yj), yj), dtype=float),
            v_right=np.asarray(fv(np.full_like(yj, grid.lx), yj), dtype=float),
        )


def boundary_rhs(grid: Grid, v_prev: VelocityField, mu: float,
                 slip: WallSlip) -> np.ndarray:
    """Right-hand-side contribution of inhomogeneous tangential wall data.

    Eliminating the ghost value 2 g - w_in from the viscous stencil yields
    2 mu g / h^2 on wall-adjacent rows; the skew convection contributes half
    the advective ghost correction (the divergence-form wall flux vanishes
    because the advecting normal velocity is zero on the wall).
    """
    layout = face_layout(grid)
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hx, grid.hy
    up, vp = v_prev.u, v_prev.v
    rhs = np.zeros(layout.n)

    iu = np.arange(1, nx)
    # advecting v averaged to the first interior u row / last interior u row
    v_node1 = 0.5 * (vp[iu - 1, 1] + vp[iu, 1])
    v_node_top = 0.5 * (vp[iu - 1, ny - 1] + vp[iu, ny - 1])
    vface_b = 0.5 * v_node1
    vface_t = 0.5 * v_node_top
    rhs[layout.u_index(iu, 0)] += (2.0 * mu / hy**2) * slip.u_bottom[iu] \
        + 0.5 * vface_b * slip.u_bottom[iu] / hy
    rhs[layout.u_index(iu, ny - 1)] += (2.0 * mu / hy**2) * slip.u_top[iu] \
        - 0.5 * vface_t * slip.u_top[iu] / hy

    jv = np.arange(1, ny)
    u_node1 = 0.5 * (up[1, jv - 1] + up[1, jv])
    u_node_right = 0.5 * (up[nx - 1, jv - 1] + up[nx - 1, jv])
    uface_l = 0.5 * u_node1
    uface_r = 0.5 * u_node_right
    rhs[layout.v_index(0, jv)] += (2.0 * mu / hx**2) * slip.v_left[jv] \
        + 0.5 * uface_l * slip.v_left[jv] / hx
    rhs[layout.v_index(nx - 1, jv)] += (2.0 * mu / hx**2) * slip.v_right[jv] \
        - 0.5 * uface_r * slip.v_right[jv] / hx
    return rhs


def assemble_prediction(grid, obstacle, params, v_prev: VelocityField, t_next: float) -> SparseOperator:
    """Momentum operator for the implicit velocity prediction.

    (1/dt) I + C(v_prev) - div(2 mu D(.)) + (1/eta) chi(t_next) I
    on the interior faces, Dirichlet rows eliminated.
    """
    layout = face_layout(grid)
    a = convection_matrix(grid, v_prev) + params.mu * strain_energy_matrix(grid)
    diag = np.full(layout.n, 1.0 / params.dt)
    if obstacle is not None and obstacle.shape != "none":
        chi_u, chi_v = obstacle.sample_chi_faces(t_next, grid)
        diag = diag + penalization_diagonal(grid, chi_u, chi_v) / params.eta
    a = (a + sp.diags(diag)).tocsr()
    a.eliminate_zeros()
    return SparseOperator(a, layout, name="prediction")


def assemble_correction(grid, params) -> SparseOperator:
    """SPD operator (eps/dt) I - grad(div(.)) of the velocity correction."""
    if params.epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {params.epsilon}")
    layout = face_layout(grid)
    d = divergence_matrix(grid)
    a = (sp.diags(np.full(layout.n, params.epsilon / params.dt)) + d.T @ d).tocsr()
    a.eliminate_zeros()
    return SparseOperator(a, layout, name="correction")


def _dirichlet_lap_1d(m: int, h: float, offset: bool) -> sp.csr_matrix:
    """1D -d2/dx2 with homogeneous Dirichlet ends.

    offset=True: samples sit h/2 inside the wall (ghost reflection, end
    diagonal 3/h^2). offset=False: samples are interior lattice points with
    the wall value one spacing away (standard 2/h^2 diagonal).
    """
    main = np.full(m, 2.0 / h**2)
    if offset:
        main[0] = main[-1] = 3.0 / h**2
    off = np.full(m - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1]).tocsr()


@lru_cache(maxsize=32)
def dirichlet_laplacian(grid: Grid, which: str) -> sp.csr_matrix:
    """-Laplace with homogeneous Dirichlet walls on a sample lattice.

    which = "cell" (nx x ny), "u" (interior u faces (nx-1) x ny) or
    "v" (nx x (ny-1)).
    """
    if which == "cell":
        lx = _dirichlet_lap_1d(grid.nx, grid.hx, offset=True)
        ly = _dirichlet_lap_1d(grid.ny, grid.hy, offset=True)
    elif which == "u":
        lx = _dirichlet_lap_1d(grid.nx - 1, grid.hx, offset=False)
        ly = _dirichlet_lap_1d(grid.ny, grid.hy, offset=True)
    elif which == "v":
        lx = _dirichlet_lap_1d(grid.nx, grid.hx, offset=True)
        ly = _dirichlet_lap_1d(grid.ny - 1, grid.hy, offset=False)
    else:
        raise ValueError(f"unknown lattice {which!r}")
    ix = sp.identity(lx.shape[0], format="csr")
    iy = sp.identity(ly.shape[0], format="csr")
    return (sp.kron(lx, iy) + sp.kron(ix, ly)).tocsr()


# ----------------------------------------------------------------------
# Krylov solvers (Jacobi preconditioned)
# ----------------------------------------------------------------------

def _jacobi(matrix: sp.csr_matrix) -> np.ndarray:
    d = matrix.diagonal()
    d = np.where(np.abs(d) > 0, d, 1.0)
    return 1.0 / d


def solve(op: SparseOperator, rhs: np.ndarray, cfg: SolverConfig, x0=None):
    """Solve op x = rhs; returns (x, iterations).

    Raises NonConvergence if the relative residual stays above cfg.rtol
    after cfg.max_iter iterations.
    """
    a = op.matrix
    if rhs.shape[0] != a.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match operator {a.shape}")
    if cfg.method == "cg":
        return _cg(a, rhs, cfg, x0)
    return _bicgstab(a, rhs, cfg, x0)


def _cg(a, b, cfg, x0=None):
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b), 0
    tol = cfg.rtol * norm_b
    minv = _jacobi(a)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - a @ x if x0 is not None else b.copy()
    if np.linalg.norm(r) <= tol:
        return x, 0
    z = minv * r
    p = z.copy()
    rz = r @ z
    for k in range(1, cfg.max_iter + 1):
        ap = a @ p
        pap = p @ ap
        if pap <= 0.0:
            raise NonConvergence("CG breakdown: operator not positive definite",
                                 np.linalg.norm(r), k)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= tol:
            # guard against recurrence drift before accepting
            r_true = b - a @ x
            if np.linalg.norm(r_true) <= tol:
                return x, k
            r = r_true
            z = minv * r
            p = z.copy()
            rz = r @ z
            continue
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergence("CG did not converge", float(np.linalg.norm(b - a @ x)), cfg.max_iter)


def _bicgstab(a, b, cfg, x0=None):
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b), 0
    tol = cfg.rtol * norm_b
    minv = _jacobi(a)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - a @ x if x0 is not None else b.copy()
    if np.linalg.norm(r) <= tol:
        return x, 0
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    for k in range(1, cfg.max_iter + 1):
        rho_new = r_hat @ r
        if abs(rho_new) < 1e-300:
            raise NonConvergence("BiCGStab breakdown (rho ~ 0)", float(np.linalg.norm(r)), k)
        beta = (rho_new / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        p_hat = minv * p
        v = a @ p_hat
        denom = r_hat @ v
        if abs(denom) < 1e-300:
            raise NonConvergence("BiCGStab breakdown (r_hat . v ~ 0)",
                                 float(np.linalg.norm(r)), k)
        alpha = rho_new / denom
        s = r - alpha * v
        if np.linalg.norm(s) <= tol:
            x = x + alpha * p_hat
            r_true = b - a @ x
            if np.linalg.norm(r_true) <= tol:
                return x, k
            r = r_true
        else:
            s_hat = minv * s
            t = a @ s_hat
            tt = t @ t
            if tt == 0.0:
                raise NonConvergence("BiCGStab breakdown (t = 0)", float(np.linalg.norm(s)), k)
            omega = (t @ s) / tt
            x = x + alpha * p_hat + omega * s_hat
            r = s - omega * t
            if np.linalg.norm(r) <= tol:
                r_true = b - a @ x
                if np.linalg.norm(r_true) <= tol:
                    return x, k
                r = r_true
        rho = rho_new
    raise NonConvergence("BiCGStab did not converge",
                         float(np.linalg.norm(b - a @ x)), cfg.max_iter)
