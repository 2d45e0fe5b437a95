"""Three-stage vector penalty-projection time stepper.

Each step advances (v^n, p^n) to (v^{n+1}, p^{n+1}):

1. prediction: implicit momentum solve for the tentative velocity with
   the old pressure gradient on the right-hand side and homogeneous
   Dirichlet walls,
2. correction: SPD grad-div solve for the incremental velocity with
   zero normal boundary values; v^{n+1} is the sum of the two,
3. pressure update: p^{n+1} = p^n - div(v^{n+1}) / eps, projected back
   to zero mean.

The penalty weight is always slaved to the time step, eps = lambda * dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, operators
from .grid import PressureField, VelocityField
from .linalg import NonConvergence, SolverConfig, SparseOperator


@dataclass(frozen=True)
class SchemeParams:
    """Time step, penalty ratios and solver settings for one run."""

    dt: float
    t_final: float
    lam: float = 1.0
    eta: float = 1e-6
    mu: float = 1e-2
    prediction_solver: SolverConfig = field(
        default_factory=lambda: SolverConfig("bicgstab", rtol=1e-8, max_iter=20000))
    correction_solver: SolverConfig = field(
        default_factory=lambda: SolverConfig("cg", rtol=1e-10, max_iter=20000))

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.t_final < self.dt:
            raise ValueError(
                f"final time {self.t_final} shorter than one step dt={self.dt}")

    @property
    def epsilon(self) -> float:
        return self.lam * self.dt

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-12))


@dataclass
class FlowState:
    """Solution at the end of step n (t = n dt)."""

    n: int
    t: float
    v: VelocityField
    v_tilde: VelocityField
    v_hat: VelocityField
    p: PressureField

    @classmethod
    def initial(cls, v0: VelocityField, p0: PressureField) -> "FlowState":
        return cls(n=0, t=0.0, v=v0.copy(), v_tilde=v0.copy(),
                   v_hat=VelocityField.zeros(v0.grid), p=p0.project_mean_zero())


class SolverFailure(RuntimeError):
    """A step's linear solve failed; carries the step index."""

    def __init__(self, stage, step_index, cause: NonConvergence):
        super().__init__(f"{stage} solve failed at step {step_index}: {cause}")
        self.stage = stage
        self.step_index = step_index
        self.cause = cause


@dataclass
class StepInfo:
    prediction_iterations: int = 0
    correction_iterations: int = 0


def predict(state: FlowState, forcing: VelocityField, obstacle, params: SchemeParams,
            wall_slip=None):
    """Solve the implicit momentum prediction; returns (v_tilde, iterations).

    wall_slip optionally prescribes tangential wall velocities (a
    linalg.WallSlip); the default is the homogeneous no-slip wall.
    """
    grid = state.v.grid
    t_next = state.t + params.dt
    op = linalg.assemble_prediction(grid, obstacle, params, state.v, t_next)
    layout = op.layout

    rhs_field = forcing + (1.0 / params.dt) * state.v
    rhs = layout.pack(rhs_field) - linalg.gradient_matrix(grid) @ state.p.p.ravel()
    if obstacle is not None and obstacle.shape != "none":
        chi_u, chi_v = obstacle.sample_chi_faces(t_next, grid)
        vs = obstacle.sample_solid_velocity(t_next, grid)
        rhs += linalg.penalization_diagonal(grid, chi_u, chi_v) * layout.pack(vs) / params.eta
    if wall_slip is not None:
        rhs += linalg.boundary_rhs(grid, state.v, params.mu, wall_slip)
    x, iters = linalg.solve(op, rhs, params.prediction_solver)
    return layout.unpack(x), iters


def correct(v_tilde: VelocityField, params: SchemeParams,
            correction_op: SparseOperator | None = None):
    """Solve the grad-div correction; returns (v_hat, iterations)."""
    grid = v_tilde.grid
    if correction_op is None:
        correction_op = linalg.assemble_correction(grid, params)
    layout = correction_op.layout
    d = linalg.divergence_matrix(grid)
    rhs = linalg.gradient_matrix(grid) @ (d @ layout.pack(v_tilde))
    x, iters = linalg.solve(correction_op, rhs, params.correction_solver)
    return layout.unpack(x), iters


def update_pressure(p_old: PressureField, v_new: VelocityField,
                    params: SchemeParams) -> PressureField:
    """p_new = p_old - div(v_new)/eps, projected to zero mean."""
    div = operators.divergence(v_new)
    p = PressureField(p_old.grid, p_old.p - div.data / params.epsilon)
    return p.project_mean_zero()


def step(state: FlowState, forcing_fn, obstacle, params: SchemeParams,
         correction_op: SparseOperator | None = None, wall_slip_fn=None):
    """Advance one time step; returns (new_state, StepInfo).

    forcing_fn(t, grid) -> VelocityField, sampled at t^{n+1}; likewise
    wall_slip_fn(t) -> linalg.WallSlip when tangential wall data moves.
    """
    grid = state.v.grid
    t_next = state.t + params.dt
    if t_next > params.t_final + 1e-12:
        raise ValueError(f"step past final time: t={t_next} > T={params.t_final}")
    f_next = forcing_fn(t_next, grid)
    slip = wall_slip_fn(t_next) if wall_slip_fn is not None else None

    try:
        v_tilde, pred_iters = predict(state, f_next, obstacle, params, wall_slip=slip)
    except NonConvergence as exc:
        raise SolverFailure("prediction", state.n + 1, exc) from exc
    try:
        v_hat, corr_iters = correct(v_tilde, params, correction_op)
    except NonConvergence as exc:
        raise SolverFailure("correction", state.n + 1, exc) from exc

    v_new = v_tilde + v_hat
    p_new = update_pressure(state.p, v_new, params)
    new_state = FlowState(n=state.n + 1, t=t_next, v=v_new,
                          v_tilde=v_tilde, v_hat=v_hat, p=p_new)
    return new_state, StepInfo(pred_iters, corr_iters)


@dataclass
class RunResult:
    final_state: FlowState
    records: list
    initial_divergence: float


def run(v0: VelocityField, p0: PressureField, forcing_fn, obstacle,
        params: SchemeParams, record_sink=None, snapshot_sink=None,
        wall_slip_fn=None) -> RunResult:
    """Execute floor(T/dt) steps from (v0, p0).

    Per-step DiagnosticsRecord rows are collected and also streamed to
    record_sink(record) if given; snapshot_sink(state) receives every state
    including the initial one. Any initial divergence is reported in the
    result rather than rejected.
    """
    from .diagnostics import make_record  # local import to avoid a cycle

    grid = v0.grid
    if obstacle is not None and obstacle.shape != "none":
        gap = obstacle.clearance(grid, params.t_final)
        if gap <= 0:
            raise ValueError(f"obstacle touches the boundary (clearance {gap:.3g})")

    state = FlowState.initial(v0, p0)
    initial_div = float(np.sqrt(operators.cell_inner(
        operators.divergence(state.v), operators.divergence(state.v))))
    correction_op = linalg.assemble_correction(grid, params)

    records = []
    if snapshot_sink is not None:
        snapshot_sink(state)
    for _ in range(params.n_steps):
        prev = state
        state, info = step(state, forcing_fn, obstacle, params, correction_op,
                           wall_slip_fn=wall_slip_fn)
        rec = make_record(prev, state, info, obstacle, params)
        records.append(rec)
        if record_sink is not None:
            record_sink(rec)
        if snapshot_sink is not None:
            snapshot_sink(state)
    return RunResult(final_state=state, records=records,
                     initial_divergence=initial_div)
