"""Incompressible flow solver with penalty-projection stepping and an
immersed moving obstacle, plus the verification machinery around it."""

from .grid import Grid, PressureField, ScalarCellField, VelocityField
from .linalg import NonConvergence, SolverConfig
from .obstacle import Obstacle
from .scheme import FlowState, RunResult, SchemeParams, SolverFailure, run, step

__all__ = [
    "Grid",
    "VelocityField",
    "PressureField",
    "ScalarCellField",
    "Obstacle",
    "SchemeParams",
    "FlowState",
    "RunResult",
    "SolverConfig",
    "NonConvergence",
    "SolverFailure",
    "run",
    "step",
]

__version__ = "0.1.0"
