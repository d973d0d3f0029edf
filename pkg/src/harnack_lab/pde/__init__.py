"""Exact solutions and finite-difference solvers for the model equations."""

from __future__ import annotations

from .exact import (
    Barenblatt,
    HeatKernel,
    PBarenblatt,
    SeparableProfile,
    barenblatt_eval,
    heat_kernel_eval,
    moser_family,
    moser_ratio,
)
from .grid import GridSolution
from .solvers import SolverConfig, solve_heat, solve_pdiff, solve_pme

__all__ = [
    "Barenblatt",
    "GridSolution",
    "HeatKernel",
    "PBarenblatt",
    "SeparableProfile",
    "SolverConfig",
    "barenblatt_eval",
    "heat_kernel_eval",
    "moser_family",
    "moser_ratio",
    "solve_heat",
    "solve_pdiff",
    "solve_pme",
]
