"""Self-contained second-order cone programming."""
from .cone import NONNEG, SOC, ConeLayout, ConeProgram, NTScaling
from .solver import SolveResult, SolverSettings, Status, solve
from .textio import read_program, write_program

__all__ = [
    "NONNEG", "SOC", "ConeLayout", "ConeProgram", "NTScaling",
    "SolveResult", "SolverSettings", "Status", "solve",
    "read_program", "write_program",
]
