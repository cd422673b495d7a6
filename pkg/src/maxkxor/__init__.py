"""QAOA and mean-field optimization benchmarks on random Max-kXOR instances."""

__version__ = "0.1.0"

from ._backend import kernels
from .errors import (
    CapExceededError,
    DegenerateSpectrumError,
    InstanceError,
    IntegrationError,
    MaxKXorError,
)
from .exact import ExactSolution, level_index, optimal_fraction, solve_exact
from .instances import Clause, Instance, cost, read_instance, sample_instance, write_instance
from .qaoa import AngleSchedule, CostDiagonal, build_cost_diagonal, energy, evolve

BACKEND = kernels.NAME
