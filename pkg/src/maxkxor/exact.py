"""Exhaustive solution of small instances.

The full cost table is produced by a Gray-code walk (compiled kernel when
available), so each of the 2^N steps only touches the clauses containing the
flipped bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import CapExceededError, InstanceError
from .instances import Instance

DEFAULT_CAP = 26


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Spectrum summary of an instance.

    ``level_values`` holds the distinct costs in descending order, so level 0
    is the set of optimal (maximally satisfying) assignments.
    """

    e_min: int
    e_max: int
    n_optimal: int
    level_values: tuple[int, ...]
    level_counts: tuple[int, ...]
    table: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return len(self.level_values)


def cost_table(instance: Instance, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Satisfied-clause count for every assignment index, as int32."""
    if instance.n_vars > cap:
        raise CapExceededError(f"n_vars={instance.n_vars} exceeds enumeration cap {cap}")
    return kernels.cost_table(instance.n_vars, instance.masks, instance.parities)


def summarize(table: np.ndarray) -> ExactSolution:
    counts = np.bincount(table)
    values = np.flatnonzero(counts)[::-1]
    return ExactSolution(
        e_min=int(values[-1]),
        e_max=int(values[0]),
        n_optimal=int(counts[values[0]]),
        level_values=tuple(int(v) for v in values),
        level_counts=tuple(int(counts[v]) for v in values),
    )


def solve_exact(instance: Instance, keep_table: bool = False, cap: int = DEFAULT_CAP) -> ExactSolution:
    table = cost_table(instance, cap)
    sol = summarize(table)
    if keep_table:
        object.__setattr__(sol, "table", table)
    return sol


def optimal_fraction(sol: ExactSolution, n_vars: int) -> float:
    """Fraction of all 2^N assignments that are optimal."""
    return sol.n_optimal / 2.0**n_vars


def level_index(sol: ExactSolution, cost_value: int) -> int:
    try:
        return sol.level_values.index(int(cost_value))
    except ValueError:
        raise InstanceError(f"cost {cost_value} does not occur in the spectrum") from None
