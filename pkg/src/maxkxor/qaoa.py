"""Dense state-vector simulation of the p-layer QAOA on a diagonal cost.

States are plain complex128 numpy arrays of length 2^N, indexed
little-endian (variable i is bit i). Bit value 0 corresponds to the Z
eigenvalue +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import DegenerateSpectrumError, InstanceError
from .exact import DEFAULT_CAP, ExactSolution, cost_table
from .instances import Instance


@dataclass(frozen=True, eq=False)
class CostDiagonal:
    values: np.ndarray
    n_vars: int

    @property
    def e_min(self) -> int:
        return int(self.values.min())

    @property
    def e_max(self) -> int:
        return int(self.values.max())

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class AngleSchedule:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have equal length")
        if not self.gammas:
            raise ValueError("a schedule needs at least one layer")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.gammas, self.betas])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> AngleSchedule:
        x = np.asarray(x, dtype=float)
        p = x.size // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    @classmethod
    def zeros(cls, p: int) -> AngleSchedule:
        return cls((0.0,) * p, (0.0,) * p)

    def padded(self) -> AngleSchedule:
        """Same state, one extra identity layer."""
        return AngleSchedule(self.gammas + (0.0,), self.betas + (0.0,))

    def to_dict(self) -> dict:
        return {"gammas": list(self.gammas), "betas": list(self.betas)}

    @classmethod
    def from_dict(cls, data: dict) -> AngleSchedule:
        return cls(tuple(data["gammas"]), tuple(data["betas"]))


def build_cost_diagonal(instance: Instance, cap: int = DEFAULT_CAP) -> CostDiagonal:
    return CostDiagonal(cost_table(instance, cap), instance.n_vars)


def plus_state(n_vars: int) -> np.ndarray:
    dim = 1 << n_vars
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)


def apply_phase(state: np.ndarray, diag: CostDiagonal, gamma: float) -> np.ndarray:
    """In-place multiplication by exp(-i gamma C)."""
    kernels.apply_phase(state, diag.values, float(gamma))
    return state


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """In-place application of exp(-i beta sum_i X_i)."""
    n_vars = state.size.bit_length() - 1
    kernels.apply_mixer(state, n_vars, float(beta))
    return state


def evolve(diag: CostDiagonal, schedule: AngleSchedule) -> np.ndarray:
    return kernels.qaoa_state(diag.values, diag.n_vars, schedule.gammas, schedule.betas)


def expectation(state: np.ndarray, diag: CostDiagonal) -> float:
    return float(kernels.expectation(state, diag.values))


def energy(diag: CostDiagonal, schedule: AngleSchedule) -> float:
    """F_p for ``schedule``, evaluated without keeping the state around."""
    return float(
        kernels.qaoa_expectation(diag.values, diag.n_vars, schedule.gammas, schedule.betas)
    )


def energy_gradient(diag: CostDiagonal, schedule: AngleSchedule, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of F_p w.r.t. (gammas, betas)."""
    x = schedule.as_vector()
    grad = np.empty_like(x)
    for i in range(x.size):
        up, down = x.copy(), x.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (
            energy(diag, AngleSchedule.from_vector(up)) - energy(diag, AngleSchedule.from_vector(down))
        ) / (2 * step)
    return grad


def approximation_ratio(f_value: float, e_min: float, e_max: float) -> float:
    if e_max <= e_min:
        raise DegenerateSpectrumError(
            f"approximation ratio undefined for degenerate spectrum (E_min=E_max={e_min})"
        )
    return (f_value - e_min) / (e_max - e_min)


def level_distribution(state: np.ndarray, sol: ExactSolution, table: np.ndarray | None = None) -> np.ndarray:
    """Probability mass on each distinct cost level, level 0 being optimal."""
    table = sol.table if table is None else table
    if table is None:
        raise InstanceError("level_distribution needs the full cost table")
    probs = np.abs(state) ** 2
    by_cost = np.bincount(table, weights=probs, minlength=sol.e_max + 1)
    return by_cost[list(sol.level_values)]
