"""Mean-field approximate optimization (MF-AOA) for Max-kXOR.

Each variable is a classical unit vector n_i = (x, y, z) that precesses in the
effective field ``2 * ((1 - s), 0, s * m_i)`` while s = t / T_f runs from 0 to
1. Spins start along +x. The clause couplings are J = -parity / 2, which makes
the classical energy at the poles equal to (satisfied clauses - |M| / 2), so
following the +x start adiabatically ends near maximal satisfaction.
A z-component > 0 projects to bit 0 (Z eigenvalue +1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import IntegrationError
from .exact import ExactSolution, solve_exact
from .instances import Instance, cost
from .qaoa import approximation_ratio

log = logging.getLogger(__name__)

DEFAULT_T_FINAL = 2.0**15

_SIGMA_TABLE = {
    0.5: {3: 0.2, 4: 0.5, 5: 1.0, 6: 1.0, 7: 1.5, 8: 1.5, 9: 2.0, 10: 3.0},
    1.5: {3: 0.5, 4: 1.0, 5: 1.0, 6: 1.0, 7: 1.5, 8: 1.5, 9: 1.5, 10: 3.0},
}


@dataclass(frozen=True, eq=False)
class Catalyst:
    lambdas: np.ndarray
    sigma: float
    seed: int

    def envelope(self, s: float) -> np.ndarray:
        return self.lambdas * (s * s * (1.0 - s))


@dataclass(frozen=True)
class MfConfig:
    t_final: float = DEFAULT_T_FINAL
    rtol: float = 1e-6
    atol: float = 1e-8
    h0: float = 1e-3
    h_max: float = 1.0
    max_steps: int = 50_000_000


@dataclass(frozen=True, eq=False)
class MfResult:
    bitstring: tuple[int, ...]
    e_star: int
    ratio: float
    rel_deviation: float
    final_spins: np.ndarray
    n_steps: int
    n_rejected: int = 0
    n_ties: int = 0
    max_norm_residual: float = 0.0
    catalyst: Catalyst | None = field(default=None, repr=False)

    @property
    def tie(self) -> bool:
        return self.n_ties > 0


def schedule_s(t: float, t_final: float) -> float:
    return t / t_final


def sigma_lookup(k: int, r: float) -> float:
    """Catalyst standard deviation for (k, r); r snaps to the nearer of 0.5 and 1.5."""
    if not 3 <= k <= 10:
        raise ValueError(f"no catalyst width tabulated for k={k}")
    row = 0.5 if abs(r - 0.5) <= abs(r - 1.5) else 1.5
    if row != r:
        log.info("sigma_lookup: r=%g not tabulated, using row r=%g", r, row)
    return _SIGMA_TABLE[row][k]


def sample_catalyst(n_vars: int, sigma: float, seed: int) -> Catalyst:
    rng = np.random.default_rng(seed)
    lam = rng.normal(0.0, sigma, size=n_vars) if sigma > 0 else np.zeros(n_vars)
    return Catalyst(lam, float(sigma), int(seed))


def _clause_arrays(instance: Instance):
    k = instance.k
    m = instance.n_clauses
    cvars = np.array([v for c in instance.clauses for v in c.vars], dtype=np.int32)
    coff = np.arange(0, (m + 1) * k, k, dtype=np.int32)
    cj = -0.5 * instance.parities.astype(np.float64)
    return cvars, coff, cj


def initial_spins(n_vars: int) -> np.ndarray:
    spins = np.zeros((n_vars, 3))
    spins[:, 0] = 1.0
    return spins


def magnetization(instance: Instance, spins: np.ndarray, catalyst: Catalyst | None, s: float) -> np.ndarray:
    """Effective z-field m_i on every spin."""
    nz = np.asarray(spins)[:, 2]
    m = np.zeros(instance.n_vars) if catalyst is None else catalyst.envelope(s).astype(float)
    for c in instance.clauses:
        j = -0.5 * c.parity
        for v in c.vars:
            m[v] += j * math.prod(nz[u] for u in c.vars if u != v)
    return m


def eom_rhs(instance: Instance, catalyst: Catalyst | None, t: float, t_final: float, spins: np.ndarray) -> np.ndarray:
    s = schedule_s(t, t_final)
    m = magnetization(instance, spins, catalyst, s)
    x, y, z = np.asarray(spins).T
    return np.stack(
        [-2 * s * m * y, 2 * s * m * x - 2 * (1 - s) * z, 2 * (1 - s) * y], axis=1
    )


def classical_energy(instance: Instance, spins: np.ndarray) -> float:
    """Problem part of the mean-field energy, sum_c J_c prod_{i in c} n^z_i."""
    nz = np.asarray(spins)[:, 2]
    return sum(-0.5 * c.parity * math.prod(nz[v] for v in c.vars) for c in instance.clauses)


def project(spins: np.ndarray) -> tuple[tuple[int, ...], int]:
    """Bitstring from the signs of the z-components, plus the number of exact ties."""
    nz = np.asarray(spins)[:, 2]
    bits = tuple(int(b) for b in (nz < 0))
    return bits, int(np.count_nonzero(nz == 0.0))


def rel_deviation(e_star: float, e_best: float) -> float:
    """(E* - E_best) / E_best with E_best the optimal (maximal) cost."""
    if e_best == 0:
        raise ValueError("relative deviation undefined for e_best = 0")
    return (e_star - e_best) / e_best


def evolve_spins(
    instance: Instance,
    catalyst: Catalyst,
    config: MfConfig = MfConfig(),
    dump=None,
    dump_every: float | None = None,
):
    """Integrate the equations of motion from t=0 to T_f.

    Returns ``(spins, info)`` where ``info`` carries step counts and the largest
    pre-renormalization norm residual. With ``dump`` set, spins are written as
    whitespace separated columns ``t x_0 y_0 z_0 x_1 ...`` every ``dump_every``.
    """
    cvars, coff, cj = _clause_arrays(instance)
    y = initial_spins(instance.n_vars).ravel()
    lam = np.ascontiguousarray(catalyst.lambdas, dtype=np.float64)
    t_final = float(config.t_final)
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    marks = [t_final]
    if dump is not None:
        every = dump_every or t_final / 256
        marks = list(np.arange(every, t_final, every)) + [t_final]
    rows = [np.concatenate([[0.0], y])] if dump is not None else None
    t, h = 0.0, config.h0
    n_acc = n_rej = 0
    max_res = 0.0
    for mark in marks:
        t, h, a, rj, res, status = kernels.mf_integrate(
            y, instance.n_vars, cvars, coff, cj, lam, t, float(mark), t_final, h,
            config.rtol, config.atol, config.h_max, config.max_steps - n_acc,
        )
        n_acc += a
        n_rej += rj
        max_res = max(max_res, res)
        if status == 1:
            raise IntegrationError(f"step size underflow at t={t:.6g}", t_fail=t)
        if status == 2:
            raise IntegrationError(f"step budget exhausted at t={t:.6g}", t_fail=t)
        if rows is not None:
            rows.append(np.concatenate([[t], y]))
    if dump is not None:
        np.savetxt(Path(dump), np.array(rows), header=_dump_header(instance.n_vars))
    info = {"n_steps": n_acc, "n_rejected": n_rej, "max_norm_residual": max_res}
    return y.reshape(-1, 3), info


def _dump_header(n):
    return " ".join(["t"] + [f"{a}_{i}" for i in range(n) for a in "xyz"])


def integrate(
    instance: Instance,
    catalyst: Catalyst,
    config: MfConfig = MfConfig(),
    exact: ExactSolution | None = None,
    dump=None,
    dump_every: float | None = None,
) -> MfResult:
    spins, info = evolve_spins(instance, catalyst, config, dump, dump_every)
    bits, ties = project(spins)
    if ties:
        log.warning("%d spin(s) ended exactly on the equator; projected to bit 0", ties)
    exact = exact or solve_exact(instance)
    e_star = cost(instance, bits)
    if exact.e_max > exact.e_min:
        ratio = approximation_ratio(e_star, exact.e_min, exact.e_max)
        dev = rel_deviation(e_star, exact.e_max)
    else:
        # every assignment is optimal; both scores are undefined
        ratio = dev = math.nan
    return MfResult(
        bitstring=bits,
        e_star=e_star,
        ratio=ratio,
        rel_deviation=dev,
        final_spins=spins,
        n_steps=info["n_steps"],
        n_rejected=info["n_rejected"],
        n_ties=ties,
        max_norm_residual=info["max_norm_residual"],
        catalyst=catalyst,
    )


def mf_solve(
    instance: Instance,
    n_catalysts: int = 1,
    seed: int = 0,
    sigma: float | None = None,
    config: MfConfig = MfConfig(),
    exact: ExactSolution | None = None,
) -> MfResult:
    """Best of ``n_catalysts`` independent catalyst draws (first wins ties)."""
    if n_catalysts < 1:
        raise ValueError("n_catalysts must be >= 1")
    if sigma is None:
        sigma = sigma_lookup(instance.k, instance.target_ratio or instance.ratio)
    exact = exact or solve_exact(instance)
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_catalysts):
        cat_seed = int(child.generate_state(1, np.uint64)[0])
        res = integrate(instance, sample_catalyst(instance.n_vars, sigma, cat_seed), config, exact)
        if best is None or res.ratio > best.ratio:
            best = res
    return best
