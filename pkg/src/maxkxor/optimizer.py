"""Angle optimization for the QAOA.

Shallow depths are optimized from many uniformly random starting points with
a derivative-free local method (COBYLA). Deeper circuits are warm-started by
linear interpolation of the previous depth's optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from ._backend import kernels
from .instances import Instance
from .qaoa import AngleSchedule, CostDiagonal, approximation_ratio, build_cost_diagonal, energy


@dataclass(frozen=True)
class OptimizerConfig:
    n_random_starts: int = 1000
    shallow_depth_cutoff: int = 3
    local_tolerance: float = 1e-6
    start_tolerance: float = 1e-3
    max_evaluations: int = 5000
    initial_step: float = 0.5
    warm_start_step: float = 0.02
    gamma_range: tuple[float, float] = (0.0, 2 * math.pi)
    beta_range: tuple[float, float] = (0.0, math.pi)

    def __post_init__(self):
        if self.n_random_starts < 1 or self.max_evaluations < 1 or self.shallow_depth_cutoff < 1:
            raise ValueError("optimizer counts must be positive")
        if min(self.local_tolerance, self.start_tolerance, self.initial_step, self.warm_start_step) <= 0:
            raise ValueError("optimizer tolerances and steps must be positive")


@dataclass(frozen=True)
class OptResult:
    schedule: AngleSchedule
    f_value: float
    ratio: float
    n_evaluations: int
    n_restarts_used: int = 1
    converged: bool = True
    padded: bool = field(default=False, compare=False)
    flip: int = field(default=0, compare=False)

    @property
    def p(self) -> int:
        return self.schedule.p


def local_optimize(
    diag: CostDiagonal,
    init: AngleSchedule,
    config: OptimizerConfig = OptimizerConfig(),
    step: float | None = None,
    tol: float | None = None,
) -> OptResult:
    """Maximize F_p from ``init``; never returns something worse than ``init``.

    COBYLA stops once its trust-region radius (in radians) falls below ``tol``
    (default ``config.local_tolerance``) or the evaluation budget is spent.
    """
    e_min, e_max = diag.e_min, diag.e_max
    f0 = energy(diag, init)
    approximation_ratio(f0, e_min, e_max)  # refuse degenerate spectra up front
    p = init.p
    values, n_vars = diag.values, diag.n_vars
    expect = kernels.qaoa_expectation

    def objective(x):
        return -expect(values, n_vars, x[:p], x[p:])

    res = minimize(
        objective,
        init.as_vector(),
        method="COBYLA",
        options={
            "rhobeg": config.initial_step if step is None else step,
            "tol": config.local_tolerance if tol is None else tol,
            "maxiter": config.max_evaluations,
        },
    )
    best = AngleSchedule.from_vector(res.x)
    f_best = energy(diag, best)
    if f_best < f0:
        best, f_best = init, f0
    return OptResult(
        schedule=best,
        f_value=f_best,
        ratio=approximation_ratio(f_best, e_min, e_max),
        n_evaluations=int(res.nfev) + 2,
        converged=bool(res.status == 1),
        flip=flip_symmetry(diag),
    )


def random_schedule(rng: np.random.Generator, p: int, config: OptimizerConfig) -> AngleSchedule:
    return AngleSchedule(
        tuple(rng.uniform(*config.gamma_range, size=p)),
        tuple(rng.uniform(*config.beta_range, size=p)),
    )


def multistart_optimize(
    diag: CostDiagonal, p: int, config: OptimizerConfig = OptimizerConfig(), seed: int = 0
) -> OptResult:
    """Best of ``config.n_random_starts`` local optimizations from random angles.

    Starts run to ``config.start_tolerance``; the winner is then refined to
    ``config.local_tolerance``. Start ``i`` draws from child ``i`` of
    ``SeedSequence(seed)``, so the first ``m`` starts are the same for any
    ``n_random_starts >= m``.
    """
    if p > config.shallow_depth_cutoff:
        raise ValueError(f"multistart is for p <= {config.shallow_depth_cutoff}, got p={p}")
    streams = np.random.SeedSequence(seed).spawn(config.n_random_starts)
    best = None
    total_evals = 0
    for child in streams:
        init = random_schedule(np.random.default_rng(child), p, config)
        res = local_optimize(diag, init, config, tol=config.start_tolerance)
        total_evals += res.n_evaluations
        if best is None or res.f_value > best.f_value:
            best = res
    if config.local_tolerance < config.start_tolerance:
        best = local_optimize(diag, best.schedule, config, step=config.warm_start_step)
        total_evals += best.n_evaluations
    return replace(best, n_evaluations=total_evals, n_restarts_used=config.n_random_starts)


def interp_extend(schedule: AngleSchedule) -> AngleSchedule:
    """Linear interpolation of a depth-p schedule onto p+1 layers."""
    p = schedule.p

    def extend(a):
        a = (0.0, *a, 0.0)
        return tuple(((i - 1) / p) * a[i - 1] + ((p - i + 1) / p) * a[i] for i in range(1, p + 2))

    return AngleSchedule(extend(schedule.gammas), extend(schedule.betas))


def _pad(prev: OptResult, diag: CostDiagonal) -> OptResult:
    sched = prev.schedule.padded()
    f = energy(diag, sched)
    return OptResult(
        sched, f, approximation_ratio(f, diag.e_min, diag.e_max), 1, 0, prev.converged,
        padded=True, flip=prev.flip,
    )


def optimize_depth_ladder(
    diag: CostDiagonal, p_max: int, config: OptimizerConfig = OptimizerConfig(), seed: int = 0
) -> list[OptResult]:
    """Optimized results for p = 1..p_max (element ``p-1`` is depth ``p``).

    Depths up to ``config.shallow_depth_cutoff`` use random multistart, with
    the interpolated previous optimum as one extra start; deeper layers are
    only warm-started. Whenever a depth does worse than the previous one, the
    previous schedule padded with an identity layer is kept instead, so F_p
    never decreases.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    ladder: list[OptResult] = []
    for p in range(1, p_max + 1):
        warm = None
        if ladder:
            # interpolate from the smooth representative of the previous optimum
            prev = canonical_schedule(ladder[-1].schedule, ladder[-1].flip)
            warm = local_optimize(diag, interp_extend(prev), config, step=config.warm_start_step)
        if p <= config.shallow_depth_cutoff:
            res = multistart_optimize(diag, p, config, seed=hash_seed(seed, p))
            if warm is not None:
                # the warm start competes as one extra start
                total = res.n_evaluations + warm.n_evaluations
                best = warm if warm.f_value > res.f_value else res
                res = replace(best, n_evaluations=total, n_restarts_used=res.n_restarts_used + 1)
        else:
            res = warm
        if ladder and res.f_value < ladder[-1].f_value:
            pad = _pad(ladder[-1], diag)
            res = replace(pad, n_evaluations=pad.n_evaluations + res.n_evaluations)
        ladder.append(res)
    return ladder


def hash_seed(*parts) -> int:
    """Stable 64-bit seed from integer parts."""
    return int(np.random.SeedSequence([int(x) & ((1 << 64) - 1) for x in parts]).generate_state(1, np.uint64)[0])


def transfer_evaluate(schedule: AngleSchedule, instance: Instance) -> float:
    """Approximation ratio of fixed angles on ``instance`` (no optimization)."""
    diag = build_cost_diagonal(instance)
    return approximation_ratio(energy(diag, schedule), diag.e_min, diag.e_max)


def flip_symmetry(diag: CostDiagonal) -> int:
    """How the cost transforms under flipping every bit.

    Returns +1 if C(~z) = C(z) (even arity), -1 if C(~z) = |M| - C(z) (odd
    arity) and 0 otherwise. Index ~z is 2^N - 1 - z, i.e. the reversed table.
    """
    v = diag.values
    rev = v[::-1]
    if np.array_equal(rev, v):
        return 1
    if np.all(v + rev == v[0] + rev[0]):
        return -1
    return 0


def canonical_schedule(schedule: AngleSchedule, flip: int = 0) -> AngleSchedule:
    """Representative of the symmetry class of ``schedule``.

    F_p is unchanged by gamma -> gamma + 2 pi (integer costs), beta -> beta + pi
    (global phase) and (gamma, beta) -> (-gamma, -beta) (complex conjugation).
    Since X^N |+> = |+> and exp(-i pi/2 sum X) is X^N up to phase, a cost with
    ``flip=+1`` also allows beta_j -> beta_j + pi/2 alone, and one with
    ``flip=-1`` allows it together with gamma_i -> -gamma_i for all i <= j.
    Betas are reduced to (-pi/4, pi/4] when ``flip`` is nonzero and to
    (-pi/2, pi/2] otherwise, gammas wrapped to (-pi, pi], and the overall sign
    fixed so that the first nonzero gamma is positive.
    """
    g = np.array(schedule.gammas, dtype=float)
    b = np.array(schedule.betas, dtype=float)
    if flip:
        shifts = np.round(b / (np.pi / 2))
        # half-open interval: an exact +pi/4 stays put
        shifts[np.isclose(b - shifts * np.pi / 2, -np.pi / 4)] -= 1
        b = b - shifts * (np.pi / 2)
        if flip < 0:
            odd = (shifts.astype(np.int64) % 2).astype(bool)
            # gamma_i is negated once per odd shift at a layer j >= i
            n_neg = np.cumsum(odd[::-1])[::-1]
            g = np.where(n_neg % 2 == 1, -g, g)
    g = np.pi - np.mod(np.pi - g, 2 * np.pi)
    half = np.pi / 4 if flip else np.pi / 2
    b = half - np.mod(half - b, 2 * half)
    nz = np.flatnonzero(np.abs(g) > 1e-12)
    if nz.size and g[nz[0]] < 0:
        g, b = -g, -b
        # keep the wrapped intervals half-open after the flip
        g[np.isclose(g, -np.pi)] = np.pi
        b[np.isclose(b, -half)] = half
    return AngleSchedule(tuple(g), tuple(b))


@dataclass(frozen=True)
class AngleStats:
    gamma_mean: np.ndarray
    beta_mean: np.ndarray
    gamma_std: np.ndarray
    beta_std: np.ndarray

    def mean_schedule(self) -> AngleSchedule:
        return AngleSchedule(tuple(self.gamma_mean), tuple(self.beta_mean))


def average_angles(results, canonical: bool = True, flip: int | None = None) -> AngleStats:
    """Per-layer ensemble mean and (population) std of optimized angles.

    With ``canonical``, each schedule is first mapped to its symmetry
    representative; ``flip`` defaults to the value stored on each result.
    """
    scheds = []
    for r in results:
        sched, sym = (r.schedule, r.flip) if isinstance(r, OptResult) else (r, 0)
        if canonical:
            sched = canonical_schedule(sched, sym if flip is None else flip)
        scheds.append(sched)
    if len({s.p for s in scheds}) != 1:
        raise ValueError("all schedules must have the same depth")
    g = np.array([s.gammas for s in scheds])
    b = np.array([s.betas for s in scheds])
    return AngleStats(g.mean(axis=0), b.mean(axis=0), g.std(axis=0), b.std(axis=0))
