import numpy as np
import pytest

from maxkxor.errors import DegenerateSpectrumError
from maxkxor.instances import Clause, Instance, sample_instance
from maxkxor.optimizer import (
    OptimizerConfig,
    OptResult,
    average_angles,
    canonical_schedule,
    flip_symmetry,
    interp_extend,
    local_optimize,
    multistart_optimize,
    optimize_depth_ladder,
    random_schedule,
    transfer_evaluate,
)
from maxkxor.qaoa import AngleSchedule, build_cost_diagonal, energy

FAST = OptimizerConfig(n_random_starts=20, shallow_depth_cutoff=1, local_tolerance=1e-3)


def grid_energy(values, n, gammas, betas):
    """F_1 on the outer product grid gammas x betas, shape (len(gammas), len(betas))."""
    out = np.empty((gammas.size, betas.size))
    c, s = np.cos(betas), np.sin(betas)
    for i, g in enumerate(gammas):
        psi = np.exp(-1j * g * values) / 2 ** (n / 2)
        psi = np.broadcast_to(psi, (betas.size, psi.size)).reshape((betas.size,) + (2,) * n)
        for q in range(n):
            axis = n - q  # bit q of the index is the (n-q)-th axis after the batch axis
            a0 = np.take(psi, 0, axis=axis)
            a1 = np.take(psi, 1, axis=axis)
            shape = (-1,) + (1,) * (n - 1)
            cb, sb = c.reshape(shape), s.reshape(shape)
            psi = np.stack([cb * a0 - 1j * sb * a1, cb * a1 - 1j * sb * a0], axis=axis)
        probs = np.abs(psi.reshape(betas.size, -1)) ** 2
        out[i] = probs @ values
    return out


def grid_max(values, n, coarse=0.02, fine=1e-3):
    # F(g, b) = F(-g, -b) and beta has period pi, so gamma in [0, pi] suffices
    g = np.arange(0, np.pi + coarse, coarse)
    b = np.arange(0, np.pi, coarse)
    f = grid_energy(values, n, g, b)
    best = -np.inf
    for idx in np.argsort(f, axis=None)[-4:]:
        i, j = np.unravel_index(idx, f.shape)
        gg = np.arange(g[i] - 2 * coarse, g[i] + 2 * coarse, fine)
        bb = np.arange(b[j] - 2 * coarse, b[j] + 2 * coarse, fine)
        best = max(best, grid_energy(values, n, gg, bb).max())
    return best


def test_grid_oracle_agrees_with_energy():
    diag = build_cost_diagonal(sample_instance(6, 3, 1.5, 1))
    g, b = np.array([0.3, 1.7]), np.array([0.2, 2.5, 3.0])
    f = grid_energy(diag.values, 6, g, b)
    for i in range(2):
        for j in range(3):
            assert f[i, j] == pytest.approx(energy(diag, AngleSchedule((g[i],), (b[j],))), abs=1e-12)


def test_single_clause_local_optimum(single_clause):
    diag = build_cost_diagonal(single_clause)
    target = grid_max(diag.values, 3)
    # p=1 on one 3-XOR clause is maximized near gamma = pi/2, beta = pi/8
    res = local_optimize(diag, AngleSchedule((1.4,), (0.5,)), OptimizerConfig())
    assert res.f_value == pytest.approx(target, abs=1e-4)
    assert res.f_value >= target - 1e-4


def test_local_optimize_never_worse():
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, 2))
    rng = np.random.default_rng(0)
    for _ in range(5):
        init = random_schedule(rng, 2, OptimizerConfig())
        res = local_optimize(diag, init, OptimizerConfig(max_evaluations=15))
        assert res.f_value >= energy(diag, init)
    best = local_optimize(diag, AngleSchedule((0.5, 0.6), (0.4, 0.2)))
    again = local_optimize(diag, best.schedule, step=1e-3)
    assert again.f_value >= best.f_value


def test_degenerate_spectrum_refused(empty4):
    with pytest.raises(DegenerateSpectrumError):
        local_optimize(build_cost_diagonal(empty4), AngleSchedule((0.1,), (0.1,)))


@pytest.mark.parametrize("seed", range(20))
def test_multistart_matches_grid(seed):
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, seed))
    res = multistart_optimize(diag, 1, OptimizerConfig(n_random_starts=20), seed=seed)
    assert abs(res.f_value - grid_max(diag.values, 8)) < 1e-3


def test_multistart_single_start_is_local_optimize():
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, 4))
    cfg = OptimizerConfig(n_random_starts=1, start_tolerance=1e-6, local_tolerance=1e-6)
    res = multistart_optimize(diag, 2, cfg, seed=9)
    init = random_schedule(np.random.default_rng(np.random.SeedSequence(9).spawn(1)[0]), 2, cfg)
    assert res.schedule == local_optimize(diag, init, cfg, tol=cfg.start_tolerance).schedule


def test_multistart_monotone_in_starts():
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, 5))
    f = [multistart_optimize(diag, 2, OptimizerConfig(n_random_starts=s), seed=1).f_value
         for s in (1, 3, 9)]
    assert f[0] <= f[1] + 1e-9 <= f[2] + 2e-9


def test_multistart_deterministic_and_guarded():
    diag = build_cost_diagonal(sample_instance(8, 4, 1.5, 5))
    cfg = OptimizerConfig(n_random_starts=4)
    assert multistart_optimize(diag, 1, cfg, seed=3) == multistart_optimize(diag, 1, cfg, seed=3)
    with pytest.raises(ValueError):
        multistart_optimize(diag, 4, cfg)


def test_interp_examples():
    assert interp_extend(AngleSchedule((0.7,), (0.2,))) == AngleSchedule((0.7, 0.7), (0.2, 0.2))
    ramp = interp_extend(AngleSchedule((1.0, 2.0, 3.0, 4.0), (4.0, 3.0, 2.0, 1.0)))
    # a ramp keeps its endpoints and stays linear: 1 + 0.75 (i - 1)
    assert np.allclose(ramp.gammas, 1 + 0.75 * np.arange(5))
    assert np.allclose(ramp.betas, [4.0, 3.25, 2.5, 1.75, 1.0])
    assert interp_extend(AngleSchedule.zeros(3)) == AngleSchedule.zeros(4)


def test_ladder_p1_is_multistart():
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, 6))
    cfg = OptimizerConfig(n_random_starts=5)
    ladder = optimize_depth_ladder(diag, 1, cfg, seed=2)
    assert len(ladder) == 1
    assert ladder[0].f_value == multistart_optimize(diag, 1, cfg, seed=ladder_seed(2)).f_value


def ladder_seed(seed):
    from maxkxor.optimizer import hash_seed
    return hash_seed(seed, 1)


def test_ladder_non_decreasing_and_padding_exact():
    diag = build_cost_diagonal(sample_instance(10, 5, 1.5, 7))
    ladder = optimize_depth_ladder(diag, 6, OptimizerConfig(n_random_starts=3, max_evaluations=30,
                                                            shallow_depth_cutoff=2))
    for a, b in zip(ladder, ladder[1:]):
        assert b.f_value >= a.f_value
        if b.padded:
            assert b.f_value == a.f_value
            assert b.schedule == a.schedule.padded()
    assert [r.p for r in ladder] == list(range(1, 7))


def test_ladder_ensemble_strictly_increasing():
    ratios = np.array([
        [r.ratio for r in optimize_depth_ladder(build_cost_diagonal(sample_instance(8, 3, 1.5, s)),
                                                10, FAST, seed=s)]
        for s in range(50)
    ])
    mean = ratios.mean(axis=0)
    assert np.all(np.diff(mean) > 0), mean


def test_transfer_on_same_instance():
    inst = sample_instance(9, 3, 1.5, 8)
    diag = build_cost_diagonal(inst)
    res = optimize_depth_ladder(diag, 3, FAST)[-1]
    assert transfer_evaluate(res.schedule, inst) == pytest.approx(res.ratio, abs=1e-12)
    uniform = (diag.mean - diag.e_min) / (diag.e_max - diag.e_min)
    assert transfer_evaluate(AngleSchedule.zeros(3), inst) == pytest.approx(uniform, abs=1e-12)


def test_flip_symmetry(triangle):
    assert flip_symmetry(build_cost_diagonal(sample_instance(8, 3, 1.5, 0))) == -1
    assert flip_symmetry(build_cost_diagonal(sample_instance(8, 4, 1.5, 0))) == 1
    assert flip_symmetry(build_cost_diagonal(triangle)) == 1
    mixed = Instance(4, 2, (Clause((0, 1)),))
    assert flip_symmetry(build_cost_diagonal(mixed)) == 1


@pytest.mark.parametrize("k", [3, 4, 5])
def test_canonical_schedule_preserves_energy(k):
    diag = build_cost_diagonal(sample_instance(8, k, 1.5, k))
    flip = flip_symmetry(diag)
    rng = np.random.default_rng(k)
    for _ in range(20):
        s = AngleSchedule(rng.uniform(-8, 8, 4), rng.uniform(-8, 8, 4))
        for sym in {0, flip}:
            c = canonical_schedule(s, sym)
            assert energy(diag, c) == pytest.approx(energy(diag, s), abs=1e-9)
            half = np.pi / 4 if sym else np.pi / 2
            assert np.all(np.abs(c.betas) <= half + 1e-12)
            assert np.all(np.abs(c.gammas) <= np.pi + 1e-12)
            nz = [g for g in c.gammas if abs(g) > 1e-12]
            assert not nz or nz[0] > 0
            assert np.allclose(canonical_schedule(c, sym).as_vector(), c.as_vector(), atol=1e-12)


def test_odd_k_p1_mirror_pair():
    # for odd k, beta and pi/2 - beta give the same F_1
    diag = build_cost_diagonal(sample_instance(8, 3, 1.5, 1))
    a = energy(diag, AngleSchedule((0.5,), (1.29,)))
    b = energy(diag, AngleSchedule((0.5,), (np.pi / 2 - 1.29,)))
    assert a == pytest.approx(b, abs=1e-12)
    ca = canonical_schedule(AngleSchedule((0.5,), (1.29,)), -1)
    cb = canonical_schedule(AngleSchedule((0.5,), (np.pi / 2 - 1.29,)), -1)
    assert np.allclose(ca.as_vector(), cb.as_vector())


def _res(g, b):
    return OptResult(AngleSchedule(g, b), 0.0, 0.0, 0)


def test_average_angles():
    one = average_angles([_res((0.3, 0.4), (0.1, 0.2))], canonical=False)
    assert np.allclose(one.gamma_mean, [0.3, 0.4]) and not one.gamma_std.any()
    two = average_angles([_res((0.3,), (0.1,)), _res((0.3,), (0.1,))])
    assert np.allclose(two.beta_mean, [0.1]) and not two.beta_std.any()
    spread = average_angles([_res((0.2,), (0.1,)), _res((0.6,), (0.3,))])
    assert np.allclose(spread.gamma_mean, [0.4]) and np.allclose(spread.gamma_std, [0.2])
    assert np.allclose(spread.beta_std, [0.1])
    assert np.allclose(spread.mean_schedule().as_vector(), [0.4, 0.2])
    with pytest.raises(ValueError):
        average_angles([_res((0.1,), (0.1,)), _res((0.1, 0.2), (0.1, 0.2))])


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(n_random_starts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(local_tolerance=0)
    d = OptimizerConfig()
    assert (d.n_random_starts, d.shallow_depth_cutoff, d.local_tolerance, d.max_evaluations) == (
        1000, 3, 1e-6, 5000)
