import json
import math

import numpy as np
import pytest

from maxkxor.analysis import (
    CSV_HEADER,
    EnsembleRecord,
    SweepConfig,
    aggregate,
    extrapolate_depth,
    fit_growth,
    fit_log,
    mean_level_index,
    poisson_reference,
    read_records,
    records_to_csv,
    run_sweep,
    stable_seed,
    write_records,
)

TINY_OPT = {"n_random_starts": 3, "shallow_depth_cutoff": 1, "local_tolerance": 1e-3}


def tiny_config(**kw):
    base = dict(n_vars=6, k=[3], r=[1.5], p=[1, 2], ensemble=3, optimizer=TINY_OPT,
                meanfield={"t_final": 32.0})
    base.update(kw)
    return SweepConfig(**base)


def rec(value, **kw):
    base = dict(n_vars=8, k=3, r=1.5, p=1, instance_seed=1, algorithm="qaoa", ratio=value,
                value=value, e_min=0, e_max=1, n_optimal=1, wall_ms=0.0, evals=1)
    base.update(kw)
    return EnsembleRecord(**base)


def test_stable_seed():
    assert stable_seed(1, 2, 3.0) == stable_seed(1, 2, 3.0)
    assert stable_seed(1, 2) != stable_seed(2, 1)
    assert 0 <= stable_seed("x") < 2**64


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        SweepConfig(algorithm="annealing")
    with pytest.raises(ValueError):
        SweepConfig(p=[0])
    cfg = SweepConfig.from_dict({"k": 4, "r": [0.5, 1.0], "p": [3, 1]})
    assert cfg.k == [4] and cfg.p == [1, 3]
    assert SweepConfig.from_dict(cfg.to_dict()) == cfg


def test_units_exclude_depth():
    a = list(tiny_config(p=[1]).units())
    b = list(tiny_config(p=[1, 2, 5]).units())
    assert a == b and len(a) == 3


def test_single_unit_records():
    recs = run_sweep(tiny_config(ensemble=1, p=[1]))
    assert len(recs) == 1
    both = run_sweep(tiny_config(ensemble=1, p=[1], algorithm="both"))
    assert [r.algorithm for r in both] == ["qaoa", "mf"]
    assert both[1].p == 0
    assert json.loads(both[1].extra)["e0"] == "e_max"


def test_records_consistent():
    recs = run_sweep(tiny_config())
    assert len(recs) == 6
    for r in recs:
        assert r.ratio == pytest.approx(r.recomputed_ratio(), abs=1e-12)
        assert r.e_min <= r.value <= r.e_max
        assert r.wall_ms == 0.0
    by_seed = {}
    for r in recs:
        by_seed.setdefault(r.instance_seed, []).append(r)
    for pair in by_seed.values():
        assert [r.p for r in pair] == [1, 2]
        assert pair[1].value >= pair[0].value
    stats = aggregate(recs, ("p",))
    assert stats[(1,)][0] == pytest.approx(np.mean([r.ratio for r in recs if r.p == 1]))
    assert stats[(1,)][2] == 3


def test_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(tiny_config(algorithm="both"), a)
    run_sweep(tiny_config(algorithm="both"), b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_resume(tmp_path):
    full, part = tmp_path / "full.csv", tmp_path / "part.csv"
    run_sweep(tiny_config(ensemble=4), full)
    run_sweep(tiny_config(ensemble=2), part)
    recs = run_sweep(tiny_config(ensemble=4), part)
    assert part.read_bytes() == full.read_bytes()
    assert records_to_csv(recs) == full.read_text()


def test_csv_roundtrip(tmp_path):
    recs = run_sweep(tiny_config(ensemble=2))
    path = tmp_path / "r.csv"
    write_records(recs, path)
    assert read_records(path) == recs


def test_timing_flag():
    recs = run_sweep(tiny_config(ensemble=1, timing=True))
    assert all(r.wall_ms > 0 for r in recs)


def test_aggregate_examples():
    one = aggregate([rec(0.7)])
    assert list(one.values()) == [(0.7, 0.0, 1)]
    assert list(aggregate([rec(0.5), rec(0.5, instance_seed=2)]).values())[0][1] == 0.0
    vals = [0.1, 0.4, 0.7, 1.0]
    got = list(aggregate([rec(v, instance_seed=i) for i, v in enumerate(vals)]).values())[0]
    assert got[0] == pytest.approx(0.55)
    assert got[1] == pytest.approx(math.sqrt(0.1125))


def test_fit_log_exact():
    pts = [(p, 0.5 + 0.06 * math.log(p)) for p in range(2, 31)]
    fit = fit_log(pts)
    assert fit.coefficients["a"] == pytest.approx(0.5, abs=1e-12)
    assert fit.coefficients["c"] == pytest.approx(0.06, abs=1e-12)
    assert fit.rmse < 1e-12
    two = fit_log([(2, 0.7), (5, 0.8)])
    assert two.rmse == pytest.approx(0, abs=1e-15)


def test_fit_log_exclude_first():
    pts = [(1, 0.0)] + [(p, 0.6 + 0.05 * math.log(p)) for p in range(2, 9)]
    fit = fit_log(pts, exclude_first=True)
    assert fit.excluded == ((1.0, 0.0),)
    assert fit.coefficients["c"] == pytest.approx(0.05, abs=1e-12)


def test_extrapolate_depth():
    def f(a, c):
        return fit_log([(2, a + c * math.log(2)), (7, a + c * math.log(7))])
    assert extrapolate_depth(f(0.5, 0.06), 0.5) == pytest.approx(1.0, abs=1e-12)
    assert extrapolate_depth(f(0.8, 0.06), 0.99) == pytest.approx(math.exp(19 / 6), rel=1e-12)
    with pytest.raises(ValueError):
        extrapolate_depth(f(0.8, -0.01), 0.99)


def test_growth_fits():
    ks = np.arange(3, 11)
    exp_fit = fit_growth([(k, 2 * math.exp(0.5 * k)) for k in ks], "exponential")
    assert exp_fit.coefficients["A"] == pytest.approx(2, rel=1e-10)
    assert exp_fit.coefficients["b"] == pytest.approx(0.5, rel=1e-10)
    pow_fit = fit_growth([(k, 3 * k**2) for k in ks], "power")
    assert pow_fit.coefficients["A"] == pytest.approx(3, rel=1e-10)
    assert pow_fit.coefficients["b"] == pytest.approx(2, rel=1e-10)
    assert pow_fit.rmse < 1e-9
    with pytest.raises(ValueError):
        fit_growth([(3, 1.0), (4, 2.0)], "cubic")
    with pytest.raises(ValueError):
        fit_growth([(3, 0.0), (4, 2.0)])


def test_poisson_reference():
    assert poisson_reference(1.0)[0] == pytest.approx(math.exp(-1), rel=1e-14)
    assert poisson_reference(0.0).tolist() == [1.0] + [0.0] * 8
    for mu in (0.3, 1.7, 3.0):
        probs = poisson_reference(mu, 30)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        short = poisson_reference(mu, 8)
        tail = 1 - sum(math.exp(-mu) * mu**j / math.factorial(j) for j in range(9))
        assert 1 - short.sum() == pytest.approx(tail, abs=1e-14)
    with pytest.raises(ValueError):
        poisson_reference(-1.0)


def test_mean_level_index():
    assert mean_level_index([1, 0, 0]) == 0
    assert mean_level_index([0.2] * 5) == pytest.approx(2.0)
