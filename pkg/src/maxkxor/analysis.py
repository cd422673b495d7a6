"""Ensemble sweeps, aggregation, curve fits and level-distribution references."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exact import solve_exact
from .instances import sample_instance
from .meanfield import MfConfig, mf_solve, sigma_lookup
from .optimizer import OptimizerConfig, optimize_depth_ladder
from .qaoa import build_cost_diagonal

CSV_HEADER = (
    "n_vars", "k", "r", "p", "instance_seed", "algorithm", "ratio", "value",
    "e_min", "e_max", "n_optimal", "wall_ms", "evals", "extra",
)


def stable_seed(*parts) -> int:
    """64-bit seed from a blake2b digest of ``parts``; stable across processes."""
    text = "|".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass
class SweepConfig:
    n_vars: int = 12
    k: list = field(default_factory=lambda: [3])
    r: list = field(default_factory=lambda: [1.5])
    p: list = field(default_factory=lambda: [1])
    ensemble: int = 10
    algorithm: str = "qaoa"
    scheme: str = "subset"
    base_seed: int = 0
    n_catalysts: int = 1
    sigma: float | None = None
    timing: bool = False
    optimizer: dict = field(default_factory=dict)
    meanfield: dict = field(default_factory=dict)

    def __post_init__(self):
        self.k = [int(v) for v in np.atleast_1d(self.k)]
        self.r = [float(v) for v in np.atleast_1d(self.r)]
        self.p = sorted(int(v) for v in np.atleast_1d(self.p))
        if self.algorithm not in ("qaoa", "mf", "both"):
            raise ValueError(f"algorithm must be qaoa, mf or both, got {self.algorithm!r}")
        if self.ensemble < 1 or self.n_vars < 1 or not self.k or not self.r:
            raise ValueError("sweep sizes must be positive")
        if self.algorithm != "mf" and (not self.p or self.p[0] < 1):
            raise ValueError("qaoa sweeps need depths p >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> SweepConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def units(self):
        """Work units (n_vars, k, r, instance_index, instance_seed) in canonical order."""
        for k in self.k:
            for r in self.r:
                for i in range(self.ensemble):
                    yield (self.n_vars, k, r, i, stable_seed(self.base_seed, self.n_vars, k, r, i))


@dataclass(frozen=True)
class EnsembleRecord:
    n_vars: int
    k: int
    r: float
    p: int
    instance_seed: int
    algorithm: str
    ratio: float
    value: float
    e_min: int
    e_max: int
    n_optimal: int
    wall_ms: float
    evals: int
    extra: str = "{}"

    def row(self) -> list[str]:
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]

    @classmethod
    def from_row(cls, row: dict) -> EnsembleRecord:
        return cls(
            n_vars=int(row["n_vars"]), k=int(row["k"]), r=float(row["r"]), p=int(row["p"]),
            instance_seed=int(row["instance_seed"]), algorithm=row["algorithm"],
            ratio=float(row["ratio"]), value=float(row["value"]), e_min=int(row["e_min"]),
            e_max=int(row["e_max"]), n_optimal=int(row["n_optimal"]),
            wall_ms=float(row["wall_ms"]), evals=int(row["evals"]), extra=row["extra"],
        )

    def recomputed_ratio(self) -> float:
        return (self.value - self.e_min) / (self.e_max - self.e_min)


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


def run_unit(config: SweepConfig, unit) -> list[EnsembleRecord]:
    """All records for one instance of a sweep."""
    n_vars, k, r, _, seed = unit
    instance = sample_instance(n_vars, k, r, seed, config.scheme)
    sol = solve_exact(instance)
    base = dict(n_vars=n_vars, k=k, r=r, instance_seed=seed, e_min=sol.e_min,
                e_max=sol.e_max, n_optimal=sol.n_optimal)
    out = []
    if config.algorithm in ("qaoa", "both"):
        t0 = time.perf_counter()
        diag = build_cost_diagonal(instance)
        ladder = optimize_depth_ladder(
            diag, max(config.p), OptimizerConfig(**_tuplify(config.optimizer)),
            seed=stable_seed(seed, "qaoa"),
        )
        wall = (time.perf_counter() - t0) * 1e3 if config.timing else 0.0
        for p in config.p:
            res = ladder[p - 1]
            extra = {**res.schedule.to_dict(), "padded": res.padded,
                     "restarts": res.n_restarts_used, "converged": res.converged,
                     "clauses": instance.n_clauses}
            out.append(EnsembleRecord(p=p, algorithm="qaoa", ratio=res.ratio, value=res.f_value,
                                      wall_ms=wall, evals=res.n_evaluations,
                                      extra=_compact(extra), **base))
    if config.algorithm in ("mf", "both"):
        t0 = time.perf_counter()
        sigma = config.sigma if config.sigma is not None else sigma_lookup(k, r)
        res = mf_solve(instance, config.n_catalysts, stable_seed(seed, "mf"), sigma,
                       MfConfig(**config.meanfield), sol)
        wall = (time.perf_counter() - t0) * 1e3 if config.timing else 0.0
        extra = {"bits": "".join(map(str, res.bitstring)), "sigma": sigma,
                 "catalyst_seed": res.catalyst.seed, "ties": res.n_ties,
                 "rel_deviation": res.rel_deviation, "clauses": instance.n_clauses,
                 "norm_residual": res.max_norm_residual, "e0": "e_max"}
        out.append(EnsembleRecord(p=0, algorithm="mf", ratio=res.ratio, value=float(res.e_star),
                                  wall_ms=wall, evals=res.n_steps, extra=_compact(extra), **base))
    return out


def _tuplify(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _unit_key(n_vars, k, r, seed):
    return (int(n_vars), int(k), float(r), int(seed))


def _run_unit_star(args):
    return run_unit(*args)


def run_sweep(config: SweepConfig, out_path=None, threads: int = 1) -> list[EnsembleRecord]:
    """Run every pending work unit and return all records in canonical order.

    With ``out_path``, records are appended unit by unit; units already present
    in an existing file are skipped, so an interrupted sweep can be resumed.
    Results do not depend on ``threads``.
    """
    done: set = set()
    existing: list[EnsembleRecord] = []
    if out_path is not None and Path(out_path).exists():
        existing = read_records(out_path)
        done = {_unit_key(r.n_vars, r.k, r.r, r.instance_seed) for r in existing}
    pending = [u for u in config.units() if _unit_key(u[0], u[1], u[2], u[4]) not in done]

    sink = None
    if out_path is not None:
        fresh = not Path(out_path).exists() or Path(out_path).stat().st_size == 0
        sink = open(out_path, "a", newline="", encoding="utf-8")
        if fresh:
            sink.write(",".join(CSV_HEADER) + "\n")
    new: list[EnsembleRecord] = []
    try:
        if threads > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = pool.map(_run_unit_star, [(config, u) for u in pending], chunksize=1)
                for recs in results:
                    _emit(sink, recs, new)
        else:
            for u in pending:
                _emit(sink, run_unit(config, u), new)
    finally:
        if sink is not None:
            sink.close()
    order = {_unit_key(u[0], u[1], u[2], u[4]): i for i, u in enumerate(config.units())}
    allrecs = existing + new
    allrecs.sort(key=lambda rec: order.get(_unit_key(rec.n_vars, rec.k, rec.r, rec.instance_seed), -1))
    if existing and new:
        # a resumed file ends up in the same order as an uninterrupted run
        tmp = Path(str(out_path) + ".tmp")
        write_records(allrecs, tmp)
        os.replace(tmp, out_path)
    return allrecs


def _emit(sink, recs, acc):
    acc.extend(recs)
    if sink is not None:
        sink.write(records_to_csv(recs, header=False))
        sink.flush()


def records_to_csv(records: Iterable[EnsembleRecord], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def write_records(records, path) -> None:
    Path(path).write_text(records_to_csv(records), encoding="utf-8")


def read_records(path) -> list[EnsembleRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [EnsembleRecord.from_row(row) for row in csv.DictReader(fh)]


def aggregate(records: Sequence[EnsembleRecord], keys: Sequence[str] = ("n_vars", "k", "r", "p", "algorithm"),
              value: str = "ratio") -> dict:
    """``{group: (mean, std, count)}`` with population std."""
    groups: dict = {}
    for rec in records:
        groups.setdefault(tuple(getattr(rec, key) for key in keys), []).append(getattr(rec, value))
    return {
        g: (float(np.mean(v)), float(np.std(v)), len(v)) for g, v in sorted(groups.items())
    }


@dataclass(frozen=True)
class FitResult:
    model: str
    coefficients: dict
    rmse: float
    n_points: int
    excluded: tuple = ()
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model, "coefficients": self.coefficients, "rmse": self.rmse,
                "n_points": self.n_points, "excluded": list(self.excluded), **self.meta}


def _linfit(x, y):
    """Least squares y = a + b x; returns (a, b)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("a fit needs at least two points")
    design = np.column_stack([np.ones_like(x), x])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(a), float(b)


def fit_log(points, exclude_first: bool = False) -> FitResult:
    """Fit M = a + c ln p to ``(p, M)`` pairs."""
    pts = sorted((float(p), float(m)) for p, m in points)
    excluded = ()
    if exclude_first:
        excluded, pts = (pts[0],), pts[1:]
    p = np.array([q for q, _ in pts])
    m = np.array([v for _, v in pts])
    a, c = _linfit(np.log(p), m)
    rmse = float(np.sqrt(np.mean((a + c * np.log(p) - m) ** 2)))
    return FitResult("log", {"a": a, "c": c}, rmse, len(pts), excluded, {"weights": "none"})


def extrapolate_depth(fit: FitResult, target: float) -> float:
    """Depth p at which the log fit reaches ``target``."""
    if fit.model != "log":
        raise ValueError("extrapolate_depth needs a log fit")
    a, c = fit.coefficients["a"], fit.coefficients["c"]
    if c <= 0:
        raise ValueError(f"log fit has non-positive slope c={c}; target {target} is never reached")
    return math.exp((target - a) / c)


def fit_growth(points, model: str = "exponential") -> FitResult:
    """Fit p* = A exp(b k) or p* = A k^b in the log-linearized domain."""
    pts = sorted((float(k), float(p)) for k, p in points)
    k = np.array([q for q, _ in pts])
    p = np.array([v for _, v in pts])
    if np.any(p <= 0):
        raise ValueError("growth fits need positive depths")
    if model == "exponential":
        la, b = _linfit(k, np.log(p))
        pred = np.exp(la + b * k)
    elif model == "power":
        la, b = _linfit(np.log(k), np.log(p))
        pred = np.exp(la) * k**b
    else:
        raise ValueError(f"unknown growth model {model!r}")
    rmse = float(np.sqrt(np.mean((pred - p) ** 2)))
    return FitResult(model, {"A": math.exp(la), "b": b}, rmse, len(pts))


def poisson_reference(mean_index: float, max_level: int = 8) -> np.ndarray:
    if mean_index < 0:
        raise ValueError("mean index must be non-negative")
    j = np.arange(max_level + 1)
    if mean_index == 0:
        return (j == 0).astype(float)
    logs = -mean_index + j * math.log(mean_index) - np.array([math.lgamma(i + 1) for i in j])
    return np.exp(logs)


def mean_level_index(probs) -> float:
    probs = np.asarray(probs, dtype=float)
    return float(np.dot(np.arange(probs.size), probs))
