"""Random Max-kXOR instances: sampling, evaluation and JSON serialization.

Conventions used throughout the package:

* variable ``i`` is bit ``i`` of an assignment index ``z`` (little-endian);
* a clause with ``parity=+1`` is satisfied when an odd number of its variables
  are 1, with ``parity=-1`` when an even number are.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InstanceError

SEED_MASK = (1 << 64) - 1
SCHEMES = ("subset", "signed")


@dataclass(frozen=True)
class Clause:
    vars: tuple[int, ...]
    parity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(int(v) for v in self.vars))
        if any(b <= a for a, b in zip(self.vars, self.vars[1:])):
            raise InstanceError(f"clause variables must be strictly increasing: {self.vars}")
        if self.vars and self.vars[0] < 0:
            raise InstanceError(f"negative variable index in {self.vars}")
        if self.parity not in (1, -1):
            raise InstanceError(f"parity must be +1 or -1, got {self.parity}")

    @property
    def mask(self) -> int:
        return sum(1 << v for v in self.vars)


@dataclass(frozen=True)
class Instance:
    n_vars: int
    k: int
    clauses: tuple[Clause, ...]
    seed: int = 0
    target_ratio: float = 0.0
    resamples: int = field(default=0, compare=False)
    scheme: str = field(default="subset", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.n_vars < 1:
            raise InstanceError(f"n_vars must be positive, got {self.n_vars}")
        if self.k < 2:
            raise InstanceError(f"k must be at least 2, got {self.k}")
        if self.scheme not in SCHEMES:
            raise InstanceError(f"unknown sampling scheme {self.scheme!r}")
        seen = set()
        for c in self.clauses:
            if len(c.vars) != self.k:
                raise InstanceError(f"clause {c.vars} does not have exactly k={self.k} variables")
            if c.vars[-1] >= self.n_vars:
                raise InstanceError(f"clause {c.vars} references a variable >= n_vars={self.n_vars}")
            if c.vars in seen:
                raise InstanceError(f"duplicate variable subset {c.vars}")
            seen.add(c.vars)

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    @property
    def ratio(self) -> float:
        """Realized clause-to-variable ratio."""
        return self.n_clauses / self.n_vars

    @cached_property
    def masks(self) -> np.ndarray:
        return np.array([c.mask for c in self.clauses], dtype=np.uint64)

    @cached_property
    def parities(self) -> np.ndarray:
        return np.array([c.parity for c in self.clauses], dtype=np.int8)

    def parity_flipped(self) -> Instance:
        return Instance(
            self.n_vars,
            self.k,
            tuple(Clause(c.vars, -c.parity) for c in self.clauses),
            self.seed,
            self.target_ratio,
            self.resamples,
            self.scheme,
        )

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "k": self.k,
            "target_ratio": self.target_ratio,
            "seed": self.seed,
            "resamples": self.resamples,
            "scheme": self.scheme,
            "clauses": [{"vars": list(c.vars), "parity": c.parity} for c in self.clauses],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Instance:
        try:
            clauses = tuple(Clause(tuple(c["vars"]), int(c["parity"])) for c in data["clauses"])
            return cls(
                n_vars=int(data["n_vars"]),
                k=int(data["k"]),
                clauses=clauses,
                seed=int(data.get("seed", 0)),
                target_ratio=float(data.get("target_ratio", 0.0)),
                resamples=int(data.get("resamples", 0)),
                scheme=str(data.get("scheme", "subset")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(f"malformed instance: {exc!r}") from exc


def clause_probability(n_vars: int, k: int, r: float) -> float:
    """Inclusion probability of each k-subset so that E[#clauses] = r * n_vars."""
    if not 1 <= k <= n_vars:
        raise InstanceError(f"need 1 <= k <= n_vars, got k={k}, n_vars={n_vars}")
    if r <= 0:
        raise InstanceError(f"ratio must be positive, got {r}")
    p = r * n_vars / comb(n_vars, k)
    if p > 1.0:
        raise InstanceError(
            f"ratio r={r} needs {r * n_vars:g} clauses but only C({n_vars},{k})={comb(n_vars, k)} "
            "variable subsets exist"
        )
    return p


def unrank_subset(rank: int, n: int, k: int) -> tuple[int, ...]:
    """The ``rank``-th k-subset of range(n) in lexicographic order."""
    out = []
    x = 0
    for i in range(k, 0, -1):
        while True:
            below = comb(n - x - 1, i - 1)
            if rank < below:
                break
            rank -= below
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def _generator(seed: int, attempt: int) -> np.random.Generator:
    # Philox is counter based: draw j of a stream is a pure function of (key, j)
    return np.random.Generator(np.random.Philox(key=(attempt << 64) | (seed & SEED_MASK)))


def sample_instance(n_vars: int, k: int, r: float, seed: int, scheme: str = "subset") -> Instance:
    """Sample a random pure k-literal Max-kXOR instance.

    With ``scheme="subset"`` every k-subset is kept independently with
    probability :func:`clause_probability` and gets a uniformly random parity,
    so the expected clause count is r * n_vars.

    With ``scheme="signed"`` each of the 2 C(N, k) signed clauses is drawn
    independently with that same probability, which doubles the expected
    density. A subset drawn with both signs contributes the same constant to
    every assignment and is dropped.

    Draws whose clause set comes out empty are rejected and redrawn from the
    next sub-stream; the number of redraws is stored in ``Instance.resamples``.
    """
    if k < 3:
        raise InstanceError(f"generation supports k >= 3, got k={k}")
    if scheme not in SCHEMES:
        raise InstanceError(f"unknown sampling scheme {scheme!r}; expected one of {SCHEMES}")
    prob = clause_probability(n_vars, k, r)
    total = comb(n_vars, k)
    attempt = 0
    while True:
        rng = _generator(seed, attempt)
        if scheme == "subset":
            keep = rng.random(total) < prob
            positive = rng.integers(0, 2, size=total, dtype=np.int8).astype(bool)
        else:
            drawn = rng.random((total, 2)) < prob
            keep = drawn[:, 0] ^ drawn[:, 1]
            positive = drawn[:, 0]
        ranks = np.flatnonzero(keep)
        if ranks.size:
            break
        attempt += 1
    clauses = tuple(
        Clause(unrank_subset(int(i), n_vars, k), 1 if positive[i] else -1) for i in ranks
    )
    return Instance(n_vars, k, clauses, seed & SEED_MASK, float(r), attempt, scheme)


def bits_from_index(z: int, n_vars: int) -> tuple[int, ...]:
    return tuple((z >> i) & 1 for i in range(n_vars))


def index_from_bits(bits: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def clause_satisfied(clause: Clause, bits: Sequence[int]) -> bool:
    odd = sum(int(bits[v]) for v in clause.vars) % 2 == 1
    return odd if clause.parity > 0 else not odd


def cost(instance: Instance, bits: Sequence[int]) -> int:
    """Number of clauses satisfied by the assignment ``bits``."""
    if len(bits) != instance.n_vars:
        raise InstanceError(f"assignment has length {len(bits)}, expected {instance.n_vars}")
    return sum(clause_satisfied(c, bits) for c in instance.clauses)


def write_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1) + "\n", encoding="utf-8")


def read_instance(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: expected a JSON object")
    return Instance.from_dict(data)
