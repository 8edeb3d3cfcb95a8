"""Lattice/target fixtures with exactly certified promise stamps.

Promise fixtures are in CVP' normal form with threshold d and factor
gamma = sqrt(n)/d, so ``gamma d = sqrt(n)``: a close fixture has
``dist <= d``; a far fixture has ``dist > sqrt(n)`` and ``lambda1 > sqrt(n)``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from latlab import rational as Q
from latlab.enumeration import dist_sq_exact, lambda1_sq
from latlab.lattice import Basis, Target

KINDS = ("close-promise", "far-promise", "random", "scaled-Zn")
FIXTURE_DIR_ENV = "LATLAB_FIXTURES"
FAR_MARGIN = 1.25


class PromiseViolation(ValueError):
    pass


def default_close_radius(n: int) -> Fraction:
    return {1: Fraction(1, 10), 2: Fraction(1, 10), 3: Fraction(1, 20)}.get(n, Fraction(1, 50))


@dataclass
class Fixture:
    kind: str
    n: int
    seed: int
    basis: Basis
    target: Optional[Target]
    d: Optional[Fraction] = None
    promise: Optional[str] = None
    stamps: dict = field(default_factory=dict)

    @property
    def gamma(self) -> Optional[Fraction]:
        return None if self.d is None else Fraction(math.sqrt(self.n)) / self.d

    @property
    def dist(self) -> float:
        return math.sqrt(self.stamps["dist_sq"])

    @property
    def lambda1(self) -> float:
        return math.sqrt(self.stamps["lambda1_sq"])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "seed": self.seed,
            "basis": self.basis.to_json()["basis"],
            "target": None if self.target is None else [Q.fraction_str(x) for x in self.target.coords],
            "d": None if self.d is None else Q.fraction_str(self.d),
            "promise": self.promise,
            "stamps": {k: Q.fraction_str(v) for k, v in self.stamps.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict, verify: bool = True) -> "Fixture":
        B = Basis.from_json({"n": data["n"], "basis": data["basis"]})
        t = None if data.get("target") is None else Target(tuple(Q.to_fraction(x) for x in data["target"]))
        d = None if data.get("d") is None else Q.to_fraction(data["d"])
        fx = cls(data["kind"], int(data["n"]), int(data.get("seed", 0)), B, t, d, data.get("promise"),
                 {k: Q.to_fraction(v) for k, v in data.get("stamps", {}).items()})
        if verify:
            fx.verify()
        return fx

    @classmethod
    def loads(cls, text: str, verify: bool = True) -> "Fixture":
        return cls.from_json(json.loads(text), verify)

    def verify(self) -> None:
        """Recompute the stamps with the exact solvers and check the promise."""
        fresh = compute_stamps(self.basis, self.target)
        for k, v in self.stamps.items():
            if fresh.get(k) != v:
                raise PromiseViolation(f"stamp {k} = {v} does not match recomputed {fresh.get(k)}")
        n = Fraction(self.n)
        if self.promise == "close":
            if not fresh["dist_sq"] <= self.d ** 2:
                raise PromiseViolation("close promise violated: dist > d")
        elif self.promise == "far":
            if not (fresh["dist_sq"] > n and fresh["lambda1_sq"] > n):
                raise PromiseViolation("far promise violated: need dist > sqrt(n) and lambda1 > sqrt(n)")


def compute_stamps(B: Basis, t: Optional[Target]) -> dict:
    out = {"lambda1_sq": lambda1_sq(B)}
    if t is not None:
        out["dist_sq"] = dist_sq_exact(B, t)
    return out


def _random_basis(n: int, rng: np.random.Generator) -> Basis:
    while True:
        M = rng.integers(-4, 5, (n, n)) + 3 * np.eye(n, dtype=np.int64)
        den = int(rng.integers(1, 6))
        try:
            return Basis.from_columns([[Fraction(int(M[i, j]), den) for i in range(n)] for j in range(n)])
        except Q.SingularMatrixError:
            continue


def _random_target(B: Basis, rng: np.random.Generator, den: int = 97) -> Target:
    u = [Fraction(int(x), den) for x in rng.integers(0, den, B.n)]
    return Target(tuple(Q.matvec(B.entries, u)))


def _scale_above(value_sq: Fraction, want: float) -> Fraction:
    """Smallest convenient rational c with ``c^2 value_sq > want^2``."""
    c = Fraction(want / math.sqrt(value_sq)).limit_denominator(1000)
    while c * c * value_sq <= Fraction(want) ** 2:
        c += Fraction(1, 1000)
    return c


def _ball_offset(n: int, radius: Fraction, rng: np.random.Generator) -> tuple[Fraction, ...]:
    g = rng.standard_normal(n)
    g *= float(radius) * rng.random() ** (1 / n) / np.linalg.norm(g)
    e = [Fraction(float(x)).limit_denominator(10 ** 6) for x in g]
    while Q.dot(e, e) > radius ** 2:
        e = [x * Fraction(99, 100) for x in e]
    return tuple(e)


def generate(kind: str, n: int, seed: int, radius=None, margin: float = FAR_MARGIN) -> Fixture:
    """Deterministic fixture; ``margin`` scales the far/close separation above sqrt(n)."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng([seed, n, KINDS.index(kind)])
    if kind == "scaled-Zn":
        c = math.isqrt(n - 1) + 1 if n > 1 else 1
        B = Basis.diagonal([c] * n)
        t = Target(tuple(Fraction(c, 2) for _ in range(n)))
        return Fixture(kind, n, seed, B, t, None, None, compute_stamps(B, t))
    B0 = _random_basis(n, rng)
    if kind == "random":
        t = _random_target(B0, rng)
        return Fixture(kind, n, seed, B0, t, None, None, compute_stamps(B0, t))
    if kind == "far-promise":
        l2 = lambda1_sq(B0)
        while True:
            t0 = _random_target(B0, rng)
            d2 = dist_sq_exact(B0, t0)
            if d2 >= l2 / 16:
                break
        c = _scale_above(min(l2, d2), margin * math.sqrt(n))
        B = B0.scaled(c)
        t = Target(tuple(c * x for x in t0.coords))
        r = Q.to_fraction(radius) if radius is not None else default_close_radius(n)
        fxt = Fixture(kind, n, seed, B, t, r, "far", compute_stamps(B, t))
        fxt.verify()
        return fxt
    # close-promise: lattice with lambda1 above sqrt(n), target within radius of a lattice point
    r = Q.to_fraction(radius) if radius is not None else default_close_radius(n)
    c = _scale_above(lambda1_sq(B0), margin * math.sqrt(n))
    B = B0.scaled(c)
    z = rng.integers(-3, 4, n)
    base = B.vector(z).embedding
    e = _ball_offset(n, r, rng)
    t = Target(tuple(a + b for a, b in zip(base, e)))
    fxt = Fixture(kind, n, seed, B, t, r, "close", compute_stamps(B, t))
    fxt.verify()
    return fxt


def resolve_path(path: str | os.PathLike) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute():
        root = os.environ.get(FIXTURE_DIR_ENV)
        if root and (Path(root) / p).exists():
            return Path(root) / p
    return p


def load(path: str | os.PathLike, verify: bool = True) -> Fixture:
    return Fixture.loads(resolve_path(path).read_text(), verify)
