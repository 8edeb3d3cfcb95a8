"""Exact lattice bases, dual lattices, parallelepiped reduction and LLL.

A :class:`Basis` stores an n x n matrix of Fractions whose *columns* are the
basis vectors b_1..b_n, so the lattice is ``{B z : z in Z^n}``. All
membership and coset identities are evaluated in exact arithmetic; a float
view is cached for the numeric code paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from latlab import rational as Q
from latlab.rational import Matrix, Vector

DEFAULT_ENUM_CAP = 12


class DimensionCapError(ValueError):
    """Raised when an exponential-time routine is asked to exceed its cap."""


def check_cap(n: int, cap: int | None) -> None:
    cap = DEFAULT_ENUM_CAP if cap is None else cap
    if n > cap:
        raise DimensionCapError(f"dimension {n} exceeds enumeration cap {cap}")


@dataclass(frozen=True)
class Basis:
    entries: Matrix

    def __post_init__(self):
        m = Q.as_matrix(self.entries)
        object.__setattr__(self, "entries", m)
        if not m or len(m) != len(m[0]):
            raise ValueError("basis must be a non-empty square matrix")
        if Q.det(m) == 0:
            raise Q.SingularMatrixError("basis columns are linearly dependent")

    @classmethod
    def from_columns(cls, columns: Iterable[Iterable]) -> "Basis":
        return cls(Q.transpose(Q.as_matrix(columns)))

    @classmethod
    def identity(cls, n: int) -> "Basis":
        return cls(Q.identity(n))

    @classmethod
    def diagonal(cls, values: Sequence) -> "Basis":
        n = len(values)
        return cls(tuple(tuple(Q.to_fraction(values[i]) if i == j else Fraction(0) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def columns(self) -> tuple[Vector, ...]:
        return Q.transpose(self.entries)

    @cached_property
    def det(self) -> Fraction:
        return Q.det(self.entries)

    @cached_property
    def inverse(self) -> Matrix:
        return Q.inverse(self.entries)

    @cached_property
    def float(self) -> np.ndarray:
        a = np.array([[float(x) for x in row] for row in self.entries])
        a.setflags(write=False)
        return a

    @cached_property
    def float_inverse(self) -> np.ndarray:
        a = np.array([[float(x) for x in row] for row in self.inverse])
        a.setflags(write=False)
        return a

    def scaled(self, c) -> "Basis":
        c = Q.to_fraction(c)
        return Basis(tuple(tuple(c * x for x in row) for row in self.entries))

    def vector(self, coords: Sequence[int]) -> "LatticeVector":
        coords = tuple(int(z) for z in coords)
        return LatticeVector(coords, Q.matvec(self.entries, coords))

    def coordinates(self, x: Sequence) -> Vector:
        """Exact coefficients of ``x`` with respect to this basis."""
        return Q.matvec(self.inverse, x)

    def contains(self, x: Sequence) -> bool:
        return Q.is_integral(self.coordinates(x))

    def to_json(self) -> dict:
        return {"n": self.n, "basis": [[Q.fraction_str(v) for v in col] for col in self.columns]}

    @classmethod
    def from_json(cls, data: dict) -> "Basis":
        b = cls.from_columns(data["basis"])
        if int(data.get("n", b.n)) != b.n:
            raise ValueError("declared n does not match basis size")
        return b

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Basis":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class LatticeVector:
    coords: tuple[int, ...]
    embedding: Vector

    @property
    def norm_sq(self) -> Fraction:
        return Q.dot(self.embedding, self.embedding)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.embedding])

    def is_zero(self) -> bool:
        return not any(self.coords)


@dataclass(frozen=True)
class Target:
    coords: Vector

    def __post_init__(self):
        object.__setattr__(self, "coords", Q.as_vector(self.coords))

    @property
    def n(self) -> int:
        return len(self.coords)

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.coords])

    def to_json(self) -> dict:
        return {"n": self.n, "target": [Q.fraction_str(x) for x in self.coords]}

    @classmethod
    def from_json(cls, data: dict) -> "Target":
        t = cls(data["target"])
        if int(data.get("n", t.n)) != t.n:
            raise ValueError("declared n does not match target size")
        return t


def as_target(t) -> Target:
    return t if isinstance(t, Target) else Target(t)


def dual_basis(B: Basis) -> Basis:
    """Basis ``(B^{-1})^T`` of the dual lattice."""
    return Basis(Q.transpose(B.inverse))


def is_dual_member(B: Basis, w: Sequence) -> bool:
    """True iff ``B^T w`` is integral, i.e. <w, y> in Z for every y in L(B)."""
    w = Q.as_vector(w)
    if len(w) != B.n:
        raise ValueError("dimension mismatch")
    return Q.is_integral(Q.matvec(Q.transpose(B.entries), w))


def reduce_mod_parallelepiped(B: Basis, t) -> Target:
    """The unique representative of ``t + L`` inside P(B), exactly."""
    t = as_target(t)
    if t.n != B.n:
        raise ValueError("dimension mismatch")
    x = B.coordinates(t.coords)
    frac = [xi - math.floor(xi) for xi in x]
    return Target(Q.matvec(B.entries, frac))


def reduce_mod_parallelepiped_float(B: Basis, t: np.ndarray) -> np.ndarray:
    """Float version used inside Monte Carlo loops; accepts a batch (rows)."""
    t = np.asarray(t, dtype=float)
    x = t @ B.float_inverse.T
    return (x - np.floor(x)) @ B.float.T


def gram_schmidt(B: Basis) -> tuple[tuple[Vector, ...], tuple[tuple[Fraction, ...], ...]]:
    """Exact Gram-Schmidt vectors and mu coefficients of the columns of B."""
    cols = B.columns
    star: list[Vector] = []
    mu = [[Fraction(0)] * B.n for _ in range(B.n)]
    norms: list[Fraction] = []
    for i, b in enumerate(cols):
        v = list(b)
        for j in range(i):
            mu[i][j] = Q.dot(b, star[j]) / norms[j]
            v = [x - mu[i][j] * y for x, y in zip(v, star[j])]
        mu[i][i] = Fraction(1)
        star.append(tuple(v))
        norms.append(Q.dot(v, v))
    return tuple(star), tuple(tuple(r) for r in mu)


def gs_norms(B: Basis | np.ndarray) -> np.ndarray:
    """Gram-Schmidt lengths ||b~_i|| (float, via QR)."""
    a = B.float if isinstance(B, Basis) else np.asarray(B, dtype=float)
    return np.abs(np.diag(np.linalg.qr(a, mode="r")))


def gs_max_norm(B: Basis) -> float:
    return float(gs_norms(B).max())


def lll_reduce(B: Basis, delta=Fraction(3, 4), return_transform: bool = False):
    """Textbook LLL in exact arithmetic.

    Returns the reduced basis, and with ``return_transform`` also the integer
    matrix U (rows of tuples) with ``B_reduced = B U``.
    """
    delta = Q.to_fraction(delta)
    n = B.n
    b = [list(c) for c in B.columns]
    u = [[int(i == j) for i in range(n)] for j in range(n)]  # u[j] = column j of U

    def gso():
        star, mu, nrm = [], [[Fraction(0)] * n for _ in range(n)], []
        for i in range(n):
            v = list(b[i])
            for j in range(i):
                mu[i][j] = Q.dot(b[i], star[j]) / nrm[j]
                v = [x - mu[i][j] * y for x, y in zip(v, star[j])]
            star.append(v)
            nrm.append(Q.dot(v, v))
        return mu, nrm

    mu, nrm = gso()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = math.floor(mu[k][j] + Fraction(1, 2))
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                u[k] = [x - q * y for x, y in zip(u[k], u[j])]
                for l in range(j):
                    mu[k][l] -= q * mu[j][l]
                mu[k][j] -= q
        if nrm[k] >= (delta - mu[k][k - 1] ** 2) * nrm[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            mu, nrm = gso()
            k = max(k - 1, 1)
    reduced = Basis.from_columns(b)
    if return_transform:
        return reduced, tuple(tuple(u[j][i] for j in range(n)) for i in range(n))
    return reduced


def is_lll_reduced(B: Basis, delta=Fraction(3, 4)) -> bool:
    star, mu = gram_schmidt(B)
    nrm = [Q.dot(s, s) for s in star]
    for i in range(B.n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(nrm[k] >= (delta - mu[k][k - 1] ** 2) * nrm[k - 1] for k in range(1, B.n))


def change_of_basis(B: Basis, C: Basis) -> Matrix:
    """Exact U with ``C = B U``; the two bases span the same lattice iff U is
    integral with determinant +-1."""
    return Q.matmul(B.inverse, C.entries)


def same_lattice(B: Basis, C: Basis) -> bool:
    if B.n != C.n:
        return False
    u = change_of_basis(B, C)
    return all(Q.is_integral(r) for r in u) and abs(Q.det(u)) == 1
