"""Witnesses: lists of claimed dual-lattice vectors.

Vectors are kept as an integer numerator matrix over one common denominator,
so membership checks and inner products with rational targets stay exact.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

from latlab import rational as Q
from latlab.lattice import Basis, dual_basis

_INT64_SAFE = 1 << 62


class MalformedWitnessError(ValueError):
    pass


def _as_int_array(rows) -> np.ndarray:
    a = np.array(rows, dtype=object)
    if a.size and max(abs(int(x)) for x in a.ravel()) < (1 << 40):
        return a.astype(np.int64)
    return a


class Witness:
    """N vectors in Q^n stored as ``num / den`` with ``num`` an N x n integer array."""

    def __init__(self, num, den: int = 1):
        num = _as_int_array(num)
        if num.ndim != 2 or num.shape[0] < 1 or num.shape[1] < 1:
            raise MalformedWitnessError("witness must be a non-empty N x n array")
        if den <= 0:
            raise MalformedWitnessError("denominator must be positive")
        self.num = num
        self.den = int(den)
        self.num.setflags(write=False)

    @classmethod
    def from_vectors(cls, vectors: Iterable[Sequence]) -> "Witness":
        rows = [Q.as_vector(v) for v in vectors]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise MalformedWitnessError("vectors must be non-empty with uniform dimension")
        den = Q.common_denominator(x for r in rows for x in r)
        return cls([[int(x * den) for x in r] for r in rows], den)

    @classmethod
    def from_dual_coords(cls, B: Basis, coords: np.ndarray) -> "Witness":
        """Witness ``w_i = D z_i`` for the dual basis D of B and integer rows z_i."""
        D = dual_basis(B)
        den = Q.common_denominator(x for row in D.entries for x in row)
        dnum = np.array([[int(x * den) for x in row] for row in D.entries], dtype=object)
        z = np.asarray(coords)
        bound = int(np.abs(z).max(initial=0)) * int(np.abs(dnum).max()) * B.n
        if bound < _INT64_SAFE:
            num = z.astype(np.int64) @ dnum.astype(np.int64).T
        else:
            num = z.astype(object) @ dnum.T
        return cls(num, den)

    @property
    def N(self) -> int:
        return self.num.shape[0]

    @property
    def n(self) -> int:
        return self.num.shape[1]

    @cached_property
    def float(self) -> np.ndarray:
        a = self.num.astype(float) / self.den
        a.setflags(write=False)
        return a

    def vectors(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(int(x), self.den) for x in row) for row in self.num]

    def with_vectors(self, extra: "Witness") -> "Witness":
        if extra.n != self.n:
            raise MalformedWitnessError("dimension mismatch")
        den = lcm(self.den, extra.den)
        a = self.num.astype(object) * (den // self.den)
        b = extra.num.astype(object) * (den // extra.den)
        return Witness(np.vstack([a, b]), den)

    def to_json(self) -> dict:
        vecs = []
        for row in self.num:
            out = []
            for x in row:
                g = gcd(int(x), self.den)
                p, q = int(x) // g, self.den // g
                out.append(str(p) if q == 1 else f"{p}/{q}")
            vecs.append(out)
        return {"n": self.n, "N": self.N, "vectors": vecs}

    @classmethod
    def from_json(cls, data: dict) -> "Witness":
        w = cls.from_vectors(data["vectors"])
        if int(data.get("n", w.n)) != w.n or int(data.get("N", w.N)) != w.N:
            raise MalformedWitnessError("declared n/N do not match vectors")
        return w

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Witness":
        return cls.from_json(json.loads(text))


def dual_membership(B: Basis, W: Witness) -> np.ndarray:
    """Boolean mask: ``B^T w_i`` integral, computed exactly on unique rows."""
    if W.n != B.n:
        raise MalformedWitnessError("witness dimension does not match basis")
    bden = Q.common_denominator(x for row in B.entries for x in row)
    bnum = [[int(x * bden) for x in row] for row in B.entries]
    mod = bden * W.den
    uniq, inv = np.unique(W.num, axis=0, return_inverse=True)
    ok = np.empty(len(uniq), dtype=bool)
    n = B.n
    for k, w in enumerate(uniq):
        w = [int(x) for x in w]
        # (B^T w)_j = sum_i B[i][j] w_i
        ok[k] = all(sum(bnum[i][j] * w[i] for i in range(n)) % mod == 0 for j in range(n))
    return ok[np.asarray(inv).ravel()]


def inner_mod1(W: Witness, t) -> np.ndarray:
    """Fractional parts of ``<w_i, t>`` in [0, 1).

    Exact for rational targets (Sequence of Fractions/strings/ints); float
    targets (numpy arrays) use binary64.
    """
    if isinstance(t, np.ndarray) and t.dtype.kind == "f":
        x = W.float @ t
        return x - np.floor(x)
    tv = Q.as_vector(getattr(t, "coords", t))
    if len(tv) != W.n:
        raise MalformedWitnessError("target dimension does not match witness")
    tden = Q.common_denominator(tv)
    tnum = [int(x * tden) for x in tv]
    mod = W.den * tden
    bound = max(1, int(np.abs(W.num).max())) * max(abs(x) for x in tnum) * W.n
    if bound < _INT64_SAFE and mod < _INT64_SAFE and W.num.dtype != object:
        r = (W.num @ np.array(tnum, dtype=np.int64)) % mod
    else:
        r = np.array([sum(int(a) * b for a, b in zip(row, tnum)) % mod for row in W.num], dtype=object)
    return np.asarray(r, dtype=float) / mod if mod < (1 << 53) else np.array([float(Fraction(int(v), mod)) for v in r])
