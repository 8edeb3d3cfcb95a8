"""Small exact-rational linear algebra over ``fractions.Fraction``.

Matrices are tuples of row tuples. Everything here is O(n^3) Gauss-Jordan,
which is fine for the n <= 12 regime this package targets.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Matrix = tuple[tuple[Fraction, ...], ...]
Vector = tuple[Fraction, ...]


class SingularMatrixError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    """Convert ints, floats, Fractions or ``"p/q"`` strings exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fraction_str(x: Fraction) -> str:
    x = to_fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def as_matrix(rows: Iterable[Iterable]) -> Matrix:
    m = tuple(tuple(to_fraction(v) for v in row) for row in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise ValueError("ragged matrix")
    return m


def as_vector(v: Iterable) -> Vector:
    return tuple(to_fraction(x) for x in v)


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def matvec(a: Matrix, v: Sequence) -> Vector:
    return tuple(sum((x * to_fraction(y) for x, y in zip(row, v)), Fraction(0)) for row in a)


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((to_fraction(x) * to_fraction(y) for x, y in zip(u, v)), Fraction(0))


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def det(a: Matrix) -> Fraction:
    n = len(a)
    m = [list(row) for row in a]
    d = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            d = -d
        p = m[col][col]
        d *= p
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return d


def solve(a: Matrix, b: Sequence) -> Vector:
    """Exact solution of ``a x = b``."""
    return matvec(inverse(a), b)


def common_denominator(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = lcm(out, to_fraction(v).denominator)
    return out


def is_integral(v: Iterable[Fraction]) -> bool:
    return all(to_fraction(x).denominator == 1 for x in v)
