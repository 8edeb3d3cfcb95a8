"""SVP to CVP' by doubling one basis vector at a time.

Instance i is ``(B_i, b_i)`` with ``B_i`` equal to B except that column i is
doubled. ``L(B_i)`` is the index-2 sublattice of vectors whose i-th
coordinate is even, so ``b_i + L(B_i)`` is exactly the set of lattice vectors
with odd i-th coordinate and ``min_i dist(b_i, L(B_i)) = lambda1(L)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from latlab import rational as Q
from latlab.enumeration import dist_sq_exact, lambda1_sq
from latlab.lattice import Basis, Target

YES, NO, NEITHER = "YES", "NO", "NEITHER"
SCALE_DENOMINATOR = 2 ** 20


@dataclass(frozen=True)
class Cvp1Instance:
    """One CVP' instance. ``basis`` and ``target`` are in the input's units;
    ``scale`` is the rational factor putting the CLOSE threshold at
    ``sqrt(n)/gamma``."""

    index: int
    basis: Basis
    target: Target
    d: Fraction
    gamma: Fraction
    scale: Fraction

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def scaled_basis(self) -> Basis:
        return self.basis.scaled(self.scale)

    @property
    def scaled_target(self) -> Target:
        return Target(tuple(self.scale * x for x in self.target.coords))

    def dist_sq(self) -> Fraction:
        return dist_sq_exact(self.basis, self.target)

    def label(self) -> str:
        """YES if ``dist <= d``; NO if ``dist > gamma d`` and ``lambda1 > gamma d``."""
        d2 = self.dist_sq()
        if d2 <= self.d ** 2:
            return YES
        far = (self.gamma * self.d) ** 2
        if d2 > far and lambda1_sq(self.basis) > far:
            return NO
        return NEITHER

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "basis": self.basis.to_json()["basis"],
            "target": [Q.fraction_str(x) for x in self.target.coords],
            "d": Q.fraction_str(self.d),
            "gamma": Q.fraction_str(self.gamma),
            "scale": Q.fraction_str(self.scale),
        }


def doubled_basis(B: Basis, i: int) -> Basis:
    cols = [list(c) for c in B.columns]
    cols[i] = [2 * x for x in cols[i]]
    return Basis.from_columns(cols)


def gmss_scale(n: int, d, gamma) -> Fraction:
    """Rational approximation of ``sqrt(n) / (gamma d)``."""
    return Fraction(math.sqrt(n) / (float(gamma) * float(d))).limit_denominator(SCALE_DENOMINATOR)


def gmss_reduce(B: Basis, d, gamma=1) -> list[Cvp1Instance]:
    d, gamma = Q.to_fraction(d), Q.to_fraction(gamma)
    if d <= 0 or gamma < 1:
        raise ValueError("need d > 0 and gamma >= 1")
    c = gmss_scale(B.n, d, gamma)
    return [Cvp1Instance(i, doubled_basis(B, i), Target(B.columns[i]), d, gamma, c) for i in range(B.n)]


def svp_label(B: Basis, d, gamma=1) -> str:
    d, gamma = Q.to_fraction(d), Q.to_fraction(gamma)
    l2 = lambda1_sq(B)
    if l2 <= d * d:
        return YES
    if l2 > (gamma * d) ** 2:
        return NO
    return NEITHER
