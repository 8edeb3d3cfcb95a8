"""Deciding gap-SVP with an alpha-BDD oracle.

Each trial hides a short offset s in the coset ``t = s mod P(B)``. When
lambda1 is large the oracle must return ``t - s``; when it is small, some
other lattice vector u gives ``s - u`` in the same ball and the oracle
cannot tell them apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from latlab import params as P
from latlab import rational as Q
from latlab.enumeration import bdd_oracle_exact
from latlab.geometry import ball, ball_intersection_lb, sample_uniform_body
from latlab.lattice import Basis, LatticeVector, Target

YES, NO = "YES", "NO"


@dataclass
class BddRun:
    answer: str
    trials: int
    mismatches: int
    first_mismatch: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


def exact_bdd_oracle(alpha, mode: str = "closest") -> Callable[[Basis, Target], Optional[LatticeVector]]:
    return lambda B, t: bdd_oracle_exact(B, t, alpha, mode=mode)


def desk_trials(n: int, alpha: float, gamma: float, miss: float = 0.01) -> int:
    """Trials so that, with per-trial YES probability at least p/2 (p the
    ball-intersection bound at ``1/(alpha gamma)``), a YES instance is missed
    with probability at most ``miss``."""
    x = 1 / (alpha * gamma)
    if x >= 2:
        raise ValueError("need alpha * gamma > 1/2")
    p = ball_intersection_lb(n, x)
    return math.ceil(math.log(miss) / math.log1p(-p / 2))


def paper_trials(n: int, alpha: float, gamma: float) -> int:
    if not alpha * gamma >= 0.5 + 1 / n:
        raise ValueError("paper preset needs alpha * gamma >= 1/2 + 1/n")
    return math.ceil(P.bdd_queries(n, alpha, gamma))


def svp_to_bdd(B: Basis, d, gamma, alpha, oracle=None, N: int | None = None,
               rng: np.random.Generator | None = None, shifts: np.ndarray | None = None,
               stop_early: bool = True) -> BddRun:
    """YES iff some trial's oracle answer differs from ``t - s``.

    ``shifts`` replaces the random s (one row per trial), which allows
    constructed collisions. ``N`` defaults to :func:`desk_trials`.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    oracle = oracle or exact_bdd_oracle(alpha)
    n = B.n
    r = float(alpha) * float(gamma) * float(d)
    if shifts is None:
        N = desk_trials(n, alpha, gamma) if N is None else int(N)
        rng = rng or np.random.default_rng()
        shifts = sample_uniform_body(ball(n, r), rng, N)
    else:
        shifts = np.atleast_2d(np.asarray(shifts, float))
        N = len(shifts)
    Binv = B.inverse
    mismatches, first = 0, None
    done = 0
    for i, row in enumerate(shifts):
        s = [Fraction(float(x)) for x in row]
        x = Q.matvec(Binv, s)
        fl = [math.floor(v) for v in x]
        t = Target(tuple(si - sum(B.entries[k][j] * fl[j] for j in range(n)) for k, si in enumerate(s)))
        v = oracle(B, t)
        done += 1
        # t - s = -B floor(B^{-1} s)
        if v is None or tuple(v.coords) != tuple(-f for f in fl):
            mismatches += 1
            if first is None:
                first = i
            if stop_early:
                break
    ans = YES if mismatches else NO
    return BddRun(ans, done, mismatches, first, {"r": r, "planned_trials": N})
