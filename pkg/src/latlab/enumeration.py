"""Brute-force ground truth: lattice points in a ball, SVP, CVP and a BDD oracle.

Enumeration runs on an LLL-reduced copy of the basis, breadth-first over the
Gram-Schmidt levels with numpy, so every level is one vectorized expansion.
Candidates that survive the float radius test (with a small slack) are then
re-scored in exact integer arithmetic, which makes the returned minimizers
exact. Ties are broken lexicographically on the coordinates in the *input*
basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from latlab import rational as Q
from latlab.lattice import Basis, LatticeVector, Target, as_target, check_cap, lll_reduce

MAX_POINTS = 1 << 23
_REL_SLACK = 1e-9


class TooManyPointsError(ValueError):
    pass


@dataclass(frozen=True)
class _Reduced:
    basis: Basis
    transform: np.ndarray  # integer U with reduced = original @ U
    r: np.ndarray  # upper-triangular R of the reduced basis
    qt: np.ndarray  # Q^T


@lru_cache(maxsize=256)
def _reduced(B: Basis) -> _Reduced:
    red, u = lll_reduce(B, return_transform=True)
    q, r = np.linalg.qr(red.float)
    return _Reduced(red, np.array(u, dtype=np.int64), r, q.T.copy())


def _enumerate(r: np.ndarray, y: np.ndarray, radius_sq: float, max_points: int):
    """All integer z with ||R z - y||^2 <= radius_sq; returns (Z, sq_dists)."""
    n = r.shape[0]
    z = np.zeros((1, n), dtype=np.int64)
    partial = np.zeros(1)
    for i in range(n - 1, -1, -1):
        rii = r[i, i]
        shift = z[:, i + 1:] @ r[i, i + 1:] if i + 1 < n else np.zeros(len(z))
        center = (y[i] - shift) / rii
        rem = np.maximum(radius_sq - partial, 0.0)
        half = np.sqrt(rem) / abs(rii)
        lo = np.ceil(center - half).astype(np.int64)
        hi = np.floor(center + half).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > max_points:
            raise TooManyPointsError(f"enumeration would visit {total} > {max_points} nodes")
        rows = np.repeat(np.arange(len(z)), counts)
        starts = np.cumsum(counts) - counts
        offs = np.arange(total) - np.repeat(starts, counts)
        zi = lo[rows] + offs
        z = z[rows]
        z[:, i] = zi
        partial = partial[rows] + (rii * (zi - center[rows])) ** 2
    keep = partial <= radius_sq
    return z[keep], partial[keep]


def points_in_ball(B: Basis, center, radius: float, max_points: int = MAX_POINTS, cap: int | None = None):
    """Coordinates (input basis) and float squared distances of every lattice
    point within ``radius`` of ``center``.

    The float radius carries a relative slack of 1e-9 so that boundary points
    are never lost; callers needing exactness re-check with :func:`exact_sq_dists`.
    """
    check_cap(B.n, cap)
    red = _reduced(B)
    c = np.asarray(center.as_float() if isinstance(center, Target) else center, dtype=float)
    radius_sq = float(radius) ** 2 * (1 + _REL_SLACK) + 1e-300
    zr, d2 = _enumerate(red.r, red.qt @ c, radius_sq, max_points)
    coords = zr @ red.transform.T
    return coords, d2


def _int_form(B: Basis):
    den = Q.common_denominator(x for row in B.entries for x in row)
    return den, [[int(x * den) for x in row] for row in B.entries]


@lru_cache(maxsize=256)
def _int_form_cached(B: Basis):
    return _int_form(B)


def exact_sq_dists(B: Basis, coords, t=None) -> list[Fraction]:
    """Exact ||B z - t||^2 for each coordinate row z."""
    den, bi = _int_form_cached(B)
    n = B.n
    if t is None:
        tden, ti = 1, [0] * n
    else:
        tv = as_target(t).coords
        tden = Q.common_denominator(tv)
        ti = [int(x * tden) for x in tv]
    scale = den * tden
    out = []
    for z in coords:
        zz = [int(v) for v in z]
        acc = 0
        for i in range(n):
            row = bi[i]
            s = tden * sum(row[j] * zz[j] for j in range(n)) - den * ti[i]
            acc += s * s
        out.append(Fraction(acc, scale * scale))
    return out


def _pick_exact_min(B: Basis, coords: np.ndarray, d2: np.ndarray, t=None):
    if len(coords) == 0:
        return None
    best = float(d2.min())
    near = coords[d2 <= best * (1 + 4 * _REL_SLACK) + 1e-12]
    exact = exact_sq_dists(B, near, t)
    m = min(exact)
    winners = sorted(tuple(int(v) for v in z) for z, e in zip(near, exact) if e == m)
    return m, winners[0]


@lru_cache(maxsize=256)
def _svp_cached(B: Basis):
    red = _reduced(B)
    col_norms = [Q.dot(c, c) for c in red.basis.columns]
    radius = math.sqrt(min(col_norms))
    coords, d2 = points_in_ball(B, np.zeros(B.n), radius, cap=B.n)
    nz = np.any(coords != 0, axis=1)
    m, z = _pick_exact_min(B, coords[nz], d2[nz])
    return m, z


def svp_exact(B: Basis, bound_hint: Optional[float] = None, cap: int | None = None):
    """Shortest nonzero vector: returns ``(lambda1, LatticeVector)``.

    The search radius is the shortest column of the LLL-reduced basis, which
    always contains a shortest vector. ``bound_hint`` may shrink it.
    """
    check_cap(B.n, cap)
    if bound_hint is not None:
        coords, d2 = points_in_ball(B, np.zeros(B.n), bound_hint, cap=cap)
        nz = np.any(coords != 0, axis=1)
        if nz.any():
            m, z = _pick_exact_min(B, coords[nz], d2[nz])
            full_m, full_z = _svp_cached(B)
            if m == full_m:
                z = min(z, full_z)
            return math.sqrt(m), B.vector(z)
    m, z = _svp_cached(B)
    return math.sqrt(m), B.vector(z)


def lambda1_sq(B: Basis) -> Fraction:
    return _svp_cached(B)[0]


def _babai(B: Basis, c: np.ndarray) -> np.ndarray:
    """Nearest-plane coefficients (input basis) for a float target."""
    red = _reduced(B)
    y = red.qt @ c
    n = B.n
    z = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        z[i] = int(np.rint((y[i] - red.r[i, i + 1:] @ z[i + 1:]) / red.r[i, i]))
    return red.transform @ z


def cvp_exact(B: Basis, t, cap: int | None = None):
    """Closest lattice vector: returns ``(dist, LatticeVector)``."""
    check_cap(B.n, cap)
    t = as_target(t)
    if t.n != B.n:
        raise ValueError("dimension mismatch")
    m, z = _cvp_exact_sq(B, t)
    return math.sqrt(m), B.vector(z)


def _cvp_exact_sq(B: Basis, t: Target):
    c = t.as_float()
    zb = _babai(B, c)
    ub = exact_sq_dists(B, [zb], t)[0]
    coords, d2 = points_in_ball(B, c, math.sqrt(ub) * (1 + 1e-9) + 1e-12, cap=B.n)
    if len(coords) == 0:
        return ub, tuple(int(v) for v in zb)
    return _pick_exact_min(B, coords, d2, t)


def dist_sq_exact(B: Basis, t) -> Fraction:
    return _cvp_exact_sq(B, as_target(t))[0]


BDD_MODES = ("closest", "garbage", "abstain")


def bdd_oracle_exact(B: Basis, t, alpha, mode: str = "closest", rng: np.random.Generator | None = None,
                     diagnostics: dict | None = None, cap: int | None = None) -> Optional[LatticeVector]:
    """Brute-force alpha-BDD oracle.

    When ``dist(t, L) <= alpha * lambda1`` the closest vector is returned (it is
    unique for alpha < 1/2). Otherwise ``mode`` decides: ``closest`` answers
    honestly anyway, ``garbage`` returns a random lattice vector and
    ``abstain`` returns None. ``diagnostics`` (if given) is updated in place.
    """
    if mode not in BDD_MODES:
        raise ValueError(f"unknown BDD mode {mode!r}")
    check_cap(B.n, cap)
    t = as_target(t)
    alpha = Q.to_fraction(alpha)
    d2, z = _cvp_exact_sq(B, t)
    held = d2 <= alpha * alpha * lambda1_sq(B)
    info = {"promise_held": bool(held), "mode": mode, "garbage": False}
    out: Optional[LatticeVector]
    if held or mode == "closest":
        out = B.vector(z)
    elif mode == "garbage":
        rng = rng or np.random.default_rng()
        out = B.vector(rng.integers(-5, 6, size=B.n))
        info["garbage"] = True
    else:
        out = None
    if diagnostics is not None:
        diagnostics.update(info)
    return out


def min_norm_over_coset(B: Basis, t: np.ndarray, norm, l2_per_norm: float, upper: float | None = None):
    """min over y in L of ``norm(t - y)`` for a vectorized norm function.

    ``l2_per_norm`` bounds ||x||_2 / ||x||_K, so all minimizers lie in the
    Euclidean ball of radius ``l2_per_norm * upper`` around ``t``.
    Returns ``(value, coords)``.
    """
    t = np.asarray(t, dtype=float)
    if upper is None:
        zb = _babai(B, t)
        upper = float(norm((t - B.float @ zb)[None, :])[0])
    coords, _ = points_in_ball(B, t, l2_per_norm * upper * (1 + 1e-9) + 1e-12)
    if len(coords) == 0:
        return upper, None
    vals = norm(t[None, :] - coords @ B.float.T)
    i = int(np.argmin(vals))
    return float(vals[i]), coords[i]
