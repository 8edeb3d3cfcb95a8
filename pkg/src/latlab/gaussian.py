"""Gaussian masses over lattices, the periodic Gaussian, smoothing parameter,
and two independent discrete Gaussian samplers.

Notation: ``rho_s(x) = exp(-pi ||x||^2 / s^2)``; ``D_{L,s}`` puts mass
proportional to rho_s on each lattice point.

Infinite sums are truncated at a radius chosen from the standard lattice Gaussian tail bound:
for r >= s sqrt(n/2pi), the mass of ``L - t`` outside radius r is at most
``exp(-pi x^2) rho_s(L)`` with ``x = r/s - sqrt(n/2pi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from latlab import rational as Q
from latlab.enumeration import _babai, points_in_ball
from latlab.lattice import Basis, LatticeVector, as_target, dual_basis, gs_norms


class ParameterError(ValueError):
    """A sampler or reduction was called outside its parameter regime."""


@dataclass(frozen=True)
class TruncationPolicy:
    rel_error: float = 2.0 ** -40
    extended: bool = False

    def __post_init__(self):
        if not 0 < self.rel_error < 1:
            raise ValueError("rel_error must lie in (0, 1)")

    def tail_x(self, s: float = 1.0, shift_dist: float = 0.0) -> float:
        # exp(-pi x^2) <= (rel/2) * rho_s(shift_dist)
        return math.sqrt(math.log(2.0 / self.rel_error) / math.pi + (shift_dist / s) ** 2)

    def radius(self, n: int, s: float, shift_dist: float = 0.0) -> float:
        return s * (math.sqrt(n / (2 * math.pi)) + self.tail_x(s, shift_dist))


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class MassEstimate:
    value: float
    radius: float
    points: int
    rel_error_bound: float


def rho(s: float, x) -> float:
    if not s > 0:
        raise ValueError("s must be positive")
    x = np.asarray(x, dtype=float)
    return math.exp(-math.pi * float(x @ x) / (s * s))


def _sum(values: np.ndarray, extended: bool) -> float:
    if extended:
        return float(np.sort(values.astype(np.longdouble)).sum())
    return math.fsum(values)


def _weights(d2: np.ndarray, s: float, extended: bool) -> np.ndarray:
    if extended:
        return np.exp(-np.pi * d2.astype(np.longdouble) / (np.longdouble(s) ** 2))
    return np.exp(-np.pi * d2 / (s * s))


def _shift_dist_bound(B: Basis, t: np.ndarray) -> float:
    if not np.any(t):
        return 0.0
    z = _babai(B, t)
    return float(np.linalg.norm(B.float @ z - t))


def rho_lattice_detail(B: Basis, s: float, t=None, policy: TruncationPolicy = DEFAULT_POLICY) -> MassEstimate:
    """Truncated ``rho_s(L - t)`` together with its truncation certificate."""
    if not s > 0:
        raise ValueError("s must be positive")
    c = np.zeros(B.n) if t is None else np.asarray(as_target(t).as_float() if not isinstance(t, np.ndarray) else t, float)
    d = _shift_dist_bound(B, c)
    r = policy.radius(B.n, s, d)
    _, d2 = points_in_ball(B, c, r)
    w = _weights(d2, s, policy.extended)
    return MassEstimate(_sum(w, policy.extended), r, len(d2), policy.rel_error)


def rho_lattice(B: Basis, s: float, t=None, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``rho_s(L - t)`` with relative error at most ``policy.rel_error``."""
    return rho_lattice_detail(B, s, t, policy).value


def periodic_gaussian_f(B: Basis, s: float, t, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``f_s(t) = rho_s(L - t) / rho_s(L)``."""
    return rho_lattice(B, s, t, policy) / rho_lattice(B, s, None, policy)


def dual_cosine_expectation(B: Basis, s: float, t, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``E_{w ~ D_{L*, 1/s}}[cos(2 pi <w, t>)]`` by a truncated sum over the dual.

    Equal to :func:`periodic_gaussian_f` by Poisson summation; kept as a
    separate route so the two can check each other.
    """
    D = dual_basis(B)
    sd = 1.0 / s
    r = policy.radius(B.n, sd)
    coords, d2 = points_in_ball(D, np.zeros(B.n), r)
    w = np.exp(-np.pi * d2 / (sd * sd))
    phase = (coords @ D.float.T) @ np.asarray(as_target(t).as_float(), float)
    return math.fsum(w * np.cos(2 * np.pi * phase)) / math.fsum(w)


def _dual_excess(D: Basis, s: float, eps: float) -> float:
    """``rho_{1/s}(L*) - 1`` (zero vector excluded for precision)."""
    sd = 1.0 / s
    x = math.sqrt(math.log(2.0 / (eps * 2.0 ** -40)) / math.pi)
    r = sd * (math.sqrt(D.n / (2 * math.pi)) + x)
    coords, d2 = points_in_ball(D, np.zeros(D.n), r)
    nz = np.any(coords != 0, axis=1)
    return math.fsum(np.exp(-np.pi * d2[nz] / (sd * sd)))


def smoothing_parameter(B: Basis, eps: float, rel_tol: float = 1e-10) -> float:
    """``eta_eps(L)``: the s with ``rho_{1/s}(L*) = 1 + eps`` (bisection in log s)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    from latlab.enumeration import lambda1_sq

    D = dual_basis(B)
    lo = hi = math.sqrt(B.n / float(lambda1_sq(D)))
    while _dual_excess(D, hi, eps) > eps:
        hi *= 2
    while _dual_excess(D, lo, eps) <= eps:
        lo /= 2
    while (hi - lo) > rel_tol * hi:
        mid = math.sqrt(lo * hi)
        if _dual_excess(D, mid, eps) > eps:
            lo = mid
        else:
            hi = mid
    return hi


# -- samplers ---------------------------------------------------------------


class ExactSampler:
    """CDF inversion over the tail-truncated, sorted support of ``D_{L,s}``."""

    def __init__(self, B: Basis, s: float, policy: TruncationPolicy = DEFAULT_POLICY):
        if not s > 0:
            raise ValueError("s must be positive")
        self.basis, self.s, self.policy = B, float(s), policy
        coords, d2 = points_in_ball(B, np.zeros(B.n), policy.radius(B.n, s))
        order = np.lexsort(tuple(coords[:, j] for j in range(B.n - 1, -1, -1)) + (d2,))
        self.support = coords[order]
        self.sq_norms = d2[order]
        w = np.exp(-np.pi * self.sq_norms / (self.s ** 2))
        self.mass = math.fsum(w)
        cdf = np.cumsum(w)
        self._cdf = cdf / cdf[-1]

    def sample_coords(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = np.searchsorted(self._cdf, rng.random(size), side="right")
        return self.support[np.minimum(idx, len(self._cdf) - 1)]

    def sample(self, rng: np.random.Generator) -> LatticeVector:
        return self.basis.vector(self.sample_coords(rng, 1)[0])


@lru_cache(maxsize=64)
def exact_sampler(B: Basis, s: float, policy: TruncationPolicy = DEFAULT_POLICY) -> ExactSampler:
    return ExactSampler(B, s, policy)


def dgs_sample_exact(B: Basis, s: float, rng: np.random.Generator, policy: TruncationPolicy = DEFAULT_POLICY) -> LatticeVector:
    return exact_sampler(B, float(s), policy).sample(rng)


def dgs_samples_exact(B: Basis, s: float, rng: np.random.Generator, size: int,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``size`` i.i.d. samples as an integer coordinate array."""
    return exact_sampler(B, float(s), policy).sample_coords(rng, size)


WIDE_LEVEL = 512


def _theta_mass(s: float, c) -> np.ndarray:
    """``rho_s(Z - c)`` through its dual sum, accurate once s is a few units."""
    c = np.asarray(c, dtype=float)
    k = np.arange(1, 4)
    tail = np.exp(-np.pi * s * s * k * k)
    return s * (1 + 2 * (tail * np.cos(2 * np.pi * np.multiply.outer(c, k))).sum(axis=-1))


def _rho_z(s: float, c: float, policy: TruncationPolicy) -> float:
    k = int(math.ceil(s * (math.sqrt(1 / (2 * math.pi)) + policy.tail_x()))) + 1
    if k > WIDE_LEVEL:
        return float(_theta_mass(s, c))
    v = np.arange(math.floor(c) - k, math.floor(c) + k + 2) - c
    return math.fsum(np.exp(-np.pi * v * v / (s * s)))


class KleinSampler:
    """Randomized nearest plane with an exact rejection correction.

    Level i draws an integer from ``D_{Z, s/||b~_i||, c_i}``. The walk alone
    returns y with probability ``rho_s(y) / prod_i rho_{s_i}(Z - c_i)``;
    accepting with probability ``prod_i rho_{s_i}(Z - c_i) / rho_{s_i}(Z)``
    (always <= 1) makes the output exactly ``D_{L,s}``. Above
    ``||B~|| sqrt(log n)`` the acceptance rate is bounded below by a constant.
    """

    def __init__(self, B: Basis, s: float, strict: bool = True, policy: TruncationPolicy = DEFAULT_POLICY):
        self.basis, self.s, self.policy = B, float(s), policy
        q, r = np.linalg.qr(B.float)
        self.r = r
        gs = np.abs(np.diag(r))
        bound = float(gs.max()) * math.sqrt(math.log(B.n))
        if not self.s > bound:
            msg = f"s={self.s:.6g} is not above ||B~|| sqrt(log n) = {bound:.6g}"
            if strict:
                raise ParameterError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        self.level_s = self.s / gs
        self.level_mass = np.array([_rho_z(si, 0.0, policy) for si in self.level_s])
        x = policy.tail_x()
        self.half_width = [int(math.ceil(si * (math.sqrt(1 / (2 * math.pi)) + x))) + 1 for si in self.level_s]
        self.accepted = 0
        self.proposed = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")

    def _propose(self, rng: np.random.Generator, m: int):
        n = self.basis.n
        z = np.zeros((m, n), dtype=np.int64)
        log_acc = np.zeros(m)
        for i in range(n - 1, -1, -1):
            rii = self.r[i, i]
            c = -(z[:, i + 1:] @ self.r[i, i + 1:]) / rii if i + 1 < n else np.zeros(m)
            k = self.half_width[i]
            si = self.level_s[i]
            if k > WIDE_LEVEL:
                z[:, i] = self._wide_level(rng, c, k, si)
                log_acc += np.log(_theta_mass(si, c)) - math.log(self.level_mass[i])
                continue
            base = np.floor(c).astype(np.int64)
            offs = np.arange(-k, k + 2)
            vals = base[:, None] + offs[None, :]
            w = np.exp(-np.pi * (vals - c[:, None]) ** 2 / (si * si))
            cdf = np.cumsum(w, axis=1)
            mass = cdf[:, -1]
            u = rng.random(m) * mass
            idx = (cdf < u[:, None]).sum(axis=1)
            z[:, i] = vals[np.arange(m), np.minimum(idx, vals.shape[1] - 1)]
            log_acc += np.log(mass) - math.log(self.level_mass[i])
        return z, np.minimum(np.exp(log_acc), 1.0)

    @staticmethod
    def _wide_level(rng: np.random.Generator, c: np.ndarray, k: int, si: float) -> np.ndarray:
        # uniform proposals on the truncated window, accepted with prob rho(x - c)
        base = np.floor(c).astype(np.int64)
        out = np.empty(len(c), dtype=np.int64)
        todo = np.arange(len(c))
        while len(todo):
            x = base[todo] + rng.integers(-k, k + 2, len(todo))
            ok = rng.random(len(todo)) < np.exp(-np.pi * (x - c[todo]) ** 2 / (si * si))
            out[todo[ok]] = x[ok]
            todo = todo[~ok]
        return out

    def sample_coords(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out, have = [], 0
        width = max(2 * min(k, WIDE_LEVEL) + 2 for k in self.half_width)
        chunk_cap = max(16, int(4_000_000 // width))
        while have < size:
            want = size - have
            est = self.acceptance_rate if self.proposed else 0.5
            m = min(chunk_cap, max(16, int(want / max(est, 0.05) * 1.1) + 8))
            z, acc = self._propose(rng, m)
            keep = rng.random(m) < acc
            self.proposed += m
            self.accepted += int(keep.sum())
            out.append(z[keep][:want])
            have += len(out[-1])
        return np.concatenate(out)[:size]

    def sample(self, rng: np.random.Generator) -> LatticeVector:
        return self.basis.vector(self.sample_coords(rng, 1)[0])


def dgs_sample_klein(B: Basis, s: float, rng: np.random.Generator, strict: bool = True,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> LatticeVector:
    return KleinSampler(B, s, strict=strict, policy=policy).sample(rng)


def klein_bound(B: Basis) -> float:
    """``||B~|| sqrt(log n)``, the Klein sampler's parameter floor."""
    return float(gs_norms(B).max()) * math.sqrt(math.log(B.n))


def convolve_dgs(samples: Sequence, z: Sequence[int], s_vec: Sequence[float], eta: float | None = None,
                 strict: bool = True, basis: Basis | None = None):
    """``sum_i z_i y_i`` for ternary z, with effective parameter
    ``sqrt(sum (z_i s_i)^2)``.

    ``samples`` are LatticeVectors or integer coordinate rows. When ``eta``
    (a smoothing parameter of the lattice) is given, every ``s_i`` must be at
    least ``sqrt(2) ||z||_inf eta``.
    """
    z = [int(v) for v in z]
    if len(z) != len(samples) or len(z) != len(s_vec):
        raise ValueError("samples, z and s_vec must have equal length")
    if any(v not in (-1, 0, 1) for v in z):
        raise ValueError("z must be ternary")
    if not any(z):
        raise ValueError("z must be nonzero")
    if eta is not None:
        need = math.sqrt(2) * max(abs(v) for v in z) * eta
        bad = [i for i, si in enumerate(s_vec) if si < need]
        if bad:
            msg = f"s_i below sqrt(2)*||z||_inf*eta = {need:.6g} at indices {bad}"
            if strict:
                raise ParameterError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    s_eff = math.sqrt(sum((zi * si) ** 2 for zi, si in zip(z, s_vec)))
    coords = [np.asarray(y.coords if isinstance(y, LatticeVector) else y, dtype=np.int64) for y in samples]
    total = sum(zi * c for zi, c in zip(z, coords))
    if basis is None and isinstance(samples[0], LatticeVector):
        emb = [sum((zi * Q.to_fraction(y.embedding[k]) for zi, y in zip(z, samples)), Q.Fraction(0))
               for k in range(len(samples[0].embedding))]
        return LatticeVector(tuple(int(v) for v in total), tuple(emb)), s_eff
    if basis is not None:
        return basis.vector(total), s_eff
    return total, s_eff


def dgs_pmf(B: Basis, s: float, coords: np.ndarray, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Exact (up to truncation of the normalizer) pmf of ``D_{L,s}`` at the given coordinates."""
    x = np.asarray(coords, dtype=float) @ B.float.T
    return np.exp(-np.pi * (x * x).sum(axis=1) / (s * s)) / rho_lattice(B, s, None, policy)
