"""Continuous Gaussian moments, multivariate Hermite polynomials, witness
moments, the empirical periodic Gaussian f_W and the Taylor bounds behind the
moment-checking verifier.

With the normalization ``H_a(x) = (2 pi i)^{-|a|} e^{pi|x|^2} d^a e^{-pi|x|^2}``
each coefficient has the shape ``i^k q_b (2 pi)^{-(k - |b|)/2}`` with an
integer q_b, so polynomials are stored exactly as integer tables. In one
variable ``q_{a,j} = q_{a-1,j-1} - (j+1) q_{a-1,j+1}``, and the multivariate
polynomial is the product over coordinates. This gives ``H_2 = 1/(2pi) - x^2``,
whose constant term is V_2 as required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from latlab.enumeration import points_in_ball
from latlab.gaussian import DEFAULT_POLICY, TruncationPolicy
from latlab.lattice import Basis, dual_basis
from latlab.witness import Witness, inner_mod1

K_MAX_DEFAULT = 7
TWO_PI = 2 * math.pi


class DegreeCapError(ValueError):
    pass


def gaussian_moment_V(a: int) -> float:
    """``V_a = int x^a exp(-pi x^2) dx``."""
    if a < 0:
        raise ValueError("a must be non-negative")
    if a % 2:
        return 0.0
    h = a // 2
    return math.factorial(a) / (math.factorial(h) * (4 * math.pi) ** h)


def gaussian_moment(a: Sequence[int]) -> float:
    return math.prod(gaussian_moment_V(x) for x in a)


def multi_indices(n: int, max_degree: int, exact: bool = False) -> list[tuple[int, ...]]:
    """Graded lexicographic list of multi-indices with degree <= max_degree
    (or == max_degree when ``exact``)."""

    def of_degree(k: int, m: int) -> Iterator[tuple[int, ...]]:
        if m == 1:
            yield (k,)
            return
        for first in range(k, -1, -1):
            for rest in of_degree(k - first, m - 1):
                yield (first,) + rest

    degrees = [max_degree] if exact else range(max_degree + 1)
    out = [a for k in degrees for a in of_degree(k, n)]
    expect = math.comb(n + max_degree - 1, max_degree) if exact else math.comb(n + max_degree, max_degree)
    if len(out) != expect:
        raise AssertionError(f"multi-index count {len(out)} != {expect}")
    return out


@lru_cache(maxsize=None)
def _hermite_1d(a: int) -> tuple[int, ...]:
    """Integer table q_j (index j = power of x) for the 1-d polynomial H_a."""
    if a == 0:
        return (1,)
    prev = _hermite_1d(a - 1)
    q = [0] * (a + 1)
    for j in range(a + 1):
        lo = prev[j - 1] if 1 <= j <= len(prev) else 0
        hi = prev[j + 1] if j + 1 < len(prev) else 0
        q[j] = lo - (j + 1) * hi
    return tuple(q)


@dataclass(frozen=True)
class HermitePolynomial:
    """``H_a(x) = i^k sum_b q_b (2 pi)^{-(k-|b|)/2} x^b``."""

    a: tuple[int, ...]
    terms: tuple[tuple[tuple[int, ...], int], ...]  # (b, q_b), q_b != 0

    @property
    def degree(self) -> int:
        return sum(self.a)

    @property
    def unit(self) -> complex:
        return 1j ** (self.degree % 4)

    def coefficient(self, b: Sequence[int]) -> complex:
        b = tuple(b)
        for bb, q in self.terms:
            if bb == b:
                return self.unit * q * TWO_PI ** (-(self.degree - sum(b)) / 2)
        return 0j

    def coefficients(self) -> dict[tuple[int, ...], complex]:
        return {b: self.coefficient(b) for b, _ in self.terms}

    def abs_coefficient_sum(self) -> float:
        k = self.degree
        return math.fsum(abs(q) * TWO_PI ** (-(k - sum(b)) / 2) for b, q in self.terms)

    def constant_term(self) -> complex:
        return self.coefficient((0,) * len(self.a))

    def real_table(self) -> list[tuple[tuple[int, ...], float]]:
        """Terms of ``H_a / i^k`` as real coefficients."""
        k = self.degree
        return [(b, q * TWO_PI ** (-(k - sum(b)) / 2)) for b, q in self.terms]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at rows of x (complex result)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acc = np.zeros(len(x))
        for b, c in self.real_table():
            acc = acc + c * np.prod(x ** np.array(b), axis=1)
        return self.unit * acc


def hermite_build(a: Sequence[int], k_max: int | None = None) -> HermitePolynomial:
    a = tuple(int(x) for x in a)
    if any(x < 0 for x in a):
        raise ValueError("multi-index entries must be non-negative")
    cap = 2 * K_MAX_DEFAULT if k_max is None else k_max
    if sum(a) > cap:
        raise DegreeCapError(f"degree {sum(a)} exceeds cap {cap}")
    tables = [_hermite_1d(x) for x in a]
    terms = []
    for b in np.ndindex(*[len(t) for t in tables]):
        q = math.prod(t[j] for t, j in zip(tables, b))
        if q:
            terms.append((tuple(int(j) for j in b), q))
    return HermitePolynomial(a, tuple(terms))


def _moment_radius(n: int, s: float, k: int, policy: TruncationPolicy) -> float:
    # polynomial weights |x|^k shift the tail; pad the Gaussian radius accordingly
    return policy.radius(n, s) + s * math.sqrt(k / math.pi)


def lattice_moment(B: Basis, a: Sequence[int], s: float = 1.0, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``E_{x ~ D_{L,s}}[x^a]`` by truncated summation."""
    k = sum(a)
    coords, d2 = points_in_ball(B, np.zeros(B.n), _moment_radius(B.n, s, k, policy))
    x = coords @ B.float.T
    w = np.exp(-np.pi * d2 / (s * s))
    mono = np.prod(x ** np.array(a), axis=1)
    return math.fsum(w * mono) / math.fsum(w)


def hermite_expectation(B: Basis, a: Sequence[int], policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``E_{w ~ D_{L}}[H_a(w)]`` by truncated summation."""
    h = hermite_build(a)
    coords, d2 = points_in_ball(B, np.zeros(B.n), _moment_radius(B.n, 1.0, h.degree, policy))
    x = coords @ B.float.T
    w = np.exp(-np.pi * d2)
    vals = (h(x) / h.unit).real
    return h.unit * math.fsum(w * vals) / math.fsum(w)


def hermite_identity_residual(B: Basis, a: Sequence[int], policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``|E_{D_L}[x^a] - E_{D_{L*}}[H_a(w)]|``."""
    lhs = lattice_moment(B, a, 1.0, policy)
    rhs = hermite_expectation(dual_basis(B), a, policy)
    return abs(lhs - rhs)


# -- witness statistics ----------------------------------------------------


def _powers(W: Witness, max_degree: int) -> np.ndarray:
    x = W.float
    p = np.ones((max_degree + 1,) + x.shape)
    for e in range(1, max_degree + 1):
        p[e] = p[e - 1] * x
    return p


def sample_moment(W: Witness, a: Sequence[int]) -> float:
    """``(1/N) sum_i prod_j w_{i,j}^{a_j}`` with compensated summation."""
    a = tuple(a)
    if len(a) != W.n:
        raise ValueError("multi-index length does not match witness dimension")
    if not any(a):
        return 1.0
    mono = np.prod(W.float ** np.array(a), axis=1)
    return math.fsum(mono) / W.N


def sample_moments(W: Witness, indices: Sequence[tuple[int, ...]]) -> np.ndarray:
    """Vectorized :func:`sample_moment` over many multi-indices."""
    top = max((sum(a) for a in indices), default=0)
    p = _powers(W, max(max(a) for a in indices) if indices else 0) if top else None
    out = np.empty(len(indices))
    cols = np.arange(W.n)
    for k, a in enumerate(indices):
        if not any(a):
            out[k] = 1.0
            continue
        mono = np.prod(p[np.array(a), :, cols], axis=0)
        out[k] = math.fsum(mono) / W.N
    return out


def f_W(W: Witness, t) -> float:
    """``(1/N) sum_i cos(2 pi <w_i, t>)``; inner products reduced mod 1 exactly
    for rational t."""
    frac = inner_mod1(W, t)
    return math.fsum(np.cos(TWO_PI * frac)) / W.N


def f_W_batch(W: Witness, T: np.ndarray) -> np.ndarray:
    """f_W at every row of a float matrix T."""
    x = np.asarray(T, float) @ W.float.T
    x -= np.floor(x)
    return np.cos(TWO_PI * x).mean(axis=1)


def cos_truncation_C(k: int, x) -> np.ndarray | float:
    """``C_k(x) = sum_{i <= k} (-x^2)^i / (2i)!``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for i in range(1, k + 1):
        term = term * (-x * x) / ((2 * i - 1) * (2 * i))
        acc = acc + term
    return float(acc) if acc.ndim == 0 else acc


def cos_bracket_holds(k: int, x, tol: float = 1e-12) -> bool:
    """``C_{2k+1}(x) <= cos x <= C_{2k}(x)`` pointwise."""
    c = np.cos(np.asarray(x, float))
    lo, hi = cos_truncation_C(2 * k + 1, x), cos_truncation_C(2 * k, x)
    scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return bool(np.all(lo <= c + tol * scale) and np.all(c <= hi + tol * scale))


def fW_lower_bound(r: float, k_max: int, eps: float, n: int) -> float:
    """``e^{-pi r^2} - (10 r^2 / k)^{k+1} - eps n^{2k} e^{2 pi r}`` for odd k."""
    if k_max < 1 or k_max % 2 == 0:
        raise ValueError("k_max must be a positive odd integer")
    return math.exp(-math.pi * r * r) - (10 * r * r / k_max) ** (k_max + 1) - eps * n ** (2 * k_max) * math.exp(TWO_PI * r)


def tensor_moment_gap(W: Witness, t: Sequence[float], k: int) -> tuple[float, float]:
    """Both sides of the tensor-moment inequality for degree 2k:

    ``|V_{2k} |t|^{2k} - mean <t,w_i>^{2k}|`` and
    ``|t|^{2k} sum_{|a|=2k} |V_a - mean w^a|``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t = np.asarray(t, dtype=float)
    tn = float(t @ t) ** k
    lhs = abs(gaussian_moment_V(2 * k) * tn - math.fsum((W.float @ t) ** (2 * k)) / W.N)
    idx = multi_indices(W.n, 2 * k, exact=True)
    dev = np.abs(np.array([gaussian_moment(a) for a in idx]) - sample_moments(W, idx))
    rhs = tn * math.fsum(dev)
    return lhs, rhs


def chernoff_bound(delta: float, N: int, r: float) -> float:
    """Hoeffding-type bound ``2 exp(-delta^2 N / (2 r^2))`` for means of N
    independent variables bounded by r in absolute value."""
    if r <= 0 or N < 1:
        raise ValueError("need r > 0 and N >= 1")
    return 2 * math.exp(-delta * delta * N / (2 * r * r))
