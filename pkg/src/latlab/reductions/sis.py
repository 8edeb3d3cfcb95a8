"""Discrete Gaussian sampling from an SIS oracle.

One step takes m samples ``y_i ~ D_{L,s}``, reads off ``a_i = coords(y_i)
mod q`` (so ``y_i = B a_i mod qL``), asks the oracle for a ternary z with
``A z = 0 mod q`` and returns ``sum z_i y_i / q``, a sample of
``D_{L, s ||z|| / q}``. Chaining c steps divides s by ``(q/r)^c``. The full
reduction calibrates r on random instances, then runs phases that either
sample directly (when the Klein sampler can reach ``s (q/r)^c``) or use the
chain to find short vectors and a better basis.

A is stored as an ``n x m`` matrix whose columns are the a_i.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from latlab import rational as Q
from latlab.gaussian import KleinSampler, ParameterError, klein_bound
from latlab.lattice import Basis, change_of_basis, gram_schmidt, gs_norms, lll_reduce

log = logging.getLogger(__name__)

MAX_M = 16
_FULL_TABLE_LIMIT = 200_000


class SisCapError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


class PhaseLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class SisInstance:
    n: int
    m: int
    q: int
    A: np.ndarray  # n x m, entries in [0, q)
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.int64)
        if A.shape != (self.n, self.m):
            raise ValueError(f"A must be {self.n} x {self.m}, got {A.shape}")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if A.size and (A.min() < 0 or A.max() >= self.q):
            raise ValueError("entries of A must lie in [0, q)")
        if self.strict and not self.m > self.n * math.log2(self.q):
            raise ValueError("need m > n log2 q")
        object.__setattr__(self, "A", A)

    def __eq__(self, other):
        if not isinstance(other, SisInstance):
            return NotImplemented
        return (self.n, self.m, self.q) == (other.n, other.m, other.q) and np.array_equal(self.A, other.A)

    __hash__ = None

    @classmethod
    def random(cls, n: int, m: int, q: int, rng: np.random.Generator) -> "SisInstance":
        return cls(n, m, q, rng.integers(0, q, (n, m)))

    def is_solution(self, z) -> bool:
        z = np.asarray(z, dtype=np.int64)
        return (z.shape == (self.m,) and bool(np.all(np.abs(z) <= 1)) and bool(z.any())
                and not np.any((self.A @ z) % self.q))

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "q": self.q, "A": self.A.tolist()}

    @classmethod
    def from_json(cls, data: dict, strict: bool = True) -> "SisInstance":
        return cls(int(data["n"]), int(data["m"]), int(data["q"]), np.array(data["A"], dtype=np.int64), strict)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str, strict: bool = True) -> "SisInstance":
        return cls.from_json(json.loads(text), strict)


# -- brute-force oracle ------------------------------------------------------


def _lex_desc(Z: np.ndarray) -> np.ndarray:
    order = np.lexsort(tuple(-Z[:, j] for j in range(Z.shape[1] - 1, -1, -1)))
    return Z[order]


@lru_cache(maxsize=None)
def _weight_table(m: int, w: int) -> np.ndarray:
    """All z in {-1,0,1}^m of Hamming weight w, lexicographically descending."""
    supports = np.array(list(itertools.combinations(range(m), w)), dtype=np.int64).reshape(-1, w)
    signs = np.array(list(itertools.product((1, -1), repeat=w)), dtype=np.int8).reshape(-1, w)
    Z = np.zeros((len(supports) * len(signs), m), dtype=np.int8)
    rows = np.repeat(np.arange(len(supports)), len(signs))
    for k in range(w):
        Z[np.arange(len(Z)), supports[rows, k]] = np.tile(signs[:, k], len(supports))
    return _lex_desc(Z)


@lru_cache(maxsize=None)
def _full_table(m: int) -> np.ndarray:
    return np.concatenate([_weight_table(m, w) for w in range(1, m + 1)])


def sis_oracle_bruteforce(inst: SisInstance) -> Optional[np.ndarray]:
    """A nonzero ternary kernel vector of minimum weight, the
    lexicographically largest among those; None if there is none."""
    if inst.m > MAX_M:
        raise SisCapError(f"m = {inst.m} exceeds the brute-force cap {MAX_M}")
    A = inst.A
    if 3 ** inst.m <= _FULL_TABLE_LIMIT:
        Z = _full_table(inst.m)
        hit = ~np.any((A @ Z.T.astype(np.int64)) % inst.q, axis=0)
        i = int(np.argmax(hit))
        return Z[i].astype(np.int64) if hit[i] else None
    for w in range(1, inst.m + 1):
        Z = _weight_table(inst.m, w)
        hit = ~np.any((A @ Z.T.astype(np.int64)) % inst.q, axis=0)
        if hit.any():
            return Z[int(np.argmax(hit))].astype(np.int64)
    return None


# -- one step and chains -----------------------------------------------------


class SampleSource:
    """Integer coordinate rows served from an array or from a batch function
    ``draw(size)``."""

    def __init__(self, data: np.ndarray | Callable[[int], np.ndarray], batch: int = 4096):
        if callable(data):
            self._draw, self._buf = data, np.zeros((0, 0), dtype=np.int64)
        else:
            self._draw, self._buf = None, np.asarray(data)
        self.batch = batch
        self._pos = 0
        self.served = 0

    def take(self, k: int) -> Optional[np.ndarray]:
        if self._pos + k > len(self._buf):
            if self._draw is None:
                return None
            rest = self._buf[self._pos:]
            fresh = np.asarray(self._draw(max(self.batch, k)))
            self._buf = np.concatenate([rest, fresh]) if len(rest) else fresh
            self._pos = 0
        out = self._buf[self._pos:self._pos + k]
        self._pos += k
        self.served += k
        return out


def sis_coefficients(coords: np.ndarray, q: int) -> np.ndarray:
    """``a_i = coords mod q`` as the columns of an n x m matrix."""
    return np.mod(np.asarray(coords, dtype=np.int64), q).T


@dataclass
class StepResult:
    coords: np.ndarray
    s_eff: float
    attempts: int
    fallback: bool
    z: Optional[np.ndarray] = None


def retry_budget(success_rate: float | None) -> int:
    if not success_rate:
        return 64
    return max(1, math.ceil(64 / success_rate))


def check_step_parameter(s: float, q: int, eta: float | None, strict: bool = True) -> None:
    if eta is None:
        return
    need = math.sqrt(2) * q * eta
    if s < need:
        msg = f"s = {s:.6g} is below sqrt(2) q eta = {need:.6g}"
        if strict:
            raise ParameterError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def dgs_to_sis_step(B: Basis, s: float, samples, sis_oracle, q: int, r: float, m: int,
                    success_rate: float | None = None, eta: float | None = None, strict: bool = True) -> StepResult:
    """One sample of ``D_{L, s r / q}`` from samples of ``D_{L, s}``.

    ``samples`` is a coordinate array or a :class:`SampleSource`. Only
    oracle answers with ``||z|| = r`` are used; after the retry budget the
    zero vector is returned and flagged.
    """
    check_step_parameter(s, q, eta, strict)
    src = samples if isinstance(samples, SampleSource) else SampleSource(samples)
    r2 = round(r * r)
    budget = retry_budget(success_rate)
    for attempt in range(1, budget + 1):
        Y = src.take(m)
        if Y is None:
            break
        Y = np.asarray(Y, dtype=np.int64)
        A = sis_coefficients(Y, q)
        z = sis_oracle(SisInstance(B.n, m, q, A, strict=False))
        if z is None or int(z @ z) != r2:
            continue
        total = z @ Y
        if np.any(total % q):
            raise AssertionError("sum z_i y_i is not in qL")
        return StepResult(total // q, s * r / q, attempt, False, z)
    log.warning("SIS step exhausted its retry budget; emitting the zero vector")
    return StepResult(np.zeros(B.n, dtype=np.int64), s * r / q, budget, True)


@dataclass
class ChainStats:
    steps: int = 0
    fallbacks: int = 0
    attempts: int = 0

    def distance_budget(self, eps: float) -> float:
        """Accumulated statistical-distance bound, 2 eps per step."""
        return 2 * eps * self.steps


class ChainSource(SampleSource):
    """Samples at ``s (r/q)^c`` produced by c nested steps."""

    def __init__(self, B: Basis, s: float, base: SampleSource, c: int, q: int, r: float, m: int, sis_oracle,
                 success_rate: float | None = None, eta: float | None = None, strict: bool = True):
        if c < 1:
            raise ValueError("c must be >= 1")
        check_step_parameter(s * (r / q) ** (c - 1), q, eta, strict)
        self.stats = ChainStats()
        self.s_in, self.c, self.q, self.r = s, c, q, r
        self.s_eff = s * (r / q) ** c
        self.s_eff_sq = Fraction(s) ** 2 * (Fraction(round(r * r)) / q ** 2) ** c
        src = base
        level_s = s
        for _ in range(c):
            src = self._level(B, level_s, src, q, r, m, sis_oracle, success_rate)
            level_s = level_s * r / q
        super().__init__(lambda k, src=src: src.take(k), batch=1)

    def _level(self, B, s, src, q, r, m, oracle, rate):
        stats = self.stats

        def draw(k):
            out = np.empty((k, B.n), dtype=np.int64)
            for i in range(k):
                res = dgs_to_sis_step(B, s, src, oracle, q, r, m, rate, None, False)
                stats.steps += 1
                stats.attempts += res.attempts
                stats.fallbacks += res.fallback
                out[i] = res.coords
            return out
        return SampleSource(draw, batch=1)


def dgs_chain(B: Basis, s: float, samples, c: int, q: int, r: float, m: int, sis_oracle, count: int = 1,
              success_rate: float | None = None, eta: float | None = None, strict: bool = True):
    """``count`` samples at ``s (r/q)^c``. Returns ``(coords, s_eff, stats)``."""
    base = samples if isinstance(samples, SampleSource) else SampleSource(samples)
    ch = ChainSource(B, s, base, c, q, r, m, sis_oracle, success_rate, eta, strict)
    out = ch.take(count)
    if out is None:
        raise RuntimeError("sample source exhausted")
    return np.asarray(out), ch.s_eff, ch.stats


# -- calibration -------------------------------------------------------------


@dataclass
class Calibration:
    r: float
    r2: int
    successes: int
    calls: int
    norm_counts: dict

    @property
    def success_rate(self) -> float:
        """Fraction of oracle calls returning a solution of norm r."""
        return self.norm_counts[self.r2] / self.calls


def calibrate_r(n: int, m: int, q: int, sis_oracle, rng: np.random.Generator, successes: int,
                max_calls: int | None = None) -> Calibration:
    """Call the oracle on uniform instances until ``successes`` solutions;
    r is the most common norm, ties toward the smaller one."""
    max_calls = max_calls or 1000 * successes
    counts: Counter = Counter()
    calls = got = 0
    while got < successes:
        if calls >= max_calls:
            raise CalibrationError(f"only {got} oracle successes in {calls} calls")
        inst = SisInstance.random(n, m, q, rng)
        z = sis_oracle(inst)
        calls += 1
        if z is not None and inst.is_solution(z):
            counts[int(z @ z)] += 1
            got += 1
    r2 = min(counts, key=lambda w: (-counts[w], w))
    return Calibration(math.sqrt(r2), r2, got, calls, dict(sorted(counts.items())))


def desk_calibration_count(m: int) -> int:
    return max(200, 10 * m)


def chain_length(n: int, q: int, r: float) -> int:
    """``max(1, ceil(log_{q/r} n))``."""
    if not q > r:
        raise ValueError("need q > r")
    if n <= 1:
        return 1
    return max(1, math.ceil(math.log(n) / math.log(q / r) - 1e-12))


# -- basis improvement -------------------------------------------------------


def _row_echelon(Z: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Unimodular W and upper-triangular H with ``H = W Z`` (Z square, nonsingular)."""
    n = len(Z)
    H = [list(r) for r in Z]
    W = [[int(i == j) for j in range(n)] for i in range(n)]
    for col in range(n):
        while True:
            rows = [i for i in range(col, n) if H[i][col]]
            if not rows:
                raise ValueError("matrix is singular")
            p = min(rows, key=lambda i: abs(H[i][col]))
            H[col], H[p] = H[p], H[col]
            W[col], W[p] = W[p], W[col]
            done = True
            for i in range(col + 1, n):
                f = H[i][col] // H[col][col]
                if f:
                    H[i] = [a - f * b for a, b in zip(H[i], H[col])]
                    W[i] = [a - f * b for a, b in zip(W[i], W[col])]
                if H[i][col]:
                    done = False
            if done:
                break
    return W, H


def size_reduce(B: Basis) -> Basis:
    cols = [list(c) for c in B.columns]
    star, _ = gram_schmidt(B)
    nrm = [Q.dot(s, s) for s in star]
    for k in range(1, len(cols)):
        for j in range(k - 1, -1, -1):
            mu = Q.dot(cols[k], star[j]) / nrm[j]
            f = math.floor(mu + Fraction(1, 2))
            if f:
                cols[k] = [a - f * b for a, b in zip(cols[k], cols[j])]
    return Basis.from_columns(cols)


def to_basis(B: Basis, coords: np.ndarray) -> Optional[Basis]:
    """A basis T of L(B) with ``||t~_i|| <= ||s~_i||`` for the n shortest
    linearly independent sample vectors s_i; None if the samples span less
    than full rank."""
    n = B.n
    C = [list(map(int, c)) for c in np.asarray(coords)]
    if not C:
        return None
    Bf = B.float
    norms = [float(np.linalg.norm(Bf @ np.array(c, float))) for c in C]
    chosen: list[list[int]] = []
    for i in sorted(range(len(C)), key=lambda i: (norms[i], C[i])):
        trial = chosen + [C[i]]
        if np.linalg.matrix_rank(np.array(trial, dtype=float)) == len(trial):
            chosen = trial
        if len(chosen) == n:
            break
    if len(chosen) < n:
        return None
    Z = [[chosen[j][i] for j in range(n)] for i in range(n)]  # columns are samples
    W, _ = _row_echelon(Z)
    Winv = Q.inverse([[Fraction(x) for x in row] for row in W])
    T = Q.matmul(B.entries, Winv)
    return size_reduce(Basis(tuple(tuple(r) for r in T)))


# -- full reduction ----------------------------------------------------------


@dataclass
class DgsToSisRun:
    samples: np.ndarray  # coordinates in the input basis
    s_target: float
    r: float
    c: int
    phases: int
    calibration: Calibration
    shortcut: bool
    gs_history: list
    stats: ChainStats
    diagnostics: dict = field(default_factory=dict)


def dgs_to_sis_full(B: Basis, s_target: float, sis_oracle, q: int, m: int, preset: str = "desk",
                    rng: np.random.Generator | None = None, count: int = 1, lll: bool = True,
                    calibration_successes: int | None = None, eta: float | None = None,
                    strict: bool = False) -> DgsToSisRun:
    """``count`` samples intended as ``D_{L, s_target}``.

    ``lll`` runs LLL on the input basis first. Phases stop as soon as the
    Klein sampler reaches ``s_target (q/r)^c``; more than n phases raise
    :class:`PhaseLimitError`.
    """
    rng = rng or np.random.default_rng()
    n = B.n
    if not m > n * math.log2(q):
        raise ValueError("need m > n log2 q")
    flags = {"q_ge_sqrt_m": q >= math.sqrt(m)}
    Bj = lll_reduce(B) if lll else B
    if calibration_successes is None:
        calibration_successes = m ** 3 if preset == "paper" else desk_calibration_count(m)
    cal = calibrate_r(n, m, q, sis_oracle, rng, calibration_successes)
    r = cal.r
    c = chain_length(n, q, r)
    rate = cal.success_rate
    stats = ChainStats()
    history = [float(gs_norms(Bj).max())]
    lift = (q / r) ** c
    for phase in range(n + 1):
        bound = klein_bound(Bj)
        if s_target * lift >= bound:
            base = _klein_source(Bj, s_target * lift, rng)
            ch = ChainSource(Bj, s_target * lift, base, c, q, r, m, sis_oracle, rate, eta, strict)
            out = np.asarray(ch.take(count))
            _merge(stats, ch.stats)
            U = _coords_map(B, Bj)
            return DgsToSisRun(_apply(U, out), s_target, r, c, phase, cal, True, history, stats, flags)
        sp = bound
        base = _klein_source(Bj, sp, rng)
        ch = ChainSource(Bj, sp, base, c, q, r, m, sis_oracle, rate, eta, strict)
        T = None
        for _ in range(8):
            T = to_basis(Bj, ch.take(n * n))
            if T is not None:
                break
        _merge(stats, ch.stats)
        if T is None:
            raise RuntimeError("phase samples never reached full rank")
        Bj = T
        history.append(float(gs_norms(Bj).max()))
        log.info("phase %d: ||B~|| %.6g -> %.6g", phase, history[-2], history[-1])
    raise PhaseLimitError(f"no direct-sampling phase within n + 1 = {n + 1} phases")


def _klein_source(B: Basis, s: float, rng: np.random.Generator) -> SampleSource:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ks = KleinSampler(B, s, strict=False)
    return SampleSource(lambda k: ks.sample_coords(rng, k))


def _merge(acc: ChainStats, st: ChainStats) -> None:
    acc.steps += st.steps
    acc.attempts += st.attempts
    acc.fallbacks += st.fallbacks


def _coords_map(B: Basis, Bj: Basis) -> np.ndarray:
    U = change_of_basis(B, Bj)
    if not all(Q.is_integral(row) for row in U):
        raise AssertionError("phase basis left the lattice")
    return np.array([[int(x) for x in row] for row in U], dtype=object)


def _apply(U: np.ndarray, coords: np.ndarray) -> np.ndarray:
    out = np.asarray(coords, dtype=object) @ U.T
    try:
        return out.astype(np.int64)
    except OverflowError:
        return out
