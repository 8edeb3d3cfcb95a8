"""Volume lower bounds for ball/body intersections and caps, uniform sampling
from norm balls, and Monte Carlo intersection ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

KINDS = ("ball", "cube", "oracle")


@dataclass(frozen=True)
class NormBody:
    """``center + radius * K`` for K the unit l2 ball, the unit l_inf ball, or
    a centrally symmetric convex body given by a vectorized membership oracle
    on the unit scale with bounding box ``[-box, box]^n``."""

    kind: str
    n: int
    radius: float = 1.0
    center: Optional[np.ndarray] = None
    oracle: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    box: float = 1.0
    symmetric: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown body kind {self.kind!r}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.kind == "oracle" and (self.oracle is None or not self.box > 0):
            raise ValueError("oracle bodies need a membership oracle and a bounding box")
        c = np.zeros(self.n) if self.center is None else np.asarray(self.center, dtype=float)
        if c.shape != (self.n,):
            raise ValueError("center dimension mismatch")
        object.__setattr__(self, "center", c)

    def shifted(self, c) -> "NormBody":
        return NormBody(self.kind, self.n, self.radius, self.center + np.asarray(c, float), self.oracle, self.box, self.symmetric)

    def rescaled(self, radius: float) -> "NormBody":
        return NormBody(self.kind, self.n, radius, self.center, self.oracle, self.box, self.symmetric)

    def unit_norm(self, x: np.ndarray) -> np.ndarray:
        """Gauge ``||x||_K`` of the unit body (rows)."""
        x = np.atleast_2d(np.asarray(x, float))
        if self.kind == "ball":
            return np.linalg.norm(x, axis=1)
        if self.kind == "cube":
            return np.abs(x).max(axis=1)
        # K sits inside the box, so ||x||_inf / box is a lower bound on the gauge;
        # then bisect (membership of x/s is monotone in s for convex K containing 0)
        zero = ~np.any(x, axis=1)
        lo = np.where(zero, 1.0, np.abs(x).max(axis=1) / self.box)
        hi = lo.copy()
        for _ in range(200):
            out = ~np.asarray(self.oracle(x / hi[:, None]), dtype=bool)
            if not out.any():
                break
            hi = np.where(out, 2 * hi, hi)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            inside = np.asarray(self.oracle(x / mid[:, None]), dtype=bool)
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
        hi[zero] = 0.0
        return hi

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        y = (x - self.center) / self.radius
        if self.kind == "oracle":
            return np.asarray(self.oracle(y), dtype=bool)
        return self.unit_norm(y) <= 1.0

    @property
    def l2_per_norm(self) -> float:
        """Upper bound on ``||x||_2 / ||x||_K``."""
        if self.kind == "ball":
            return 1.0
        if self.kind == "cube":
            return math.sqrt(self.n)
        return self.box * math.sqrt(self.n)


def ball(n: int, radius: float = 1.0, center=None) -> NormBody:
    return NormBody("ball", n, radius, center)


def cube(n: int, radius: float = 1.0, center=None) -> NormBody:
    return NormBody("cube", n, radius, center)


def log_ball_volume(n: int) -> float:
    """``log V_n`` with ``V_n = pi^{n/2} / Gamma(n/2 + 1)``."""
    return 0.5 * n * math.log(math.pi) - float(gammaln(n / 2 + 1))


def ball_volume(n: int) -> float:
    return math.exp(log_ball_volume(n))


def ball_volume_ratio(n: int) -> float:
    """``V_{n-1} / V_n``."""
    return math.exp(log_ball_volume(n - 1) - log_ball_volume(n))


def _check_d(d: float) -> None:
    if not 0 <= d <= 2:
        raise ValueError("d must lie in [0, 2]")


def log_ball_intersection_lb(n: int, d: float) -> float:
    _check_d(d)
    if d == 2:
        return -math.inf
    return -0.5 * math.log(2 * math.pi * n) + 0.5 * (n + 1) * math.log1p(-d * d / 4)


def ball_intersection_lb(n: int, d: float) -> float:
    """Lower bound on ``vol(B ∩ (B + v)) / vol(B)`` for unit l2 balls with ``||v|| = d``."""
    return math.exp(log_ball_intersection_lb(n, d))


def body_intersection_lb(n: int, d: float) -> float:
    """Lower bound on ``vol(K ∩ (K + v)) / vol(K)`` for symmetric convex K with ``||v||_K = d``."""
    _check_d(d)
    return (1 - d / 2) ** n


def cap_volume_lb(n: int, r: float, theta: float) -> float:
    """``V_{n-1} r^n sin^{n+1}(theta) / (n+1)``."""
    if not 0 <= theta <= math.pi / 2:
        raise ValueError("theta must lie in [0, pi/2]")
    return ball_volume(n - 1) * r ** n * math.sin(theta) ** (n + 1) / (n + 1)


@dataclass
class SampleStats:
    proposed: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def sample_uniform_body(body: NormBody, rng: np.random.Generator, size: int = 1,
                        stats: SampleStats | None = None) -> np.ndarray:
    """``size`` uniform points of the body (rows)."""
    n = body.n
    if body.kind == "ball":
        g = rng.standard_normal((size, n))
        g /= np.linalg.norm(g, axis=1)[:, None]
        u = rng.random(size) ** (1.0 / n)
        pts = g * u[:, None]
    elif body.kind == "cube":
        pts = rng.uniform(-1.0, 1.0, (size, n))
    else:
        out, have = [], 0
        st = stats if stats is not None else SampleStats()
        while have < size:
            m = max(64, 2 * (size - have))
            cand = rng.uniform(-body.box, body.box, (m, n))
            ok = np.asarray(body.oracle(cand), dtype=bool)
            st.proposed += m
            st.accepted += int(ok.sum())
            out.append(cand[ok])
            have += int(ok.sum())
        pts = np.concatenate(out)[:size]
    return body.center + body.radius * pts


def mc_intersection_ratio(a: NormBody, b: NormBody, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Estimate ``vol(a ∩ b) / vol(a)`` by sampling from a; returns (estimate, stderr)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    done = 0
    chunk = 200_000
    while done < trials:
        m = min(chunk, trials - done)
        hits += int(b.contains(sample_uniform_body(a, rng, m)).sum())
        done += m
    p = hits / trials
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)
