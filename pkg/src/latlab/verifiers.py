"""The moment-checking co-nondeterministic verifier and the randomized coMA
verifier for CVP' instances in normal form, plus honest and adversarial
witness generation.

Both verifiers take the instance as given; promises are never asserted here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from latlab import params as P
from latlab.enumeration import svp_exact
from latlab.gaussian import DEFAULT_POLICY, TruncationPolicy, dgs_samples_exact
from latlab.geometry import ball, sample_uniform_body
from latlab.hermite import f_W, f_W_batch, fW_lower_bound, gaussian_moment, multi_indices, sample_moments
from latlab.lattice import Basis, Target, as_target, dual_basis
from latlab.witness import MalformedWitnessError, Witness, dual_membership

CLOSE, FAR = "CLOSE", "FAR"
PRESETS = ("paper", "desk")
DEFAULT_BUDGET = 2.0 ** 32


@dataclass(frozen=True)
class Verdict:
    outcome: str
    failed_check: Optional[str] = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.outcome not in (CLOSE, FAR):
            raise ValueError("outcome must be CLOSE or FAR")
        if (self.outcome == CLOSE) != (self.failed_check is not None):
            raise ValueError("failed_check is set iff the outcome is CLOSE")

    @property
    def is_far(self) -> bool:
        return self.outcome == FAR


# -- co-nondeterministic verifier -------------------------------------------


@dataclass(frozen=True)
class ConpParams:
    k: int
    N: float
    eps: float
    fW_threshold: float
    preset: str = "desk"

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be a positive odd integer")
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}")

    @classmethod
    def paper(cls, n: int, k: int) -> "ConpParams":
        """``N = (20 k^2 n^2 log n)^{2k+1}``, ``eps = 20 log^k(2nN) sqrt(k log n / N)``,
        threshold ``20 sqrt(log N / N)``."""
        N, eps, thr = P.conp_paper_values(n, k)
        return cls(k, N, eps, thr, "paper")

    @classmethod
    def desk(cls, k: int = 1, N: int = 2000, eps: float = 0.03, fW_threshold: float = 0.5) -> "ConpParams":
        return cls(k, N, eps, fW_threshold, "desk")

    def required_cost(self, n: int) -> float:
        """Witness entries touched by the moment pass: ``N * C(n+2k, 2k)``."""
        return float(self.N) * math.comb(n + 2 * self.k, 2 * self.k)

    def check_budget(self, n: int, budget: float = DEFAULT_BUDGET) -> None:
        cost = self.required_cost(n)
        if cost > budget:
            raise P.BudgetExceeded(f"conp verifier ({self.preset} preset, n={n}, k={self.k})", cost, budget)

    def soundness_margin(self, n: int, r_close: float) -> float:
        """``fW_lower_bound(r_close) - threshold``; positive means any witness
        passing the moment checks is rejected at distance <= r_close."""
        return fW_lower_bound(r_close, self.k, self.eps, n) - self.fW_threshold


def _check_dims(B: Basis, t: Target, W: Witness) -> None:
    if t.n != B.n:
        raise MalformedWitnessError("target dimension does not match basis")
    if W.n != B.n:
        raise MalformedWitnessError("witness dimension does not match basis")


def conp_verify(B: Basis, t, params: ConpParams, W: Witness) -> Verdict:
    """Three checks in order: dual membership, ``f_W(t) < threshold`` and
    every moment of degree <= 2k within eps of the Gaussian moment."""
    t = as_target(t)
    _check_dims(B, t, W)
    ok = dual_membership(B, W)
    if not ok.all():
        return Verdict(CLOSE, "dual-membership", {"first_bad_index": int(np.argmin(ok)), "bad_count": int((~ok).sum())})
    fw = f_W(W, t)
    diag = {"f_W": fw, "threshold": params.fW_threshold, "N": W.N}
    if not fw < params.fW_threshold:
        return Verdict(CLOSE, "fW", diag)
    idx = multi_indices(B.n, 2 * params.k)
    diag["index_count"] = len(idx)
    dev = np.abs(np.array([gaussian_moment(a) for a in idx]) - sample_moments(W, idx))
    j = int(np.argmax(dev))
    diag["max_moment_deviation"] = float(dev[j])
    diag["eps"] = params.eps
    bad = np.nonzero(dev > params.eps)[0]
    if len(bad):
        diag["bad_index"] = idx[bad[0]]
        return Verdict(CLOSE, f"moment{idx[bad[0]]}", diag)
    return Verdict(FAR, None, diag)


def conp_witness_gen(B: Basis, N: int, rng: np.random.Generator, s: float = 1.0,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> Witness:
    """N independent samples of ``D_{L*, s}`` (exact sampler)."""
    D = dual_basis(B)
    return Witness.from_dual_coords(B, dgs_samples_exact(D, s, rng, int(N), policy))


# -- coMA verifier -----------------------------------------------------------


@dataclass(frozen=True)
class ComaParams:
    alpha: float
    beta: float
    N: float
    trials: float
    threshold: float
    n: int
    preset: str = "desk"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}")
        if not 0 < self.beta <= self.alpha:
            raise ValueError("need 0 < beta <= alpha")
        if self.preset == "paper" and not self.alpha < 1 / 3:
            raise ValueError("paper preset needs alpha < 1/3")

    @classmethod
    def paper(cls, n: int, alpha: float, beta: float) -> "ComaParams":
        """``N = 2^{10 alpha^2 n}``, ``2^{2 beta^2 n}`` trials, threshold ``e^{-pi alpha^2 n}/2``."""
        return cls(alpha, beta, P.coma_N(n, alpha), P.coma_trials(n, beta), P.coma_threshold(n, alpha), n, "paper")

    @classmethod
    def desk(cls, n: int, alpha: float = 0.3, beta: float = 0.3, N: int = 2000, trials: int = 200,
             threshold: float | None = None) -> "ComaParams":
        thr = P.coma_threshold(n, alpha) if threshold is None else threshold
        return cls(alpha, beta, N, trials, thr, n, "desk")

    def required_cost(self) -> float:
        return float(self.N) * float(self.trials)

    def check_budget(self, budget: float = DEFAULT_BUDGET) -> None:
        if self.required_cost() > budget:
            raise P.BudgetExceeded(f"coma verifier ({self.preset} preset, n={self.n})", self.required_cost(), budget)

    @property
    def close_delta(self) -> float:
        """``sqrt(1/(2 pi n)) (1 - beta^2/4)^{(n+1)/2}``."""
        from latlab.geometry import ball_intersection_lb

        return ball_intersection_lb(self.n, self.beta)


def coma_verify(B: Basis, t, params: ComaParams, W: Witness, rng: np.random.Generator) -> Verdict:
    """Dual membership, then for each trial v ~ U(B(0, alpha sqrt n)):
    require ``f_W(v) > thr`` and ``f_W(v + t) <= thr``."""
    t = as_target(t)
    _check_dims(B, t, W)
    ok = dual_membership(B, W)
    if not ok.all():
        return Verdict(CLOSE, "dual-membership", {"first_bad_index": int(np.argmin(ok)), "bad_count": int((~ok).sum())})
    trials = int(params.trials)
    v = sample_uniform_body(ball(B.n, params.alpha * math.sqrt(B.n)), rng, trials)
    fv = f_W_batch(W, v)
    fvt = f_W_batch(W, v + t.as_float())
    passed = (fv > params.threshold) & (fvt <= params.threshold)
    diag = {
        "threshold": params.threshold,
        "trials": trials,
        "f_W_v": fv.tolist(),
        "f_W_v_plus_t": fvt.tolist(),
        "trial_pass": passed.tolist(),
        "rejecting_trials": int((~passed).sum()),
    }
    if not passed.all():
        return Verdict(CLOSE, f"trial-{int(np.argmin(passed))}", diag)
    return Verdict(FAR, None, diag)


# -- adversarial witnesses ---------------------------------------------------


def _greedy_low_fw(pool: Witness, t: Target, N: int) -> Witness:
    """The N pool vectors with the most negative ``cos(2 pi <w, t>)``."""
    from latlab.witness import inner_mod1

    c = np.cos(2 * np.pi * inner_mod1(pool, t))
    order = np.argsort(c, kind="stable")[:N]
    return Witness(pool.num[order], pool.den)


def _greedy_mixed(honest: Witness, pool: Witness, t: Target, frac: float) -> Witness:
    """Replace a fraction of an honest witness by greedy low-cosine vectors."""
    from latlab.witness import inner_mod1

    m = int(round(frac * honest.N))
    if m == 0:
        return honest
    c_h = np.cos(2 * np.pi * inner_mod1(honest, t))
    drop = np.argsort(-c_h, kind="stable")[:m]
    keep = np.setdiff1d(np.arange(honest.N), drop)
    low = _greedy_low_fw(pool, t, m)
    den = np.lcm(honest.den, low.den)
    a = honest.num[keep].astype(object) * (den // honest.den)
    b = low.num.astype(object) * (den // low.den)
    return Witness(np.vstack([a, b]), int(den))


def _constrained_greedy(honest: Witness, pool: Witness, t: Target, k: int, eps: float,
                        max_swaps: int | None = None) -> Witness:
    """Swap honest vectors for low-cosine pool vectors while every moment of
    degree <= 2k stays within eps of the Gaussian moment."""
    from latlab.witness import inner_mod1

    n, N = honest.n, honest.N
    den = int(np.lcm(honest.den, pool.den))
    h = honest.num.astype(object) * (den // honest.den)
    p = pool.num.astype(object) * (den // pool.den)
    idx = multi_indices(n, 2 * k)
    expo = np.array(idx)
    target = np.array([gaussian_moment(a) for a in idx])

    def mono(x):
        return np.prod(x[None, :] ** expo, axis=1)

    hf, pf = honest.float, pool.float
    sums = sample_moments(honest, idx) * N
    c_h = np.cos(2 * np.pi * inner_mod1(honest, t))
    c_p = np.cos(2 * np.pi * inner_mod1(pool, t))
    slots = list(np.argsort(-c_h, kind="stable"))
    rows = [list(r) for r in h]
    swaps = 0
    limit = N if max_swaps is None else max_swaps
    for j in np.argsort(c_p, kind="stable"):
        if swaps >= limit or not slots or c_p[j] >= c_h[slots[0]]:
            break
        i = slots[0]
        new = sums - mono(hf[i]) + mono(pf[j])
        if np.all(np.abs(new / N - target) <= eps):
            sums = new
            rows[i] = list(p[j])
            c_h[i] = c_p[j]
            slots.pop(0)
            swaps += 1
    return Witness(np.array(rows, dtype=object), den)


def adversarial_witness_suite(B: Basis, t, rng: np.random.Generator, N: int = 2000,
                              params: ConpParams | None = None) -> list[tuple[str, Witness]]:
    """Named cheating witnesses: wrong-width Gaussians, shortest-dual-only,
    duplicated vectors, greedy low-f_W selections (unconstrained and
    moment-constrained) and non-dual perturbations."""
    t = as_target(t)
    params = params or ConpParams.desk(N=N)
    D = dual_basis(B)
    out: list[tuple[str, Witness]] = []
    honest = conp_witness_gen(B, N, rng)
    for s in (0.5, 0.8, 1.25, 2.0):
        out.append((f"scaled-gaussian-{s}", conp_witness_gen(B, N, rng, s=s)))
    _, short = svp_exact(D)
    z = np.array(short.coords)
    signs = np.where(rng.random(N) < 0.5, 1, -1)
    out.append(("short-dual-only", Witness.from_dual_coords(B, signs[:, None] * z[None, :])))
    out.append(("zero", Witness.from_dual_coords(B, np.zeros((N, B.n), dtype=np.int64))))
    out.append(("duplicated-one", Witness(np.repeat(honest.num[:1], N, axis=0), honest.den)))
    half = honest.num[: N // 2]
    out.append(("duplicated-half", Witness(np.vstack([half, half])[:N], honest.den)))
    pool = conp_witness_gen(B, 4 * N, rng)
    wide = conp_witness_gen(B, 4 * N, rng, s=4.0)
    out.append(("greedy-low-fW", _greedy_low_fw(pool, t, N)))
    out.append(("greedy-low-fW-wide", _greedy_low_fw(wide, t, N)))
    for frac in (0.05, 0.2, 0.5):
        out.append((f"greedy-mixed-{frac}", _greedy_mixed(honest, wide, t, frac)))
    out.append(("moment-constrained-greedy", _constrained_greedy(honest, wide, t, params.k, params.eps)))
    # the honest witness itself is a legitimate member of "any W"
    out.append(("honest", honest))
    # non-dual: perturb one vector by 1/3 of a coordinate unit
    vec = honest.vectors()
    bad = list(vec[0])
    bad[0] = bad[0] + type(bad[0])(1, 3)
    out.append(("non-dual-one", Witness.from_vectors([tuple(bad)] + vec[1:])))
    out.append(("non-dual-random", Witness.from_vectors(
        [tuple(type(x)(int(v), 7) for x, v in zip(row, rng.integers(-20, 21, B.n))) for row in vec])))
    return out
