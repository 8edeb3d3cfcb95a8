"""Closed-form parameter and cost formulas, evaluated in high precision.

Every formula has an mpmath implementation (``*_mp``) used for tables and a
float convenience wrapper. Logs written ``log`` are natural logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp

TABLE_DPS = 60


class BudgetExceeded(RuntimeError):
    """A paper-preset run would exceed the configured compute budget."""

    def __init__(self, what: str, required: float, budget: float):
        self.what, self.required, self.budget = what, required, budget
        super().__init__(f"{what}: requires {required:.6g} operations "
                         f"(2^{math.log2(required) if required > 0 else 0:.2f}), budget is {budget:.6g}")


def _mpf(x):
    return mp.mpf(x)


# -- generalized GG protocol -------------------------------------------------

def gg_rounds_general_mp(n, gamma):
    """``10 n (1 - 1/gamma)^{-n}``."""
    n, g = _mpf(n), _mpf(gamma)
    return 10 * n * (1 - 1 / g) ** (-n)


def gg_rounds_l2_mp(n, gamma):
    """``10 n^{3/2} (1 - 1/gamma^2)^{-(n+1)/2}``."""
    n, g = _mpf(n), _mpf(gamma)
    return 10 * n ** mp.mpf(1.5) * (1 - 1 / g ** 2) ** (-(n + 1) / 2)


# -- SVP -> BDD --------------------------------------------------------------

def bdd_queries_mp(n, alpha, gamma):
    """``10 n^{3/2} (1 - 1/(2 alpha gamma)^2)^{-(n+1)/2}``."""
    n, a, g = _mpf(n), _mpf(alpha), _mpf(gamma)
    return 10 * n ** mp.mpf(1.5) * (1 - 1 / (2 * a * g) ** 2) ** (-(n + 1) / 2)


# -- co-nondeterministic verifier -------------------------------------------

def conp_N_mp(n, k):
    """``(20 k^2 n^2 log n)^{2k+1}``."""
    n, k = _mpf(n), _mpf(k)
    return (20 * k ** 2 * n ** 2 * mp.log(n)) ** (2 * k + 1)


def conp_eps_mp(n, k, N):
    """``20 log^k(2nN) sqrt(k log(n) / N)``."""
    n, k, N = _mpf(n), _mpf(k), _mpf(N)
    return 20 * mp.log(2 * n * N) ** k * mp.sqrt(k * mp.log(n) / N)


def conp_threshold_mp(N):
    """``20 sqrt(log N / N)``."""
    N = _mpf(N)
    return 20 * mp.sqrt(mp.log(N) / N)


def conp_time_base_mp(n, k):
    """Base of ``(100 k n^3 log n)^{2k + O(1)}``; the O(1) is left symbolic."""
    n, k = _mpf(n), _mpf(k)
    return 100 * k * n ** 3 * mp.log(n)


def conp_k_for_gamma(n: int, gamma: float) -> int:
    """Odd k with ``4 sqrt(n/k) ~ gamma`` (k = 16 n / gamma^2 rounded to odd)."""
    return nearest_odd(16 * n / gamma ** 2)


# -- coMA verifier -----------------------------------------------------------

def coma_N_mp(n, alpha):
    """``2^{10 alpha^2 n}``."""
    return mp.mpf(2) ** (10 * _mpf(alpha) ** 2 * _mpf(n))


def coma_trials_mp(n, beta):
    """``2^{2 beta^2 n}``."""
    return mp.mpf(2) ** (2 * _mpf(beta) ** 2 * _mpf(n))


def coma_threshold_mp(n, alpha):
    """``e^{-pi alpha^2 n} / 2``."""
    return mp.exp(-mp.pi * _mpf(alpha) ** 2 * _mpf(n)) / 2


def coma_alpha_for_gamma(gamma: float) -> float:
    """``alpha = beta = sqrt(2/gamma)``."""
    return math.sqrt(2 / gamma)


# -- SVP -> DGS wrappers -----------------------------------------------------

def nearest_odd(x: float) -> int:
    k = 2 * math.floor((x - 1) / 2 + 0.5) + 1
    return max(k, 1)


def dgs_np_k(n: int, gamma: float, gamma_p: float) -> int:
    """Nearest odd integer to ``20 n (gamma'/gamma)^2``."""
    return nearest_odd(20 * n * (gamma_p / gamma) ** 2)


def dgs_ma_alpha(gamma: float, gamma_p: float) -> float:
    """``alpha = beta = sqrt(2 gamma'/gamma)``."""
    return math.sqrt(2 * gamma_p / gamma)


# -- float wrappers ----------------------------------------------------------

def _f(fn, *args) -> float:
    with mp.workdps(TABLE_DPS):
        return float(fn(*args))


def gg_rounds_general(n, gamma) -> float:
    return _f(gg_rounds_general_mp, n, gamma)


def gg_rounds_l2(n, gamma) -> float:
    return _f(gg_rounds_l2_mp, n, gamma)


def bdd_queries(n, alpha, gamma) -> float:
    return _f(bdd_queries_mp, n, alpha, gamma)


def conp_N(n, k) -> float:
    return _f(conp_N_mp, n, k)


def conp_eps(n, k, N) -> float:
    return _f(conp_eps_mp, n, k, N)


def conp_threshold(N) -> float:
    return _f(conp_threshold_mp, N)


def conp_paper_values(n, k) -> tuple[float, float, float]:
    """(N, eps, threshold) with eps and threshold taken from the unrounded N."""
    with mp.workdps(TABLE_DPS):
        N = conp_N_mp(n, k)
        return float(N), float(conp_eps_mp(n, k, N)), float(conp_threshold_mp(N))


def coma_N(n, alpha) -> float:
    return _f(coma_N_mp, n, alpha)


def coma_trials(n, beta) -> float:
    return _f(coma_trials_mp, n, beta)


def coma_threshold(n, alpha) -> float:
    return _f(coma_threshold_mp, n, alpha)


def log2_mp(fn, *args) -> float:
    """log2 of a formula, computed at TABLE_DPS digits then rounded once."""
    with mp.workdps(TABLE_DPS):
        return float(mp.log(fn(*args), 2))


@dataclass(frozen=True)
class TradeoffRow:
    n: int
    gamma: float
    log2_gg_general: float
    log2_gg_l2: float
    conp_k: int
    log2_conp_N: float
    log2_conp_eps: float
    log2_conp_threshold: float
    log2_conp_time_base: float
    conp_time_exponent: str
    coma_alpha: float
    log2_coma_N: float
    log2_coma_trials: float
    log2_coma_threshold: float


def tradeoff_row(n: int, gamma: float) -> TradeoffRow:
    """log2 of every cost formula for one (n, gamma) cell.

    The coNP column uses the odd k matching ``4 sqrt(n/k) = gamma``; the coMA
    column uses ``alpha = beta = sqrt(2/gamma)``. The time exponent of the
    coNP verifier is ``2k + O(1)`` with the O(1) unknown; only the base is
    reported numerically.
    """
    k = conp_k_for_gamma(n, gamma)
    a = coma_alpha_for_gamma(gamma)
    with mp.workdps(TABLE_DPS):
        N = conp_N_mp(n, k)
        am = mp.sqrt(2 / mp.mpf(gamma))
        return TradeoffRow(
            n=n, gamma=gamma,
            log2_gg_general=float(mp.log(gg_rounds_general_mp(n, gamma), 2)) if gamma > 1 else math.inf,
            log2_gg_l2=float(mp.log(gg_rounds_l2_mp(n, gamma), 2)) if gamma > 1 else math.inf,
            conp_k=k,
            log2_conp_N=float(mp.log(N, 2)),
            log2_conp_eps=float(mp.log(conp_eps_mp(n, k, N), 2)),
            log2_conp_threshold=float(mp.log(conp_threshold_mp(N), 2)),
            log2_conp_time_base=float(mp.log(conp_time_base_mp(n, k), 2)),
            conp_time_exponent=f"2k+O(1) with k={k}",
            coma_alpha=a,
            log2_coma_N=float(mp.log(coma_N_mp(n, am), 2)),
            log2_coma_trials=float(mp.log(coma_trials_mp(n, am), 2)),
            log2_coma_threshold=float(mp.log(coma_threshold_mp(n, am), 2)),
        )
