"""Private-coin protocol for the complement of GapCVP_K: Arthur hides a bit
b by sending a uniform point of ``rK + b t`` reduced mod P(B), and Merlin has
to name b.

Two provers are provided. The honest one answers by a distance test. The
Bayes-optimal cheater counts preimages: given v, each b has likelihood
proportional to the number of lattice shifts y with ``v + y`` in ``rK + b t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from latlab import params as P
from latlab.enumeration import dist_sq_exact, min_norm_over_coset, points_in_ball
from latlab.geometry import NormBody, ball, ball_intersection_lb, body_intersection_lb, cube, sample_uniform_body
from latlab.lattice import Basis, Target, as_target, reduce_mod_parallelepiped_float


@dataclass(frozen=True)
class GGConfig:
    gamma: float
    d: float
    N: int
    body: str | NormBody = "ball"
    preset: str = "desk"

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if not self.d > 0:
            raise ValueError("d must be positive")
        if self.N < 0:
            raise ValueError("N must be non-negative")

    @property
    def r(self) -> float:
        return self.gamma * self.d / 2

    @property
    def r_exact(self) -> Fraction:
        return Fraction(self.gamma) * Fraction(self.d) / 2

    @property
    def degenerate(self) -> bool:
        return self.N == 0

    def unit_body(self, n: int) -> NormBody:
        if isinstance(self.body, NormBody):
            return self.body.rescaled(1.0)
        return ball(n) if self.body == "ball" else cube(n)

    @classmethod
    def paper(cls, n: int, gamma: float, d: float, body: str | NormBody = "ball") -> "GGConfig":
        if gamma < 1 + 1 / n:
            raise ValueError("paper preset needs gamma >= 1 + 1/n")
        rounds = P.gg_rounds_l2(n, gamma) if body == "ball" else P.gg_rounds_general(n, gamma)
        return cls(gamma, d, math.ceil(rounds), body, "paper")

    @classmethod
    def desk(cls, gamma: float, d: float, p_hat: float, body: str | NormBody = "ball",
             cheat_fail: float = 0.99) -> "GGConfig":
        """Rounds so that a cheater winning each round w.p. ``1 - p_hat/2``
        survives all of them with probability at most ``1 - cheat_fail``."""
        if not 0 < p_hat <= 1:
            raise ValueError("p_hat must lie in (0, 1]")
        N = math.ceil(math.log(1 - cheat_fail) / math.log1p(-p_hat / 2))
        return cls(gamma, d, N, body, "desk")


def per_round_cheat_bound(n: int, dist: float, cfg: GGConfig) -> float:
    """``1 - p/2`` with p the intersection-volume lower bound at ``dist / r``."""
    x = dist / cfg.r
    if x >= 2:
        return 1.0
    p = ball_intersection_lb(n, x) if cfg.body == "ball" else body_intersection_lb(n, x)
    return 1 - p / 2


@dataclass
class Round:
    index: int
    b: int
    s: list
    v: list
    reply: Optional[int] = None

    @property
    def correct(self) -> bool:
        return self.reply == self.b


@dataclass
class Transcript:
    rounds: list = field(default_factory=list)
    verdict: Optional[str] = None
    degenerate: bool = False
    # counters survive keep_rounds=False, where only failed rounds are stored
    n_rounds: int = 0
    n_correct: int = 0

    def to_jsonl(self) -> str:
        lines = [json.dumps({"round": r.index, "b": r.b, "s": r.s, "v": r.v, "reply": r.reply}) for r in self.rounds]
        lines.append(json.dumps({"verdict": self.verdict, "degenerate": self.degenerate,
                                 "rounds": self.n_rounds, "correct": self.n_correct}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        rows = [json.loads(x) for x in text.splitlines() if x.strip()]
        tail = rows.pop()
        rounds = [Round(r["round"], r["b"], r["s"], r["v"], r["reply"]) for r in rows]
        return cls(rounds, tail["verdict"], tail.get("degenerate", False), tail.get("rounds", len(rounds)),
                   tail.get("correct", sum(r.correct for r in rounds)))

    @property
    def success_count(self) -> int:
        return self.n_correct


def arthur_round(B: Basis, t, cfg: GGConfig, rng: np.random.Generator):
    """Returns ``(b, s, v)`` with s uniform on ``rK + b t`` and ``v = s mod P(B)``."""
    b, s, v = arthur_rounds(B, t, cfg, rng, 1)
    return int(b[0]), s[0], v[0]


def arthur_rounds(B: Basis, t, cfg: GGConfig, rng: np.random.Generator, size: int):
    """Vectorized Arthur: arrays b (size,), s and v (size x n)."""
    t = as_target(t)
    body = cfg.unit_body(B.n)
    b = rng.integers(0, 2, size)
    s = sample_uniform_body(body.rescaled(cfg.r), rng, size) + b[:, None] * t.as_float()[None, :]
    v = reduce_mod_parallelepiped_float(B, s)
    return b, s, v


def dist_K(B: Basis, v: np.ndarray, cfg: GGConfig) -> float:
    body = cfg.unit_body(B.n)
    return min_norm_over_coset(B, np.asarray(v, float), body.unit_norm, body.l2_per_norm)[0]


def honest_merlin(B: Basis, v, cfg: GGConfig) -> int:
    """0 iff ``dist_K(v, L) <= gamma d / 2`` (ties answer 0)."""
    if cfg.body == "ball":
        vt = Target([Fraction(float(x)) for x in np.asarray(v, float)]) if not isinstance(v, Target) else v
        return 0 if dist_sq_exact(B, vt) <= cfg.r_exact ** 2 else 1
    return 0 if dist_K(B, v, cfg) <= cfg.r else 1


def preimage_counts(B: Basis, t, v: np.ndarray, cfg: GGConfig) -> tuple[int, int]:
    """Number of lattice y with ``v + y`` in ``rK + b t`` for b = 0, 1."""
    t = as_target(t).as_float()
    body = cfg.unit_body(B.n)
    out = []
    for b in (0, 1):
        c = b * t - v
        coords, _ = points_in_ball(B, c, cfg.r * body.l2_per_norm)
        if len(coords) == 0:
            out.append(0)
            continue
        x = v[None, :] + coords @ B.float.T - b * t[None, :]
        out.append(int((body.unit_norm(x) <= cfg.r).sum()))
    return out[0], out[1]


def optimal_cheating_merlin(B: Basis, t, v, cfg: GGConfig) -> int:
    """Maximum-likelihood guess of b from v; ties answer 0."""
    c0, c1 = preimage_counts(B, t, np.asarray(v, float), cfg)
    return 1 if c1 > c0 else 0


MERLINS: dict[str, Callable] = {
    "honest": lambda B, t, v, cfg: honest_merlin(B, v, cfg),
    "cheat": optimal_cheating_merlin,
}


def run_protocol(B: Basis, t, cfg: GGConfig, merlin: str | Callable, rng: np.random.Generator,
                 keep_rounds: bool = True) -> tuple[str, Transcript]:
    """Arthur accepts iff Merlin names b correctly in every round.

    ``merlin`` is "honest", "cheat" or a callable ``(B, t, v, cfg) -> bit``.
    """
    fn = MERLINS[merlin] if isinstance(merlin, str) else merlin
    tr = Transcript(degenerate=cfg.degenerate)
    if cfg.N:
        b, s, v = arthur_rounds(B, t, cfg, rng, cfg.N)
        for i in range(cfg.N):
            reply = int(fn(B, t, v[i], cfg))
            r = Round(i, int(b[i]), s[i].tolist(), v[i].tolist(), reply)
            tr.n_rounds += 1
            tr.n_correct += r.correct
            if keep_rounds:
                tr.rounds.append(r)
            elif not r.correct:
                tr.rounds.append(r)
    ok = all(r.correct for r in tr.rounds)
    tr.verdict = "accept" if ok else "reject"
    return tr.verdict, tr
