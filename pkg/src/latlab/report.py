"""Experiment reports: per-seed outcomes, binomial rates with exact CIs and a
deterministic JSON body (timing is kept apart so bodies can be diffed)."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, is_dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from scipy.stats import binomtest

CONFIDENCE = 0.95


@dataclass(frozen=True)
class Rate:
    successes: int
    trials: int
    rate: float
    ci_low: float
    ci_high: float
    confidence: float = CONFIDENCE

    @classmethod
    def of(cls, successes: int, trials: int, confidence: float = CONFIDENCE) -> "Rate":
        if trials <= 0:
            return cls(int(successes), 0, math.nan, 0.0, 1.0, confidence)
        ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="exact")
        return cls(int(successes), int(trials), successes / trials, float(ci.low), float(ci.high), confidence)


def _plain(x: Any):
    if is_dataclass(x) and not isinstance(x, type):
        return _plain(asdict(x))
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class ExperimentReport:
    command: str
    config: dict
    outcomes: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, seed: int, **outcome) -> None:
        self.outcomes.append({"seed": seed, **outcome})

    def rate(self, name: str, successes: int, trials: int) -> Rate:
        r = Rate.of(successes, trials)
        self.rates[name] = r
        return r

    def finish(self) -> "ExperimentReport":
        self.outcomes.sort(key=lambda o: o["seed"])
        self.wall_clock = time.perf_counter() - self._t0
        return self

    def body(self) -> dict:
        return _plain({"command": self.command, "config": self.config, "parameters": self.parameters,
                       "outcomes": self.outcomes, "rates": self.rates})

    def to_json(self) -> str:
        return json.dumps({**self.body(), "timing": {"wall_clock_s": self.wall_clock}}, indent=1, sort_keys=True)

    def body_json(self) -> str:
        return json.dumps(self.body(), indent=1, sort_keys=True)

    def to_jsonl(self) -> str:
        head = {"command": self.command, "config": _plain(self.config), "parameters": _plain(self.parameters)}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(_plain(o), sort_keys=True) for o in self.outcomes]
        lines.append(json.dumps({"rates": _plain(self.rates), "timing": {"wall_clock_s": self.wall_clock}}, sort_keys=True))
        return "\n".join(lines) + "\n"
