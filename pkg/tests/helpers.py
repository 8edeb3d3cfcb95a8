"""Shared statistical helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from latlab.gaussian import ExactSampler, TruncationPolicy
from latlab.lattice import Basis

LOOSE = TruncationPolicy(rel_error=1e-8)


def binned_chi2(B: Basis, s: float, coords: np.ndarray, radial_bins: int = 10, sectors: int = 4,
                policy: TruncationPolicy = LOOSE):
    """Chi-square of samples against D_{L,s}, binned by radial quantile of
    the exact pmf and by angular sector of the embedded vector."""
    ex = ExactSampler(B, s, policy)
    xs = np.asarray(ex.support, float) @ B.float.T
    d2s = (xs * xs).sum(axis=1)
    w = np.exp(-np.pi * d2s / (s * s))
    p = w / w.sum()
    cdf = np.cumsum(p)
    edges = np.array([d2s[min(np.searchsorted(cdf, k / radial_bins), len(cdf) - 1)]
                      for k in range(1, radial_bins)])
    edges = np.unique(edges)

    def label(c, d2):
        rb = np.searchsorted(edges, d2, side="right")
        if B.n == 1 or sectors == 1:
            sec = (np.asarray(c)[:, 0] > 0).astype(int) if B.n == 1 else np.zeros(len(d2), int)
            return rb * 2 + sec
        x = np.asarray(c, float) @ B.float.T
        ang = np.arctan2(x[:, 1], x[:, 0])
        sec = np.floor((ang + math.pi) / (2 * math.pi) * sectors).astype(int) % sectors
        return rb * sectors + sec

    sup = label(ex.support, d2s)
    nb = int(sup.max()) + 1
    expected = np.bincount(sup, weights=p, minlength=nb)
    x = np.asarray(coords, dtype=float) @ B.float.T
    obs = np.bincount(label(coords, (x * x).sum(axis=1)), minlength=nb)[:nb]
    keep = expected * len(coords) > 0
    e = expected[keep] * len(coords) / expected[keep].sum()
    return stats.chisquare(obs[keep], e)
