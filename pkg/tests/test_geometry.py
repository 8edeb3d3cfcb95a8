import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from latlab.geometry import (NormBody, SampleStats, ball, ball_intersection_lb, ball_volume, ball_volume_ratio,
                             body_intersection_lb, cap_volume_lb, cube, log_ball_intersection_lb,
                             mc_intersection_ratio, sample_uniform_body)


def exact_ball_overlap(n, d):
    """vol(B ∩ (B+v))/vol(B) = I_{1-d^2/4}((n+1)/2, 1/2) (two caps of half-angle arccos(d/2))."""
    return float(special.betainc((n + 1) / 2, 0.5, 1 - d * d / 4))


def cap_volume_exact(n, r, theta):
    with mp.workdps(30):
        J = mp.quad(lambda p: mp.sin(p) ** n, [0, theta])
        return ball_volume(n - 1) * r ** n * float(J)


def test_ball_lb_values():
    assert ball_intersection_lb(5, 2) == 0
    assert math.isclose(ball_intersection_lb(2, 0), math.sqrt(1 / (4 * math.pi)))
    with pytest.raises(ValueError):
        ball_intersection_lb(2, 2.5)
    # log domain stays finite where the direct power underflows
    assert math.isfinite(log_ball_intersection_lb(10 ** 5, 1.9))


def test_body_lb_values():
    assert body_intersection_lb(3, 2) == 0
    assert body_intersection_lb(4, 1) == 0.5 ** 4


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.floats(0, 2))
def test_ball_lb_below_exact(n, d):
    assert ball_intersection_lb(n, d) <= exact_ball_overlap(n, d) * (1 + 1e-12) + 1e-300


def test_ball_lb_mc_n3():
    n, d, T = 3, 1.0, 10 ** 6
    rng = np.random.default_rng(0)
    est, se = mc_intersection_ratio(ball(n), ball(n, center=[d, 0, 0]), T, rng)
    p = ball_intersection_lb(n, d)
    assert est + 4 * se >= p
    assert abs(est - exact_ball_overlap(n, d)) <= 4 * se


@pytest.mark.parametrize("n,d", [(1, 0.5), (2, 1.0), (4, 0.6)])
def test_cube_tight(n, d):
    T = 200000
    est, se = mc_intersection_ratio(cube(n), cube(n, center=[d] * n), T, np.random.default_rng(n))
    exact = body_intersection_lb(n, d)
    assert abs(est - exact) <= 3 * math.sqrt(exact * (1 - exact) / T)


def test_ball_above_body_bound():
    T = 200000
    for n, d in [(2, 0.5), (3, 1.2), (5, 0.3)]:
        v = np.zeros(n)
        v[0] = d
        est, se = mc_intersection_ratio(ball(n), ball(n, center=v), T, np.random.default_rng(10 + n))
        assert est + 4 * se >= body_intersection_lb(n, d)


def test_cap_lb():
    assert cap_volume_lb(3, 1, 0) == 0
    assert cap_volume_lb(2, 1, math.pi / 2) <= math.pi / 2
    for th in np.linspace(0.1, math.pi / 2, 8):
        for n in (2, 3, 6):
            assert cap_volume_lb(n, 1.3, th) <= cap_volume_exact(n, 1.3, th)


def test_cap_mc_n3():
    rng = np.random.default_rng(1)
    T = 400000
    pts = sample_uniform_body(ball(3), rng, T)
    for th in (0.3, 0.8, 1.3):
        frac = (pts[:, 0] >= math.cos(th)).mean()
        se = math.sqrt(frac * (1 - frac) / T)
        vol = ball_volume(3) * frac
        assert vol + 4 * se * ball_volume(3) >= cap_volume_lb(3, 1, th)
        assert abs(vol - cap_volume_exact(3, 1, th)) <= 4 * se * ball_volume(3) + 1e-12


def test_gautschi_ratio():
    for n in range(1, 65):
        assert ball_volume_ratio(n) >= math.sqrt(n / (2 * math.pi))


def test_uniform_cube_marginals():
    pts = sample_uniform_body(cube(3, 2.0), np.random.default_rng(2), 20000)
    for j in range(3):
        assert stats.kstest(pts[:, j], stats.uniform(-2, 4).cdf).pvalue > 0.01


def test_uniform_ball_radial():
    n = 4
    pts = sample_uniform_body(ball(n, 1.5), np.random.default_rng(3), 20000)
    r = np.linalg.norm(pts, axis=1) / 1.5
    assert r.max() <= 1 + 1e-12
    assert stats.kstest(r, lambda x: np.clip(x, 0, 1) ** n).pvalue > 0.01


def test_center_shift():
    c = np.array([3.0, -1.0])
    N = 20000
    pts = sample_uniform_body(ball(2, 2.0, c), np.random.default_rng(4), N)
    sd = pts.std(axis=0) / math.sqrt(N)
    assert np.all(np.abs(pts.mean(axis=0) - c) <= 3 * sd + 1e-12)


def test_oracle_body_rejection():
    diamond = NormBody("oracle", 2, oracle=lambda x: np.abs(x).sum(axis=1) <= 1, box=1.0)
    st_ = SampleStats()
    pts = sample_uniform_body(diamond, np.random.default_rng(5), 5000, stats=st_)
    assert np.all(np.abs(pts).sum(axis=1) <= 1)
    assert abs(st_.acceptance_rate - 0.5) < 0.05
    assert np.allclose(diamond.unit_norm(np.array([[0.3, 0.2], [1.0, 1.0]])), [0.5, 2.0], atol=1e-9)
    with pytest.raises(ValueError):
        NormBody("oracle", 2)


def test_mc_trivial_and_1d():
    rng = np.random.default_rng(6)
    assert mc_intersection_ratio(ball(3), ball(3), 1000, rng)[0] == 1.0
    assert mc_intersection_ratio(ball(3), ball(3, center=[5, 0, 0]), 1000, rng)[0] == 0.0
    T = 100000
    est, _ = mc_intersection_ratio(cube(1), cube(1, center=[1.0]), T, rng)
    assert abs(est - 0.5) <= 3 * math.sqrt(0.25 / T)
    with pytest.raises(ValueError):
        mc_intersection_ratio(ball(1), ball(1), 0, rng)
