import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy import stats

from latlab import params as P
from latlab.fixtures import generate
from latlab.geometry import ball, ball_intersection_lb, sample_uniform_body
from latlab.lattice import Basis, reduce_mod_parallelepiped_float
from latlab.protocols import (GGConfig, Transcript, arthur_round, arthur_rounds, honest_merlin,
                              optimal_cheating_merlin, per_round_cheat_bound, preimage_counts, run_protocol)


def fixture_cfg(fx, N=100, body="ball"):
    return GGConfig(float(fx.gamma), float(fx.d), N, body)


def test_config_counts():
    assert GGConfig.paper(4, 2.0, 0.5).N == math.ceil(10 * 4 ** 1.5 * (1 - 1 / 4) ** (-2.5))
    assert GGConfig.paper(4, 2.0, 0.5, "cube").N == math.ceil(10 * 4 * 2 ** 4)
    with pytest.raises(ValueError):
        GGConfig.paper(4, 1.1, 0.5)
    # the l2 clause has the smaller exponential factor; the n^{3/2} vs n prefactor
    # makes the full l2 count larger once gamma is big (e.g. n = 2, gamma = 6)
    for n in range(2, 65):
        for g in (1 + 1 / n, 1.5, 2, 4, 10, 100):
            assert (1 - 1 / g ** 2) ** (-(n + 1) / 2) <= (1 - 1 / g) ** (-n) * (1 + 1e-12)
            if g <= 4:
                assert P.gg_rounds_l2(n, g) <= P.gg_rounds_general(n, g)
    assert P.gg_rounds_l2(2, 6) > P.gg_rounds_general(2, 6)
    cfg = GGConfig.desk(10.0, 0.1, 0.2)
    assert (1 - 0.1) ** cfg.N <= 0.01 < (1 - 0.1) ** (cfg.N - 1)


def test_arthur_b0_distribution():
    B = Basis.from_columns([[2, 0], [1, 2]])
    cfg = GGConfig(2.0, 1.0, 0)
    b, s, v = arthur_rounds(B, [F(1, 3), F(1, 5)], cfg, np.random.default_rng(0), 20000)
    v0 = v[b == 0]
    direct = reduce_mod_parallelepiped_float(B, sample_uniform_body(ball(2, cfg.r), np.random.default_rng(1), len(v0)))
    for j in range(2):
        assert stats.ks_2samp(v0[:, j], direct[:, j]).pvalue > 0.01
    coords = v @ np.linalg.inv(B.float).T
    assert np.all((coords >= -1e-12) & (coords < 1 + 1e-12))


def test_arthur_lattice_target_identical():
    B = Basis.identity(2)
    cfg = GGConfig(2.0, 1.0, 0)
    b, _, v = arthur_rounds(B, [3, -2], cfg, np.random.default_rng(2), 20000)
    for j in range(2):
        assert stats.ks_2samp(v[b == 0, j], v[b == 1, j]).pvalue > 0.01


def test_arthur_seed():
    B = Basis.identity(2)
    cfg = GGConfig(2.0, 1.0, 1)
    a = arthur_round(B, [0, 0], cfg, np.random.default_rng(3))
    c = arthur_round(B, [0, 0], cfg, np.random.default_rng(3))
    assert a[0] == c[0] and np.array_equal(a[2], c[2])


def test_honest_merlin_basics():
    B = Basis.identity(2)
    cfg = GGConfig(2.0, 0.5, 1)
    assert cfg.r_exact == F(1, 2)
    assert honest_merlin(B, np.array([1.0, 2.0]), cfg) == 0
    assert honest_merlin(B, np.array([0.5, 0.0]), cfg) == 0
    assert honest_merlin(B, np.array([0.5, 0.5]), cfg) == 1


def test_honest_far_all_rounds():
    fx = generate("far-promise", 2, 0)
    verdict, tr = run_protocol(fx.basis, fx.target, fixture_cfg(fx, 2000), "honest", np.random.default_rng(4))
    assert verdict == "accept" and tr.success_count == 2000


def test_honest_far_cube():
    fx = generate("far-promise", 2, 0)
    cfg = fixture_cfg(fx, 300, "cube")
    # cube of radius r has l2 radius r sqrt(n); need separation in the cube gauge
    cfg = GGConfig(cfg.gamma / math.sqrt(2), cfg.d, 300, "cube")
    verdict, _ = run_protocol(fx.basis, fx.target, cfg, "honest", np.random.default_rng(5))
    assert verdict == "accept"


def test_cheater_matches_honest_when_unambiguous():
    fx = generate("far-promise", 2, 1)
    cfg = fixture_cfg(fx)
    b, _, v = arthur_rounds(fx.basis, fx.target, cfg, np.random.default_rng(6), 200)
    for bi, vi in zip(b, v):
        c0, c1 = preimage_counts(fx.basis, fx.target, vi, cfg)
        assert (c0 > 0) != (c1 > 0)
        assert optimal_cheating_merlin(fx.basis, fx.target, vi, cfg) == honest_merlin(fx.basis, vi, cfg) == bi


def test_cheater_on_lattice_target():
    B = Basis.identity(2)
    cfg = GGConfig(2.0, 1.0, 2000)
    _, tr = run_protocol(B, [1, 0], cfg, "cheat", np.random.default_rng(7))
    rate = tr.success_count / cfg.N
    assert abs(rate - 0.5) <= 4 * math.sqrt(0.25 / cfg.N)


@pytest.mark.parametrize("n", [2, 3])
def test_cheater_close_bound(n):
    fx = generate("close-promise", n, 0)
    cfg = fixture_cfg(fx, 1500)
    _, tr = run_protocol(fx.basis, fx.target, cfg, "cheat", np.random.default_rng(8))
    rate = tr.success_count / cfg.N
    bound = per_round_cheat_bound(n, fx.dist, cfg)
    assert bound == 1 - ball_intersection_lb(n, fx.dist / cfg.r) / 2
    assert rate <= bound + 4 * math.sqrt(bound * (1 - bound) / cfg.N)


def test_desk_rejects_cheater():
    fx = generate("close-promise", 2, 1)
    p_hat = ball_intersection_lb(2, 2 / float(fx.gamma))
    cfg = GGConfig.desk(float(fx.gamma), float(fx.d), p_hat)
    rejects = sum(run_protocol(fx.basis, fx.target, cfg, "cheat", np.random.default_rng(s), keep_rounds=False)[0] == "reject"
                  for s in range(30))
    assert rejects >= 28


def test_degenerate_and_jsonl():
    B = Basis.identity(2)
    verdict, tr = run_protocol(B, [F(1, 2), 0], GGConfig(2.0, 1.0, 0), "honest", np.random.default_rng(9))
    assert verdict == "accept" and tr.degenerate
    _, tr = run_protocol(B, [F(1, 2), 0], GGConfig(2.0, 1.0, 5), "cheat", np.random.default_rng(9))
    back = Transcript.from_jsonl(tr.to_jsonl())
    assert back.verdict == tr.verdict and [r.b for r in back.rounds] == [r.b for r in tr.rounds]
    assert len(tr.to_jsonl().splitlines()) == 6


def test_transcript_simulatable_far():
    # honest-verifier zero knowledge: on FAR instances replies equal Arthur's own bits
    fx = generate("far-promise", 3, 2)
    _, tr = run_protocol(fx.basis, fx.target, fixture_cfg(fx, 500), "honest", np.random.default_rng(10))
    assert all(r.reply == r.b for r in tr.rounds)


def test_counts_without_rounds():
    B = Basis.identity(2)
    cfg = GGConfig(2.0, 1.0, 200)
    _, full = run_protocol(B, [1, 0], cfg, "cheat", np.random.default_rng(11))
    _, lean = run_protocol(B, [1, 0], cfg, "cheat", np.random.default_rng(11), keep_rounds=False)
    assert lean.n_rounds == full.n_rounds == 200 and lean.success_count == full.success_count
    assert len(lean.rounds) == 200 - lean.success_count
