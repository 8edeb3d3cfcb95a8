import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from latlab import params as P
from latlab.enumeration import dist_sq_exact, lambda1_sq, svp_exact
from latlab.fixtures import generate
from latlab.gaussian import ParameterError, dgs_samples_exact, smoothing_parameter
from latlab.geometry import ball_intersection_lb
from latlab.lattice import Basis, change_of_basis
from latlab.reductions import (NO, YES, CalibrationError, DgsOracleSpec, SampleSource, SisCapError,
                               SisInstance, biased_dgs_oracle, calibrate_r, chain_length, desk_trials,
                               dgs_chain, dgs_to_sis_full, dgs_to_sis_step, doubled_basis, exact_bdd_oracle,
                               gmss_reduce, gmss_scale, paper_trials, sis_coefficients, sis_oracle_bruteforce,
                               svp_label, svp_to_bdd, svp_to_dgs_ma, svp_to_dgs_np, to_basis)
from latlab.verifiers import ComaParams
from tests.helpers import binned_chi2
from tests.test_lattice import rand_basis


def rational_above(x):
    f = F(x).limit_denominator(10 ** 6)
    while f < x:
        f += F(1, 10 ** 6)
    return f


# -- GMSS -----------------------------------------------------------------------


def test_gmss_Z2():
    insts = gmss_reduce(Basis.identity(2), 1, 1)
    assert insts[0].basis == Basis.diagonal([2, 1]) and insts[0].target.coords == (1, 0)
    assert insts[0].dist_sq() == 1 and insts[0].label() == YES
    assert insts[0].scale == gmss_scale(2, 1, 1)
    assert abs(float(insts[0].scale) - math.sqrt(2)) < 1e-11
    scaled = dist_sq_exact(insts[0].scaled_basis, insts[0].scaled_target)
    assert abs(float(scaled) - 2) < 1e-10


def test_gmss_index_two():
    B = rand_basis(np.random.default_rng(0), 3)
    for i in range(3):
        Bi = doubled_basis(B, i)
        assert abs(Bi.det) == 2 * abs(B.det)
        U = change_of_basis(B, Bi)
        assert all(x.denominator == 1 for row in U for x in row)


def test_gmss_no_promise_propagates():
    for n in (2, 3):
        fx = generate("far-promise", n, 0)
        gamma = 2
        d = F(math.isqrt(int(fx.stamps["lambda1_sq"])) , 3) / gamma
        while (gamma * d) ** 2 >= fx.stamps["lambda1_sq"]:
            d /= 2
        assert svp_label(fx.basis, d, gamma) == NO
        assert all(inst.label() == NO for inst in gmss_reduce(fx.basis, d, gamma))


def test_gmss_odd_coefficient_instance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        B = rand_basis(rng, 3)
        l2 = lambda1_sq(B)
        _, v = svp_exact(B)
        odd = [i for i, z in enumerate(v.coords) if z % 2]
        assert odd
        insts = gmss_reduce(B, 1, 1)
        for i in odd:
            assert insts[i].dist_sq() <= l2
        assert min(inst.dist_sq() for inst in insts) == l2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.sampled_from([1, 2, 3]))
def test_gmss_equivalence(seed, n, gamma):
    rng = np.random.default_rng(seed)
    B = rand_basis(rng, n)
    l1 = math.sqrt(lambda1_sq(B))
    d = F(float(l1 * rng.uniform(0.3, 1.5))).limit_denominator(1000)
    lab = svp_label(B, d, gamma)
    labels = [inst.label() for inst in gmss_reduce(B, d, gamma)]
    if lab == YES:
        assert YES in labels
    elif lab == NO:
        assert all(x == NO for x in labels)


# -- SVP -> BDD -------------------------------------------------------------------


def test_bdd_trial_counts():
    p = ball_intersection_lb(3, 1 / 1.8)
    N = desk_trials(3, 0.45, 4)
    assert (1 - p / 2) ** N <= 0.01 < (1 - p / 2) ** (N - 1)
    with pytest.raises(ValueError):
        paper_trials(4, 0.3, 2)
    assert paper_trials(4, 0.45, 4) == math.ceil(10 * 4 ** 1.5 * (1 - 1 / 3.6 ** 2) ** (-2.5))
    with pytest.raises(ValueError):
        desk_trials(3, 0.2, 2)


def test_bdd_no_instance_never_yes():
    for n in (2, 3):
        fx = generate("far-promise", n, 0)
        gamma, alpha = 4, 0.45
        d = F(1, 1)
        while (gamma * d) ** 2 >= fx.stamps["lambda1_sq"]:
            d /= 2
        for seed in range(5):
            run = svp_to_bdd(fx.basis, d, gamma, alpha, rng=np.random.default_rng(seed))
            assert run.answer == NO and run.mismatches == 0


def test_bdd_yes_instance_n3():
    fx = generate("random", 3, 0)
    d = rational_above(math.sqrt(fx.stamps["lambda1_sq"]))
    gamma, alpha = 4, 0.45
    yes = sum(svp_to_bdd(fx.basis, d, gamma, alpha, rng=np.random.default_rng(s)).answer == YES for s in range(40))
    assert yes >= 38


def test_bdd_forced_collision():
    B = Basis.identity(2)
    run = svp_to_bdd(B, 1, 2, 0.45, shifts=[[0.5, 0.0], [-0.5, 0.0]], stop_early=False)
    assert run.trials == 2 and run.mismatches == 1 and run.answer == YES
    run = svp_to_bdd(B, 1, 2, 0.45, oracle=exact_bdd_oracle(0.45, "abstain"), shifts=[[0.5, 0.0]])
    assert run.answer == YES


# -- SVP -> DGS wrappers ----------------------------------------------------------------


@pytest.fixture(scope="module")
def dgs_case():
    fx = generate("far-promise", 2, 0)
    l2 = fx.stamps["lambda1_sq"]
    gamma = 20
    d_no = F(1, 1)
    while (gamma * d_no) ** 2 >= l2:
        d_no /= 2
    d_yes = rational_above(math.sqrt(l2))
    return fx.basis, gamma, d_no, d_yes


def test_dgs_spec_validation():
    DgsOracleSpec(2.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        DgsOracleSpec(0.5, 0.1, 0.1)
    with pytest.raises(ValueError):
        DgsOracleSpec(2.0, 1.5, 0.1)


def test_dgs_np(dgs_case):
    B, gamma, d_no, d_yes = dgs_case
    assert svp_label(B, d_no, gamma) == NO and svp_label(B, d_yes, gamma) == YES
    no = [svp_to_dgs_np(B, d_no, gamma, 1, rng=np.random.default_rng(s)).answer for s in range(10)]
    assert no.count(NO) >= 9
    for s in range(5):
        assert svp_to_dgs_np(B, d_yes, gamma, 1, rng=np.random.default_rng(s)).answer == YES


def test_dgs_ma(dgs_case):
    B, gamma, d_no, d_yes = dgs_case
    no = [svp_to_dgs_ma(B, d_no, gamma, 2, rng=np.random.default_rng(s)).answer for s in range(10)]
    assert no.count(NO) >= 9
    for s in range(5):
        assert svp_to_dgs_ma(B, d_yes, gamma, 2, rng=np.random.default_rng(s)).answer == YES


def test_dgs_bias_sweep_runs(dgs_case):
    B, gamma, d_no, _ = dgs_case
    wrong = []
    for delta in (0.0, 0.6):
        runs = [svp_to_dgs_np(B, d_no, gamma, 1, biased_dgs_oracle(delta), rng=np.random.default_rng(s)) for s in range(5)]
        wrong.append(sum(r.answer == YES for r in runs))
    assert wrong[0] <= wrong[1]


def test_dgs_paper_budget(dgs_case):
    B, gamma, d_no, _ = dgs_case
    with pytest.raises(P.BudgetExceeded):
        svp_to_dgs_np(B, d_no, gamma, 8, preset="paper", budget=1e4)
    with pytest.raises(P.BudgetExceeded):
        svp_to_dgs_ma(B, d_no, 2, 1, preset="paper", params=ComaParams.desk(2, N=10 ** 6, trials=10 ** 6), budget=1e4)


# -- SIS --------------------------------------------------------------------------------


def scan_oracle(inst):
    """Independent scan: min weight, then lexicographically largest."""
    best = None
    for z in itertools.product((-1, 0, 1), repeat=inst.m):
        z = np.array(z)
        if not z.any() or np.any((inst.A @ z) % inst.q):
            continue
        key = (int(np.abs(z).sum()), tuple(-z))
        if best is None or key < best[0]:
            best = (key, z)
    return None if best is None else best[1]


def test_sis_instance():
    inst = SisInstance.random(2, 8, 9, np.random.default_rng(0))
    assert SisInstance.loads(inst.dumps()) == inst
    assert set(inst.to_json()) == {"n", "m", "q", "A"}
    with pytest.raises(ValueError):
        SisInstance(2, 4, 9, np.zeros((2, 4), dtype=int))
    with pytest.raises(SisCapError):
        sis_oracle_bruteforce(SisInstance(1, 17, 3, np.ones((1, 17), dtype=int)))


def test_sis_duplicate_columns():
    A = np.array([[1, 2, 4, 1, 3, 5, 6], [2, 3, 1, 2, 6, 4, 5]])
    z = sis_oracle_bruteforce(SisInstance(2, 7, 7, A, strict=False))
    assert SisInstance(2, 7, 7, A, strict=False).is_solution(z)
    assert int(np.abs(z).sum()) == 2


def test_sis_matches_scan():
    rng = np.random.default_rng(1)
    for _ in range(10):
        inst = SisInstance(3, 7, 3, np.hstack([np.eye(3, dtype=int), rng.integers(0, 3, (3, 4))]), strict=False)
        a, b = sis_oracle_bruteforce(inst), scan_oracle(inst)
        assert (a is None and b is None) or np.array_equal(a, b)


def test_sis_random_success():
    rng = np.random.default_rng(2)
    found = sum(sis_oracle_bruteforce(SisInstance.random(2, 8, 9, rng)) is not None for _ in range(1000))
    assert found >= 990


def test_sis_coefficients_identity():
    B = Basis.from_columns([[2, 1], [0, 3]])
    Y = dgs_samples_exact(B, 40.0, np.random.default_rng(3), 8)
    A = sis_coefficients(Y, 5)
    assert A.shape == (2, 8)
    for y, a in zip(Y, A.T):
        diff = [F(int(u - v), 5) for u, v in zip(y, a)]
        assert all(x.denominator == 1 for x in diff)
        assert B.contains([sum(B.entries[i][j] * diff[j] for j in range(2)) for i in range(2)])


def test_sis_coefficients_uniform():
    Y = dgs_samples_exact(Basis.identity(2), 40.0, np.random.default_rng(4), 20000)
    A = sis_coefficients(Y, 9)
    counts = np.bincount(A.ravel(), minlength=9)
    assert stats.chisquare(counts).pvalue > 0.01


def test_step_and_chain_c1():
    B = Basis.identity(1)
    Y = dgs_samples_exact(B, 30.0, np.random.default_rng(5), 4000)
    res = dgs_to_sis_step(B, 30.0, Y, sis_oracle_bruteforce, 3, 1.0, 8)
    out, s_eff, stats_ = dgs_chain(B, 30.0, Y, 1, 3, 1.0, 8, sis_oracle_bruteforce)
    assert np.array_equal(res.coords, out[0]) and s_eff == res.s_eff == 10.0
    assert stats_.steps == 1 and stats_.distance_budget(0.01) == 0.02


def test_step_fallback_and_strict():
    B = Basis.identity(1)
    res = dgs_to_sis_step(B, 30.0, np.zeros((64 * 8, 1), dtype=int), lambda inst: None, 3, 1.0, 8)
    assert res.fallback and not res.coords.any()
    eta = smoothing_parameter(B, 0.01)
    with pytest.raises(ParameterError):
        dgs_to_sis_step(B, 1.0, np.zeros((8, 1), dtype=int), sis_oracle_bruteforce, 3, 1.0, 8, eta=eta)
    with pytest.raises(ParameterError):
        dgs_chain(B, 10.0, np.zeros((8, 1), dtype=int), 2, 3, 1.0, 8, sis_oracle_bruteforce, eta=eta)


def test_chain_Z_distribution():
    B = Basis.identity(1)
    rng = np.random.default_rng(6)
    src = SampleSource(lambda k: dgs_samples_exact(B, 30.0, rng, k))
    out, s_eff, st_ = dgs_chain(B, 30.0, src, 1, 3, 1.0, 8, sis_oracle_bruteforce, count=2000)
    assert s_eff == 10.0 and st_.fallbacks == 0
    assert binned_chi2(B, s_eff, out, radial_bins=8).pvalue > 0.01


def test_calibration_and_chain_length():
    cal = calibrate_r(2, 8, 9, sis_oracle_bruteforce, np.random.default_rng(7), 200)
    assert 1 <= cal.r2 <= 8 and cal.success_rate >= 1 / 8 ** 3
    assert sum(cal.norm_counts.values()) == cal.successes == 200
    with pytest.raises(CalibrationError):
        calibrate_r(2, 8, 9, lambda inst: None, np.random.default_rng(0), 5, max_calls=20)
    assert chain_length(1, 9, 1) == 1
    assert chain_length(8, 9, math.sqrt(2)) == math.ceil(math.log(8) / math.log(9 / math.sqrt(2)))
    assert chain_length(2, 9, 1.0) == 1


def test_to_basis_sublattice():
    B = Basis.from_columns([[7, 1], [3, 5]])
    coords = dgs_samples_exact(B, 40.0, np.random.default_rng(8), 6)
    T = to_basis(B, coords)
    assert T is not None
    U = change_of_basis(B, T)
    assert all(x.denominator == 1 for row in U for x in row)
    assert to_basis(B, np.zeros((4, 2), dtype=int)) is None


def test_full_shortcut_and_phase():
    run = dgs_to_sis_full(Basis.identity(2), 3.0, sis_oracle_bruteforce, 9, 8, rng=np.random.default_rng(9), count=20)
    assert run.shortcut and run.phases == 0 and run.samples.shape == (20, 2)
    skew = Basis.from_columns([[1000, 1], [999, 1]])
    run = dgs_to_sis_full(skew, 100.0, sis_oracle_bruteforce, 9, 8, rng=np.random.default_rng(10), count=20, lll=False)
    assert run.phases >= 1 and run.gs_history[-1] < run.gs_history[0] / 2
    assert all(skew.contains(skew.vector(c).embedding) for c in run.samples)
