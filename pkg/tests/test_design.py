import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualvol.design import (
    RankDeficientWarning,
    RegressionDataset,
    bound_check,
    expectation_bounds,
    fedorov_exchange,
    leverage_scores,
    objective,
    regression_eval,
    sample_leverage,
    sample_predictive_length,
    sample_uniform,
)
from dualvol.errors import DomainError
from dualvol.exact import DvsProblem
from dualvol.linalg import logdet_gram
from dualvol.mcmc import ChainConfig, run_chains
from dualvol.oracle import counts_of, enumerate_distribution, tv_distance
from conftest import random_instance, zero_based


@pytest.mark.parametrize("S,crit,expected", [((1, 2), "A", 2.0), ((1, 3), "D", -math.log(4)),
                                             ((2, 3), "A", 6.0), ((1, 3), "E", 1 / (3 - math.sqrt(5)))])
def test_objective_a_star(a_star, S, crit, expected):
    assert objective(a_star, zero_based(*S), crit) == pytest.approx(expected)


def test_objective_singular_is_inf():
    A = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    for crit in "AED":
        assert objective(A, (0, 1), crit) == math.inf


def test_leverage_scores(a_star):
    assert np.allclose(leverage_scores(a_star), [5 / 6, 1 / 3, 5 / 6])
    assert np.allclose(leverage_scores(np.eye(3)), 1.0)


@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(4, 12))
def test_leverage_scores_properties(seed, n, m):
    A = random_instance(np.random.default_rng(seed), n, m)
    ell = leverage_scores(A)
    assert ell.sum() == pytest.approx(n, abs=1e-10)
    assert np.all(ell >= -1e-10) and np.all(ell <= 1 + 1e-10)


def test_predictive_length_first_draw(a_star):
    rng = np.random.default_rng(0)
    firsts = np.zeros(3)
    # k=1 is below n, so draw the first of a 2-subset through the weighted sampler
    from dualvol.design import _weighted_without_replacement

    w = np.linalg.norm(a_star, axis=0)
    for _ in range(20_000):
        firsts[_weighted_without_replacement(w, 1, rng)[0]] += 1
    assert np.allclose(firsts / firsts.sum(), w / w.sum(), atol=0.015)
    assert sample_predictive_length(a_star, 3, rng).indices == (0, 1, 2)
    assert sample_leverage(a_star, 3, rng).indices == (0, 1, 2)


def test_predictive_length_skips_zero_columns():
    A = np.array([[1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]])
    for seed in range(50):
        assert 1 not in sample_predictive_length(A, 3, seed).indices


def test_sample_uniform():
    assert sample_uniform(3, 3, 0) == (0, 1, 2)
    assert sample_uniform(3, 0, 0) == ()
    rng = np.random.default_rng(1)
    counts = counts_of(sample_uniform(3, 2, rng) for _ in range(60_000))
    uniform = {S: 1 / 3 for S in [(0, 1), (0, 2), (1, 2)]}
    assert tv_distance(counts, uniform) < 0.02


@pytest.mark.parametrize("crit", ["D", "A"])
def test_fedorov_a_star(a_star, crit):
    r = fedorov_exchange(a_star, 2, crit, init=(1, 2))
    assert r.selection.indices == (0, 2)
    assert all(b <= a for a, b in zip(r.trace, r.trace[1:]))


def test_fedorov_fixed_point(a_star):
    r = fedorov_exchange(a_star, 2, "D", init=(0, 2))
    assert r.selection.indices == (0, 2)
    assert r.sweeps == 1 and len(r.trace) == 1


def test_fedorov_rejects_bad_init(a_star):
    with pytest.raises(DomainError):
        fedorov_exchange(np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0]]), 2, "D", init=(0, 1))
    with pytest.raises(DomainError):
        fedorov_exchange(a_star, 2, "X", init=(0, 1))


@pytest.mark.parametrize("crit", ["A", "E", "D"])
@pytest.mark.parametrize("seed", range(4))
def test_fedorov_monotone_and_locally_optimal(crit, seed):
    rng = np.random.default_rng(seed)
    A = random_instance(rng, 3, 15)
    r = fedorov_exchange(A, 5, crit, rng=rng)
    assert all(b <= a + 1e-12 for a, b in zip(r.trace, r.trace[1:]))
    assert r.value == pytest.approx(objective(A, r.selection.indices, crit))
    S = list(r.selection.indices)
    for i in range(5):
        for j in set(range(15)) - set(S):
            T = S[:i] + [j] + S[i + 1:]
            assert objective(A, T, crit) >= r.value - 1e-9 * max(1, abs(r.value))


def test_cold_chain_and_fedorov_agree_on_mode(a_star):
    sets = run_chains(DvsProblem(a_star, 2), ChainConfig(k=2, steps=300, beta=0.02, seed=0), 200)
    mode = max(counts_of(map(tuple, sets)).items(), key=lambda kv: kv[1])[0]
    assert mode == fedorov_exchange(a_star, 2, "D", init=(0, 1)).selection.indices


def test_regression_eval_exact_fit():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 3))
    data = RegressionDataset(X, X @ np.array([1.0, -2.0, 0.5]))
    assert regression_eval(data, range(40)) == pytest.approx(0.0, abs=1e-10)
    assert regression_eval(data, [3, 17, 25]) == pytest.approx(0.0, abs=1e-9)


def test_regression_eval_rank_deficient_warns():
    X = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    data = RegressionDataset(X, np.array([1.0, 2.0, 3.0]))
    with pytest.warns(RankDeficientWarning):
        regression_eval(data, [0, 1])


def test_standardize():
    rng = np.random.default_rng(2)
    data = RegressionDataset(5 + 3 * rng.standard_normal((50, 3)), rng.standard_normal(50), standardize=True)
    assert np.allclose(data.X.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(data.X.std(axis=0), 1)
    assert data.design.n == 3 and data.design.m == 50


def test_dvs_beats_uniform_on_synthetic():
    wins = 0
    for batch in range(10):
        rng = np.random.default_rng(100 + batch)
        X = rng.standard_normal((200, 4)) * np.array([1.0, 1.0, 1.0, 0.05])
        X[:10] *= 20  # a few high-leverage samples
        y = X @ rng.standard_normal(4) + 0.1 * rng.standard_normal(200)
        data = RegressionDataset(X, y)
        problem = DvsProblem(data.design, 8)
        sets = run_chains(problem, ChainConfig(k=8, steps=2000, seed=batch), 10)
        dvs = np.median([regression_eval(data, S) for S in sets])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            uni = np.median([regression_eval(data, sample_uniform(200, 8, rng)) for _ in range(10)])
        wins += dvs <= uni
    assert wins >= 7


def test_bound_check_exact_a_star(a_star):
    r = bound_check(a_star, 2, "exact")
    assert r.mean_fro == pytest.approx(7 / 3)
    assert r.bound_fro == pytest.approx(7 / 3)
    assert r.fro_holds and r.spec_holds


def test_bound_check_single_subset():
    A = np.eye(2)
    r = bound_check(A, 2, "single", subsets=[(0, 1)])
    assert r.mean_fro == r.bound_fro == pytest.approx(2.0)
    assert r.fro_holds


@pytest.mark.parametrize("n,m", [(2, 6), (3, 7)])
@pytest.mark.parametrize("seed", range(3))
def test_expectation_bounds_exact(n, m, seed):
    A = random_instance(np.random.default_rng(seed), n, m)
    for k in range(n, m + 1):
        r = bound_check(A, k, "exact")
        assert r.mean_fro <= r.bound_fro * (1 + 1e-8)
        assert r.mean_spec <= r.bound_spec * (1 + 1e-8)


def test_bound_check_monte_carlo():
    A = random_instance(np.random.default_rng(9), 3, 10)
    r = bound_check(A, 6, "mc", n_samples=10_000, rng=1)
    assert r.se_fro > 0
    # the Frobenius bound is attained with equality for every A and k, so the
    # sample mean can only be checked for consistency with it
    assert bound_check(A, 6, "exact").mean_fro == pytest.approx(r.bound_fro, rel=1e-10)
    assert abs(r.mean_fro - r.bound_fro) <= 3 * r.se_fro
    assert r.mean_spec + 3 * r.se_spec <= r.bound_spec
    assert r.fro_holds and r.spec_holds
    fro, spec = expectation_bounds(A, 6)
    assert (r.bound_fro, r.bound_spec) == (fro, spec)


@given(st.integers(0, 10_000), st.integers(2, 3), st.data())
def test_frobenius_expectation_attains_bound(seed, n, data):
    m = data.draw(st.integers(n, 7))
    k = data.draw(st.integers(n, m))
    A = random_instance(np.random.default_rng(seed), n, m)
    r = bound_check(A, k, "exact")
    assert r.mean_fro == pytest.approx(r.bound_fro, rel=1e-9)
