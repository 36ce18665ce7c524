import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualvol.derand import conditional_expectation_fro, derandomized_select
from dualvol.errors import NullEventError
from dualvol.exact import DvsProblem, conditional_prob
from dualvol.linalg import pinv_fro_sq, pinv_spec_sq
from dualvol.oracle import enumerate_distribution
from conftest import random_instance, zero_based


@pytest.mark.parametrize("prefix,expected", [((), 7 / 3), ((2,), 4.0), ((1, 3), 1.5)])
def test_conditional_expectation_a_star(a_star, prefix, expected):
    assert conditional_expectation_fro(a_star, 2, zero_based(*prefix)) == pytest.approx(expected)


def test_conditional_expectation_null_prefix():
    A = np.array([[1.0, 2.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]])
    with pytest.raises(NullEventError):
        conditional_expectation_fro(A, 2, (0, 1))


def test_greedy_path_a_star(a_star):
    trace = derandomized_select(a_star, 2)
    # oracle: conditional means for each first pick, then the argmin path
    dist = enumerate_distribution(a_star, 2)
    firsts = {i: dist.expectation(lambda S: pinv_fro_sq(a_star[:, list(S)]), given=(i,)) for i in range(3)}
    first = min(firsts, key=lambda i: (firsts[i], i))
    assert trace.chosen[0] == first
    for i, v in trace.per_step[0].items():
        assert v == pytest.approx(firsts[i])
    assert trace.subset == (0, 2)
    assert trace.final_fro_sq == pytest.approx(1.5)
    assert trace.final_fro_sq <= 7 / 3


def test_forced_selection_identity():
    trace = derandomized_select(np.eye(2), 2)
    assert trace.subset == (0, 1)
    assert trace.final_fro_sq == pytest.approx(2.0)
    assert trace.bound_fro == pytest.approx(2.0)


def test_duplicate_identity_columns():
    A = np.hstack([np.eye(2), np.eye(2)])
    trace = derandomized_select(A, 2)
    assert trace.within_bounds
    assert trace.final_fro_sq == pytest.approx(2.0)
    assert trace.bound_fro == pytest.approx(3.0 * 1.0)


def test_trace_invariants():
    rng = np.random.default_rng(5)
    A = random_instance(rng, 3, 8)
    trace = derandomized_select(A, 5)
    for step, choice in zip(trace.per_step, trace.chosen):
        best = min(step.values())
        assert step[choice] == best
        assert choice == min(i for i, v in step.items() if v == best)
    diffs = np.diff(trace.path_values)
    assert np.all(diffs <= 1e-9 * np.abs(trace.path_values[:-1]))


@pytest.mark.parametrize("seed", range(50))
def test_bounds_hold_exactly(seed):
    rng = np.random.default_rng(seed)
    A = random_instance(rng, 3, 8)
    k = 3 + seed % 4
    trace = derandomized_select(A, k)
    fro_pinv = pinv_fro_sq(A)
    ratio = (8 - 3 + 1) / (k - 3 + 1)
    S = list(trace.subset)
    assert pinv_fro_sq(A[:, S]) <= ratio * fro_pinv
    assert pinv_spec_sq(A[:, S]) <= 3 * ratio * pinv_spec_sq(A)


@given(st.integers(0, 10_000), st.data())
def test_tower_property(seed, data):
    rng = np.random.default_rng(seed)
    A = random_instance(rng, 2, 5)
    k = data.draw(st.integers(2, 5))
    prefix = data.draw(st.lists(st.integers(0, 4), unique=True, max_size=k - 1))
    problem = DvsProblem(A, k)
    lhs = conditional_expectation_fro(A, k, prefix)
    rhs = sum(conditional_prob(problem, prefix, i) * conditional_expectation_fro(A, k, list(prefix) + [i])
              for i in range(5) if i not in prefix)
    assert lhs == pytest.approx(rhs, rel=1e-7)


@given(st.integers(0, 10_000), st.data())
def test_full_prefix_equals_value(seed, data):
    rng = np.random.default_rng(seed)
    A = random_instance(rng, 2, 6)
    k = data.draw(st.integers(2, 6))
    S = data.draw(st.permutations(range(6)))[:k]
    assert conditional_expectation_fro(A, k, S) == pytest.approx(pinv_fro_sq(A[:, sorted(S)]), rel=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    A = random_instance(rng, 2, 6)
    for k in (2, 3, 4):
        dist = enumerate_distribution(A, k)
        f = lambda S: pinv_fro_sq(A[:, list(S)])
        for prefix in [(), (0,), (3,), (1, 4), (5, 2)][: k + 1]:
            assert conditional_expectation_fro(A, k, prefix) == pytest.approx(dist.expectation(f, prefix), rel=1e-6)
