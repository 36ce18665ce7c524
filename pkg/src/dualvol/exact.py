"""Exact dual volume sampling.

P(S; A) is proportional to det(A_S A_S^T) over k-subsets S of the columns of
an n x m matrix A with n <= k <= m.  The partition function has a closed form,
marginals P(T subset of S) are computable in O(m^3), and chaining marginals
gives an exact sequential sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NullEventError
from .linalg import (
    DesignMatrix,
    as_array,
    check_subset,
    log_elem_sym_poly,
    numerical_rank,
)


def log_comb(a: int, b: int) -> float:
    if b < 0 or b > a:
        return -math.inf
    return math.log(math.comb(a, b))


def _design(A) -> DesignMatrix:
    return A if isinstance(A, DesignMatrix) else DesignMatrix(A)


def partition_function(A, k: int) -> float:
    """log Z = log[C(m-n, k-n) det(A A^T)]."""
    D = _design(A)
    if not D.n <= k <= D.m:
        raise DomainError(f"k={k} outside [{D.n}, {D.m}]")
    return log_comb(D.m - D.n, k - D.n) + D.logdet_gram


@dataclass(frozen=True)
class DvsProblem:
    A: DesignMatrix
    k: int
    _steps: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.A, DesignMatrix):
            object.__setattr__(self, "A", DesignMatrix(self.A))
        if not self.A.n <= self.k <= self.A.m:
            raise DomainError(f"k={self.k} outside [{self.A.n}, {self.A.m}]")

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return self.A.m

    @cached_property
    def logZ(self) -> float:
        return partition_function(self.A, self.k)


@dataclass(frozen=True)
class MarginalResult:
    T: tuple[int, ...]
    log_unnormalized: float
    probability: float
    rank_AT: int
    rank_B: int


@dataclass(frozen=True)
class OrderedSample:
    tuple: tuple[int, ...]
    log_prob: float

    @property
    def subset(self) -> tuple[int, ...]:
        return tuple(sorted(self.tuple))


def _marginal_terms(X: np.ndarray, k: int, T: tuple[int, ...]) -> tuple[float, int, int]:
    """log sum_{S >= T, |S| = k} det(A_S A_S^T) together with r(A_T) and r(B).

    A_T = Q Sigma V^T; B = (Q_perp)^T A_Tc carries the part of the remaining
    columns outside span(A_T); C = Sigma^{-1} Q^T A_Tc the part inside it.
    The sum factors as prod sigma^2(A_T) * prod sigma^2(B) * Gamma, where Gamma
    is e_{k-|T|-r(B)} of W^T W = I + C^T C compressed onto null(B).
    """
    n, m = X.shape
    t = len(T)
    if k > m or t > k:
        return -math.inf, 0, 0
    if n == 0:
        return log_comb(m - t, k - t), 0, 0

    rest = np.setdiff1d(np.arange(m), T)
    Ar = X[:, rest]
    if t:
        U, s, _ = np.linalg.svd(X[:, list(T)], full_matrices=True)
        r = numerical_rank(s, (n, t))
        Q, Qp, s = U[:, :r], U[:, r:], s[:r]
        log_AT = float(2.0 * np.sum(np.log(s)))
        C = (Q.T @ Ar) / s[:, None]
    else:
        r = 0
        Qp = np.eye(n)
        log_AT = 0.0
        C = np.zeros((0, rest.size))

    if r < n:
        B = Qp.T @ Ar
        if B.shape[1] == 0:
            return -math.inf, r, 0
        _, sB, VBt = np.linalg.svd(B, full_matrices=True)
        rB = numerical_rank(sB, B.shape)
        if r + rB < n:
            # A itself is rank deficient: no completion of T has full row rank
            return -math.inf, r, rB
        log_B = float(2.0 * np.sum(np.log(sB[:rB])))
        null_B = VBt[rB:].T
    else:
        rB = 0
        log_B = 0.0
        null_B = None

    j = k - t - rB
    if j < 0:
        return -math.inf, r, rB
    # e_j(W P_B W^T) equals e_j of the compression of W^T W onto null(B)
    WtW = np.eye(rest.size) + C.T @ C
    core = WtW if null_B is None else null_B.T @ WtW @ null_B
    lam = np.clip(np.linalg.eigvalsh(core), 0.0, None) if core.size else np.zeros(0)
    return log_AT + log_B + log_elem_sym_poly(lam, j), r, rB


def unnormalized_marginal(A, k: int, T: Iterable[int] = ()) -> float:
    """log sum over k-supersets S of T of det(A_S A_S^T).

    ``A`` may be any real matrix with at least as many columns as rows
    (including the row-deleted matrices used for conditional expectations);
    returns -inf when no superset has full row rank.
    """
    X = as_array(A)
    T = check_subset(T, X.shape[1])
    if len(T) > k:
        raise DomainError(f"|T|={len(T)} exceeds k={k}")
    return _marginal_terms(X, k, T)[0]


def marginal(problem: DvsProblem, T: Iterable[int] = ()) -> MarginalResult:
    """P(T subset of S) for S drawn from P(.; A)."""
    T = check_subset(T, problem.m)
    if len(T) > problem.k:
        raise DomainError(f"|T|={len(T)} exceeds k={problem.k}")
    lu, r, rB = _marginal_terms(problem.A.entries, problem.k, T)
    return MarginalResult(T, lu, math.exp(lu - problem.logZ), r, rB)


def step_distribution(problem: DvsProblem, prefix: Iterable[int] = ()) -> np.ndarray:
    """Probabilities of the next index given the already chosen ones.

    Entry i is P(T + {i} subset of S) / ((k - |T|) P(T subset of S)) and zero
    for i in T.  Depends only on the set T, so results are cached per problem.
    """
    T = check_subset(prefix, problem.m)
    if len(T) >= problem.k:
        raise DomainError(f"prefix of length {len(T)} leaves nothing to choose for k={problem.k}")
    cached = problem._steps.get(T)
    if cached is not None:
        return cached
    X = problem.A.entries
    base = _marginal_terms(X, problem.k, T)[0]
    if base == -math.inf:
        raise NullEventError(f"prefix {T} has zero marginal probability")
    p = np.zeros(problem.m)
    inT = set(T)
    for i in range(problem.m):
        if i in inT:
            continue
        li = _marginal_terms(X, problem.k, tuple(sorted(T + (i,))))[0]
        p[i] = math.exp(li - base) / (problem.k - len(T))
    p.setflags(write=False)
    problem._steps[T] = p
    return p


def conditional_prob(problem: DvsProblem, prefix: Sequence[int], i: int) -> float:
    """P(s_t = i | s_1..s_{t-1} = prefix) for the ordered-tuple sampler."""
    prefix = tuple(int(x) for x in prefix)
    check_subset(prefix, problem.m)
    i = int(i)
    if i in prefix:
        raise DomainError(f"candidate {i} already in prefix")
    if not 0 <= i < problem.m:
        raise DomainError(f"index {i} out of range for m={problem.m}")
    return float(step_distribution(problem, prefix)[i])


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_exact(problem: DvsProblem, rng=None) -> OrderedSample:
    """Draw an ordered k-tuple one index at a time from the exact conditionals."""
    rng = _rng(rng)
    chosen: list[int] = []
    log_prob = 0.0
    for _ in range(problem.k):
        p = step_distribution(problem, chosen)
        cdf = np.cumsum(np.clip(p, 0.0, None))
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        i = min(i, problem.m - 1)
        while p[i] <= 0.0:
            i -= 1
        log_prob += math.log(p[i])
        chosen.append(i)
    return OrderedSample(tuple(chosen), log_prob)
