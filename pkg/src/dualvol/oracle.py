"""Brute-force ground truth by enumerating every k-subset.

Nothing here goes through the marginal formulas or rank-one updates; it is the
independent reference the rest of the package is checked against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import DomainError, EnumerationCapError
from .linalg import as_array, check_subset, det_gram, elem_sym_poly, numerical_rank

ENUMERATION_CAP = 200_000


@dataclass(frozen=True)
class ExactDistribution:
    n: int
    m: int
    k: int
    subsets: tuple[tuple[int, ...], ...]
    probs: np.ndarray
    logZ: float

    @property
    def table(self) -> dict[tuple[int, ...], float]:
        return {S: float(p) for S, p in zip(self.subsets, self.probs) if p > 0}

    def prob(self, S: Iterable[int]) -> float:
        return self.table.get(tuple(sorted(S)), 0.0)

    def marginal(self, T: Iterable[int]) -> float:
        T = set(T)
        return float(sum(p for S, p in zip(self.subsets, self.probs) if T.issubset(S)))

    def expectation(self, f: Callable[[tuple[int, ...]], float], given: Iterable[int] = ()) -> float:
        """E[f(S)], optionally conditioned on ``given`` being contained in S."""
        given = set(given)
        num = den = 0.0
        for S, p in zip(self.subsets, self.probs):
            if p > 0 and given.issubset(S):
                num += p * f(S)
                den += p
        if den == 0:
            raise DomainError(f"conditioning set {sorted(given)} has probability zero")
        return num / den


def enumerate_distribution(A, k: int, cap: int = ENUMERATION_CAP) -> ExactDistribution:
    """Exact table of P(S) proportional to det(A_S A_S^T) over all k-subsets."""
    X = as_array(A)
    n, m = X.shape
    if not n <= k <= m:
        raise DomainError(f"k={k} outside [{n}, {m}]")
    total = math.comb(m, k)
    if total > cap:
        raise EnumerationCapError(f"C({m},{k}) = {total} exceeds the enumeration cap {cap}")
    subsets = tuple(itertools.combinations(range(m), k))
    idx = np.array(subsets, dtype=np.intp)
    blocks = np.moveaxis(X[:, idx], 1, 0)  # (N, n, k)
    sv = np.linalg.svd(blocks, compute_uv=False)
    full = np.array([numerical_rank(s, (n, k)) == n for s in sv])
    with np.errstate(divide="ignore"):
        logw = np.where(full, 2.0 * np.sum(np.log(sv), axis=1), -np.inf)
    logZ = float(logsumexp(logw))
    return ExactDistribution(n, m, k, subsets, np.exp(logw - logZ), logZ)


def _as_probs(table) -> dict[tuple[int, ...], float]:
    if isinstance(table, ExactDistribution):
        return table.table
    items = {tuple(sorted(S)): float(v) for S, v in dict(table).items()}
    total = sum(items.values())
    if total <= 0:
        raise DomainError("empty frequency table")
    return {S: v / total for S, v in items.items()}


def tv_distance(empirical, exact) -> float:
    """Half the L1 distance between two tables over the union of supports.

    Either argument may be an ExactDistribution or a mapping subset -> count
    (or frequency); mappings are normalized.
    """
    p, q = _as_probs(empirical), _as_probs(exact)
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(S, 0.0) - q.get(S, 0.0)) for S in keys)


def counts_of(samples: Iterable[Iterable[int]]) -> dict[tuple[int, ...], int]:
    out: dict[tuple[int, ...], int] = {}
    for S in samples:
        key = tuple(sorted(int(i) for i in S))
        out[key] = out.get(key, 0) + 1
    return out


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    alpha: float
    inconclusive: bool

    @property
    def passed(self) -> bool:
        return not self.inconclusive and self.p_value >= self.alpha


def chi_square_gof(counts: Mapping, exact, alpha: float = 0.01, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness of fit of observed subset counts against an exact table.

    Cells with expected count below ``min_expected`` are pooled (smallest
    first) until the pooled cell reaches it.  Observations outside the exact
    support make the statistic infinite.
    """
    q = _as_probs(exact)
    obs = {tuple(sorted(S)): int(c) for S, c in dict(counts).items()}
    N = sum(obs.values())
    if N == 0:
        return ChiSquareResult(math.nan, 0, math.nan, alpha, True)
    if any(c > 0 and q.get(S, 0.0) <= 0 for S, c in obs.items()):
        return ChiSquareResult(math.inf, max(len(q) - 1, 0), 0.0, alpha, False)

    cells = sorted(((N * p, obs.get(S, 0)) for S, p in q.items() if p > 0))
    expected, observed = [], []
    pool_e = pool_o = 0.0
    for e, o in cells:
        if pool_e > 0 or e < min_expected:
            pool_e += e
            pool_o += o
            if pool_e >= min_expected:
                expected.append(pool_e)
                observed.append(pool_o)
                pool_e = pool_o = 0.0
        else:
            expected.append(e)
            observed.append(o)
    if pool_e > 0:
        if expected:
            expected[-1] += pool_e
            observed[-1] += pool_o
        else:
            expected.append(pool_e)
            observed.append(pool_o)
    dof = len(expected) - 1
    if dof < 1:
        return ChiSquareResult(0.0, 0, 1.0, alpha, True)
    e, o = np.array(expected), np.array(observed)
    stat = float(np.sum((o - e) ** 2 / e))
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)), alpha, False)


@dataclass(frozen=True)
class PairCheck:
    i: int
    j: int
    joint: float
    product: float

    @property
    def holds(self) -> bool:
        return self.joint <= self.product + 1e-10


@dataclass(frozen=True)
class NegativeCorrelationReport:
    pairs: tuple[PairCheck, ...]

    @property
    def all_hold(self) -> bool:
        return all(p.holds for p in self.pairs)

    @property
    def violations(self) -> list[PairCheck]:
        return [p for p in self.pairs if not p.holds]


def negative_correlation_check(A, k: int, dist: ExactDistribution | None = None) -> NegativeCorrelationReport:
    """Check P(i, j in S) <= P(i in S) P(j in S) for every pair i < j."""
    dist = dist or enumerate_distribution(A, k)
    m = dist.m
    inc = np.zeros((len(dist.subsets), m))
    for r, S in enumerate(dist.subsets):
        inc[r, list(S)] = 1.0
    single = dist.probs @ inc
    joint = inc.T @ (dist.probs[:, None] * inc)
    pairs = tuple(
        PairCheck(i, j, float(joint[i, j]), float(single[i] * single[j]))
        for i in range(m) for j in range(i + 1, m)
    )
    return NegativeCorrelationReport(pairs)


@dataclass(frozen=True)
class IdentityCheck:
    det: float
    e_n: float
    passed: bool


def en_identity_check(A, S: Iterable[int], rtol: float = 1e-9) -> IdentityCheck:
    """det(A_S A_S^T) against e_n of the principal submatrix L_SS of L = A^T A."""
    X = as_array(A)
    n, m = X.shape
    idx = list(check_subset(S, m, min_size=n))
    L = X[:, idx].T @ X[:, idx]
    lam = np.clip(np.linalg.eigvalsh(L), 0.0, None)
    e_n = elem_sym_poly(lam, n)
    d = det_gram(X, idx)
    scale = max(abs(d), abs(e_n), 1e-300)
    return IdentityCheck(d, e_n, abs(d - e_n) <= rtol * scale + 1e-14)


def chain_transition_matrix(A, k: int, beta: float = 1.0) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """Transition matrix of the lazy swap chain over all k-subsets.

    Proposal probability of each swap is 1 / (2 k (m - k)); acceptance
    min{1, (det ratio)^(1/beta)} with determinants computed directly.
    """
    X = as_array(A)
    n, m = X.shape
    subsets = tuple(itertools.combinations(range(m), k))
    index = {S: r for r, S in enumerate(subsets)}
    dets = np.array([det_gram(X, S) for S in subsets])
    N = len(subsets)
    P = np.zeros((N, N))
    if k == m:
        return subsets, np.eye(N)
    prop = 1.0 / (2 * k * (m - k))
    for r, S in enumerate(subsets):
        if dets[r] <= 0:
            P[r, r] = 1.0
            continue
        Sset = set(S)
        for s_in in S:
            for s_out in range(m):
                if s_out in Sset:
                    continue
                T = tuple(sorted((Sset - {s_in}) | {s_out}))
                ratio = dets[index[T]] / dets[r]
                acc = 0.0 if ratio <= 0 else min(1.0, ratio ** (1.0 / beta))
                P[r, index[T]] += prop * acc
        P[r, r] = 1.0 - P[r].sum()
    return subsets, P
