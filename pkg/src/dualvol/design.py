"""Experimental design: criteria, baseline selectors, Fedorov exchange, regression.

A regression dataset with m samples and n features is turned into the design
matrix A = X^T, so selecting experiments means selecting columns of A.
Criteria are all "lower is better":

    A  ->  ||A_S^+||_F^2 = trace((A_S A_S^T)^{-1})
    E  ->  ||A_S^+||_2^2 = 1 / lambda_min(A_S A_S^T)
    D  ->  -log det(A_S A_S^T)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .linalg import (
    SINGULARITY_TOL,
    DesignMatrix,
    SubsetSelection,
    as_array,
    check_subset,
    logdet_gram,
    numerical_rank,
    pinv_fro_sq,
    pinv_spec_sq,
)

CRITERIA = ("A", "E", "D")


class RankDeficientWarning(UserWarning):
    pass


@dataclass
class RegressionDataset:
    X: np.ndarray
    y: np.ndarray
    standardize: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DomainError(f"X {X.shape} and y {y.shape} do not align")
        if self.standardize:
            sd = X.std(axis=0)
            sd[sd == 0] = 1.0
            X = (X - X.mean(axis=0)) / sd
        self.X, self.y = X, y

    @property
    def design(self) -> DesignMatrix:
        return DesignMatrix(self.X.T)


def _eigs(A, S) -> np.ndarray | None:
    X = as_array(A)
    idx = check_subset(S, X.shape[1])
    Xs = X[:, list(idx)]
    if len(idx) < X.shape[0]:
        return None
    sv = np.linalg.svd(Xs, compute_uv=False)
    if numerical_rank(sv, Xs.shape) < X.shape[0]:
        return None
    return sv**2


def objective(A, S: Iterable[int], criterion: str) -> float:
    """Criterion value of the selection; ``inf`` when A_S is singular."""
    criterion = criterion.upper()
    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}")
    lam = _eigs(A, S)
    if lam is None:
        return math.inf
    if criterion == "A":
        return float(np.sum(1.0 / lam))
    if criterion == "E":
        return float(1.0 / lam.min())
    return float(-np.sum(np.log(lam)))


def objectives(A, S) -> dict[str, float]:
    return {c: objective(A, S, c) for c in CRITERIA}


# ---------------------------------------------------------------------------
# baseline samplers


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def leverage_scores(A) -> np.ndarray:
    """l_i = a_i^T (A A^T)^{-1} a_i; they sum to n."""
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    X = D.entries
    return np.einsum("ij,ij->j", X, D.gram_inverse @ X)


def _weighted_without_replacement(w: np.ndarray, k: int, rng) -> tuple[int, ...]:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    if k > np.count_nonzero(w):
        raise DomainError(f"only {np.count_nonzero(w)} indices have positive weight, need k={k}")
    w = w.copy()
    chosen = []
    for _ in range(k):
        i = int(rng.choice(w.size, p=w / w.sum()))
        chosen.append(i)
        w[i] = 0.0
    return tuple(sorted(chosen))


def _sel(A, S) -> SubsetSelection:
    X = as_array(A)
    ld = logdet_gram(X, S) if len(S) >= X.shape[0] else -math.inf
    return SubsetSelection(tuple(sorted(int(i) for i in S)), ld)


def sample_leverage(A, k: int, rng=None) -> SubsetSelection:
    return _sel(A, _weighted_without_replacement(leverage_scores(A), k, _rng(rng)))


def sample_predictive_length(A, k: int, rng=None) -> SubsetSelection:
    """Sequential draws without replacement, proportional to column norms."""
    X = as_array(A)
    return _sel(X, _weighted_without_replacement(np.linalg.norm(X, axis=0), k, _rng(rng)))


def sample_uniform(m: int, k: int, rng=None) -> tuple[int, ...]:
    if not 0 <= k <= m:
        raise DomainError(f"k={k} outside [0, {m}]")
    return tuple(sorted(int(i) for i in _rng(rng).choice(m, size=k, replace=False)))


# ---------------------------------------------------------------------------
# Fedorov exchange


def _swap_values(X: np.ndarray, inside: np.ndarray, outside: np.ndarray, criterion: str) -> np.ndarray:
    """Criterion value after every swap (inside[a] -> outside[b]), shape (k, m-k)."""
    Ai, Ao = X[:, inside], X[:, outside]
    G = Ai @ Ai.T
    M = np.linalg.inv(G)
    if criterion == "D":
        # det ratio (1 - h_i)(1 + h_j) + h_ij^2
        Hi = Ai.T @ M
        h_in = np.einsum("ij,ji->i", Hi, Ai)
        h_out = np.einsum("ij,ij->j", Ao, M @ Ao)
        h_io = Hi @ Ao
        ratio = (1.0 - h_in)[:, None] * (1.0 + h_out)[None, :] + h_io**2
        base = -np.linalg.slogdet(G)[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(ratio > SINGULARITY_TOL, base - np.log(np.where(ratio > 0, ratio, 1.0)), np.inf)
        return out
    out = np.empty((inside.size, outside.size))
    trM = np.trace(M)
    for a in range(inside.size):
        u = M @ Ai[:, a]
        c = 1.0 - Ai[:, a] @ u
        if criterion == "A" and c > SINGULARITY_TOL:
            M_T = M + np.outer(u, u) / c
            V = M_T @ Ao
            q = 1.0 + np.einsum("ij,ij->j", Ao, V)
            out[a] = trM + (u @ u) / c - np.einsum("ij,ij->j", V, V) / q
            continue
        # E criterion, or A with singular A_T: evaluate candidate Grams directly
        Gs = (G - np.outer(Ai[:, a], Ai[:, a]))[None] + np.einsum("ib,jb->bij", Ao, Ao)
        lam = np.linalg.eigvalsh(Gs)
        lo = lam[:, 0]
        ok = lo > SINGULARITY_TOL * np.maximum(lam[:, -1], 1e-300)
        with np.errstate(divide="ignore"):
            vals = np.sum(1.0 / lam, axis=1) if criterion == "A" else 1.0 / lo
        out[a] = np.where(ok, vals, np.inf)
    return out


@dataclass
class FedorovResult:
    selection: SubsetSelection
    criterion: str
    trace: list[float] = field(default_factory=list)
    sweeps: int = 0

    @property
    def value(self) -> float:
        return self.trace[-1]


def fedorov_exchange(A, k: int, criterion: str = "D", init: Sequence[int] | SubsetSelection | None = None,
                     max_sweeps: int = 1000, rng=None) -> FedorovResult:
    """Best-improvement exchange: each sweep scans all k(m-k) swaps and makes
    the best one if it lowers the criterion; stops at a local optimum.

    Without ``init`` a uniformly random full-rank k-subset is used.
    """
    X = as_array(A)
    n, m = X.shape
    criterion = criterion.upper()
    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}")
    if not n <= k <= m:
        raise DomainError(f"k={k} outside [{n}, {m}]")
    if init is None:
        rng = _rng(rng)
        for _ in range(100):
            S = sample_uniform(m, k, rng)
            if math.isfinite(logdet_gram(X, S)):
                break
        else:
            raise DomainError("could not draw a full-rank initial design")
    else:
        S = init.indices if isinstance(init, SubsetSelection) else check_subset(init, m)
    if len(S) != k:
        raise DomainError(f"init has {len(S)} columns, need k={k}")
    if not math.isfinite(logdet_gram(X, S)):
        raise DomainError(f"init {tuple(S)} is rank deficient")

    inside = np.array(sorted(S), dtype=np.intp)
    mask = np.zeros(m, dtype=bool)
    mask[inside] = True
    outside = np.nonzero(~mask)[0]
    current = objective(X, inside, criterion)
    trace = [current]
    sweeps = 0
    while sweeps < max_sweeps and outside.size:
        sweeps += 1
        vals = _swap_values(X, inside, outside, criterion)
        a, b = np.unravel_index(int(np.argmin(vals)), vals.shape)
        if not vals[a, b] < current - 1e-12 * max(1.0, abs(current)):
            break
        inside[a], outside[b] = outside[b], inside[a]
        # recompute from scratch so the trace never inherits update error
        current = objective(X, inside, criterion)
        trace.append(current)
    return FedorovResult(_sel(X, tuple(inside)), criterion, trace, sweeps)


# ---------------------------------------------------------------------------
# regression and bounds


def regression_eval(data: RegressionDataset, S: Iterable[int]) -> float:
    """Fit least squares on the selected samples; return ||y - X alpha|| over all."""
    idx = check_subset(S, data.X.shape[0])
    Xs, ys = data.X[list(idx)], data.y[list(idx)]
    alpha, _, rank, _ = np.linalg.lstsq(Xs, ys, rcond=None)
    if rank < data.X.shape[1]:
        warnings.warn(f"selected samples have rank {rank} < {data.X.shape[1]}; using the minimum-norm fit",
                      RankDeficientWarning, stacklevel=2)
    return float(np.linalg.norm(data.y - data.X @ alpha))


def expectation_bounds(A, k: int) -> tuple[float, float]:
    """Right-hand sides for E||A_S^+||_F^2 and E||A_S^+||_2^2 under DVS."""
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    n, m = D.n, D.m
    fro = (m - n + 1) / (k - n + 1) * pinv_fro_sq(D.entries)
    spec = (1.0 + n * (m - k) / (k - n + 1)) * pinv_spec_sq(D.entries)
    return fro, spec


@dataclass
class BoundReport:
    estimator: str
    mean_fro: float
    mean_spec: float
    se_fro: float
    se_spec: float
    bound_fro: float
    bound_spec: float
    n_samples: int | None = None
    rtol: float = 0.0

    @property
    def fro_holds(self) -> bool:
        return self.mean_fro <= self.bound_fro * (1.0 + self.rtol) + 3.0 * self.se_fro

    @property
    def spec_holds(self) -> bool:
        return self.mean_spec <= self.bound_spec * (1.0 + self.rtol) + 3.0 * self.se_spec

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "fro": {"value": float(self.mean_fro), "se": float(self.se_fro),
                    "bound": float(self.bound_fro), "holds": bool(self.fro_holds)},
            "spec": {"value": float(self.mean_spec), "se": float(self.se_spec),
                     "bound": float(self.bound_spec), "holds": bool(self.spec_holds)},
            "n_samples": self.n_samples,
        }


def bound_check(A, k: int, estimator: str = "exact", subsets: Sequence[Sequence[int]] | None = None,
                n_samples: int = 10_000, rng=None) -> BoundReport:
    """Compare ||A_S^+||^2 (Frobenius and spectral) with their DVS expectation bounds.

    ``estimator``: ``"exact"`` enumerates the distribution; ``"single"`` uses
    the one subset in ``subsets``; ``"mc"`` averages ``subsets`` or, if not
    given, ``n_samples`` exact DVS draws and reports standard errors.
    """
    from .exact import DvsProblem, sample_exact
    from .oracle import enumerate_distribution

    bfro, bspec = expectation_bounds(A, k)
    X = as_array(A)
    if estimator == "exact":
        dist = enumerate_distribution(X, k)
        fro = dist.expectation(lambda S: pinv_fro_sq(X[:, list(S)]))
        spec = dist.expectation(lambda S: pinv_spec_sq(X[:, list(S)]))
        # equality is attained (e.g. k = n), so allow rounding
        return BoundReport("exact", fro, spec, 0.0, 0.0, bfro, bspec, rtol=1e-8)
    if estimator == "single":
        if not subsets or len(subsets) != 1:
            raise DomainError("single estimator needs exactly one subset")
        S = list(subsets[0])
        return BoundReport("single", pinv_fro_sq(X[:, S]), pinv_spec_sq(X[:, S]), 0.0, 0.0, bfro, bspec, 1)
    if estimator == "mc":
        if subsets is None:
            problem = DvsProblem(X, k)
            rng = _rng(rng)
            subsets = [sample_exact(problem, rng).subset for _ in range(n_samples)]
        f = np.array([pinv_fro_sq(X[:, list(S)]) for S in subsets])
        s = np.array([pinv_spec_sq(X[:, list(S)]) for S in subsets])
        N = len(subsets)
        se = (lambda v: float(v.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0)
        return BoundReport("mc", float(f.mean()), float(s.mean()), se(f), se(s), bfro, bspec, N)
    raise DomainError(f"unknown estimator {estimator!r}")
