"""Approximate dual volume sampling through volume sampling.

Perturbing by eps turns det(A_S A_S^T) into det(A_S A_S^T + eps I), which is
proportional to det(A_S^T A_S + eps I_k): the volume-sampling weight of the
columns of the stacked matrix [A; sqrt(eps) I_m].  A Gaussian projection of
that stack roughly preserves k-column volumes, so volume-sampling the
projected columns approximates the original distribution.

The volume sampler here enumerates all k-subsets; it is meant for desk-scale
verification, not for large m.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EnumerationCapError
from .linalg import DesignMatrix, SubsetSelection, as_array, check_subset, logdet_gram

ENUMERATION_CAP = 200_000
PROJECTION_CONSTANT = 8.0


@dataclass(frozen=True)
class AugmentedMatrix:
    """The (n + m) x m matrix [A; sqrt(eps) I_m], kept implicit."""

    base: DesignMatrix
    eps: float

    def __post_init__(self):
        if not isinstance(self.base, DesignMatrix):
            object.__setattr__(self, "base", DesignMatrix(self.base))
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.base.n + self.base.m, self.base.m)

    def gram(self, S) -> np.ndarray:
        """A_S^T A_S + eps I_k."""
        As = self.base.entries[:, list(S)]
        return As.T @ As + self.eps * np.eye(As.shape[1])

    def project(self, d: int, rng) -> np.ndarray:
        """(1/sqrt(d)) G [A; sqrt(eps) I] without forming the stack."""
        n, m = self.base.n, self.base.m
        G = rng.standard_normal((d, n + m))
        return (G[:, :n] @ self.base.entries + math.sqrt(self.eps) * G[:, n:]) / math.sqrt(d)


def perturbed_det(A, S, eps: float) -> float:
    """det(A_S^T A_S + eps I_k); equals eps^(k-n) det(A_S A_S^T + eps I_n)."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    X = as_array(A)
    idx = check_subset(S, X.shape[1])
    As = X[:, list(idx)]
    return float(np.linalg.det(As.T @ As + eps * np.eye(len(idx))))


def project_gaussian(X, d: int, rng) -> np.ndarray:
    """Scaled Gaussian projection of the columns of X to ``d`` dimensions.

    Returns X unchanged when d is at least its row count.
    """
    X = np.asarray(X, dtype=float)
    if d < 1:
        raise DomainError(f"target dimension must be >= 1, got {d}")
    r = X.shape[0]
    if d >= r:
        return X
    G = _rng(rng).standard_normal((d, r))
    return G @ X / math.sqrt(d)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _check_cap(m: int, k: int, cap: int):
    total = math.comb(m, k)
    if total > cap:
        raise EnumerationCapError(
            f"C({m},{k}) = {total} subsets exceeds the enumeration cap {cap}; use the exact DVS sampler instead"
        )


def volume_weights(X, k: int, cap: int = ENUMERATION_CAP) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All k-subsets with their volume-sampling log weights log det(X_S^T X_S)."""
    if isinstance(X, AugmentedMatrix):
        m = X.shape[1]
        gram = X.gram
    else:
        X = np.asarray(X, dtype=float)
        m = X.shape[1]

        def gram(S):
            Xs = X[:, list(S)]
            return Xs.T @ Xs

    if not 0 <= k <= m:
        raise DomainError(f"k={k} outside [0, {m}]")
    _check_cap(m, k, cap)
    subsets = list(itertools.combinations(range(m), k))
    if k == 0:
        return subsets, np.zeros(1)
    grams = np.stack([gram(S) for S in subsets])
    sign, logw = np.linalg.slogdet(grams)
    logw = np.where(sign > 0, logw, -np.inf)
    return subsets, logw


def volume_sample_enum(X, k: int, rng, cap: int = ENUMERATION_CAP) -> SubsetSelection:
    """Exact volume sample: P(S) proportional to det(X_S^T X_S), by enumeration."""
    subsets, logw = volume_weights(X, k, cap)
    if not np.isfinite(logw).any():
        raise DomainError("all k-subsets have zero volume")
    p = np.exp(logw - logw.max())
    i = int(_rng(rng).choice(len(subsets), p=p / p.sum()))
    return SubsetSelection(subsets[i], float(logw[i]))


def projection_dim(n: int, m: int, k: int, delta2: float, c: float = PROJECTION_CONSTANT) -> int:
    """ceil(c k^2 ln m / delta2^2), clamped to the n + m rows of the stack."""
    d = math.ceil(c * k * k * math.log(max(m, 2)) / delta2**2)
    return int(min(d, n + m))


@dataclass(frozen=True)
class ApproxResult:
    selection: SubsetSelection
    d: int
    bypassed: bool
    delta1: float
    delta1_exact: float


def sample_approx(A, k: int, eps: float, delta2: float, rng=None,
                  c: float = PROJECTION_CONSTANT, cap: int = ENUMERATION_CAP) -> ApproxResult:
    """Approximate DVS sample via perturbation, projection and volume sampling.

    ``delta1`` reports the linearized distortion n eps / sigma_min(A_S)^2 of
    the returned set; ``delta1_exact`` the unlinearized (1 + eps/sigma^2)^n - 1.
    """
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not 0 < delta2 <= 0.5:
        raise DomainError(f"delta2 must lie in (0, 1/2], got {delta2}")
    if not D.n <= k <= D.m:
        raise DomainError(f"k={k} outside [{D.n}, {D.m}]")
    rng = _rng(rng)
    aug = AugmentedMatrix(D, eps)
    d = projection_dim(D.n, D.m, k, delta2, c)
    bypass = d >= aug.shape[0]
    target = aug if bypass else aug.project(d, rng)
    sel = volume_sample_enum(target, k, rng, cap)
    S = sel.indices
    smin2 = np.linalg.svd(D.entries[:, list(S)], compute_uv=False)[-1] ** 2
    with np.errstate(divide="ignore"):
        lin = D.n * eps / smin2
        exact = (1.0 + eps / smin2) ** D.n - 1.0
    return ApproxResult(SubsetSelection(S, logdet_gram(D, S)), d, bypass, float(lin), float(exact))
