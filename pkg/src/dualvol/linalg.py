"""Dense linear-algebra primitives shared by the samplers.

Everything here works on an n x m design matrix ``A`` whose columns are the
items being selected.  Column indices are 0-based internally; reports convert
to 1-based at the boundary.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateUpdateError, DomainError, SingularMatrixError

DEFAULT_RANK_TOL = 1e-10
REFRESH_INTERVAL = 64
SINGULARITY_TOL = 1e-10


def rank_tol() -> float:
    """Relative factor of the numerical-rank test; ``DVS_RANK_TOL`` overrides it."""
    value = os.environ.get("DVS_RANK_TOL")
    if value is None or value.strip() == "":
        return DEFAULT_RANK_TOL
    tol = float(value)
    if not tol > 0:
        raise DomainError(f"DVS_RANK_TOL must be positive, got {value!r}")
    return tol


def numerical_rank(sv: np.ndarray, shape: tuple[int, int]) -> int:
    """Number of singular values above ``rank_tol * sigma_max * max(shape)``."""
    sv = np.asarray(sv, dtype=float)
    if sv.size == 0 or sv[0] <= 0:
        return 0
    cutoff = rank_tol() * sv[0] * max(shape)
    return int(np.count_nonzero(sv > cutoff))


def is_full_row_rank(X: np.ndarray) -> bool:
    n = X.shape[0]
    if n == 0:
        return True
    if X.shape[1] < n:
        return False
    sv = np.linalg.svd(X, compute_uv=False)
    return numerical_rank(sv, X.shape) == n


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Immutable n x m matrix with full row rank (n <= m).

    Singular values and the Gram inverse ``(A A^T)^{-1}`` are computed lazily
    and cached.
    """

    entries: np.ndarray

    def __post_init__(self):
        X = np.array(self.entries, dtype=float, copy=True)
        if X.ndim != 2:
            raise DomainError(f"expected a 2-d matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DomainError("matrix contains non-finite entries")
        n, m = X.shape
        if n < 1 or n > m:
            raise DomainError(f"need 1 <= n <= m, got n={n}, m={m}")
        X.setflags(write=False)
        object.__setattr__(self, "entries", X)
        if numerical_rank(self.singular_values, X.shape) < n:
            raise SingularMatrixError(
                f"matrix does not have full row rank (sigma_min={self.singular_values[-1]:.3e})"
            )

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def singular_values(self) -> np.ndarray:
        sv = np.linalg.svd(self.entries, compute_uv=False)
        sv.setflags(write=False)
        return sv

    @cached_property
    def gram_inverse(self) -> np.ndarray:
        inv = np.linalg.inv(self.entries @ self.entries.T)
        inv.setflags(write=False)
        return inv

    @cached_property
    def logdet_gram(self) -> float:
        return float(2.0 * np.sum(np.log(self.singular_values)))

    def columns(self, S: Iterable[int]) -> np.ndarray:
        return self.entries[:, list(S)]

    def __repr__(self):
        return f"DesignMatrix(n={self.n}, m={self.m})"


def as_array(A) -> np.ndarray:
    if isinstance(A, DesignMatrix):
        return A.entries
    return np.asarray(A, dtype=float)


def check_subset(S: Iterable[int], m: int, min_size: int = 0, max_size: int | None = None) -> tuple[int, ...]:
    """Validate an index set: distinct integers in ``range(m)``; returns it sorted."""
    idx = tuple(int(i) for i in S)
    if len(set(idx)) != len(idx):
        raise DomainError(f"duplicate indices in {idx}")
    for i in idx:
        if not 0 <= i < m:
            raise DomainError(f"index {i} out of range for m={m}")
    if len(idx) < min_size:
        raise DomainError(f"need at least {min_size} indices, got {len(idx)}")
    if max_size is not None and len(idx) > max_size:
        raise DomainError(f"need at most {max_size} indices, got {len(idx)}")
    return tuple(sorted(idx))


@dataclass(frozen=True)
class SubsetSelection:
    """An unordered k-subset of columns with its cached log det(A_S A_S^T)."""

    indices: tuple[int, ...]
    logdet: float

    @property
    def k(self) -> int:
        return len(self.indices)

    def one_based(self) -> list[int]:
        return [i + 1 for i in sorted(self.indices)]


def selection(A, S: Iterable[int]) -> SubsetSelection:
    idx = check_subset(S, as_array(A).shape[1])
    return SubsetSelection(idx, logdet_gram(A, idx) if idx else -math.inf)


# ---------------------------------------------------------------------------
# elementary symmetric polynomials


def elem_sym_all(values: Sequence[float], j_max: int | None = None) -> np.ndarray:
    """All of e_0..e_{j_max} via the recurrence e_j <- e_j + lam * e_{j-1}."""
    lam = np.asarray(values, dtype=float).ravel()
    N = lam.size
    j_max = N if j_max is None else j_max
    e = np.zeros(j_max + 1)
    e[0] = 1.0
    for i, x in enumerate(lam):
        top = min(i + 1, j_max)
        e[1 : top + 1] += x * e[:top]
    return e


def elem_sym_poly(values: Sequence[float], j: int) -> float:
    """e_j(values): the sum over all j-subsets of the products of their entries.

    >>> elem_sym_poly([1, 2, 3], 2)
    11.0
    """
    N = len(values)
    if not 0 <= j <= N:
        raise DomainError(f"degree {j} outside [0, {N}]")
    return float(elem_sym_all(values, j)[j])


def log_elem_sym_poly(values: Sequence[float], j: int) -> float:
    """log e_j(values) for nonnegative ``values``, without overflow.

    Returns -inf when e_j vanishes, including ``j > len(values)`` and ``j < 0``.
    """
    lam = np.asarray(values, dtype=float).ravel()
    N = lam.size
    if j < 0 or j > N:
        return -math.inf
    if np.any(lam < 0):
        raise DomainError("log_elem_sym_poly needs nonnegative values")
    with np.errstate(divide="ignore"):
        loglam = np.log(lam)
    le = np.full(j + 1, -np.inf)
    le[0] = 0.0
    for i, ll in enumerate(loglam):
        top = min(i + 1, j)
        le[1 : top + 1] = np.logaddexp(le[1 : top + 1], ll + le[:top])
    return float(le[j])


# ---------------------------------------------------------------------------
# Gram determinants and pseudoinverse norms


def logdet_gram(A, S: Iterable[int]) -> float:
    """log det(A_S A_S^T); -inf when A_S is rank deficient."""
    X = as_array(A)
    n, m = X.shape
    idx = check_subset(S, m, min_size=n)
    if n == 0:
        return 0.0
    sv = np.linalg.svd(X[:, list(idx)], compute_uv=False)
    if numerical_rank(sv, (n, len(idx))) < n:
        return -math.inf
    return float(2.0 * np.sum(np.log(sv)))


def det_gram(A, S: Iterable[int]) -> float:
    """det(A_S A_S^T) for a column subset with ``|S| >= n``."""
    return math.exp(logdet_gram(A, S))


def _full_rank_sv(X) -> np.ndarray:
    X = as_array(X)
    n = X.shape[0]
    if X.shape[1] < n:
        raise SingularMatrixError(f"{X.shape} matrix cannot have full row rank")
    sv = np.linalg.svd(X, compute_uv=False)
    if numerical_rank(sv, X.shape) < n:
        raise SingularMatrixError("matrix is rank deficient")
    return sv


def pinv_fro_sq(X) -> float:
    """||X^+||_F^2 = trace((X X^T)^{-1}) for a full-row-rank matrix."""
    sv = _full_rank_sv(X)
    return float(np.sum(1.0 / sv**2))


def pinv_spec_sq(X) -> float:
    """||X^+||_2^2 = 1 / sigma_min(X)^2 for a full-row-rank matrix."""
    sv = _full_rank_sv(X)
    return float(1.0 / sv[-1] ** 2)


# ---------------------------------------------------------------------------
# rank-one maintenance of (A_T A_T^T)^{-1}


@dataclass
class GramInverseState:
    """Running inverse and log-determinant of ``A_T A_T^T`` for a column list T.

    ``add`` and ``remove`` apply Sherman-Morrison and the matrix determinant
    lemma in O(n^2); every ``refresh_interval`` operations the state is
    refactorized from scratch to bound drift.
    """

    A: np.ndarray
    subset: list[int]
    inverse: np.ndarray
    logdet: float
    update_count: int = 0
    refresh_interval: int = REFRESH_INTERVAL
    refreshes: int = field(default=0, repr=False)

    @classmethod
    def from_subset(cls, A, subset: Iterable[int], refresh_interval: int = REFRESH_INTERVAL):
        X = as_array(A)
        idx = list(check_subset(subset, X.shape[1], min_size=X.shape[0]))
        state = cls(X, idx, np.empty((0, 0)), 0.0, refresh_interval=refresh_interval)
        state.refresh()
        return state

    def copy(self) -> "GramInverseState":
        return GramInverseState(
            self.A, list(self.subset), self.inverse.copy(), self.logdet,
            self.update_count, self.refresh_interval, self.refreshes,
        )

    def refresh(self):
        At = self.A[:, self.subset]
        ld = logdet_gram(self.A, self.subset)
        if not math.isfinite(ld):
            raise SingularMatrixError(f"subset {sorted(self.subset)} is rank deficient")
        self.inverse = np.linalg.inv(At @ At.T)
        self.logdet = ld
        self.update_count = 0
        self.refreshes += 1

    def _tick(self):
        self.update_count += 1
        if self.update_count >= self.refresh_interval:
            self.refresh()

    def add(self, i: int) -> "GramInverseState":
        i = int(i)
        if i in self.subset:
            raise DomainError(f"column {i} already in subset")
        a = self.A[:, i]
        Ma = self.inverse @ a
        q = 1.0 + a @ Ma
        self.inverse = self.inverse - np.outer(Ma, Ma) / q
        self.logdet += math.log(q)
        self.subset.append(i)
        self._tick()
        return self

    def remove(self, i: int) -> "GramInverseState":
        i = int(i)
        if i not in self.subset:
            raise DomainError(f"column {i} not in subset")
        a = self.A[:, i]
        Ma = self.inverse @ a
        c = 1.0 - a @ Ma
        if c <= SINGULARITY_TOL:
            raise DegenerateUpdateError(f"removing column {i} makes the Gram matrix singular (1 - a'Ma = {c:.3e})")
        self.inverse = self.inverse + np.outer(Ma, Ma) / c
        self.logdet += math.log(c)
        self.subset.remove(i)
        self._tick()
        return self


def gram_update(state: GramInverseState, add: int) -> GramInverseState:
    """Return a new state with column ``add`` appended."""
    return state.copy().add(add)


def gram_downdate(state: GramInverseState, remove: int) -> GramInverseState:
    """Return a new state with column ``remove`` dropped.

    Raises DegenerateUpdateError when the reduced Gram matrix is singular.
    """
    return state.copy().remove(remove)
