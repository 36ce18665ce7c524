"""Greedy derandomization of dual volume sampling.

The conditional expectation of ||A_S^+||_F^2 given an ordered prefix is a ratio
of unnormalized marginals: the sum over row-deleted matrices A^(j) in the
numerator, A itself in the denominator.  Appending, at every step, the column
that minimizes it never increases the expectation, so the final set inherits
the bound of the randomized sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InfeasibleError, NullEventError
from .exact import _marginal_terms
from .linalg import DesignMatrix, as_array, check_subset, pinv_fro_sq, pinv_spec_sq


def _log_numerator(X: np.ndarray, k: int, T: tuple[int, ...]) -> float:
    terms = [_marginal_terms(np.delete(X, j, axis=0), k, T)[0] for j in range(X.shape[0])]
    return float(logsumexp(terms))


def conditional_expectation_fro(A, k: int, prefix: Sequence[int] = ()) -> float:
    """E[ ||A_S^+||_F^2 | s_1..s_t = prefix ] under dual volume sampling.

    Assumes every k-subset of columns with nonzero weight has full row rank,
    which holds for matrices in general position.
    """
    X = as_array(A)
    n, m = X.shape
    T = check_subset(prefix, m)
    if len(T) > k or not n <= k <= m:
        raise DomainError(f"need |prefix| <= k and n <= k <= m; got |prefix|={len(T)}, k={k}, n={n}, m={m}")
    denom = _marginal_terms(X, k, T)[0]
    if denom == -math.inf:
        raise NullEventError(f"prefix {T} has zero marginal probability")
    return math.exp(_log_numerator(X, k, T) - denom)


@dataclass
class DerandTrace:
    chosen: list[int]
    per_step: list[dict[int, float]]
    path_values: list[float]
    final_fro_sq: float
    final_spec_sq: float
    bound_fro: float
    bound_spec: float

    @property
    def subset(self) -> tuple[int, ...]:
        return tuple(sorted(self.chosen))

    @property
    def within_bounds(self) -> bool:
        return self.final_fro_sq <= self.bound_fro and self.final_spec_sq <= self.bound_spec


def derandomized_select(A, k: int) -> DerandTrace:
    """Greedy conditional-expectation selection of k columns.

    Ties go to the lowest column index.
    """
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    X, n, m = D.entries, D.n, D.m
    if not n <= k <= m:
        raise DomainError(f"k={k} outside [{n}, {m}]")
    ratio = (m - n + 1) / (k - n + 1)
    bound_fro = ratio * pinv_fro_sq(X)
    bound_spec = n * ratio * pinv_spec_sq(X)

    chosen: list[int] = []
    per_step = []
    path = [conditional_expectation_fro(X, k, ())]
    for _ in range(k):
        values = {}
        for j in range(m):
            if j in chosen:
                continue
            try:
                values[j] = conditional_expectation_fro(X, k, chosen + [j])
            except NullEventError:
                continue
        if not values:
            raise InfeasibleError(f"every extension of {chosen} is a null event")
        best = min(values, key=lambda j: (values[j], j))
        chosen.append(best)
        per_step.append(values)
        path.append(values[best])

    S = sorted(chosen)
    return DerandTrace(
        chosen=chosen,
        per_step=per_step,
        path_values=path,
        final_fro_sq=pinv_fro_sq(X[:, S]),
        final_spec_sq=pinv_spec_sq(X[:, S]),
        bound_fro=bound_fro,
        bound_spec=bound_spec,
    )
