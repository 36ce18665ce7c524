"""Run every exact-vs-enumeration check on one (A, k) instance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .derand import conditional_expectation_fro, derandomized_select
from .design import bound_check
from .exact import DvsProblem, marginal, sample_exact
from .linalg import DesignMatrix, det_gram, pinv_fro_sq
from .mcmc import ChainState, acceptance_ratio, greedy_init


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_validation(A, k: int, seed: int = 0, n_samples: int = 20_000, alpha: float = 0.01) -> list[Check]:
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    X, n, m = D.entries, D.n, D.m
    problem = DvsProblem(D, k)
    dist = oracle.enumerate_distribution(X, k)
    checks = []

    err = _rel(problem.logZ, dist.logZ) if math.isfinite(dist.logZ) else math.inf
    checks.append(Check("partition_function", err <= 1e-9, f"log Z={problem.logZ:.12g}, enumerated {dist.logZ:.12g}"))

    worst = 0.0
    for size in range(0, min(k, 3) + 1):
        for T in itertools.combinations(range(m), size):
            p = marginal(problem, T).probability
            q = dist.marginal(T)
            worst = max(worst, abs(p - q) / max(q, 1e-12) if q > 1e-12 else abs(p))
    checks.append(Check("marginals", worst <= 1e-6, f"max relative error {worst:.3e} over |T| <= {min(k, 3)}"))

    worst = 0.0
    for size in range(0, min(k, 2) + 1):
        for T in itertools.combinations(range(m), size):
            if dist.marginal(T) <= 1e-12:
                continue
            v = conditional_expectation_fro(X, k, T)
            ref = dist.expectation(lambda S: pinv_fro_sq(X[:, list(S)]), given=T)
            worst = max(worst, _rel(v, ref))
    checks.append(Check("conditional_expectation", worst <= 1e-6, f"max relative error {worst:.3e}"))

    rng = np.random.default_rng(seed)
    counts = oracle.counts_of(sample_exact(problem, rng).subset for _ in range(n_samples))
    gof = oracle.chi_square_gof(counts, dist, alpha)
    tv = oracle.tv_distance(counts, dist)
    checks.append(Check("exact_sampler_chi_square", gof.passed or gof.inconclusive,
                        f"statistic={gof.statistic:.4g}, dof={gof.dof}, p={gof.p_value:.4g}, TV={tv:.4f}, N={n_samples}"))

    trace = derandomized_select(D, k)
    checks.append(Check("derandomization_bounds", trace.within_bounds,
                        f"fro {trace.final_fro_sq:.6g} <= {trace.bound_fro:.6g}; spec {trace.final_spec_sq:.6g} <= {trace.bound_spec:.6g}"))

    br = bound_check(X, k, "exact")
    checks.append(Check("expectation_bounds", br.fro_holds and br.spec_holds,
                        f"E fro {br.mean_fro:.6g} vs {br.bound_fro:.6g}; E spec {br.mean_spec:.6g} vs {br.bound_spec:.6g}"))

    nc = oracle.negative_correlation_check(X, k, dist)
    checks.append(Check("negative_correlation", nc.all_hold, f"{len(nc.violations)} violations over {len(nc.pairs)} pairs"))

    ok = all(oracle.en_identity_check(X, S).passed for S in dist.subsets)
    checks.append(Check("e_n_identity", ok, f"{len(dist.subsets)} subsets"))

    subsets, P = oracle.chain_transition_matrix(X, k)
    pi = np.array([dist.prob(S) for S in subsets])
    flow = pi[:, None] * P
    db = float(np.max(np.abs(flow - flow.T)) / max(pi.max(), 1e-300))
    checks.append(Check("detailed_balance", db <= 1e-9, f"max |pi_i P_ij - pi_j P_ji| / max pi = {db:.3e}"))

    worst = 0.0
    if m > k:
        S0 = greedy_init(D, k)
        state = ChainState.start(X, S0.indices)
        for s_in in S0.indices:
            for s_out in set(range(m)) - set(S0.indices):
                S1 = [s_out if i == s_in else i for i in S0.indices]
                direct = det_gram(X, S1) / det_gram(X, S0.indices)
                worst = max(worst, abs(acceptance_ratio(state, s_in, s_out) - direct) / max(direct, 1e-8))
    checks.append(Check("acceptance_ratio", worst <= 1e-8, f"max relative error {worst:.3e}"))
    return checks
