"""Swap-chain MCMC for dual volume sampling.

Each step flips a fair coin; on heads it proposes exchanging a uniformly chosen
member of S for a uniformly chosen non-member and accepts with probability
min{1, (det ratio)^(1/beta)}.  beta = 1 targets P(S; A) exactly; small beta
concentrates on high-determinant sets and approaches Fedorov's exchange.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateUpdateError, DomainError, InfeasibleError, SingularMatrixError
from .exact import DvsProblem
from .linalg import (
    REFRESH_INTERVAL,
    SINGULARITY_TOL,
    DesignMatrix,
    GramInverseState,
    SubsetSelection,
    as_array,
    check_subset,
    logdet_gram,
)

TRACE_EVERY = 100


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# initialization


def greedy_init(A, k: int, eps: float | None = None) -> SubsetSelection:
    """Add columns one at a time, each maximizing det(A_S A_S^T + eps I).

    ``eps`` defaults to 1e-3 * sigma_n(A)^2.
    """
    D = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    X, n, m = D.entries, D.n, D.m
    if not n <= k <= m:
        raise DomainError(f"k={k} outside [{n}, {m}]")
    if eps is None:
        eps = 1e-3 * D.singular_values[-1] ** 2
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    Kinv = np.eye(n) / eps
    free = np.ones(m, dtype=bool)
    chosen = []
    for _ in range(k):
        gain = np.einsum("ij,ij->j", X, Kinv @ X)
        gain[~free] = -np.inf
        i = int(np.argmax(gain))
        a = X[:, i]
        Ka = Kinv @ a
        Kinv -= np.outer(Ka, Ka) / (1.0 + a @ Ka)
        free[i] = False
        chosen.append(i)
    S = tuple(sorted(chosen))
    ld = logdet_gram(X, S)
    if not math.isfinite(ld):
        raise InfeasibleError(f"greedy selection {S} is rank deficient")
    return SubsetSelection(S, ld)


def _dsq_once(X: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    n, m = X.shape
    chosen: list[int] = []
    free = np.ones(m, dtype=bool)
    resid = X.copy()
    scale = max(float(np.max(np.sum(X**2, axis=0))), 1e-300)
    for _ in range(k):
        w = np.sum(resid**2, axis=0)
        w[~free] = 0.0
        w[w <= 1e-12 * scale] = 0.0
        if w.sum() <= 0:
            # chosen columns already span: fall back to squared distance to the
            # nearest chosen column, then to uniform
            d2 = np.min(
                np.sum((X[:, :, None] - X[:, None, chosen]) ** 2, axis=0), axis=1
            ) if chosen else np.sum(X**2, axis=0)
            w = np.where(free, d2, 0.0)
            if w.sum() <= 0:
                w = free.astype(float)
        i = int(rng.choice(m, p=w / w.sum()))
        chosen.append(i)
        free[i] = False
        q = resid[:, i]
        qq = q @ q
        if qq > 1e-12 * scale:
            resid = resid - np.outer(q, q @ resid) / qq
    return chosen


def d_squared_init(A, k: int, rng=None, retries: int = 10) -> SubsetSelection:
    """k-means++-style seeding adapted to column selection.

    The first column is drawn proportionally to its squared norm, each later
    one proportionally to its squared distance from the span of the columns
    already drawn.  Retries up to ``retries`` times, then falls back to
    :func:`greedy_init`.
    """
    X = as_array(A)
    n, m = X.shape
    if not n <= k <= m:
        raise DomainError(f"k={k} outside [{n}, {m}]")
    rng = _rng(rng)
    for _ in range(retries):
        S = tuple(sorted(_dsq_once(X, k, rng)))
        ld = logdet_gram(X, S)
        if math.isfinite(ld):
            return SubsetSelection(S, ld)
    try:
        return greedy_init(X, k)
    except (InfeasibleError, SingularMatrixError) as exc:
        raise InfeasibleError("D^2 seeding and greedy fallback both failed") from exc


# ---------------------------------------------------------------------------
# chain


@dataclass
class ChainConfig:
    k: int
    steps: int | None = None
    eps_tv: float = 0.05
    beta: float = 1.0
    seed: int = 0
    init: str | Sequence[int] = "greedy"
    refresh_interval: int = REFRESH_INTERVAL
    greedy_eps: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.steps is not None and self.steps < 0:
            raise DomainError(f"steps must be nonnegative, got {self.steps}")
        if not 0 < self.eps_tv < 1:
            raise DomainError(f"eps_tv must lie in (0, 1), got {self.eps_tv}")


@dataclass
class ChainState:
    gram: GramInverseState
    inside: list[int]
    outside: list[int]
    step: int = 0
    accept_count: int = 0

    @classmethod
    def start(cls, A, S: Sequence[int], refresh_interval: int = REFRESH_INTERVAL) -> "ChainState":
        X = as_array(A)
        S = check_subset(S, X.shape[1], min_size=X.shape[0])
        gram = GramInverseState.from_subset(X, S, refresh_interval)
        inside = list(S)
        outside = [i for i in range(X.shape[1]) if i not in set(S)]
        return cls(gram, inside, outside)

    @property
    def A(self) -> np.ndarray:
        return self.gram.A

    @property
    def current(self) -> SubsetSelection:
        return SubsetSelection(tuple(sorted(self.inside)), self.gram.logdet)


def acceptance_ratio(state: ChainState, s_in: int, s_out: int) -> float:
    """det(A_{S - s_in + s_out} ...) / det(A_S A_S^T) by the determinant lemma.

    With T = S - {s_in} and M_T = (A_T A_T^T)^{-1} the ratio is
    (1 + a_out' M_T a_out) / (1 + a_in' M_T a_in).  Falls back to direct
    log-determinants when A_T is singular.
    """
    X = state.A
    a_in, a_out = X[:, s_in], X[:, s_out]
    M = state.gram.inverse
    u = M @ a_in
    c = 1.0 - a_in @ u
    if c <= SINGULARITY_TOL:
        S = list(state.inside)
        S[S.index(s_in)] = s_out
        return math.exp(logdet_gram(X, S) - state.gram.logdet)
    M_T = M + np.outer(u, u) / c
    return float((1.0 + a_out @ M_T @ a_out) / (1.0 + a_in @ M_T @ a_in))


def accept_probability(ratio: float, beta: float) -> float:
    if ratio <= 0.0:
        return 0.0
    return math.exp(min(0.0, math.log(ratio) / beta))


def chain_step(state: ChainState, rng, beta: float = 1.0) -> ChainState:
    """One lazy Metropolis swap step, applied in place."""
    state.step += 1
    k, rest = len(state.inside), len(state.outside)
    if rng.random() >= 0.5 or rest == 0:
        return state
    pi, po = int(rng.integers(k)), int(rng.integers(rest))
    s_in, s_out = state.inside[pi], state.outside[po]
    q = accept_probability(acceptance_ratio(state, s_in, s_out), beta)
    if rng.random() < q:
        swap(state, pi, po)
    return state


def swap(state: ChainState, pi: int, po: int):
    s_in, s_out = state.inside[pi], state.outside[po]
    try:
        state.gram.add(s_out)
        state.gram.remove(s_in)
    except DegenerateUpdateError:
        state.gram.subset = [i for i in state.gram.subset if i != s_in]
        if s_out not in state.gram.subset:
            state.gram.subset.append(s_out)
        state.gram.refresh()
    state.inside[pi], state.outside[po] = s_out, s_in
    state.accept_count += 1


def mixing_budget(problem: DvsProblem, S0, eps_tv: float) -> int:
    """ceil(2 k (m - k) (log 1/P(S0) + log 1/eps_tv))."""
    idx = S0.indices if isinstance(S0, SubsetSelection) else check_subset(S0, problem.m)
    if len(idx) != problem.k:
        raise DomainError(f"|S0|={len(idx)} differs from k={problem.k}")
    if not 0 < eps_tv < 1:
        raise DomainError(f"eps_tv must lie in (0, 1), got {eps_tv}")
    ld = logdet_gram(problem.A, idx)
    if ld == -math.inf:
        raise DomainError(f"S0={idx} has zero probability")
    width = 2 * problem.k * (problem.m - problem.k)
    if width == 0:
        return 0
    log_inv_p = max(problem.logZ - ld, 0.0)
    return int(math.ceil(width * (log_inv_p + math.log(1.0 / eps_tv)) - 1e-9))


@dataclass
class ChainResult:
    selection: SubsetSelection
    init: SubsetSelection
    steps: int
    accepted: int
    logdet_trace: list[float] = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0


def initial_selection(problem: DvsProblem, config: ChainConfig, rng) -> SubsetSelection:
    X = problem.A
    if isinstance(config.init, str):
        if config.init == "greedy":
            return greedy_init(X, problem.k, config.greedy_eps)
        if config.init in ("d_squared", "kmeans++"):
            return d_squared_init(X, problem.k, rng)
        raise DomainError(f"unknown init {config.init!r}")
    S = check_subset(config.init, problem.m)
    if len(S) != problem.k:
        raise DomainError(f"init has {len(S)} columns, need k={problem.k}")
    ld = logdet_gram(X, S)
    if ld == -math.inf:
        raise DomainError(f"init {S} is rank deficient")
    return SubsetSelection(S, ld)


def resolve_steps(problem: DvsProblem, config: ChainConfig, S0: SubsetSelection) -> int:
    if config.steps is not None:
        return config.steps
    return mixing_budget(problem, S0, config.eps_tv)


def sample_mcmc(problem: DvsProblem, config: ChainConfig, rng=None) -> ChainResult:
    """Run one chain from its initialization and return the final set."""
    if config.k != problem.k:
        raise DomainError(f"config.k={config.k} differs from problem.k={problem.k}")
    rng = _rng(config.seed if rng is None else rng)
    S0 = initial_selection(problem, config, rng)
    steps = resolve_steps(problem, config, S0)
    state = ChainState.start(problem.A.entries, S0.indices, config.refresh_interval)
    trace = [state.gram.logdet]
    for t in range(steps):
        chain_step(state, rng, config.beta)
        if (t + 1) % TRACE_EVERY == 0:
            trace.append(state.gram.logdet)
    state.gram.refresh()
    return ChainResult(state.current, S0, steps, state.accept_count, trace)


def run_chains(problem: DvsProblem, config: ChainConfig, n_chains: int, rng=None) -> np.ndarray:
    """Run ``n_chains`` independent chains in lockstep; returns sorted final sets.

    Vectorized over chains: each chain keeps (A_S A_S^T)^{-1}, updated by a
    rank-two Woodbury step on acceptance and refactorized every
    ``config.refresh_interval`` steps.
    """
    if config.k != problem.k:
        raise DomainError(f"config.k={config.k} differs from problem.k={problem.k}")
    rng = _rng(config.seed if rng is None else rng)
    X = problem.A.entries
    n, m, k = problem.n, problem.m, problem.k
    N = int(n_chains)

    if isinstance(config.init, str) and config.init in ("d_squared", "kmeans++"):
        inits = [d_squared_init(X, k, rng) for _ in range(N)]
        steps = config.steps
        if steps is None:
            steps = max(mixing_budget(problem, s, config.eps_tv) for s in inits)
        inside = np.array([s.indices for s in inits], dtype=np.intp)
    else:
        S0 = initial_selection(problem, config, rng)
        steps = resolve_steps(problem, config, S0)
        inside = np.tile(np.array(S0.indices, dtype=np.intp), (N, 1))
    mask = np.zeros((N, m), dtype=bool)
    np.put_along_axis(mask, inside, True, axis=1)
    outside = np.nonzero(~mask)[1].reshape(N, m - k)
    if m == k or steps == 0:
        return np.sort(inside, axis=1)

    def refactor(ins):
        As = X[:, ins]  # (n, N, k)
        G = np.einsum("inj,lnj->nil", As, As)
        return np.linalg.inv(G), np.linalg.slogdet(G)[1]

    M, logdet = refactor(inside)
    rows = np.arange(N)
    for t in range(steps):
        move = rng.random(N) < 0.5
        pi = rng.integers(k, size=N)
        po = rng.integers(m - k, size=N)
        u_acc = rng.random(N)
        s_in = inside[rows, pi]
        s_out = outside[rows, po]
        a_in = X[:, s_in].T
        a_out = X[:, s_out].T
        Mi = np.einsum("nij,nj->ni", M, a_in)
        Mo = np.einsum("nij,nj->ni", M, a_out)
        h_ii = np.einsum("ni,ni->n", a_in, Mi)
        h_oo = np.einsum("ni,ni->n", a_out, Mo)
        h_io = np.einsum("ni,ni->n", a_out, Mi)
        # same ratio as acceptance_ratio, written with (A_S A_S^T)^{-1} only so
        # it stays valid when S - {s_in} is rank deficient (e.g. k = n)
        ratio = (1.0 - h_ii) * (1.0 + h_oo) + h_io**2
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.where(ratio > SINGULARITY_TOL, np.log(np.abs(ratio)), -np.inf)
        accept = move & (np.log(u_acc) < np.minimum(0.0, log_ratio / config.beta))
        if accept.any():
            a = np.nonzero(accept)[0]
            # Woodbury for G - a_in a_in^T + a_out a_out^T
            U = np.stack([Mo[a], Mi[a]], axis=2)  # (na, n, 2)
            K = np.empty((a.size, 2, 2))
            K[:, 0, 0] = 1.0 + h_oo[a]
            K[:, 0, 1] = h_io[a]
            K[:, 1, 0] = h_io[a]
            K[:, 1, 1] = h_ii[a] - 1.0
            M[a] -= U @ np.linalg.solve(K, np.swapaxes(U, 1, 2))
            logdet[a] += log_ratio[a]
            inside[a, pi[a]] = s_out[a]
            outside[a, po[a]] = s_in[a]
        if (t + 1) % config.refresh_interval == 0:
            M, logdet = refactor(inside)
    return np.sort(inside, axis=1)
