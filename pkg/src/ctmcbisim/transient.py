"""Exact transient analysis via uniformization.

The workhorse is the subordinated-Poisson series
``pi_t = sum_k e^{-qt} (qt)^k / k! * init * Pbar^k`` with right
truncation once the accumulated Poisson mass reaches ``1 - tol``.
On top of it: timed and step-bounded reachability, exact-step hitting
probabilities ``p_n``, expected hitting steps, ground-truth
acceleration-error curves, and a seeded Monte Carlo cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import NonUniformRates
from .model import Ctmc, Dtmc, scale, uniformize

DEFAULT_TRUNCATION_ERROR = 1e-10


@dataclass(frozen=True)
class TransientQuery:
    start: int | None = None
    horizon: float = 0.0
    truncation_error: float = DEFAULT_TRUNCATION_ERROR

    def __post_init__(self):
        if self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")
        if not (0.0 < self.truncation_error < 1.0):
            raise ValueError("truncation_error must lie in (0, 1)")


def poisson_weights(mu: float, tol: float) -> np.ndarray:
    """Poisson(mu) weights for k = 0..K with total mass >= 1 - tol.

    Computed per-term through ``exp(-mu + k*ln(mu) - lgamma(k+1))`` so
    large ``mu`` neither overflows nor loses the mass near the mode.
    """
    if mu < 0.0:
        raise ValueError("mu must be nonnegative")
    if mu == 0.0:
        return np.ones(1)
    K = int(math.ceil(mu + 10.0 * math.sqrt(mu + 1.0) + 30.0))
    log_mu = math.log(mu)
    while True:
        lgam = np.array([math.lgamma(k + 1.0) for k in range(K + 1)])
        w = np.exp(-mu + np.arange(K + 1) * log_mu - lgam)
        cum = np.cumsum(w)
        if cum[-1] >= 1.0 - tol:
            stop = int(np.searchsorted(cum, 1.0 - tol)) + 1
            return w[:stop]
        K *= 2


def transient_distribution(M: Ctmc, query: TransientQuery) -> np.ndarray:
    """State distribution at the query horizon, truncation error < tol."""
    start = M.initial if query.start is None else query.start
    q = M.max_rate()
    D = uniformize(M, q)
    w = poisson_weights(q * query.horizon, query.truncation_error)
    v = np.zeros(M.n)
    v[start] = 1.0
    acc = w[0] * v
    for k in range(1, len(w)):
        v = v @ D.P
        acc = acc + w[k] * v
    return acc


def timed_reach(M: Ctmc, s: int | str | None, t: float, tol: float = 1e-9) -> float:
    """Probability of sitting in the goal state at time t (= reaching it
    by t, since the goal is absorbing)."""
    g = M.goal_state()
    start = M.initial if s is None else (M.index(s) if isinstance(s, str) else int(s))
    pi = transient_distribution(M, TransientQuery(start=start, horizon=t, truncation_error=tol))
    return float(pi[g])


def timed_reach_curve(M: Ctmc, t_grid: Sequence[float], tol: float = 1e-9) -> np.ndarray:
    return np.array([timed_reach(M, None, float(t), tol) for t in t_grid])


def step_reach(D: Dtmc | Ctmc, s: int | str | None, k: int) -> float:
    """``(P^k)[s, g]`` by iterated vector-matrix products."""
    g = D.goal_state()
    start = D.initial if s is None else (D.index(s) if isinstance(s, str) else int(s))
    v = np.zeros(D.P.shape[0])
    v[start] = 1.0
    for _ in range(k):
        v = v @ D.P
    return float(v[g])


def _reachable_from(P: np.ndarray, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(P[v] > 0.0):
            u = int(u)
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def _can_reach(P: np.ndarray, target: int) -> set[int]:
    n = P.shape[0]
    preds: list[list[int]] = [[] for _ in range(n)]
    rows, cols = np.nonzero(P > 0.0)
    for i, j in zip(rows, cols):
        preds[j].append(int(i))
    seen = {target}
    stack = [target]
    while stack:
        v = stack.pop()
        for u in preds[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def reach_prob(M: Ctmc | Dtmc) -> float:
    """Probability of ever reaching the goal state (untimed)."""
    g = M.goal_state()
    if M.initial == g:
        return 1.0
    can = _can_reach(M.P, g)
    if M.initial not in can:
        return 0.0
    T = sorted(can - {g})
    pos = {s: i for i, s in enumerate(T)}
    A = np.eye(len(T)) - M.P[np.ix_(T, T)]
    b = M.P[T, g]
    x = np.linalg.solve(A, b)
    return float(x[pos[M.initial]])


@dataclass(frozen=True)
class HitStepDistribution:
    """First-hit step probabilities p_1..p_K plus the certified remainder.

    ``tail_mass`` is the hit probability not yet accounted for:
    Pr(ever reach g) - sum(probs).
    """

    probs: np.ndarray
    reach: float

    @property
    def tail_mass(self) -> float:
        return max(0.0, self.reach - float(self.probs.sum()))

    def p(self, n: int) -> float:
        if n < 1:
            raise ValueError("steps are 1-based")
        return float(self.probs[n - 1]) if n <= len(self.probs) else 0.0


def hit_exact_steps(M: Ctmc | Dtmc, K: int) -> HitStepDistribution:
    """p_n = (P^n - P^{n-1})[init, g] for n = 1..K (g absorbing)."""
    g = M.goal_state()
    n_states = M.P.shape[0]
    v = np.zeros(n_states)
    v[M.initial] = 1.0
    prev = float(v[g])
    probs = np.empty(K)
    for n in range(1, K + 1):
        v = v @ M.P
        cur = float(v[g])
        probs[n - 1] = max(0.0, cur - prev)
        prev = cur
    return HitStepDistribution(probs=probs, reach=reach_prob(M))


def expected_hit_steps(M: Ctmc | Dtmc) -> float:
    """Expected number of embedded steps to absorb in g; ``inf`` as soon
    as some state reachable from the initial state cannot reach g."""
    g = M.goal_state()
    reachable = _reachable_from(M.P, M.initial)
    can = _can_reach(M.P, g)
    if not reachable <= can:
        return math.inf
    T = sorted(reachable - {g})
    if not T:
        return 0.0
    pos = {s: i for i, s in enumerate(T)}
    A = np.eye(len(T)) - M.P[np.ix_(T, T)]
    x = np.linalg.solve(A, np.ones(len(T)))
    return float(x[pos[M.initial]])


def diff_curve(M: Ctmc, c: float, t_grid: Sequence[float], tol: float = 1e-9) -> np.ndarray:
    """Ground-truth |Pr^{cM}(reach g by t) - Pr^M(reach g by t)| per grid point.

    Requires a uniform-rate, goal-normalized chain; the accelerated
    chain is ``scale(M, c)``.
    """
    if not M.is_uniform():
        raise NonUniformRates("diff_curve requires a uniform-rate chain")
    if c < 1.0:
        raise ValueError("acceleration factor must be >= 1")
    M.goal_state()
    if c == 1.0:
        return np.zeros(len(t_grid))
    Mc = scale(M, c)
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        out[i] = abs(timed_reach(Mc, None, float(t), tol) - timed_reach(M, None, float(t), tol))
    return out


@dataclass(frozen=True)
class SimulationResult:
    estimate: float
    ci_low: float
    ci_high: float
    hits: int
    paths: int
    confidence: float

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


def _wilson(hits: int, n: int, confidence: float) -> tuple[float, float]:
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def simulate_paths(
    M: Ctmc,
    n: int,
    horizon: float,
    seed: int,
    budget_weights: np.ndarray | None = None,
    confidence: float = 0.95,
    max_jumps: int = 100_000,
) -> SimulationResult:
    """Seeded Monte Carlo estimate of reaching g within the horizon.

    With ``budget_weights`` w the clock advances by ``w[s] * sojourn``
    instead of the sojourn itself, which turns the same sampler into a
    reward-accumulation estimator (weights = per-state reward rates).
    All paths are advanced in lockstep as vector operations.
    """
    g = M.goal_state()
    rng = np.random.default_rng(seed)
    weights = np.ones(M.n) if budget_weights is None else np.asarray(budget_weights, dtype=float)
    cum = np.cumsum(M.P, axis=1)
    absorbing = np.abs(np.diag(M.P) - 1.0) <= 1e-15

    state = np.full(n, M.initial)
    clock = np.zeros(n)
    hit = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    if M.initial == g:
        hit[:] = True
        active[:] = False

    jumps = 0
    while active.any():
        jumps += 1
        if jumps > max_jumps:
            raise RuntimeError("simulation exceeded the jump budget; zero-cost cycle?")
        idx = np.flatnonzero(active)
        s = state[idx]
        stuck = absorbing[s]
        if stuck.any():
            active[idx[stuck]] = False
            idx = idx[~stuck]
            s = s[~stuck]
            if idx.size == 0:
                continue
        sojourn = rng.exponential(1.0, idx.size) / M.E[s]
        clock[idx] += weights[s] * sojourn
        expired = clock[idx] > horizon
        if expired.any():
            active[idx[expired]] = False
            idx = idx[~expired]
            s = s[~expired]
            if idx.size == 0:
                continue
        u = rng.random(idx.size)
        nxt = (cum[s] < u[:, None]).sum(axis=1)
        nxt = np.minimum(nxt, M.n - 1)
        state[idx] = nxt
        arrived = nxt == g
        if arrived.any():
            hit[idx[arrived]] = True
            active[idx[arrived]] = False

    hits = int(hit.sum())
    low, high = _wilson(hits, n, confidence)
    return SimulationResult(
        estimate=hits / n, ci_low=low, ci_high=high, hits=hits, paths=n, confidence=confidence
    )
