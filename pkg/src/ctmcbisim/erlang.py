"""Closed-form acceleration-error formulas and the non-spectral bounds.

``erlang_diff(n, c, t)`` is the exact reachability gap between a
length-n rate-1 chain and its c-fold acceleration; it equals the
difference of two Poisson CDFs, which is how it is evaluated (no bare
factorials).  On top of it: the uniformization bound, the Pareto
tolerance region, the Erlang-N bound, the exact p_n-weighted series,
and the expected-steps (Markov-inequality) bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonUniformRates, NotApplicable
from .model import Ctmc
from .transient import expected_hit_steps, hit_exact_steps, reach_prob


def _poisson_cdf_prefix(mu: float, kmax: int) -> np.ndarray:
    """``out[k] = Pr(Poisson(mu) <= k)`` for k = 0..kmax."""
    if kmax < 0:
        return np.empty(0)
    if mu == 0.0:
        return np.ones(kmax + 1)
    ks = np.arange(kmax + 1, dtype=float)
    lgam = np.array([math.lgamma(k + 1.0) for k in range(kmax + 1)])
    pmf = np.exp(-mu + ks * math.log(mu) - lgam)
    return np.minimum(np.cumsum(pmf), 1.0)


def erlang_diff_prefix(c: float, t: float, n_max: int) -> np.ndarray:
    """``out[n] = erlang_diff(n, c, t)`` for n = 0..n_max (vectorized)."""
    if c < 1.0:
        raise ValueError("acceleration factor must be >= 1")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    out = np.zeros(n_max + 1)
    if t == 0.0 or c == 1.0 or n_max == 0:
        return out
    cdf_slow = _poisson_cdf_prefix(t, n_max - 1)
    cdf_fast = _poisson_cdf_prefix(c * t, n_max - 1)
    out[1:] = np.maximum(0.0, cdf_slow - cdf_fast)
    return out


def erlang_diff(n: int, c: float, t: float) -> float:
    """Exact gap for the length-n chain: sum_{k<n} t^k/k! (e^-t - c^k e^-ct)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if c < 1.0:
        raise ValueError("acceleration factor must be >= 1")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if n == 0 or t == 0.0 or c == 1.0:
        return 0.0
    return float(erlang_diff_prefix(c, t, n)[n])


def erlang_diff_argmax(n: int, c: float) -> float:
    """The global maximizer t* = n ln(c)/(c-1) of erlang_diff(n, c, .)."""
    if c <= 1.0 or n < 1:
        raise NotApplicable("argmax needs c > 1 and n >= 1")
    return n * math.log(c) / (c - 1.0)


def uniformization_bound(eps: float, delta: float, q: float, t: float) -> float:
    """Time-uniform bound 1 - e^{-q t (e^delta (1+eps) - 1)}."""
    if eps < 0.0 or delta < 0.0 or q < 0.0 or t < 0.0:
        raise ValueError("eps, delta, q, t must all be nonnegative")
    return 1.0 - math.exp(-q * t * (math.exp(delta) * (1.0 + eps) - 1.0))


@dataclass(frozen=True)
class ParetoRegion:
    """Tolerance pairs (eps, delta) whose uniformization bound stays <= theta.

    The frontier is governed by the budget ratio
    ``B = (q t - ln(1-theta)) / (q t)``: a pair is admissible iff
    ``e^delta (1 + eps) <= B``.
    """

    theta: float
    q: float
    t: float

    def __post_init__(self):
        if not (0.0 <= self.theta < 1.0):
            raise ValueError("theta must lie in [0, 1)")
        if self.q * self.t <= 0.0:
            raise ValueError("q*t must be positive")

    @property
    def budget(self) -> float:
        qt = self.q * self.t
        return (qt - math.log(1.0 - self.theta)) / qt

    def eps_max(self, delta: float) -> float:
        return max(0.0, self.budget / math.exp(delta) - 1.0)

    def delta_max(self, eps: float) -> float:
        ratio = self.budget / (1.0 + eps)
        return max(0.0, math.log(ratio)) if ratio > 0.0 else 0.0

    def contains(self, eps: float, delta: float, slack: float = 1e-12) -> bool:
        return math.exp(delta) * (1.0 + eps) <= self.budget + slack

    def frontier(self, samples: int) -> list[tuple[float, float]]:
        """(eps, delta) pairs along the boundary, delta sweeping 0..delta_max(0)."""
        if samples < 2:
            raise ValueError("need at least 2 samples")
        dmax = self.delta_max(0.0)
        deltas = np.linspace(0.0, dmax, samples)
        return [(self.eps_max(float(d)), float(d)) for d in deltas]


def pareto_region(theta: float, q: float, t: float) -> ParetoRegion:
    return ParetoRegion(theta=theta, q=q, t=t)


def erlang_N(t: float, delta: float) -> int:
    if delta <= 0.0:
        raise NotApplicable("the Erlang-N bound needs delta > 0")
    return int(math.ceil((math.exp(delta) - 1.0) * t / delta))


def erlang_N_bound(t: float, delta: float) -> float:
    """Worst-case chain-length bound: erlang_diff at N = ceil((e^d - 1) t / d).

    At delta = 0 the gap is identically zero, and 0 is returned.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0 or t == 0.0:
        return 0.0
    return erlang_diff(erlang_N(t, delta), math.exp(delta), t)


def _uniform_rate(M: Ctmc) -> float:
    if not M.is_uniform():
        raise NonUniformRates("this bound requires a uniform-rate chain")
    return float(M.E[0])


def exact_diff_series(M: Ctmc, delta: float, t: float, tol: float = 1e-9) -> float:
    """sum_n p_n * erlang_diff(n, e^delta, t'), truncated once the hit mass
    not yet summed drops below tol (each remaining term is <= that mass).

    General uniform rate r is handled by evaluating at t' = r*t.
    """
    r = _uniform_rate(M)
    M.goal_state()
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0 or t == 0.0:
        return 0.0
    c = math.exp(delta)
    teff = r * t
    total_reach = reach_prob(M)
    K = 64
    while True:
        hits = hit_exact_steps(M, K)
        remaining = total_reach - float(hits.probs.sum())
        if remaining < tol or K > 1 << 22:
            diffs = erlang_diff_prefix(c, teff, K)
            return float(np.dot(hits.probs, diffs[1:]))
        K *= 2


def markov_bound(M: Ctmc, delta: float, t: float, tol: float = 1e-9) -> float:
    """E(steps) * sum_n (1/n) erlang_diff(n, e^delta, t'), clamped at 1.

    The truncation remainder is certified through the exact identity
    sum_{n>=1} erlang_diff(n, c, t') = t' (c - 1): the tail satisfies
    sum_{n>K} (1/n) diff_n <= (t'(c-1) - sum_{n<=K} diff_n) / (K+1)
    and is *added* to the partial sum so the result stays an upper bound.
    """
    r = _uniform_rate(M)
    M.goal_state()
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    ex = expected_hit_steps(M)
    if math.isinf(ex):
        raise NotApplicable("expected hitting steps are infinite (fail state reachable)")
    if delta == 0.0 or t == 0.0:
        return 0.0
    c = math.exp(delta)
    teff = r * t
    total = teff * (c - 1.0)
    K = 256
    while True:
        diffs = erlang_diff_prefix(c, teff, K)
        partial = float(np.dot(diffs[1:], 1.0 / np.arange(1.0, K + 1.0)))
        tail = max(0.0, total - float(diffs[1:].sum())) / (K + 1.0)
        if ex * tail < tol or K > 1 << 22:
            return min(1.0, ex * (partial + tail))
        K *= 2
