"""Reward-bounded reachability by rescaling the clock.

A state with reward rate ``rho(s)`` spends its budget ``rho(s)`` times
faster than its clock runs, so reward-bounded reachability is plain
time-bounded reachability once every exit rate is divided by the local
reward rate.  Zero-reward states consume no budget at all; they are
removed beforehand by short-circuiting their rows (their sojourns are
invisible to the budget), which is well-defined exactly when the
zero-reward states do not form a cycle.
"""

from __future__ import annotations

import numpy as np

from .erlang import uniformization_bound
from .errors import AbsorbingState, NonzeroReward, ZeroReward, ZeroRewardCycle
from .model import Ctmc
from .transient import timed_reach

ABSORBING_EPS = 1e-12


def _require_rewards(M: Ctmc) -> np.ndarray:
    if M.rewards is None:
        raise ValueError("chain carries no reward rates")
    if np.any(M.rewards < 0.0):
        raise ValueError("reward rates must be nonnegative")
    return M.rewards


def remove_zero_reward_self_loop(M: Ctmc, s: int | str) -> Ctmc:
    """Drop the self-loop of zero-reward state s, preserving the law.

    Waiting out a geometric number of sojourns is the same exponential as
    one sojourn at the thinned rate, so the row is renormalized and the
    exit rate scaled by the removed mass.  No-op when there is no loop.
    """
    rewards = _require_rewards(M)
    idx = M.index(s) if isinstance(s, str) else int(s)
    if rewards[idx] != 0.0:
        raise NonzeroReward(f"state {M.ids[idx]} has reward {rewards[idx]}")
    loop = float(M.P[idx, idx])
    if loop == 0.0:
        return M
    if loop >= 1.0 - ABSORBING_EPS:
        raise AbsorbingState(f"state {M.ids[idx]} cannot leave its self-loop")
    P = M.P.copy()
    P[idx] = P[idx] / (1.0 - loop)
    P[idx, idx] = 0.0
    E = M.E.copy()
    E[idx] = E[idx] * (1.0 - loop)
    return Ctmc(
        ids=M.ids,
        labels=M.labels,
        P=P,
        E=E,
        initial=M.initial,
        goal=M.goal,
        fail=M.fail,
        rewards=M.rewards,
        rate_exprs=None,
    )


def _zero_cycle_check(P: np.ndarray, zset: set[int]) -> None:
    color = {z: 0 for z in zset}
    for root in zset:
        if color[root]:
            continue
        stack = [(root, iter(np.flatnonzero(P[root] > 0.0)))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for u in it:
                u = int(u)
                if u == v or u not in zset:
                    continue
                if color[u] == 1:
                    raise ZeroRewardCycle(f"zero-reward states {v} and {u} lie on a cycle")
                if color[u] == 0:
                    color[u] = 1
                    stack.append((u, iter(np.flatnonzero(P[u] > 0.0))))
                    advanced = True
                    break
            if not advanced:
                color[v] = 2
                stack.pop()


def eliminate_zero_reward_states(M: Ctmc) -> Ctmc:
    """Short-circuit every zero-reward state out of the chain.

    Fail states are exempt: they never charge the budget anyway, so they
    stay and are given the sentinel reward 1 in the result (which keeps the
    downstream clock rescaling total).  Eliminating the initial state or an
    absorbing state is impossible and raises; so do zero-reward cycles.
    Processing is one state at a time in ascending index order: remove the
    self-loop, then splice the row into every predecessor.
    """
    rewards = _require_rewards(M).copy()
    fail_set = set(M.fail)
    zs = [s for s in range(M.n) if rewards[s] == 0.0 and s not in fail_set]
    for f in fail_set:
        if rewards[f] == 0.0:
            rewards[f] = 1.0
    if not zs:
        return Ctmc(
            ids=M.ids, labels=M.labels, P=M.P, E=M.E, initial=M.initial,
            goal=M.goal, fail=M.fail, rewards=rewards, rate_exprs=M.rate_exprs,
        )
    if M.initial in zs:
        raise ZeroReward(M.initial)
    _zero_cycle_check(M.P, set(zs))

    P = M.P.copy()
    E = M.E.copy()
    for z in zs:
        loop = float(P[z, z])
        if loop >= 1.0 - ABSORBING_EPS:
            raise AbsorbingState(f"state {M.ids[z]} is absorbing with zero reward")
        if loop > 0.0:
            P[z] = P[z] / (1.0 - loop)
            P[z, z] = 0.0
            E[z] = E[z] * (1.0 - loop)
        col = P[:, z].copy()
        col[z] = 0.0
        hit = np.flatnonzero(col > 0.0)
        if hit.size:
            P[hit] += col[hit, None] * P[z]
            P[hit, z] = 0.0

    keep = [s for s in range(M.n) if s not in set(zs)]
    remap = {old: new for new, old in enumerate(keep)}
    return Ctmc(
        ids=tuple(M.ids[s] for s in keep),
        labels=tuple(M.labels[s] for s in keep),
        P=P[np.ix_(keep, keep)].copy(),
        E=E[keep].copy(),
        initial=remap[M.initial],
        goal=tuple(remap[g] for g in M.goal),
        fail=tuple(remap[f] for f in M.fail),
        rewards=rewards[keep].copy(),
        rate_exprs=None,
    )


def hat_transform(M: Ctmc) -> Ctmc:
    """Divide every exit rate by the local reward rate.

    On the resulting chain, the clock *is* the accumulated reward, so a
    reward budget becomes a plain time horizon.  Every state must carry a
    strictly positive reward."""
    rewards = _require_rewards(M)
    for s in range(M.n):
        if rewards[s] == 0.0:
            raise ZeroReward(s)
    return Ctmc(
        ids=M.ids,
        labels=M.labels,
        P=M.P,
        E=M.E / rewards,
        initial=M.initial,
        goal=M.goal,
        fail=M.fail,
        rewards=None,
        rate_exprs=None,
    )


def reward_reach(M: Ctmc, s: int | str | None, r: float, tol: float = 1e-9) -> float:
    """Probability of reaching the goal before spending reward budget r.

    Pipeline: eliminate zero-reward states, rescale the clock by the reward
    rates, then evaluate time-bounded reachability at horizon r."""
    if r < 0.0:
        raise ValueError("the reward budget must be nonnegative")
    chain = hat_transform(eliminate_zero_reward_states(M))
    if s is None:
        orig = M.initial
    else:
        orig = M.index(s) if isinstance(s, str) else int(s)
    try:
        start = chain.index(M.ids[orig])
    except KeyError:
        raise ZeroReward(orig) from None
    return timed_reach(chain, start, r, tol)


def reward_bound(eps: float, delta: float, q_hat: float, r: float) -> float:
    """Reward-budget analogue of the time-uniform bound: states related up
    to (eps, delta) on the clock-rescaled chain differ in reward-bounded
    reachability by at most ``1 - e^{-q_hat r (e^delta (1+eps) - 1)}``."""
    return uniformization_bound(eps, delta, q_hat, r)
