"""Core chain data model and structural transformations.

Chains are immutable after construction; every operation returns a new
object.  States are index-based internally, with string ids kept for
I/O and error messages.  Probabilities and rates are double precision;
row sums are checked against an absolute tolerance of 1e-12 and never
silently renormalized.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction  # noqa: F401  (re-exported for flow users)
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CtmcError,
    EmptyGoalSet,
    NoGoalState,
    NonAbsorbingGoal,
    NonpositiveRate,
    NonpositiveScale,
    RateTooSmall,
    RowSumError,
)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dtmc:
    """Finite labeled discrete-time chain.

    ``P[i, j]`` is the one-step probability from state ``i`` to ``j``;
    ``labels[i]`` is the (order-preserving) tuple of atomic propositions
    of state ``i``; label comparisons are set comparisons.
    """

    ids: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    P: np.ndarray
    initial: int
    goal: tuple[int, ...] = ()
    fail: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.ids)
        if self.P.shape != (n, n):
            raise ValueError(f"P has shape {self.P.shape}, expected {(n, n)}")
        if len(self.labels) != n:
            raise ValueError("labels/ids length mismatch")
        if not (0 <= self.initial < n):
            raise ValueError(f"initial index {self.initial} out of range")

    @property
    def n(self) -> int:
        return len(self.ids)

    @cached_property
    def label_sets(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(l) for l in self.labels)

    def index(self, state_id: str) -> int:
        try:
            return self.ids.index(state_id)
        except ValueError:
            raise KeyError(f"unknown state id {state_id!r}") from None

    def successors(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.P[s] > 0.0)

    def goal_state(self) -> int:
        if len(self.goal) != 1:
            raise NoGoalState(f"need exactly one goal state, have {len(self.goal)}")
        return self.goal[0]


@dataclass(frozen=True, eq=False)
class Ctmc:
    """Finite labeled continuous-time chain.

    ``E[i]`` is the exit rate (1/time) of state ``i``; the jump
    distribution is ``P[i]``.  ``goal``/``fail`` are index tuples so
    that multi-goal input files survive a load/save round trip; the
    analyses that need the normalized single-goal form obtain it via
    :func:`normalize_goal`.  ``rate_exprs`` remembers textual
    ``"exp(x)"`` rate expressions from input files for re-emission.
    """

    ids: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    P: np.ndarray
    E: np.ndarray
    initial: int
    goal: tuple[int, ...] = ()
    fail: tuple[int, ...] = ()
    rewards: np.ndarray | None = None
    rate_exprs: tuple[str | None, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.ids)
        if self.P.shape != (n, n):
            raise ValueError(f"P has shape {self.P.shape}, expected {(n, n)}")
        if self.E.shape != (n,):
            raise ValueError(f"E has shape {self.E.shape}, expected {(n,)}")
        if len(self.labels) != n:
            raise ValueError("labels/ids length mismatch")
        if not (0 <= self.initial < n):
            raise ValueError(f"initial index {self.initial} out of range")
        if self.rewards is not None and self.rewards.shape != (n,):
            raise ValueError("rewards length mismatch")

    @property
    def n(self) -> int:
        return len(self.ids)

    @cached_property
    def label_sets(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(l) for l in self.labels)

    def index(self, state_id: str) -> int:
        try:
            return self.ids.index(state_id)
        except ValueError:
            raise KeyError(f"unknown state id {state_id!r}") from None

    def successors(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.P[s] > 0.0)

    def goal_state(self) -> int:
        if len(self.goal) != 1:
            raise NoGoalState(f"need exactly one goal state, have {len(self.goal)}")
        return self.goal[0]

    def max_rate(self) -> float:
        return float(np.max(self.E))

    def is_uniform(self, rel_tol: float = 1e-12) -> bool:
        r = float(self.E[0])
        return bool(np.all(np.abs(self.E - r) <= rel_tol * max(1.0, abs(r))))


# --------------------------------------------------------------------------
# construction helpers
# --------------------------------------------------------------------------


def make_ctmc(
    states: Sequence[tuple],
    transitions: Iterable[tuple[str, str, float]],
    initial: str,
    goal: Sequence[str] = (),
    fail: Sequence[str] = (),
) -> Ctmc:
    """Build a chain from readable pieces.

    ``states`` holds ``(id, labels, exit_rate)`` or
    ``(id, labels, exit_rate, reward)`` tuples; ``transitions`` holds
    ``(from_id, to_id, prob)``.  Omitted transitions are zero.
    """
    ids = tuple(s[0] for s in states)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate state ids")
    idx = {sid: i for i, sid in enumerate(ids)}
    labels = tuple(tuple(s[1]) for s in states)
    E = np.array([float(s[2]) for s in states], dtype=float)
    has_rewards = any(len(s) > 3 for s in states)
    rewards = None
    if has_rewards:
        rewards = np.array([float(s[3]) if len(s) > 3 else 0.0 for s in states])
    n = len(ids)
    P = np.zeros((n, n))
    for frm, to, p in transitions:
        P[idx[frm], idx[to]] += float(p)
    return Ctmc(
        ids=ids,
        labels=labels,
        P=P,
        E=E,
        initial=idx[initial],
        goal=tuple(idx[g] for g in goal),
        fail=tuple(idx[f] for f in fail),
        rewards=rewards,
    )


def _as_index(M: Ctmc, s: int | str) -> int:
    return M.index(s) if isinstance(s, str) else int(s)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def validate(model: Ctmc, renormalize: bool = False) -> Ctmc:
    """Check the chain invariants and return the (possibly renormalized) chain.

    Raises the first violation found, with all further violations listed
    in ``err.all_violations``.  Row sums must be 1 within 1e-12, rates
    strictly positive, all probabilities in [0, 1]; a singleton goal or
    fail state must be absorbing and carry a label set no other state has.
    """
    if renormalize:
        sums = model.P.sum(axis=1)
        if np.any(sums <= 0):
            raise RowSumError(int(np.argmax(sums <= 0)), float(sums.min()))
        model = replace(model, P=model.P / sums[:, None])

    violations: list[CtmcError] = []
    sums = model.P.sum(axis=1)
    for s in range(model.n):
        if abs(sums[s] - 1.0) > ROW_SUM_TOL:
            violations.append(RowSumError(s, float(sums[s])))
    if np.any(model.P < 0.0) or np.any(model.P > 1.0 + 1e-15):
        bad = np.argwhere((model.P < 0.0) | (model.P > 1.0 + 1e-15))[0]
        violations.append(
            CtmcError(f"probability P[{bad[0]},{bad[1]}]={model.P[bad[0], bad[1]]!r} outside [0,1]")
        )
    for s in range(model.n):
        if not model.E[s] > 0.0:
            violations.append(NonpositiveRate(s))

    for name, members in (("goal", model.goal), ("fail", model.fail)):
        if len(members) == 1:
            g = members[0]
            if abs(model.P[g, g] - 1.0) > ROW_SUM_TOL:
                violations.append(NonAbsorbingGoal(f"{name} state {model.ids[g]!r} is not absorbing"))
            lg = model.label_sets[g]
            for s in range(model.n):
                if s != g and model.label_sets[s] == lg:
                    violations.append(
                        NonAbsorbingGoal(
                            f"{name} state {model.ids[g]!r} shares its label set with {model.ids[s]!r}"
                        )
                    )
                    break

    if violations:
        err = violations[0]
        err.all_violations = violations  # type: ignore[attr-defined]
        if len(violations) > 1:
            err.args = (f"{err.args[0] if err.args else err}; plus {len(violations) - 1} more violation(s)",)
        raise err
    return model


# --------------------------------------------------------------------------
# structural transformations
# --------------------------------------------------------------------------


def direct_sum(M: Ctmc, N: Ctmc) -> Ctmc:
    """Disjoint union: M keeps its indices, N's are shifted by ``M.n``.

    The initial state of the sum is M's.  N's state ids are suffixed
    with ``~b`` only when they collide with ids of M.
    """
    taken = set(M.ids)
    n_ids = tuple(i if i not in taken else i + "~b" for i in N.ids)
    n, m = M.n, N.n
    P = np.zeros((n + m, n + m))
    P[:n, :n] = M.P
    P[n:, n:] = N.P
    rewards = None
    if M.rewards is not None and N.rewards is not None:
        rewards = np.concatenate([M.rewards, N.rewards])
    return Ctmc(
        ids=M.ids + n_ids,
        labels=M.labels + N.labels,
        P=P,
        E=np.concatenate([M.E, N.E]),
        initial=M.initial,
        goal=M.goal + tuple(g + n for g in N.goal),
        fail=M.fail + tuple(f + n for f in N.fail),
        rewards=rewards,
    )


def scale(M: Ctmc, c: float) -> Ctmc:
    """Multiply every exit rate by ``c > 0``; jump probabilities unchanged."""
    if not c > 0.0:
        raise NonpositiveScale(f"scale factor must be positive, got {c!r}")
    return replace(M, E=M.E * c, rate_exprs=None)


def _reach_set(P: np.ndarray, targets: set[int]) -> set[int]:
    """States that can reach ``targets`` (including the targets)."""
    n = P.shape[0]
    preds: list[list[int]] = [[] for _ in range(n)]
    rows, cols = np.nonzero(P > 0.0)
    for i, j in zip(rows, cols):
        preds[j].append(int(i))
    seen = set(targets)
    stack = list(targets)
    while stack:
        v = stack.pop()
        for u in preds[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def _fresh_atom(base: str, used: set[str]) -> str:
    name = base
    while name in used:
        name += "_"
    return name


def _fresh_id(base: str, used: set[str]) -> str:
    name = base
    k = 0
    while name in used:
        k += 1
        name = f"{base}{k}"
    return name


def normalize_goal(M: Ctmc, goals: Iterable[int | str] | None = None) -> Ctmc:
    """Merge the goal set into one absorbing, uniquely labeled state and all
    states that cannot reach it into one absorbing fail state.

    The output uses the canonical ordering the spectral formulas assume:
    initial state first, surviving transient states in original order,
    then the fail state (if any), then the goal state last.  Timed
    reachability of the goal set is preserved.  A chain that is already
    in this form is returned unchanged.
    """
    G = {_as_index(M, g) for g in (goals if goals is not None else M.goal)}
    if not G:
        raise EmptyGoalSet("goal set is empty")
    if M.initial in G:
        raise ValueError("the initial state may not be a goal state")

    can_reach = _reach_set(M.P, G)
    dead = [s for s in range(M.n) if s not in G and s not in can_reach]

    # Fast path: already normalized.
    if len(G) == 1 and not dead:
        (g,) = G
        lg = M.label_sets[g]
        unique = all(M.label_sets[s] != lg for s in range(M.n) if s != g)
        if (
            abs(M.P[g, g] - 1.0) <= ROW_SUM_TOL
            and unique
            and g == M.n - 1
            and M.initial == 0
            and M.goal == (g,)
        ):
            return M

    transient = [s for s in range(M.n) if s not in G and s not in dead]
    transient.sort()
    if M.initial in transient:
        transient.remove(M.initial)
        transient.insert(0, M.initial)

    order = list(transient)
    fail_idx = None
    if dead:
        fail_idx = len(order)
        order.append(-1)  # placeholder for the merged fail state
    goal_idx = len(order)
    order.append(-2)  # placeholder for the merged goal state

    used_atoms = {a for s in transient for a in M.labels[s]}
    used_ids = {M.ids[s] for s in transient}
    single_goal = len(G) == 1 and all(
        M.label_sets[next(iter(G))] != M.label_sets[s] for s in transient + dead
    )
    if single_goal:
        (g0,) = G
        goal_label = M.labels[g0]
        goal_id = M.ids[g0] if M.ids[g0] not in used_ids else _fresh_id(M.ids[g0], used_ids)
    else:
        goal_label = (_fresh_atom("goal", used_atoms),)
        goal_id = _fresh_id("goal", used_ids)
    used_atoms |= set(goal_label)
    used_ids.add(goal_id)
    fail_label = (_fresh_atom("fail", used_atoms),)
    fail_id = _fresh_id("fail", used_ids)

    m = len(order)
    P = np.zeros((m, m))
    E = np.empty(m)
    ids: list[str] = []
    labels: list[tuple[str, ...]] = []
    rewards = np.empty(m) if M.rewards is not None else None

    for new_i, old in enumerate(order):
        if old >= 0:
            ids.append(M.ids[old])
            labels.append(M.labels[old])
            E[new_i] = M.E[old]
            if rewards is not None:
                rewards[new_i] = M.rewards[old]
            for new_j, tgt in enumerate(order):
                if tgt >= 0:
                    P[new_i, new_j] = M.P[old, tgt]
            if dead:
                P[new_i, fail_idx] = float(M.P[old, dead].sum())
            P[new_i, goal_idx] = float(M.P[old, sorted(G)].sum())
        elif old == -1:
            ids.append(fail_id)
            labels.append(fail_label)
            E[new_i] = float(max(M.E[d] for d in dead))
            if rewards is not None:
                rewards[new_i] = float(max(M.rewards[d] for d in dead))
            P[new_i, new_i] = 1.0
        else:
            ids.append(goal_id)
            labels.append(goal_label)
            E[new_i] = float(max(M.E[g] for g in G))
            if rewards is not None:
                rewards[new_i] = float(max(M.rewards[g] for g in G))
            P[new_i, new_i] = 1.0

    new_initial = 0 if M.initial in transient else (fail_idx if fail_idx is not None else goal_idx)
    return Ctmc(
        ids=tuple(ids),
        labels=tuple(labels),
        P=P,
        E=E,
        initial=new_initial,
        goal=(goal_idx,),
        fail=(fail_idx,) if fail_idx is not None else (),
        rewards=rewards,
    )


def uniformize(M: Ctmc, q: float | None = None) -> Dtmc:
    """Subordinated jump chain at rate ``q >= max exit rate``.

    Off-diagonal entries become ``P(s,s')*E(s)/q``; the diagonal absorbs
    the remaining mass ``1 + P(s,s)*E(s)/q - E(s)/q``.
    """
    max_rate = M.max_rate()
    if q is None:
        q = max_rate
    if q < max_rate * (1.0 - 1e-12):
        raise RateTooSmall(q, max_rate)
    w = M.E / q
    Pb = M.P * w[:, None]
    Pb[np.diag_indices_from(Pb)] += 1.0 - w
    return Dtmc(ids=M.ids, labels=M.labels, P=Pb, initial=M.initial, goal=M.goal, fail=M.fail)


def embedded_dtmc(M: Ctmc) -> Dtmc:
    """The jump chain: the probability component with labels and initial state."""
    return Dtmc(ids=M.ids, labels=M.labels, P=M.P.copy(), initial=M.initial, goal=M.goal, fail=M.fail)


def generator(M: Ctmc) -> np.ndarray:
    """Rate matrix Q: off-diagonal ``P(i,j)*E(i)``, diagonal the negated row sum."""
    Q = M.P * M.E[:, None]
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def prune_unreachable(M: Ctmc) -> Ctmc:
    """Drop states unreachable from the initial state (explicit, never automatic)."""
    n = M.n
    seen = {M.initial}
    stack = [M.initial]
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(M.P[v] > 0.0):
            u = int(u)
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) == n:
        return M
    keep = sorted(seen)
    remap = {old: new for new, old in enumerate(keep)}
    return Ctmc(
        ids=tuple(M.ids[s] for s in keep),
        labels=tuple(M.labels[s] for s in keep),
        P=M.P[np.ix_(keep, keep)].copy(),
        E=M.E[keep].copy(),
        initial=remap[M.initial],
        goal=tuple(remap[g] for g in M.goal if g in remap),
        fail=tuple(remap[f] for f in M.fail if f in remap),
        rewards=M.rewards[keep].copy() if M.rewards is not None else None,
        rate_exprs=tuple(M.rate_exprs[s] for s in keep) if M.rate_exprs is not None else None,
    )


# --------------------------------------------------------------------------
# JSON model format
# --------------------------------------------------------------------------

_EXP_RE = re.compile(r"^exp\(\s*([-+0-9.eE]+)\s*\)$")


def _parse_rate(value) -> tuple[float, str | None]:
    if isinstance(value, str):
        m = _EXP_RE.match(value)
        if not m:
            raise ValueError(f"bad exit_rate expression {value!r}; only 'exp(x)' is supported")
        return math.exp(float(m.group(1))), value
    return float(value), None


def model_from_dict(d: dict) -> Ctmc:
    states = d["states"]
    ids = tuple(s["id"] for s in states)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate state ids")
    idx = {sid: i for i, sid in enumerate(ids)}
    labels = tuple(tuple(s["labels"]) for s in states)
    rates, exprs = zip(*(_parse_rate(s["exit_rate"]) for s in states))
    has_rewards = any("reward" in s for s in states)
    rewards = None
    if has_rewards:
        rewards = np.array([float(s.get("reward", 0.0)) for s in states])
    n = len(ids)
    P = np.zeros((n, n))
    for tr in d.get("transitions", ()):
        P[idx[tr["from"]], idx[tr["to"]]] += float(tr["prob"])
    return Ctmc(
        ids=ids,
        labels=labels,
        P=P,
        E=np.array(rates, dtype=float),
        initial=idx[d["initial"]],
        goal=tuple(idx[g] for g in d.get("goal", ())),
        fail=tuple(idx[f] for f in d.get("fail", ())),
        rewards=rewards,
        rate_exprs=exprs if any(e is not None for e in exprs) else None,
    )


def model_to_dict(M: Ctmc) -> dict:
    states = []
    for i in range(M.n):
        st: dict = {"id": M.ids[i], "labels": list(M.labels[i])}
        if M.rate_exprs is not None and M.rate_exprs[i] is not None:
            st["exit_rate"] = M.rate_exprs[i]
        else:
            st["exit_rate"] = float(M.E[i])
        if M.rewards is not None:
            st["reward"] = float(M.rewards[i])
        states.append(st)
    transitions = [
        {"from": M.ids[i], "to": M.ids[j], "prob": float(M.P[i, j])}
        for i in range(M.n)
        for j in range(M.n)
        if M.P[i, j] > 0.0
    ]
    d: dict = {"states": states, "transitions": transitions, "initial": M.ids[M.initial]}
    if M.goal:
        d["goal"] = [M.ids[g] for g in M.goal]
    if M.fail:
        d["fail"] = [M.ids[f] for f in M.fail]
    return d


def dumps_model(M: Ctmc) -> str:
    return json.dumps(model_to_dict(M), indent=2) + "\n"


def load_model(path: str) -> Ctmc:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(M: Ctmc, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(M))
