"""Eigenstructure of absorbing jump chains and the rate-gap bounds built on it.

The jump matrix of a goal-normalized chain is decomposed as ``S J S^-1``
(diagonal when possible, block upper-bidiagonal otherwise).  From the
decomposition we read off the first-hit step probabilities in closed form
and turn the dominant eigenvalue into reachability-gap bounds that decay
to zero for large horizons, unlike the worst-case chain-length bound.

All decompositions are verified by reconstruction: if ``max |S J S^-1 - P|``
exceeds the tolerance the result is rejected rather than returned.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bisim import PairRelation, split_construction
from .erlang import _uniform_rate, erlang_diff_prefix, erlang_N_bound, uniformization_bound
from .errors import (
    AcyclicChain,
    DecompositionFallbackWarning,
    DecompositionUnstable,
    ModulusOneNotOne,
    NotAcyclic,
    SpectralGapZero,
    WrongKind,
)
from .model import Ctmc, Dtmc, normalize_goal, prune_unreachable
from .pairuniform import uniformize_pair
from .transient import hit_exact_steps

#: eigenvalues closer than this are treated as one (defective) eigenvalue
CLUSTER_TOL = 1e-7
#: any eigenvalue of modulus >= 1 - MOD_ONE_TOL must be the eigenvalue 1
MOD_ONE_TOL = 1e-6
#: eigenvector matrices worse-conditioned than this go down the Jordan path
COND_GATE = 1e8
#: the staircase construction is only attempted up to this state count
JORDAN_MAX_N = 50
#: relative singular-value cutoff when measuring kernel dimensions
RANK_TOL = 1e-8
#: largest imaginary part tolerated in a (real) step probability
IMAG_TOL = 1e-9

ABSORBING_EPS = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """A verified ``P = S J S^-1`` factorization.

    ``blocks`` lists ``(eigenvalue, size)`` in column order; for
    ``kind == "diag"`` every size is 1 and J is the diagonal of
    ``eigenvalues``.  ``a_p`` is the multiplicity of the eigenvalue 1
    (equals the number of absorbing states), and those columns come first.
    """

    kind: str  # "diag" | "jordan"
    S: np.ndarray
    S_inv: np.ndarray
    eigenvalues: np.ndarray
    blocks: tuple[tuple[complex, int], ...]
    a_p: int
    residual: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lam(self) -> float:
        """Modulus of the largest eigenvalue other than 1 (0 if none)."""
        if self.a_p >= self.n:
            return 0.0
        return float(abs(self.eigenvalues[self.a_p]))


def _eig_sort_key(ev: complex):
    return (-abs(ev), cmath.phase(ev))


def _rank(A: np.ndarray) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > RANK_TOL * max(1.0, float(s[0]))))


def _kernel_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the (numerical) kernel of A."""
    u, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > RANK_TOL * max(1.0, float(s[0])))) if s.size else 0
    return vh[rank:].conj().T


def _orthonormalize(vectors: list[np.ndarray]) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.asarray(v, dtype=complex).copy()
        for _ in range(2):  # two Gram-Schmidt passes
            for b in basis:
                w = w - (b.conj() @ w) * b
        norm = float(np.linalg.norm(w))
        if norm > 1e-10:
            basis.append(w / norm)
    return basis


def _pick_complement(cands: np.ndarray, existing: list[np.ndarray], need: int, tol: float) -> list[np.ndarray]:
    """Greedily select `need` candidate columns independent of `existing`."""
    basis = _orthonormalize(existing)
    picked: list[np.ndarray] = []
    for _ in range(need):
        best, best_norm = None, 0.0
        for j in range(cands.shape[1]):
            w = cands[:, j].astype(complex)
            for _ in range(2):
                for b in basis:
                    w = w - (b.conj() @ w) * b
            norm = float(np.linalg.norm(w))
            if norm > best_norm:
                best_norm, best = norm, w
        if best is None or best_norm < 1e-8:
            raise DecompositionUnstable(math.inf, tol)
        v = best / best_norm
        basis.append(v)
        picked.append(v)
    return picked


def _cluster_chains(P: np.ndarray, mu: complex, mult: int, tol: float) -> list[tuple[int, list[np.ndarray]]]:
    """Generalized eigenvector chains for one eigenvalue, longest first.

    Kernel dimensions of ``(P - mu I)^k`` fix the block sizes; top vectors
    are chosen per level to complement the lower kernel plus the images of
    the longer chains, then each chain is read off as
    ``A^{l-1} v, ..., A v, v`` (eigenvector first).
    """
    n = P.shape[0]
    A = P.astype(complex) - mu * np.eye(n)
    powers = [np.eye(n, dtype=complex)]
    dims = [0]
    while dims[-1] < mult:
        powers.append(powers[-1] @ A)
        dk = min(n - _rank(powers[-1]), mult)
        if dk <= dims[-1]:
            raise DecompositionUnstable(math.inf, tol)
        dims.append(dk)
    depth = len(dims) - 1
    at_least = [dims[k] - dims[k - 1] for k in range(1, depth + 1)]
    if any(at_least[i] < at_least[i + 1] for i in range(depth - 1)):
        raise DecompositionUnstable(math.inf, tol)
    exactly = [
        at_least[k] - (at_least[k + 1] if k + 1 < depth else 0) for k in range(depth)
    ]
    kernels = [None] + [_kernel_basis(powers[k]) for k in range(1, depth + 1)]

    tops: list[tuple[int, np.ndarray]] = []
    for k in range(depth, 0, -1):
        need = exactly[k - 1]
        if need == 0:
            continue
        existing: list[np.ndarray] = []
        if k >= 2:
            existing.extend(kernels[k - 1].T)
        existing.extend(powers[l - k] @ v for l, v in tops)  # longer chains, at this level
        tops.extend((k, v) for v in _pick_complement(kernels[k], existing, need, tol))

    chains = []
    for length, v in sorted(tops, key=lambda lv: -lv[0]):
        cols = [powers[length - 1 - i] @ v for i in range(length)]
        scale = max(float(np.linalg.norm(c)) for c in cols)
        chains.append((length, [c / scale for c in cols]))
    return chains


def decompose(P: np.ndarray | Dtmc, tol: float = 1e-9) -> SpectralData:
    """Verified eigendecomposition of a jump matrix.

    Tries the plain eigenbasis first; if it is ill-conditioned or fails to
    reconstruct P, falls back to the full block form.  Raises
    :class:`ModulusOneNotOne` when the modulus-one eigenvalues are not all
    the eigenvalue 1 with multiplicity equal to the number of absorbing
    states (absorption would not be almost sure), and
    :class:`DecompositionUnstable` when no factorization reconstructs P
    within ``tol``.
    """
    if isinstance(P, Dtmc):
        P = P.P
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("P must be square")
    absorbing = int(np.sum(np.diag(P) >= 1.0 - ABSORBING_EPS))

    evals, evecs = np.linalg.eig(P)
    big = np.abs(evals) >= 1.0 - MOD_ONE_TOL
    if np.any(np.abs(evals[big] - 1.0) > MOD_ONE_TOL):
        worst = evals[big][np.argmax(np.abs(evals[big] - 1.0))]
        raise ModulusOneNotOne(f"eigenvalue {worst} has modulus ~1 but is not ~1")
    a_p = int(np.sum(big))
    if a_p != absorbing:
        raise ModulusOneNotOne(
            f"eigenvalue 1 has multiplicity {a_p} but the chain has {absorbing}"
            " absorbing states"
        )
    evals = evals.copy()
    evals[big] = 1.0

    order = sorted(range(n), key=lambda i: _eig_sort_key(evals[i]))
    evs = evals[order]
    V = evecs[:, order]
    if np.linalg.cond(V) <= COND_GATE:
        try:
            V_inv = np.linalg.inv(V)
        except np.linalg.LinAlgError:
            V_inv = None
        if V_inv is not None:
            residual = float(np.max(np.abs((V * evs) @ V_inv - P)))
            if residual <= tol:
                return SpectralData(
                    kind="diag",
                    S=V,
                    S_inv=V_inv,
                    eigenvalues=evs,
                    blocks=tuple((complex(ev), 1) for ev in evs),
                    a_p=a_p,
                    residual=residual,
                )

    # ---------------------------------------------------------- Jordan path
    if n > JORDAN_MAX_N:
        raise DecompositionUnstable(math.inf, tol)

    # cluster nearby eigenvalues; snap the 1- and 0-clusters exactly
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(evals[i] - evals[j]) <= CLUSTER_TOL:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    clusters: list[tuple[complex, int]] = []
    for members in groups.values():
        vals = evals[members]
        if np.any(np.abs(vals - 1.0) <= MOD_ONE_TOL):
            rep = 1.0 + 0.0j
        elif np.all(np.abs(vals) <= CLUSTER_TOL):
            rep = 0.0 + 0.0j
        else:
            rep = complex(np.mean(vals))
        clusters.append((rep, len(members)))
    clusters.sort(key=lambda c: (c[0] != 1.0,) + _eig_sort_key(c[0]))

    cols: list[np.ndarray] = []
    blocks: list[tuple[complex, int]] = []
    eigenvalues: list[complex] = []
    for mu, mult in clusters:
        chains = _cluster_chains(P, mu, mult, tol)
        if mu == 1.0 and any(length > 1 for length, _ in chains):
            raise ModulusOneNotOne("the eigenvalue 1 is defective")
        for length, chain_cols in chains:
            cols.extend(chain_cols)
            blocks.append((mu, length))
            eigenvalues.extend([mu] * length)

    S = np.column_stack(cols)
    try:
        S_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError:
        raise DecompositionUnstable(math.inf, tol) from None
    J = np.zeros((n, n), dtype=complex)
    off = 0
    for mu, size in blocks:
        for i in range(size):
            J[off + i, off + i] = mu
            if i + 1 < size:
                J[off + i, off + i + 1] = 1.0
        off += size
    residual = float(np.max(np.abs(S @ J @ S_inv - P)))
    if residual > tol:
        raise DecompositionUnstable(residual, tol)
    return SpectralData(
        kind="jordan",
        S=S,
        S_inv=S_inv,
        eigenvalues=np.array(eigenvalues),
        blocks=tuple(blocks),
        a_p=a_p,
        residual=residual,
    )


def as_jordan(sd: SpectralData) -> SpectralData:
    """View a diagonal factorization as a (size-1 blocks) block form."""
    if sd.kind == "jordan":
        return sd
    return replace(sd, kind="jordan")


# --------------------------------------------------------------------------
# closed-form step probabilities
# --------------------------------------------------------------------------


def _real_part(value: complex) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise DecompositionUnstable(abs(value.imag), IMAG_TOL)
    return float(value.real)


def pn_diag(sd: SpectralData, k: int, init_row: int = 0, goal_col: int | None = None) -> float:
    """p_k: probability of first entering the goal column at step k exactly,
    read from a diagonal factorization."""
    if sd.kind != "diag":
        raise WrongKind("pn_diag needs a diagonal factorization")
    if k < 1:
        raise ValueError("steps are 1-based")
    g = sd.n - 1 if goal_col is None else goal_col
    lams = sd.eigenvalues[sd.a_p:]
    coef = sd.S[init_row, sd.a_p:] * sd.S_inv[sd.a_p:, g] * (lams - 1.0)
    return _real_part(complex(np.sum(coef * lams ** (k - 1))))


def pn_jordan(sd: SpectralData, N: int, init_row: int = 0, goal_col: int | None = None) -> float:
    """p_N from a block factorization (handles defective matrices).

    Blocks at the eigenvalue 1 contribute nothing; blocks at 0 contribute
    through the shifted difference of their nilpotent powers; every other
    block contributes binomially weighted powers of its eigenvalue.
    """
    if sd.kind != "jordan":
        raise WrongKind("pn_jordan needs a block factorization")
    if N < 1:
        raise ValueError("steps are 1-based")
    g = sd.n - 1 if goal_col is None else goal_col
    total = 0.0 + 0.0j
    off = 0
    for mu, size in sd.blocks:
        if mu == 1.0:
            off += size
            continue
        if mu == 0.0:
            # (Z^N - Z^{N-1}) of the nilpotent shift: two staggered diagonals.
            for j in range(0, size - N + 1):
                coef = (sd.S[init_row, off + j - 1] if j >= 1 else 0.0) - sd.S[init_row, off + j]
                total += coef * sd.S_inv[off + N - 1 + j, g]
            off += size
            continue
        for m in range(0, min(N, size - 1) + 1):
            if m == N:
                c = 1.0 + 0.0j
            else:
                c = mu ** (N - 1 - m) * (mu * math.comb(N, m) - math.comb(N - 1, m))
            inner = 0.0 + 0.0j
            for a in range(0, size - m):
                inner += sd.S[init_row, off + a] * sd.S_inv[off + a + m, g]
            total += c * inner
        off += size
    return _real_part(total)


# --------------------------------------------------------------------------
# bounds
# --------------------------------------------------------------------------


def _prepare(M: Ctmc) -> tuple[Ctmc, float]:
    Mn = normalize_goal(prune_unreachable(M))
    return Mn, _uniform_rate(Mn)


def _absorbing_states(P: np.ndarray) -> np.ndarray:
    return np.diag(P) >= 1.0 - ABSORBING_EPS


def is_embedded_acyclic(M: Ctmc | Dtmc) -> bool:
    """True when the transient part of the jump graph has no cycle (a
    positive self-loop counts as one)."""
    P = M.P
    absorbing = _absorbing_states(P)
    n = P.shape[0]
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done
    for root in range(n):
        if absorbing[root] or color[root]:
            continue
        stack = [(root, iter(np.flatnonzero(P[root] > 0.0)))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for u in it:
                u = int(u)
                if absorbing[u]:
                    continue
                if color[u] == 1:
                    return False
                if color[u] == 0:
                    color[u] = 1
                    stack.append((u, iter(np.flatnonzero(P[u] > 0.0))))
                    advanced = True
                    break
            if not advanced:
                color[v] = 2
                stack.pop()
    return True


def _acyclic_values(Mn: Ctmc, rate: float, delta: float, t_grid) -> np.ndarray:
    c = math.exp(delta)
    L = int(Mn.n - np.sum(_absorbing_states(Mn.P)))
    if L == 0:
        return np.zeros(len(t_grid))
    hs = hit_exact_steps(Mn, L)
    return np.array(
        [float(np.dot(hs.probs, erlang_diff_prefix(c, rate * float(t), L)[1:])) for t in t_grid]
    )


def acyclic_exact(M: Ctmc, delta: float, t: float) -> float:
    """Exact reachability gap against the ``e^delta``-accelerated copy for a
    chain whose transient jump graph is a DAG: the hit-step distribution has
    finite support, so the series is a finite sum with no truncation."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    Mn, rate = _prepare(M)
    if not is_embedded_acyclic(Mn):
        raise NotAcyclic("the transient jump graph has a cycle")
    return float(_acyclic_values(Mn, rate, delta, [t])[0])


def _diag_bound_from(sd: SpectralData, rate: float, delta: float, t_grid, tol: float) -> np.ndarray:
    n, a_p = sd.n, sd.a_p
    trans = n - a_p
    if trans == 0:
        return np.zeros(len(t_grid))
    lam = sd.lam
    if lam >= 1.0 - 1e-12:
        raise SpectralGapZero(f"second eigenvalue modulus {lam} leaves no decay margin")
    g = n - 1
    coefs = sd.S[0, a_p:] * sd.S_inv[a_p:, g] * (sd.eigenvalues[a_p:] - 1.0)
    C = float(np.max(np.abs(coefs)))
    c = math.exp(delta)

    K = 64
    while trans * C * lam**K / (1.0 - lam) >= tol and K < (1 << 22):
        K *= 2
    tail = trans * C * lam**K / (1.0 - lam)
    pows = lam ** np.arange(K)
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        diffs = erlang_diff_prefix(c, rate * float(t), K)
        out[i] = min(1.0, trans * C * float(pows @ diffs[1:]) + tail)
    return out


def _jordan_bound_from(sd: SpectralData, rate: float, delta: float, t_grid, tol: float) -> np.ndarray:
    regular = [(mu, size) for mu, size in sd.blocks if mu != 0.0 and mu != 1.0]
    if not regular:
        raise AcyclicChain("every transient eigenvalue vanishes; the gap is a finite sum")
    lam = max(abs(mu) for mu, _ in regular)
    if lam >= 1.0 - 1e-12:
        raise SpectralGapZero(f"second eigenvalue modulus {lam} leaves no decay margin")
    r_reg = max(size for _, size in regular)
    R = max(size for _, size in sd.blocks)
    g = sd.n - 1

    C = 0.0
    off = 0
    for mu, size in sd.blocks:
        if mu != 0.0 and mu != 1.0:
            star = max(abs(mu), abs(1.0 - mu))
            for k in range(1, size + 1):
                for j in range(k, size + 1):
                    C += abs(sd.S[0, off + k - 1] * sd.S_inv[off + j - 1, g]) * star
        off += size

    # exact head through step R (covers the nilpotent blocks entirely),
    # eigenvalue envelope C * k^{r-1} lam^{k-r} beyond it
    head = np.array([max(0.0, pn_jordan(sd, k)) for k in range(1, R + 1)])
    log_lam = math.log(lam)

    def envelope(k: float) -> float:
        return math.exp((r_reg - 1) * math.log(k) + (k - r_reg) * log_lam)

    K = max(2 * R + 2, 256)
    while True:
        rho = lam * ((K + 2) / (K + 1)) ** (r_reg - 1)
        if rho < 1.0:
            tail = C * envelope(K + 1) / (1.0 - rho)
            if tail < tol or K >= (1 << 22):
                break
        K *= 2
    ks = np.arange(R + 1, K + 1, dtype=float)
    envs = np.exp((r_reg - 1) * np.log(ks) + (ks - r_reg) * log_lam)

    c = math.exp(delta)
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        diffs = erlang_diff_prefix(c, rate * float(t), K)
        value = float(head @ diffs[1 : R + 1]) + C * float(envs @ diffs[R + 1 :]) + tail
        out[i] = min(1.0, value)
    return out


def diag_bound(M: Ctmc, delta: float, t_grid, tol: float = 1e-9) -> np.ndarray:
    """Gap bound from the diagonal factorization: per grid time,
    ``(n - a_P) C sum_k lam^{k-1} erlang_diff(k, e^delta, r t)`` plus a
    certified geometric tail (added, so the result stays an upper bound)."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    Mn, rate = _prepare(M)
    sd = decompose(Mn.P)
    if sd.kind != "diag":
        raise WrongKind("the jump matrix is not diagonalizable")
    return _diag_bound_from(sd, rate, delta, t_grid, tol)


def jordan_bound(M: Ctmc, delta: float, t_grid, tol: float = 1e-9) -> np.ndarray:
    """Gap bound from the block factorization: exact step probabilities up
    to the largest block size, then a ``C k^{r-1} lam^{k-r}`` envelope with
    a certified ratio-test tail (added)."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    Mn, rate = _prepare(M)
    sd = as_jordan(decompose(Mn.P))
    return _jordan_bound_from(sd, rate, delta, t_grid, tol)


def combined_bound(M: Ctmc, delta: float, t_grid, tol: float = 1e-9) -> np.ndarray:
    """Pointwise best of the chain-length bound and the spectral route.

    The spectral side picks the exact finite sum for acyclic chains, the
    diagonal bound when P diagonalizes, and the block bound otherwise; if
    the decomposition fails it degrades (with a
    :class:`DecompositionFallbackWarning`) to the chain-length bound alone.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    Mn, rate = _prepare(M)
    base = np.array([erlang_N_bound(rate * float(t), delta) for t in t_grid])
    spec = None
    if is_embedded_acyclic(Mn):
        spec = _acyclic_values(Mn, rate, delta, t_grid)
    else:
        try:
            sd = decompose(Mn.P)
            if sd.kind == "diag":
                spec = _diag_bound_from(sd, rate, delta, t_grid, tol)
            else:
                spec = _jordan_bound_from(sd, rate, delta, t_grid, tol)
        except (ModulusOneNotOne, DecompositionUnstable, SpectralGapZero, AcyclicChain) as exc:
            warnings.warn(
                f"spectral bound unavailable ({exc}); falling back to the"
                " chain-length bound",
                DecompositionFallbackWarning,
                stacklevel=2,
            )
    out = base if spec is None else np.minimum(base, spec)
    return np.clip(out, 0.0, 1.0)


def spectral_report(M: Ctmc) -> dict:
    """Decomposition summary of the goal-normalized jump matrix."""
    Mn = normalize_goal(prune_unreachable(M))
    sd = decompose(Mn.P)
    return {
        "kind": sd.kind,
        "states": list(Mn.ids),
        "absorbing_multiplicity": sd.a_p,
        "second_modulus": sd.lam,
        "residual": sd.residual,
        "eigenvalues": [[float(ev.real), float(ev.imag)] for ev in sd.eigenvalues],
        "blocks": [
            {"eigenvalue": [float(mu.real), float(mu.imag)], "size": size}
            for mu, size in sd.blocks
        ],
    }


def triangle_bound_eps_delta(M: Ctmc, N: Ctmc, eps: float, delta: float, t_grid, tol: float = 1e-9) -> np.ndarray:
    """Gap bound between two (eps, delta)-related chains by splitting the
    tolerances: route through the intermediate product chains (probability
    step first, then the pure rate step), bound the rate step with the
    combined spectral/chain-length machinery on the jointly uniformized
    product, and charge the probability step to the time-uniform bound.
    """
    res = split_construction(M, N, eps, delta)
    m_mid, n_mid = res.m_prime, res.n_prime
    q_eps = max(M.max_rate(), m_mid.max_rate())

    m_norm = normalize_goal(prune_unreachable(m_mid))
    n_norm = normalize_goal(prune_unreachable(n_mid))
    if m_norm.ids != n_norm.ids:
        raise RuntimeError("product chains diverged during normalization")
    identity = PairRelation.from_off_diagonal(
        [(i, m_norm.n + i) for i in range(m_norm.n)], 2 * m_norm.n, 0.0, delta
    )
    pair = uniformize_pair(m_norm, n_norm, identity, delta)
    core = combined_bound(pair.m_uniform, delta, t_grid, tol)
    unif = np.array([uniformization_bound(eps, 0.0, q_eps, float(t)) for t in t_grid])
    return np.minimum(1.0, core + unif)
