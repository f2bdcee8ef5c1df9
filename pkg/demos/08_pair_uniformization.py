"""Flattening a (0, delta)-related pair of chains to constant exit rates.

Rate-uniform chains are where the sharpest error bounds live.  Given two
chains related with no probability tolerance, both can be rewritten to a
single rate each -- the two rates exactly e^delta apart.  Two things happen
per relation class: members are first slowed to the class's floor rate
(a genuine change of law, bounded by the relation), then everything is
lifted to the shared rate by the classic trick of speeding the clock up
and parking the surplus probability on a self-loop (no change of law).
"""

import math

import numpy as np

from ctmcbisim import (
    PairRelation,
    direct_sum,
    is_bisimulation,
    make_ctmc,
    scale,
    timed_reach,
    uniformize_pair,
)

# a1 and a2 carry the same label and rates within a factor 1.2 of each
# other, so they can sit in one relation class; b is a faster second class.
M = make_ctmc(
    [
        ("a1", ("a",), 1.0),
        ("a2", ("a",), 1.2),
        ("b", ("b",), 2.0),
        ("g", ("g",), 1.0),
    ],
    [
        ("a1", "a2", 0.4), ("a1", "b", 0.3), ("a1", "g", 0.3),
        ("a2", "a1", 0.4), ("a2", "b", 0.3), ("a2", "g", 0.3),
        ("b", "b", 0.2), ("b", "a1", 0.3), ("b", "g", 0.5),
        ("g", "g", 1.0),
    ],
    initial="a1",
    goal=("g",),
)
N = scale(M, 1.2)  # the same system on a clock 1.2x faster

# The closure chains a1 through a2 to the sped-up copy of a2, so the rate
# slack has to absorb both steps: delta = ln 1.2 + ln 1.2.
delta = 2 * math.log(1.2)

R = PairRelation.from_off_diagonal(
    {(0, 1)} | {(i, M.n + i) for i in range(M.n)}, 2 * M.n, 0.0, delta
).transitive_closure()

res = uniformize_pair(M, N, R, delta)
Mu, Nu = res

print("original rates:", M.E, "and", np.round(N.E, 6))
print(f"uniformized:    {res.q_m} everywhere vs {res.q_n:.6f} everywhere")
print(f"ratio is e^delta by construction: {res.q_n / res.q_m:.10f}")

chk = is_bisimulation(direct_sum(Mu, Nu), res.relation)
print(f"relation still verifies afterwards: {chk.ok}")

print("\na2 was first slowed to its class floor (1.2 -> 1.0), then every")
print("a-class state gained a self-loop to reach the shared rate 2:")
i = M.ids.index("a1")
print("  a1 jumps before:", M.P[i], " after:", np.round(Mu.P[i], 4))

print("\nfour-way ordering of reachability curves:")
print("   t     slowed M  M         N         sped-up N")
for t in (0.5, 1.0, 2.0, 5.0):
    row = [timed_reach(X, None, t, tol=1e-11) for X in (Mu, M, N, Nu)]
    print("  %3.1f   %.6f  %.6f  %.6f  %.6f" % (t, *row))
