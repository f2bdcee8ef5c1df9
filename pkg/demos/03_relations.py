"""Approximate bisimulation relations: compute, inspect, and explain.

Two states are related at tolerances (eps, delta) when their labels agree,
their exit rates differ by at most a factor e^delta, and their successor
distributions can be coupled with at least 1 - eps of the mass on related
pairs.  The greatest such relation is a fixpoint reached by deleting pairs
that fail the coupling test.
"""

from ctmcbisim import (
    PairRelation,
    Partition,
    check_quasi_lumpability,
    epsilon_delta_bisim,
    extract_coupling,
    fixtures,
    is_bisimulation,
    strong_bisim,
)

M = fixtures.perturbed_loop_chain(0.25, 0.5)
print("states:", M.ids)

print("\n=== greatest relation at (0.25, 0.5) ===")
R = epsilon_delta_bisim(M, 0.25, 0.5)
for s, t in sorted(R.off_diagonal()):
    print(f"  {M.ids[s]} ~ {M.ids[t]}")

print("\n=== why is (s0, s1) not in it? ===")
probe = PairRelation.from_off_diagonal(
    list(R.off_diagonal()) + [(0, 1)], M.n, 0.25, 0.5
)
chk = is_bisimulation(M, probe)
print(f"  verdict: {chk.ok}, failing condition: {chk.condition}")
print(f"  detail: {chk.detail}")

print("\n=== a coupling witnessing a related pair ===")
s, t = sorted(R.off_diagonal())[0]
cpl = extract_coupling(M, R, s, t, 0.25)
print(f"  pair ({M.ids[s]}, {M.ids[t]}), related mass {cpl.related_mass:.4f}")
print("  rows: how each successor of the first state ships its probability")
for i, a in enumerate(cpl.succ_source):
    row = ", ".join(
        f"{M.ids[b]}: {w:.3f}" for b, w in zip(cpl.succ_target, cpl.weights[i]) if w > 0
    )
    print(f"    {M.ids[a]} -> {row}")

print("\n=== exact notions, for contrast ===")
part = strong_bisim(M)
print("  strong-bisimilarity blocks:", [[M.ids[i] for i in blk] for blk in part.blocks])
M2, blocks = fixtures.quasi_lumpable_gap_chain(0.1, 0.0, 0.2)
part = Partition(blocks=blocks)
print("  quasi-lumpable at tau=0.2:", check_quasi_lumpability(M2, part, 0.2))
print("  quasi-lumpable at tau=0.1:", check_quasi_lumpability(M2, part, 0.1))
