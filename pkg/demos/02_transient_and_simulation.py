"""Time-bounded reachability three ways: uniformization series, step
distribution, and Monte Carlo.

The series route is exact up to a certified truncation error.  The step
distribution splits the same probability by the number of jumps taken, and
the simulator provides an independent statistical cross-check.
"""

from ctmcbisim import (
    expected_hit_steps,
    fixtures,
    hit_exact_steps,
    reach_prob,
    simulate_paths,
    timed_reach,
)

M = fixtures.branch_merge_chain()

print("=== Pr(reach goal by time t) ===")
for t in (0.5, 1.0, 2.0, 5.0, 10.0):
    print(f"  t = {t:4.1f}:  {timed_reach(M, None, t, tol=1e-12):.10f}")

print("\n=== split by number of jumps ===")
hs = hit_exact_steps(M, 8)
for n, p in enumerate(hs.probs, start=1):
    print(f"  exactly {n} jumps: {p:.8f}")
print(f"  tail beyond 8 jumps: {hs.tail_mass:.8f}")
print(f"  expected jumps to absorb: {expected_hit_steps(M):.6f}")
print(f"  eventual reachability:    {reach_prob(M):.6f}")

print("\n=== seeded Monte Carlo against the series ===")
truth = timed_reach(M, None, 2.0, tol=1e-12)
sim = simulate_paths(M, 200_000, 2.0, seed=42)
print(f"  series: {truth:.6f}")
print(f"  simulation: {sim.estimate:.6f}  95% CI [{sim.ci_low:.6f}, {sim.ci_high:.6f}]")
print(f"  CI contains the series value: {sim.contains(truth)}")
