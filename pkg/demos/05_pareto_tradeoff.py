"""Budgeting tolerances: which (eps, delta) pairs keep the reachability
error under a target theta up to a horizon?

The feasible region has a closed-form boundary, so we can sweep it and
check each sampled point against the bound it came from.
"""

from ctmcbisim import pareto_region, uniformization_bound

theta, q, t = 0.1, 1.0, 2.0
region = pareto_region(theta, q, t)

print(f"error budget theta = {theta}, rate q = {q}, horizon t = {t}")
print(f"  largest usable eps (at delta = 0): {region.eps_max(0.0):.6f}")
print(f"  largest usable delta (at eps = 0): {region.delta_max(0.0):.6f}")

print("\nsampled frontier (every point exhausts the budget):")
print("  eps       delta     bound")
for eps, delta in region.frontier(9):
    bound = uniformization_bound(eps, delta, q, t)
    print(f"  {eps:.6f}  {delta:.6f}  {bound:.6f}")

print("\nmembership probes:")
for eps, delta in ((0.02, 0.02), (0.05, 0.01), (0.08, 0.02)):
    print(f"  ({eps}, {delta}) within budget: {region.contains(eps, delta)}")
