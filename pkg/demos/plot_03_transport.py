"""
Reweighting negatives with an entropic transport plan
=====================================================

Within one degradation region every anchor is paired with the other sampled
patches as negatives. A zero-diagonal, doubly stochastic plan decides how much
each negative counts. Shrinking the entropic strength drives the plan toward
the cheapest assignment that never pairs a patch with itself.
"""

import itertools

import numpy as np

from n2d3.degnce import ot_reweight

rng = np.random.default_rng(3)
block = rng.random((4, 4))
cost = np.where(np.eye(4, dtype=bool), 0.0, block)

# brute-force optimum over permutations without fixed points
best = min(
    (p for p in itertools.permutations(range(4)) if all(p[i] != i for i in range(4))),
    key=lambda p: sum(cost[i, p[i]] for i in range(4)),
)
print("cheapest derangement:", best, "cost", sum(cost[i, best[i]] for i in range(4)))

for eps in (1.0, 0.1, 0.01, 0.001):
    plan = ot_reweight(block, epsilon=eps)
    value = float(np.sum(plan.weights * cost))
    print(f"epsilon={eps:<6} cost={value:.4f} sweeps={plan.sweeps:3d} residual={plan.residual:.1e}")

print(np.round(ot_reweight(block, epsilon=0.001).weights, 3))

# %%
# ``emphasize_hard`` flips the sign of the cost so that the most similar
# (hardest) negatives receive the mass instead.
print(np.round(ot_reweight(block, epsilon=0.001, emphasize_hard=True).weights, 3))
