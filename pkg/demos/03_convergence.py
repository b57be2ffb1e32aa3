"""Anchored iteration on the two-halfspace benchmark, exact and sampled.

The anchored scheme converges to the *closest* feasible point to the anchor,
not just any feasible point; with sampled mini-batch means the same limit is
reached provided the batch sizes grow.
"""

import numpy as np

from stochfp import (BatchSchedule, SolverConfig, StepSchedule, ensemble,
                     resolve_oracle, run, two_halfspace_problem)

problem = two_halfspace_problem()
oracle = resolve_oracle(problem)
print(f"anchor x0 = {problem.x0}, limit point x* = {oracle.x_star} "
      f"(residual {oracle.residual_at_star:.1e})")

print("\n== deterministic anchored run ==")
cfg = SolverConfig(method="halpern", step=StepSchedule.poly(0.5),
                   iterations=10_000, seed=0, record_every=1000)
rec = run(problem, cfg)
for i, k in enumerate(rec.ks):
    if k in (0, 1000, 10_000):
        print(f"  k={k:6d}  residual={rec.residuals[i]:.5f}  "
              f"dist^2={rec.dist_sq[i]:.6f}")

print("\n== sampled mini-batch runs, 20 trials ==")
for label, batch in [("growing batches", BatchSchedule.exponential(4, 1.01, cap=2**16)),
                     ("single-sample batches", BatchSchedule.constant(1))]:
    scfg = SolverConfig(method="stoch_halpern", step=StepSchedule.poly(0.5),
                        batch=batch, iterations=10_000, seed=42,
                        record_every=1000)
    stats = ensemble(problem, scfg, trials=20)
    tail = stats.msq_dist_mean[-1]
    mid = stats.msq_dist_mean[np.searchsorted(stats.ks, 1000)]
    print(f"  {label:22s}: mean dist^2 at k=1000: {mid:.2e}, at k=10000: {tail:.2e}")
print("  -> growing batches keep shrinking the error; a frozen batch size")
print("     leaves a noise floor.")
