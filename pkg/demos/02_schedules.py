"""Step/batch schedules and the finite-horizon coupling validator.

Shows a pairing that satisfies the mean-square convergence conditions, one
that cannot (constant batch), and the closed-form partial-sum bounds.
"""

from stochfp import BatchSchedule, StepSchedule, validate

step = StepSchedule.poly(0.5)
print("== step sizes alpha_k = (k+1)^(-1/2) ==")
print("  ", [round(step.at(k), 4) for k in (0, 1, 3, 15, 99, 9999)])

good = BatchSchedule.exponential(32, 2.0)
bad = BatchSchedule.constant(4)
print("\n== batch sizes ==")
print("  doubling from 32:", [good.at(k) for k in range(6)])
print("  constant 4:      ", [bad.at(k) for k in range(6)])

print("\n== validation: doubling batches ==")
for line in validate(step, good, 1000).lines():
    print("  " + line)

print("\n== validation: constant batches ==")
rep = validate(step, bad, 1000)
for line in rep.lines():
    print("  " + line)
print("  -> the root-batch sum grows linearly; no increasing-batch certificate,")
print("     so the mean-square convergence conditions cannot be met.")

print("\n== capped growth (practical finite increase) ==")
capped = BatchSchedule.exponential(4, 1.01, cap=2**16)
rep = validate(step, capped, 10_000)
print(f"  first violation of 1/b_k <= alpha_k^2 at k="
      f"{rep.inv_b_le_alpha_sq.first_violation}, "
      f"holds again from k0={rep.inv_b_le_alpha_sq.k0}")
print(f"  cap hit within horizon: {rep.cap_hit}")
