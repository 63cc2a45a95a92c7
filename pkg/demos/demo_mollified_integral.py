"""The mollified (two-parameter) compensated-sum integral.

For test functions too rough for the plain order-p calculus, smooth them
with the standard bump phi_m, run the compensated sums, and let m grow
after the partition refines. The closed-form target comes from the
occupation-density local time: f(S_t) - f(S_0) - pairing / (p-1)!.

Run:  python demos/demo_mollified_integral.py   (a few seconds: adaptive
quadrature builds the mollified derivative tables)
"""

import numpy as np

from pathwise import (
    Mollifier,
    PathSpec,
    dyadic_hierarchy,
    generate,
    modified_follmer_integral,
    mollify,
    tanaka_class,
)

print("bump normalization |int phi_m - 1|:")
for m in (2, 8, 32):
    print(f"  m = {m:>2}: {Mollifier(m).normalization_defect():.2e}")

f = tanaka_class("abs_pow", 2, a=0.0)
fm = mollify(f, 8)
print("\n|x| smoothed with m = 8 near the kink:")
for x in (-0.3, -0.05, 0.0, 0.05, 0.3):
    print(f"  f_m({x:+.2f}) = {fm.value(x):.5f}   f({x:+.2f}) = {abs(x):.5f}")

path = generate(PathSpec(kind="fbm", hurst=0.5, T=1.0, n_max=8, seed=8))
hier = dyadic_hierarchy(path, 8)
rep = modified_follmer_integral(path, hier, 2, f, 1.0, m_schedule=(2, 4, 8), cells=128)
print(f"\ntarget f(S_1) - f(S_0) - pairing: {rep.target:+.5f}")
print(f"{'m':>4}" + "".join(f"{f'level {n}':>12}" for n in (4, 6, 8)))
for i, m in enumerate(rep.m_schedule):
    cols = [rep.sums[i, list(rep.level_labels).index(n)] for n in (4, 6, 8)]
    print(f"{m:>4}" + "".join(f"{v:>12.5f}" for v in cols))
print("finest-level |sum - target| per m:",
      np.array2string(rep.finest_err_by_m, precision=4))
print("(grow m only after the level resolves 1/m, or the error stalls at"
      " the level's own discretization floor)")
