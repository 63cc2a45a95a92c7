"""How p-th variation stabilizes as partitions refine.

A fractional Brownian path with Hurst index H has finite variation of
order p = 1/H: coarser orders blow up, finer orders die. On the dyadic
hierarchy the cumulative sums at t = 1 approach t * E|Z|^p, i.e. 1.0 for
(H=1/2, p=2) and 3.0 for (H=1/4, p=4).

Run:  python demos/demo_pth_variation.py
"""

import numpy as np

from pathwise import (
    PathSpec,
    dyadic_hierarchy,
    gaussian_moment,
    generate,
    pth_variation,
    variation_convergence_report,
)

for hurst, p in ((0.5, 2), (0.25, 4)):
    print(f"\n== fBM with H = {hurst}, variation order p = {p} ==")
    path = generate(PathSpec(kind="fbm", hurst=hurst, T=1.0, n_max=12, seed=7))
    hier = dyadic_hierarchy(path, 12)
    curve = pth_variation(path, hier, p, [0.25, 0.5, 1.0])

    print(f"{'level':>5} {'[S]^p(0.25)':>12} {'[S]^p(0.5)':>12} {'[S]^p(1)':>12}")
    for n, row in zip(curve.level_labels, curve.per_level):
        if n in (2, 4, 6, 8, 10, 12):
            print(f"{n:>5} {row[0]:>12.5f} {row[1]:>12.5f} {row[2]:>12.5f}")
    target = gaussian_moment(p)
    print(f"theoretical limit at t = 1 (one seed, so expect scatter): {target}")

    report = variation_convergence_report(curve)
    print("sup-norm gaps between consecutive levels (last four):",
          np.array2string(report.sup_diffs[-4:], precision=4))

print("\nWrong-order sums on the same rough path (H = 1/4):")
path = generate(PathSpec(kind="fbm", hurst=0.25, T=1.0, n_max=12, seed=7))
hier = dyadic_hierarchy(path, 12)
for p in (2, 4, 6):
    finals = pth_variation(path, hier, p, [1.0]).per_level[:, 0]
    print(f"  p = {p}: level 6 -> {finals[5]:.4g}, level 12 -> {finals[11]:.4g}"
          + ("   (diverging)" if p < 4 else "   (vanishing)" if p > 4 else "   (stabilizing)"))
