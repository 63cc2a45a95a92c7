"""Order-p local times three ways.

The discrete local time counts order-p variation accumulated at each
spatial level; the occupation-density variant histograms d[S]^p / p; the
occupation-time density is the classical sojourn density. For Brownian
paths (H = 1/2, p = 2) the variation density is half the sojourn density,
and for H = 1/4, p = 4 the factor is 3/4.

Run:  python demos/demo_local_time.py
"""

import numpy as np

from pathwise import (
    PathSpec,
    SpaceGrid,
    berman_ratio_check,
    discrete_local_time,
    dyadic_hierarchy,
    generate,
    occupation_density_local_time,
    proper_order_report,
    uniform_convergence_report,
)

path = generate(PathSpec(kind="fbm", hurst=0.5, T=1.0, n_max=12, seed=3))
hier = dyadic_hierarchy(path, 12)
grid = SpaceGrid.cover([path], 64)

field = discrete_local_time(path, hier, 2, grid, [1.0])
occ = occupation_density_local_time(path, 2, grid, [1.0])

print("discrete local time at t = 1 near the median of the range")
mid = grid.cells // 2
print(f"{'x':>9} {'level 6':>9} {'level 9':>9} {'level 12':>9} {'occ.dens':>9}")
for g in range(mid - 3, mid + 4):
    print(
        f"{grid.centers[g]:>9.3f}"
        f" {field.per_level[5, 0, g]:>9.4f}"
        f" {field.per_level[8, 0, g]:>9.4f}"
        f" {field.per_level[11, 0, g]:>9.4f}"
        f" {occ.values[0, g]:>9.4f}"
    )

total = 2 * grid.cellwidth * occ.values[0].sum()
print(f"\nmass conservation: 2 * cellwidth * sum = {total:.6f}"
      f"  vs finest [S]^2(1) = {np.sum(np.diff(path.values)**2):.6f}")

rep = uniform_convergence_report(field)
print("\nsup |level_(n+1) - level_n| over (t, x), last five pairs:",
      np.array2string(rep.sup_diffs[-5:], precision=4))

ratio = berman_ratio_check(path, 2, grid)
print(f"\nvariation density / sojourn density, occupation-weighted average:"
      f" {ratio.average_ratio:.4f} (theory {ratio.expected_ratio})")

order = proper_order_report(path, hier, [2, 4], grid)
print("\nproper-order scan (sup_x local time at t = 1):")
for r, flag, sups in zip(order.orders, order.flags, order.sup_values):
    print(f"  order {r}: level 6 -> {sups[5]:.4g}, level 12 -> {sups[11]:.4g}  [{flag}]")
