"""Discrete and occupation-density local times of order p.

The order-p discrete local time of a path along one partition level is

    L_t(x) = sum over intervals with t_j <= t of
             1_(min, max](x) * |S_{t_{j+1}} - x|**(p-1),

where (min, max] is the half-open range swept by the increment.  It
measures how much order-p variation the path accumulates at the spatial
level x.  The occupation-density variant instead histograms the
finest-level increments |dS|**p by the cell containing the interval's left
value and divides by p * cellwidth, estimating the density of d[S]^p / p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._util import bracket_contributions, even_order, left_endpoint_counts, snap_checkpoints
from .errors import CoverageError, ParameterError
from .partitions import PartitionHierarchy
from .paths import SampledPath

__all__ = [
    "SpaceGrid",
    "LocalTimeField",
    "OccupationLocalTime",
    "discrete_local_time",
    "discrete_local_time_curves",
    "occupation_density_local_time",
    "occupation_time_density",
    "weighted_occupation_local_time",
    "berman_ratio_check",
    "BermanRatioReport",
    "uniform_convergence_report",
    "UniformConvergenceReport",
    "proper_order_report",
    "ProperOrderReport",
    "gaussian_moment",
]


def gaussian_moment(p: int) -> float:
    """E|Z|^p for a standard Gaussian and even p: the double factorial
    (p-1)!! = 1 * 3 * ... * (p-1)."""
    p = even_order(p)
    return float(math.prod(range(1, p, 2)))


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform spatial grid of ``cells`` half-open cells over [lo, hi)."""

    lo: float
    hi: float
    cells: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.cells < 1:
            raise ParameterError(f"grid needs at least one cell, got {self.cells}")

    @property
    def cellwidth(self) -> float:
        return (self.hi - self.lo) / self.cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.cells + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def cell_index(self, x) -> np.ndarray:
        """Index of the cell [edge_i, edge_{i+1}) containing each x."""
        return np.clip(
            np.searchsorted(self.edges, np.asarray(x, dtype=float), side="right") - 1,
            0,
            self.cells - 1,
        )

    @classmethod
    def cover(cls, paths: Sequence[SampledPath], cells: int) -> "SpaceGrid":
        """Grid covering the joint range of the paths with a one-cell
        margin on each side."""
        if cells < 3:
            raise ParameterError("cover needs at least 3 cells for the margins")
        m = min(float(p.values.min()) for p in paths)
        M = max(float(p.values.max()) for p in paths)
        if M <= m:
            return cls(lo=m - 1.0, hi=m + 1.0, cells=cells)
        cw = (M - m) / (cells - 2)
        return cls(lo=m - cw, hi=M + cw, cells=cells)


@dataclass
class LocalTimeField:
    """Discrete local times on (level, checkpoint, grid-center).

    When a checkpoint is a partition time of a level, that level's slice
    is supported inside the running range of the path (widened by one
    cell).  A checkpoint interior to a cell credits the straddling
    interval's full sweep, which can extend past the running range; that
    is the t_j <= t attribution rule at work.
    """

    p: int
    grid: SpaceGrid
    checkpoint_times: np.ndarray
    level_labels: tuple
    per_level: np.ndarray  # (n_levels, n_checkpoints, cells)

    def final_slice(self, level_pos: int = -1) -> np.ndarray:
        return self.per_level[level_pos, -1, :]

    def to_csv_rows(self):
        """Rows ``level,t,x,value``."""
        centers = self.grid.centers
        for i, lab in enumerate(self.level_labels):
            for j, t in enumerate(self.checkpoint_times):
                for x, v in zip(centers, self.per_level[i, j]):
                    yield lab, t, x, v


@dataclass
class OccupationLocalTime:
    """Histogram density on (checkpoint, grid-center); for the order-p
    variant ``p * cellwidth * sum_x values`` recovers the finest-level
    p-th variation exactly.  ``p`` is None for time-based densities."""

    p: Optional[int]
    grid: SpaceGrid
    checkpoint_times: np.ndarray
    values: np.ndarray  # (n_checkpoints, cells)

    def to_csv_rows(self):
        centers = self.grid.centers
        for j, t in enumerate(self.checkpoint_times):
            for x, v in zip(centers, self.values[j]):
                yield t, x, v


def _check_coverage(path: SampledPath, grid: SpaceGrid) -> None:
    m, M = float(path.values.min()), float(path.values.max())
    if grid.lo > m or grid.hi < M:
        raise CoverageError(
            f"grid [{grid.lo}, {grid.hi}] does not cover the path range [{m}, {M}]"
        )


def discrete_local_time(
    path: SampledPath,
    hierarchy: PartitionHierarchy,
    p: int,
    grid: SpaceGrid,
    checkpoints: Sequence[float],
) -> LocalTimeField:
    """Order-p discrete local time field over all hierarchy levels.

    Entries are nonnegative, non-decreasing in the checkpoint index, and
    vanish at grid centers outside the running range of the path widened
    by one cell.
    """
    p = even_order(p)
    _check_coverage(path, grid)
    times, cps = snap_checkpoints(path, checkpoints)
    centers = grid.centers
    out = np.zeros((hierarchy.n_levels, cps.size, grid.cells))
    for i, lev in enumerate(hierarchy.levels):
        a = path.values[lev[:-1]]
        b = path.values[lev[1:]]
        lo = np.minimum(a, b)[:, None]
        hi = np.maximum(a, b)[:, None]
        contrib = np.where(
            (centers[None, :] > lo) & (centers[None, :] <= hi),
            np.abs(b[:, None] - centers[None, :]) ** (p - 1),
            0.0,
        )
        cums = np.concatenate([np.zeros((1, grid.cells)), np.cumsum(contrib, axis=0)])
        out[i] = cums[left_endpoint_counts(lev, cps)]
    return LocalTimeField(
        p=p,
        grid=grid,
        checkpoint_times=times,
        level_labels=hierarchy.level_labels,
        per_level=out,
    )


def discrete_local_time_curves(
    path: SampledPath,
    hierarchy: PartitionHierarchy,
    p: int,
    x: float,
    checkpoints: Sequence[float],
) -> np.ndarray:
    """Discrete local time at one exact location x, per (level, checkpoint).

    Used wherever a spatial atom must be evaluated exactly rather than
    snapped to a cell center.
    """
    p = even_order(p)
    _, cps = snap_checkpoints(path, checkpoints)
    out = np.zeros((hierarchy.n_levels, cps.size))
    for i, lev in enumerate(hierarchy.levels):
        a = path.values[lev[:-1]]
        b = path.values[lev[1:]]
        contrib = bracket_contributions(a, b, p, x)
        cums = np.concatenate([[0.0], np.cumsum(contrib)])
        out[i] = cums[left_endpoint_counts(lev, cps)]
    return out


def _binned_density(
    path: SampledPath,
    grid: SpaceGrid,
    interval_weights: np.ndarray,
    checkpoint_indices: np.ndarray,
    denominator: float,
) -> np.ndarray:
    cells = grid.cell_index(path.values[:-1])
    n_int = path.n_samples - 1
    out = np.zeros((checkpoint_indices.size, grid.cells))
    for j, c in enumerate(checkpoint_indices):
        count = min(int(c) + 1, n_int)
        np.add.at(out[j], cells[:count], interval_weights[:count])
    return out / denominator


def occupation_density_local_time(
    path: SampledPath, p: int, grid: SpaceGrid, checkpoints: Sequence[float]
) -> OccupationLocalTime:
    """Occupation-density local time: finest-level |dS|**p masses binned by
    the cell containing the interval's left value, divided by
    p * cellwidth.  Mass conservation is exact by construction:
    ``p * cellwidth * sum_x values(t, x)`` equals the finest-level p-th
    variation up to accumulation rounding."""
    p = even_order(p)
    _check_coverage(path, grid)
    if grid.cellwidth <= 0:
        raise ParameterError("degenerate grid")
    times, cps = snap_checkpoints(path, checkpoints)
    w = np.abs(np.diff(path.values)) ** p
    vals = _binned_density(path, grid, w, cps, p * grid.cellwidth)
    return OccupationLocalTime(p=p, grid=grid, checkpoint_times=times, values=vals)


def occupation_time_density(
    path: SampledPath, grid: SpaceGrid, checkpoints: Sequence[float]
) -> OccupationLocalTime:
    """Classical occupation-time density: time spent per cell divided by
    the cellwidth (each interval weighted dt, binned by its left value)."""
    _check_coverage(path, grid)
    times, cps = snap_checkpoints(path, checkpoints)
    w = np.full(path.n_samples - 1, path.dt)
    vals = _binned_density(path, grid, w, cps, grid.cellwidth)
    return OccupationLocalTime(p=None, grid=grid, checkpoint_times=times, values=vals)


def weighted_occupation_local_time(
    path: SampledPath, hurst: float, grid: SpaceGrid, checkpoints: Sequence[float]
) -> OccupationLocalTime:
    """Density of the weighted time measure ``2H s**(2H-1) ds``.

    Each interval carries its exact weight ``t_{j+1}**(2H) - t_j**(2H)``,
    so the total mass up to t is ``t**(2H)``.  With H = 1/2 the weight is
    the plain time increment and the result matches the unweighted
    occupation-time density.
    """
    if not (0.0 < hurst < 1.0):
        raise ParameterError(f"hurst must be in (0, 1), got {hurst}")
    _check_coverage(path, grid)
    times, cps = snap_checkpoints(path, checkpoints)
    tg = path.times
    w = tg[1:] ** (2 * hurst) - tg[:-1] ** (2 * hurst)
    vals = _binned_density(path, grid, w, cps, grid.cellwidth)
    return OccupationLocalTime(p=None, grid=grid, checkpoint_times=times, values=vals)


@dataclass
class BermanRatioReport:
    """Per-cell ratio of the order-p occupation-density local time to the
    occupation-time density, against the theoretical constant c_p / p with
    c_p = E|Z|^p.  The spatial average weights each cell by its occupation
    time, so empty and barely-visited cells do not dominate."""

    p: int
    hurst: float
    expected_ratio: float
    average_ratio: float
    cell_centers: np.ndarray
    per_cell_ratio: np.ndarray
    occupation_weights: np.ndarray

    def __str__(self):
        return (
            "occupation-density / occupation-time ratio report\n"
            f"  p = {self.p}, H = {self.hurst}\n"
            f"  theoretical ratio c_p / p = {self.expected_ratio}\n"
            f"  occupation-weighted spatial average = {self.average_ratio!r}\n"
            f"  cells with occupancy: {self.per_cell_ratio.size}"
        )


def berman_ratio_check(path: SampledPath, p: int, grid: SpaceGrid) -> BermanRatioReport:
    """Compare the order-p variation density against the occupation-time
    density for a fractional Brownian path with H = 1/p.

    Requires the path metadata to identify an fBM (or Brownian) sample
    with matching Hurst index; for other paths the ratio has no
    theoretical value and the check refuses to run.
    """
    p = even_order(p)
    kind = path.metadata.get("kind")
    hurst = path.metadata.get("hurst")
    if kind not in ("fbm", "bm") or hurst is None:
        raise ParameterError("ratio check requires an fBM path (generated with kind fbm/bm)")
    if not math.isclose(hurst, 1.0 / p, rel_tol=1e-9):
        raise ParameterError(f"ratio check requires H = 1/p; got H={hurst}, p={p}")
    occ = occupation_density_local_time(path, p, grid, [path.T]).values[0]
    tau = occupation_time_density(path, grid, [path.T]).values[0]
    sel = tau > 0
    ratios = occ[sel] / tau[sel]
    weights = tau[sel]
    avg = float(np.sum(ratios * weights) / np.sum(weights))
    return BermanRatioReport(
        p=p,
        hurst=float(hurst),
        expected_ratio=gaussian_moment(p) / p,
        average_ratio=avg,
        cell_centers=grid.centers[sel],
        per_cell_ratio=ratios,
        occupation_weights=weights,
    )


_WEAK_CENTIL = (0.3, 0.5, 0.7)
_WEAK_WIDTH_FRAC = (1.0 / 6.0, 1.0 / 12.0)


@dataclass
class UniformConvergenceReport:
    """Level-to-level behavior of a discrete local time field.

    ``sup_diffs[n]`` is the sup over (t, x) of the difference between
    consecutive levels.  The weak diagnostic integrates the final-time
    slice against a fixed library of Gaussian test densities (documented
    in ``test_densities``) and reports successive differences; it probes
    convergence in the integrated (weak) sense without fixing an exponent.
    """

    level_labels: tuple
    sup_diffs: np.ndarray
    test_densities: tuple
    weak_values: np.ndarray  # (n_levels, n_densities)
    weak_diffs: np.ndarray  # (n_levels - 1, n_densities)

    def __str__(self):
        lines = ["uniform convergence report"]
        lines.append(
            "  sup_(t,x) |level_{n+1} - level_n|: "
            + ", ".join(f"{d:.6g}" for d in self.sup_diffs)
        )
        lines.append("  weak diagnostic test densities: " + "; ".join(self.test_densities))
        for k in range(self.weak_diffs.shape[1]):
            lines.append(
                f"  weak diffs [{self.test_densities[k]}]: "
                + ", ".join(f"{d:.6g}" for d in self.weak_diffs[:, k])
            )
        return "\n".join(lines)


def uniform_convergence_report(field: LocalTimeField) -> UniformConvergenceReport:
    if field.per_level.shape[0] < 2:
        raise ParameterError("convergence report needs at least two levels")
    sup_diffs = np.max(np.abs(np.diff(field.per_level, axis=0)), axis=(1, 2))
    grid = field.grid
    span = grid.hi - grid.lo
    centers = grid.centers
    densities = []
    labels = []
    for frac in _WEAK_CENTIL:
        mu = grid.lo + frac * span
        for wf in _WEAK_WIDTH_FRAC:
            sig = wf * span
            g = np.exp(-0.5 * ((centers - mu) / sig) ** 2) / (sig * np.sqrt(2 * np.pi))
            densities.append(g)
            labels.append(f"gauss(mu={mu:.4g}, sigma={sig:.4g})")
    G = np.asarray(densities)  # (K, cells)
    final = field.per_level[:, -1, :]  # (L, cells)
    weak = grid.cellwidth * final @ G.T
    return UniformConvergenceReport(
        level_labels=field.level_labels,
        sup_diffs=sup_diffs,
        test_densities=tuple(labels),
        weak_values=weak,
        weak_diffs=np.abs(np.diff(weak, axis=0)),
    )


@dataclass
class ProperOrderReport:
    """Growth or decay of sup_x local time across levels per candidate
    order.  ``diverging`` marks a candidate below the proper order
    (values blow up as the partition refines), ``vanishing`` one above it;
    the 10x / 0.1x thresholds are engineering choices.  A sustained total
    trend across the whole hierarchy also triggers the flag, since a
    slowly vanishing candidate may shrink by less than 10x per level."""

    orders: tuple
    level_labels: tuple
    sup_values: np.ndarray  # (n_orders, n_levels)
    flags: tuple

    def __str__(self):
        lines = ["proper-order report (sup_x local time at final time per level)"]
        for i, r in enumerate(self.orders):
            sups = ", ".join(f"{v:.6g}" for v in self.sup_values[i])
            lines.append(f"  order {r}: [{sups}] -> {self.flags[i]}")
        return "\n".join(lines)


def _order_flag(sups: np.ndarray) -> Optional[str]:
    if sups.size < 2:
        return None
    prev, last, first = sups[-2], sups[-1], sups[0]
    if last == 0.0 and prev == 0.0:
        return "vanishing"
    if prev == 0.0:
        return "diverging"
    r_last = last / prev
    r_total = last / first if first > 0 else np.inf
    if r_last >= 10.0 or (r_total >= 10.0 and r_last > 1.0):
        return "diverging"
    if r_last <= 0.1 or (r_total <= 0.1 and r_last < 1.0):
        return "vanishing"
    return "stable"


def proper_order_report(
    path: SampledPath,
    hierarchy: PartitionHierarchy,
    p_candidates: Sequence[int],
    grid: SpaceGrid,
) -> ProperOrderReport:
    """sup_x discrete local time at the final time, per level and
    candidate order, with divergence/vanishing flags."""
    orders = tuple(even_order(r) for r in p_candidates)
    sups = np.zeros((len(orders), hierarchy.n_levels))
    for i, r in enumerate(orders):
        field = discrete_local_time(path, hierarchy, r, grid, [path.T])
        sups[i] = np.max(field.per_level[:, -1, :], axis=1)
    flags = tuple(_order_flag(sups[i]) for i in range(len(orders)))
    return ProperOrderReport(
        orders=orders, level_labels=hierarchy.level_labels, sup_values=sups, flags=flags
    )
