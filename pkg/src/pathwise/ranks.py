"""Descending ranks, collision local times and integration along ranks.

For m paths on a shared grid, the k-th rank path takes the k-th largest
value at every time, ties grouped by exact float equality.  The
compensated Riemann sum of a ranked path decomposes, interval by
interval, into

    A = B + C + D

where B redistributes the compensated sums of the original paths over the
paths occupying rank k, D collects the rank-gap powers at the interval's
right endpoint (the collision charge, split into its +/- parts), and C
holds the binomial cross terms mixing original-path increments with rank
gaps.  The decomposition is pure algebra at every level; only its limit
interpretation involves local times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._util import bracket_contributions, even_order, left_endpoint_counts, snap_checkpoints
from .errors import ParameterError
from .integrate import TestFunction
from .localtime import discrete_local_time_curves
from .partitions import PartitionHierarchy
from .paths import SampledPath
from .tanaka import IdentityReport, _limit_report

__all__ = [
    "RankSystem",
    "build_rank_system",
    "collision_local_time",
    "CollisionLocalTime",
    "rank_sum_identity",
    "rank_decomposition",
    "RankDecomposition",
    "simplified_cross_term",
    "SimplifiedCrossTerm",
]


@dataclass(frozen=True)
class RankSystem:
    """m paths plus their descending rank values and rank occupation counts.

    ``ranked[k-1, t]`` is the k-th largest value at time t;
    ``counts[k-1, t]`` is the number of paths sitting at rank k there.
    The ranked rows decrease in k, every time-slice of ``ranked`` is a
    permutation of the corresponding slice of ``values``, and the
    reciprocal-count weights of the paths at each rank sum to one.
    """

    paths: tuple
    values: np.ndarray  # (m, n_samples)
    ranked: np.ndarray  # (m, n_samples)
    counts: np.ndarray  # (m, n_samples) of ints
    T: float
    n_max: int

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def membership(self, k: int) -> np.ndarray:
        """Boolean (m, n_samples): path i occupies rank k at time t."""
        return self.values == self.ranked[k - 1][None, :]

    def ranked_path(self, k: int) -> SampledPath:
        return SampledPath(
            T=self.T, n_max=self.n_max, values=self.ranked[k - 1],
            metadata={"kind": "ranked", "rank": k},
        )

    def gap_path(self, k: int, h: int) -> SampledPath:
        """The nonnegative rank gap X_(k) - X_(h) for k < h."""
        if not (1 <= k < h <= self.m):
            raise ParameterError(f"need 1 <= k < h <= m={self.m}, got k={k}, h={h}")
        return SampledPath(
            T=self.T, n_max=self.n_max, values=self.ranked[k - 1] - self.ranked[h - 1],
            metadata={"kind": "rank-gap", "k": k, "h": h},
        )


def build_rank_system(paths: Sequence[SampledPath]) -> RankSystem:
    """Sort m paths into descending ranks at every grid time."""
    if not paths:
        raise ParameterError("need at least one path")
    T, n_max = paths[0].T, paths[0].n_max
    for q in paths[1:]:
        if (q.T, q.n_max) != (T, n_max):
            raise ParameterError("mismatched grids: all paths must share (T, n_max)")
    values = np.vstack([q.values for q in paths])
    ranked = -np.sort(-values, axis=0)
    counts = (values[None, :, :] == ranked[:, None, :]).sum(axis=1)
    return RankSystem(
        paths=tuple(paths), values=values, ranked=ranked, counts=counts, T=T, n_max=n_max
    )


@dataclass
class CollisionLocalTime:
    """Per-level collision diagnostics for one rank gap.

    ``local_time_at_zero`` is the order-p discrete local time of the gap
    path evaluated at exactly 0; because the gap is nonnegative and the
    bracket is half-open, it vanishes unless the gap dips below zero,
    which cannot happen, so nonzero collision mass shows up only in
    ``exact_tie_charge``: the sum of (gap at the right endpoint)**(p-1)
    over intervals whose left endpoint sits at an exact collision.  That
    tie charge is the quantity the rank decomposition's collision term D
    is built from.
    """

    k: int
    h: int
    p: int
    level_labels: tuple
    checkpoint_times: np.ndarray
    local_time_at_zero: np.ndarray  # (n_levels, n_checkpoints)
    exact_tie_charge: np.ndarray  # (n_levels, n_checkpoints)


def collision_local_time(
    system: RankSystem,
    k: int,
    h: int,
    hierarchy: PartitionHierarchy,
    p: int,
    checkpoints: Sequence[float],
) -> CollisionLocalTime:
    p = even_order(p)
    gap = system.gap_path(k, h)
    times, cps = snap_checkpoints(gap, checkpoints)
    literal = discrete_local_time_curves(gap, hierarchy, p, 0.0, checkpoints)
    ties = np.zeros((hierarchy.n_levels, cps.size))
    for i, lev in enumerate(hierarchy.levels):
        ga = gap.values[lev[:-1]]
        gb = gap.values[lev[1:]]
        contrib = (ga == 0.0) * gb ** (p - 1)
        cums = np.concatenate([[0.0], np.cumsum(contrib)])
        ties[i] = cums[left_endpoint_counts(lev, cps)]
    return CollisionLocalTime(
        k=k, h=h, p=p,
        level_labels=hierarchy.level_labels,
        checkpoint_times=times,
        local_time_at_zero=literal,
        exact_tie_charge=ties,
    )


def rank_sum_identity(
    system: RankSystem, hierarchy: PartitionHierarchy, p: int, x: float = 0.0
) -> IdentityReport:
    """Per-level gap between the summed local times of the ranked paths
    and of the original paths at the level x; the identity holds in the
    limit, so this is a trend report."""
    p = even_order(p)
    lhs, rhs = [], []
    for lev in hierarchy.levels:
        la, lb = lev[:-1], lev[1:]
        lhs.append(
            sum(
                float(np.sum(bracket_contributions(system.ranked[k, la], system.ranked[k, lb], p, x)))
                for k in range(system.m)
            )
        )
        rhs.append(
            sum(
                float(np.sum(bracket_contributions(system.values[i, la], system.values[i, lb], p, x)))
                for i in range(system.m)
            )
        )
    return _limit_report(
        f"rank local-time sum at x={x}", hierarchy.level_labels, lhs, rhs
    )


@dataclass
class RankDecomposition:
    """The four per-level sums of the integration-along-ranks identity.

    A: compensated sum of the ranked path.  B: rank-occupation-weighted
    compensated sums of the originals.  C: binomial cross terms (empty,
    hence exactly zero, for p = 2).  D: collision charge, with its +/-
    split.  ``A = B + C + D`` holds to rounding at every level.
    """

    k: int
    p: int
    f_name: str
    level_labels: tuple
    checkpoint_times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    D_plus: np.ndarray
    D_minus: np.ndarray
    residual: np.ndarray
    relative_residual: np.ndarray
    passed: bool

    def to_csv_rows(self):
        """Rows ``k,level,t,A,B,C,D,residual``."""
        for i, lab in enumerate(self.level_labels):
            for j, t in enumerate(self.checkpoint_times):
                yield (self.k, lab, t, self.A[i, j], self.B[i, j], self.C[i, j],
                       self.D[i, j], self.residual[i, j])


def _checkpoint_rows(summands: np.ndarray, counts: np.ndarray) -> np.ndarray:
    cums = np.concatenate([[0.0], np.cumsum(summands)])
    return cums[counts]


def rank_decomposition(
    system: RankSystem,
    k: int,
    hierarchy: PartitionHierarchy,
    p: int,
    f,
    checkpoints: Sequence[float],
    exact_threshold: float = 1e-9,
) -> RankDecomposition:
    """Evaluate A, B, C, D per level and checkpoint and gate A = B + C + D.

    The interval algebra: on a tie X_i(t_j) = X_(k)(t_j), the ranked
    increment is the path increment plus the right-endpoint rank gap, and
    the binomial theorem splits each power accordingly; summing preserves
    equality exactly.
    """
    p = even_order(p)
    if not (1 <= k <= system.m):
        raise ParameterError(f"rank k must be in 1..{system.m}, got {k}")
    rk = system.ranked[k - 1]
    nk = system.counts[k - 1]
    fact = [math.factorial(i) for i in range(p + 1)]
    first, cps = snap_checkpoints(system.paths[0], checkpoints)

    LA, LB, LC, LD, LDp, LDm = [], [], [], [], [], []
    for lev in hierarchy.levels:
        la, lb = lev[:-1], lev[1:]
        counts_c = left_endpoint_counts(lev, cps)
        Ra, Rb = rk[la], rk[lb]
        dR = Rb - Ra
        Xa, Xb = system.values[:, la], system.values[:, lb]
        dX = Xb - Xa
        gap = Rb - Xb  # rank value minus path value at the right endpoint
        w = (Xa == Ra[None, :]) / nk[la][None, :]

        fr = {r: np.asarray(f.derivative(Ra, r), dtype=float) for r in range(1, p)}
        fXa = {r: np.asarray(f.derivative(Xa, r), dtype=float) for r in range(1, p)}

        a_sum = np.zeros_like(Ra)
        b_terms = np.zeros_like(Xa)
        for r in range(1, p):
            a_sum += fr[r] / fact[r] * dR**r
            b_terms += fXa[r] / fact[r] * dX**r
        b_sum = np.sum(w * b_terms, axis=0)

        c_terms = np.zeros_like(Xa)
        for ell in range(1, p - 1):
            gl = gap**ell
            for r in range(ell, p):
                c_terms += fr[r][None, :] / (fact[ell] * fact[r - ell]) * dX ** (r - ell) * gl
        c_sum = np.sum(w * c_terms, axis=0)

        dcoef = fr[p - 1] / fact[p - 1]
        d_plus = np.sum(w * np.maximum(gap, 0.0) ** (p - 1), axis=0) * dcoef
        d_minus = np.sum(w * np.maximum(-gap, 0.0) ** (p - 1), axis=0) * dcoef
        d_sum = np.sum(w * gap ** (p - 1), axis=0) * dcoef

        LA.append(_checkpoint_rows(a_sum, counts_c))
        LB.append(_checkpoint_rows(b_sum, counts_c))
        LC.append(_checkpoint_rows(c_sum, counts_c))
        LD.append(_checkpoint_rows(d_sum, counts_c))
        LDp.append(_checkpoint_rows(d_plus, counts_c))
        LDm.append(_checkpoint_rows(d_minus, counts_c))

    A = np.asarray(LA)
    B = np.asarray(LB)
    C = np.asarray(LC)
    D = np.asarray(LD)
    resid = np.abs(A - (B + C + D))
    scale = np.maximum(1.0, np.max(np.stack([np.abs(A), np.abs(B), np.abs(C), np.abs(D)]), axis=0))
    rel = resid / scale
    return RankDecomposition(
        k=k, p=p, f_name=getattr(f, "name", ""),
        level_labels=hierarchy.level_labels,
        checkpoint_times=first,
        A=A, B=B, C=C, D=D,
        D_plus=np.asarray(LDp), D_minus=np.asarray(LDm),
        residual=resid, relative_residual=rel,
        passed=bool(np.all(rel <= exact_threshold)),
    )


@dataclass
class SimplifiedCrossTerm:
    """The reduced cross-term sum available when f has vanishing p-th and
    higher derivatives, against the full cross term C; their gap shrinks
    with the oscillation and is reported per level."""

    k: int
    p: int
    level_labels: tuple
    checkpoint_times: np.ndarray
    simplified: np.ndarray
    full: np.ndarray
    gap: np.ndarray


def simplified_cross_term(
    system: RankSystem,
    k: int,
    hierarchy: PartitionHierarchy,
    p: int,
    f: TestFunction,
    checkpoints: Sequence[float],
) -> SimplifiedCrossTerm:
    p = even_order(p)
    if not isinstance(f, TestFunction) or f.degree > p - 1 or not f.stieltjes_measure(p - 1).is_zero:
        raise ParameterError(
            "simplified cross term requires a polynomial with vanishing p-th derivative"
        )
    rk = system.ranked[k - 1]
    nk = system.counts[k - 1]
    fact = [math.factorial(i) for i in range(p + 1)]
    times, cps = snap_checkpoints(system.paths[0], checkpoints)

    simp_rows = []
    for lev in hierarchy.levels:
        la, lb = lev[:-1], lev[1:]
        counts_c = left_endpoint_counts(lev, cps)
        Ra = rk[la]
        Xa, Xb = system.values[:, la], system.values[:, lb]
        gap = rk[lb] - Xb
        w = (Xa == Ra[None, :]) / nk[la][None, :]
        terms = np.zeros_like(Xa)
        for ell in range(1, p - 1):
            terms += np.asarray(f.derivative(Xa, ell), dtype=float) / fact[ell] * gap**ell
        simp_rows.append(_checkpoint_rows(np.sum(w * terms, axis=0), counts_c))

    simplified = np.asarray(simp_rows)
    full = rank_decomposition(system, k, hierarchy, p, f, checkpoints).C
    return SimplifiedCrossTerm(
        k=k, p=p,
        level_labels=hierarchy.level_labels,
        checkpoint_times=times,
        simplified=simplified,
        full=full,
        gap=np.abs(simplified - full),
    )
