"""Small shared helpers: checkpoint snapping and tolerance arithmetic."""

from __future__ import annotations

from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import ParameterError
from .paths import SampledPath


def snap_checkpoints(path: SampledPath, checkpoints: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Snap checkpoint times to the nearest grid times.

    Returns ``(times, indices)`` sorted ascending.
    """
    cps = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if cps.size == 0:
        raise ParameterError("need at least one checkpoint")
    if np.any(cps < -path.dt / 2) or np.any(cps > path.T + path.dt / 2):
        raise ParameterError("checkpoints must lie within [0, T]")
    idx = np.clip(np.rint(cps / path.dt).astype(np.int64), 0, path.n_samples - 1)
    idx = np.sort(idx)
    return idx * path.dt, idx


def left_endpoint_counts(level: np.ndarray, checkpoint_indices: np.ndarray) -> np.ndarray:
    """Number of partition intervals whose left endpoint time is <= each
    checkpoint time (the interval-attribution rule for all partition sums)."""
    left = np.asarray(level, dtype=np.int64)[:-1]
    return np.searchsorted(left, np.asarray(checkpoint_indices, dtype=np.int64), side="right")


def relative_gap(lhs: float, rhs: float) -> float:
    """|lhs - rhs| normalized by the larger magnitude, floored at 1."""
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def bracket_contributions(a: np.ndarray, b: np.ndarray, p: int, x: float) -> np.ndarray:
    """Per-interval local-time summands ``1_(min,max](x) |b - x|**(p-1)``.

    The half-open bracket excludes the lower endpoint, so ties ``a == b``
    contribute nothing, and a level exactly equal to the lower endpoint of
    an excursion is not charged.
    """
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    ind = (x > lo) & (x <= hi)
    out = np.zeros_like(a)
    if np.any(ind):
        out[ind] = np.abs(b[ind] - x) ** (p - 1)
    return out


def even_order(p: int) -> int:
    if int(p) != p or p < 2 or p % 2 != 0:
        raise ParameterError(f"order p must be an even integer >= 2, got {p}")
    return int(p)


def median(values: Iterable[float]) -> float:
    return float(np.median(np.asarray(list(values), dtype=float)))
