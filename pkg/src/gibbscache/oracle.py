"""Brute-force ground truth: exhaustive placement optimization and the two
reference baselines (most-popular and independent randomized placement).

The enumeration exists to verify, not to scale; it streams configurations
in mixed-radix order over per-station K-subset indices and keeps O(1) state
beyond the running extremes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .geometry import CellTopology
from .gibbs import STATE_ENUM_LIMIT, StateKey, candidate_columns
from .model import ContentCatalog, Placement
from .realcache import most_popular_columns


@dataclass(frozen=True)
class OptimalityReport:
    """Exhaustive-scan result: all maximizers plus the hit-rate extremes."""

    argmax: tuple[StateKey, ...]
    h_max: float
    h_min: float

    @property
    def delta(self) -> float:
        return self.h_max - self.h_min

    @property
    def unique(self) -> bool:
        return len(self.argmax) == 1


def enumerate_optimal(
    top: CellTopology, cat: ContentCatalog, cache_size: int
) -> OptimalityReport:
    """Scan every feasible placement for the extremes of the hit rate.

    Ties in the maximum are all returned; uniqueness is reported, never
    assumed.
    """
    cands = candidate_columns(cat.m_contents, cache_size)
    n_states = len(cands) ** top.n_bs
    if n_states > STATE_ENUM_LIMIT:
        raise CapacityError(
            f"{n_states} configurations exceed enumeration limit {STATE_ENUM_LIMIT}"
        )
    # Bitmask per candidate column and per-mask segment rates make each
    # configuration an O(#segments) evaluation.
    masks = [sum(1 << (i - 1) for i in c) for c in cands]
    segments = sorted(top.segment_areas.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
    lam = cat.intensities
    rate_of_mask: dict[int, float] = {}

    def mask_rate(mask: int) -> float:
        r = rate_of_mask.get(mask)
        if r is None:
            r = sum(lam[i] for i in range(len(lam)) if mask >> i & 1)
            rate_of_mask[mask] = r
        return r

    seg_cols = [([j - 1 for j in s], area) for s, area in segments]
    best: list[StateKey] = []
    h_max = -math.inf
    h_min = math.inf
    for cols in itertools.product(range(len(cands)), repeat=top.n_bs):
        h = 0.0
        for bs_idx, area in seg_cols:
            union = 0
            for j in bs_idx:
                union |= masks[cols[j]]
            h += area * mask_rate(union)
        if h > h_max + 1e-15:
            h_max = h
            best = [tuple(cands[c] for c in cols)]
        elif abs(h - h_max) <= 1e-15:
            best.append(tuple(cands[c] for c in cols))
        if h < h_min:
            h_min = h
    return OptimalityReport(tuple(best), h_max, h_min)


def most_popular_placement(cat: ContentCatalog, n_bs: int, cache_size: int) -> Placement:
    """Every station caches the K most popular contents (ties to lower id)."""
    col = most_popular_columns(cat.intensities, cache_size)
    return Placement.from_columns(cat.m_contents, [col] * n_bs, cache_size)


def independent_hit_rate(top: CellTopology, cat: ContentCatalog, q) -> float:
    """Expected hit rate when station ``j`` stores content ``i`` independently
    with probability ``q[i, j]``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (cat.m_contents, top.n_bs):
        raise ValueError(f"q must be {cat.m_contents} x {top.n_bs}")
    if (q < 0).any() or (q > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    lam = cat.intensities
    total = 0.0
    for s, area in top.segment_areas.items():
        cols = [j - 1 for j in s]
        miss = np.prod(1.0 - q[:, cols], axis=1)
        total += area * sum(lam[i] * (1.0 - miss[i]) for i in range(len(lam)))
    return total


def optimize_two_content_mixture(
    top: CellTopology, cat: ContentCatalog, step: float = 1e-4
) -> tuple[float, float]:
    """Best single-parameter independent placement for M=2, K=1.

    Every station stores content 1 with probability r and content 2
    otherwise; returns (r*, value) from a grid search over [0, 1].
    """
    if cat.m_contents != 2:
        raise ValueError("two-point mixture baseline is defined for M=2, K=1")
    best_r, best_v = 0.0, -math.inf
    n = round(1.0 / step)
    for idx in range(n + 1):
        r = idx / n
        q = np.tile([[r], [1.0 - r]], (1, top.n_bs))
        v = independent_hit_rate(top, cat, q)
        if v > best_v:
            best_r, best_v = r, v
    return best_r, best_v
