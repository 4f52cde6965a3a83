"""Optimized single-site sampler core shared by chain runs and the coupled
simulation.

Keeps incremental per-(segment, content) storage counts so one update costs
O(|segments containing j| * (M + K * n_candidates)) instead of a full
hit-rate recomputation.  The public, readable formulas live in ``model`` and
``gibbs``; tests assert this core agrees with them exactly.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import CapacityError
from .geometry import CellTopology
from .gibbs import COND_ENUM_LIMIT
from .model import ContentCatalog

import itertools


class FastCore:
    """Incremental state of the virtual-cache Gibbs chain.

    ``rate_source`` selects exact per-(content, segment) arrival rates
    (lambda_i * area) or on-line estimates fed via :meth:`record_arrival`.
    Estimates can be shared network-wide or kept per station (``local``
    scope, exploration-served requests only, rescaled to stay unbiased).
    """

    def __init__(
        self,
        top: CellTopology,
        cat: ContentCatalog,
        cache_size: int,
        rate_source: str = "exact",
        est_scope: str = "shared",
        est_c0: float = 1.0,
        est_t0: float = 1.0,
        eta: float = 0.0,
    ):
        if rate_source not in ("exact", "estimate"):
            raise ValueError(f"unknown rate_source {rate_source!r}")
        if est_scope not in ("shared", "local"):
            raise ValueError(f"unknown estimator scope {est_scope!r}")
        self.top = top
        self.cat = cat
        self.n_bs = top.n_bs
        self.m = cat.m_contents
        self.k = cache_size
        ncand = math.comb(self.m, self.k)
        if ncand > COND_ENUM_LIMIT:
            raise CapacityError(
                f"C({self.m},{self.k}) = {ncand} candidate columns exceeds {COND_ENUM_LIMIT}"
            )
        # Candidates in lexicographic order, 0-based internally.
        self.cands: list[tuple[int, ...]] = list(
            itertools.combinations(range(self.m), self.k)
        )
        self.cand_ids: list[tuple[int, ...]] = [
            tuple(i + 1 for i in c) for c in self.cands
        ]
        self.cand_index = {c: idx for idx, c in enumerate(self.cand_ids)}
        # Deterministic segment order: by (size, members).
        self.segments = sorted(
            top.segment_areas.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))
        )
        self.seg_areas = [a for _, a in self.segments]
        self.seg_bs = [sorted(s) for s, _ in self.segments]  # 1-based ids
        self.segs_of_bs: list[list[int]] = [[] for _ in range(self.n_bs)]
        for q, (s, _) in enumerate(self.segments):
            for j in s:
                self.segs_of_bs[j - 1].append(q)
        lam = cat.intensities
        self.true_rates = [
            [lam[i] * area for i in range(self.m)] for area in self.seg_areas
        ]
        self.rate_source = rate_source
        self.est_scope = est_scope
        self.est_c0 = est_c0
        self.est_t0 = est_t0
        # Per-(segment, content) observation counts; one table when shared,
        # one per station when local.
        n_tables = 1 if est_scope == "shared" else self.n_bs
        self.est_counts = [
            [[0] * self.m for _ in self.segments] for _ in range(n_tables)
        ]
        # Local tables see only the eta-exploration thinning of the arrival
        # stream; rescale by |s| / eta to keep the estimate unbiased.
        if est_scope == "local":
            if rate_source == "estimate" and eta <= 0:
                raise ValueError("local estimator scope requires eta > 0")
            self.est_scale = [
                len(s) / eta if eta > 0 else 0.0 for s, _ in self.segments
            ]
        else:
            self.est_scale = [1.0] * len(self.segments)
        # Chain state: one candidate index per station.
        self.col = [0] * self.n_bs
        self.counts = [[0] * self.m for _ in self.segments]
        self._rebuild_counts()

    # -- placement state ---------------------------------------------------

    def set_columns(self, columns: Sequence[Sequence[int]]) -> None:
        """Install a placement given per-station content ids (1-based)."""
        if len(columns) != self.n_bs:
            raise ValueError("wrong number of columns")
        for j, contents in enumerate(columns):
            key = tuple(sorted(contents))
            if key not in self.cand_index:
                raise ValueError(f"column {key} is not a K-subset of the catalog")
            self.col[j] = self.cand_index[key]
        self._rebuild_counts()

    def _rebuild_counts(self) -> None:
        for q, bs in enumerate(self.seg_bs):
            cnt = [0] * self.m
            for j in bs:
                for i in self.cands[self.col[j - 1]]:
                    cnt[i] += 1
            self.counts[q] = cnt

    def columns(self) -> tuple[tuple[int, ...], ...]:
        """Current placement as per-station 1-based content tuples."""
        return tuple(self.cand_ids[c] for c in self.col)

    # -- rates -------------------------------------------------------------

    def seg_rates(self, q: int, table: int, now: float) -> list[float]:
        """Per-content arrival rate (true or estimated) from segment ``q``."""
        if self.rate_source == "exact":
            return self.true_rates[q]
        counts = self.est_counts[table][q]
        scale = self.est_scale[q]
        inv = 1.0 / (now + self.est_t0)
        c0 = self.est_c0
        return [(counts[i] * scale + c0) * inv for i in range(self.m)]

    def record_arrival(self, q: int, i0: int, bs0: int | None = None) -> None:
        """Count one request for content ``i0`` (0-based) from segment ``q``.

        Shared scope counts every arrival; local scope is fed only the
        exploration-served requests of station ``bs0``.
        """
        if self.est_scope == "shared":
            self.est_counts[0][q][i0] += 1
        elif bs0 is not None:
            self.est_counts[bs0][q][i0] += 1

    def theta(self, q: int, i0: int, now: float, table: int = 0) -> float:
        counts = self.est_counts[table][q]
        return (counts[i0] * self.est_scale[q] + self.est_c0) / (now + self.est_t0)

    # -- Gibbs update ------------------------------------------------------

    def candidate_energies(self, j0: int, now: float = 0.0) -> list[float]:
        """Local energy of every candidate column for station ``j0`` (0-based)."""
        table = 0 if self.est_scope == "shared" else j0
        cur = self.cands[self.col[j0]]
        per_seg = []
        for q in self.segs_of_bs[j0]:
            base = self.counts[q][:]
            for i in cur:
                base[i] -= 1
            w = self.seg_rates(q, table, now)
            hit = 0.0
            for i in range(self.m):
                if base[i] > 0:
                    hit += w[i]
            per_seg.append((base, w, hit))
        energies = []
        for c in self.cands:
            e = 0.0
            for base, w, hit in per_seg:
                e += hit
                for i in c:
                    if base[i] == 0:
                        e += w[i]
            energies.append(e)
        return energies

    def cond_probs(self, j0: int, beta: float, now: float = 0.0) -> list[float]:
        """Conditional probabilities over candidate columns for station ``j0``."""
        energies = self.candidate_energies(j0, now)
        top = max(energies)
        weights = [math.exp(beta * (e - top)) for e in energies]
        total = sum(weights)
        return [w / total for w in weights]

    def step(self, j0: int, beta: float, u: float, now: float = 0.0) -> int:
        """Resample column of station ``j0`` by inverse CDF at uniform ``u``.

        Returns the chosen candidate index and updates incremental counts.
        """
        energies = self.candidate_energies(j0, now)
        top = max(energies)
        weights = [math.exp(beta * (e - top)) for e in energies]
        target = u * sum(weights)
        acc = 0.0
        chosen = len(weights) - 1
        for idx, w in enumerate(weights):
            acc += w
            if target < acc:
                chosen = idx
                break
        old = self.col[j0]
        if chosen != old:
            old_c = self.cands[old]
            new_c = self.cands[chosen]
            for q in self.segs_of_bs[j0]:
                cnt = self.counts[q]
                for i in old_c:
                    cnt[i] -= 1
                for i in new_c:
                    cnt[i] += 1
            self.col[j0] = chosen
        return chosen
