"""Coupled continuous-time / discrete-slot simulation engine.

Virtual-cache Gibbs updates fire at fixed slot spacing on the continuous
clock, snapshots refresh at the growing epoch boundaries, and every Poisson
request is routed to a serving station and applied to the real caches.
Traces aggregate occupancy, hit counts, and the hit-rate integral into a
fixed number of equal time windows so burn-in / final-third statistics can
be extracted without storing per-event logs; full logs are optional.

All randomness flows from one seed expanded into named substreams
(bs-pick, column-sample, arrivals, content-mark, segment-mark,
server-pick), so identical (config, seed) pairs give identical traces.
"""

from __future__ import annotations

import bisect
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .engine import FastCore
from .gibbs import GibbsParams, StateKey
from .model import ContentCatalog
from .geometry import CellTopology
from .realcache import most_popular_columns

_INF = float("inf")

STREAM_NAMES = (
    "bs-pick",
    "column-sample",
    "arrivals",
    "content-mark",
    "segment-mark",
    "server-pick",
)


def substreams(seed: int) -> dict[str, random.Random]:
    """Expand one seed into the named independent RNG streams."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {
        name: random.Random(int(child.generate_state(2, np.uint64)[0]))
        for name, child in zip(STREAM_NAMES, children)
    }


@dataclass
class EstimatorSnapshot:
    """Final estimator state for one (content, segment) pair."""

    content: int
    segment: tuple[int, ...]
    count: int
    theta: float
    true_rate: float


@dataclass
class SimTrace:
    """Windowed aggregates (plus optional full logs) of one simulation run."""

    horizon: float
    n_windows: int
    slot_spacing: float
    seed: int
    real_occ: list[dict[StateKey, float]]
    v_counts: list[Counter]
    hits: list[int]
    misses: list[int]
    h_integral: list[float]
    hit_rates: dict[StateKey, float]
    n_slots: int
    beta_final: float
    final_virtual: StateKey
    final_real: StateKey
    estimator: list[EstimatorSnapshot] = field(default_factory=list)
    events: list[tuple] | None = None
    slots: list[tuple] | None = None
    snapshots: list[tuple[float, StateKey]] = field(default_factory=list)

    @property
    def window_len(self) -> float:
        return self.horizon / self.n_windows

    @property
    def total_hits(self) -> int:
        return sum(self.hits)

    @property
    def total_misses(self) -> int:
        return sum(self.misses)

    @property
    def total_requests(self) -> int:
        return self.total_hits + self.total_misses

    def _window_range(self, start_fraction: float, stop_fraction: float) -> range:
        lo = round(start_fraction * self.n_windows)
        hi = round(stop_fraction * self.n_windows)
        if not (0 <= lo < hi <= self.n_windows):
            raise ValueError(
                f"window range [{start_fraction}, {stop_fraction}) is empty at "
                f"{self.n_windows}-window resolution"
            )
        return range(lo, hi)

    def real_occupancy(
        self, start_fraction: float = 0.0, stop_fraction: float = 1.0
    ) -> dict[StateKey, float]:
        """Time-fraction the real caches spent in each configuration."""
        acc: dict[StateKey, float] = {}
        for w in self._window_range(start_fraction, stop_fraction):
            for key, dt in self.real_occ[w].items():
                acc[key] = acc.get(key, 0.0) + dt
        total = sum(acc.values())
        return {k: v / total for k, v in acc.items()}

    def virtual_occupancy(
        self, start_fraction: float = 0.0, stop_fraction: float = 1.0
    ) -> dict[StateKey, float]:
        """Fraction of virtual slots spent in each configuration."""
        acc: Counter = Counter()
        for w in self._window_range(start_fraction, stop_fraction):
            acc.update(self.v_counts[w])
        total = sum(acc.values())
        return {k: v / total for k, v in acc.items()}

    def time_average_hit_rate(
        self, start_fraction: float = 0.0, stop_fraction: float = 1.0
    ) -> float:
        """Time average of h(R(tau)) over the selected span."""
        windows = self._window_range(start_fraction, stop_fraction)
        span = len(windows) * self.window_len
        return sum(self.h_integral[w] for w in windows) / span

    def empirical_hit_rate(
        self, start_fraction: float = 0.0, stop_fraction: float = 1.0
    ) -> float:
        """Observed cache hits per unit time over the selected span."""
        windows = self._window_range(start_fraction, stop_fraction)
        span = len(windows) * self.window_len
        return sum(self.hits[w] for w in windows) / span


def empirical_distribution(trace: SimTrace, burn_in_fraction: float) -> dict[StateKey, float]:
    """Real-cache occupancy fractions after discarding the burn-in prefix.

    Resolution is the trace's window grid; the burn-in boundary is rounded
    to the nearest window edge.
    """
    if not (0 <= burn_in_fraction < 1):
        raise ValueError("burn_in_fraction must be in [0, 1)")
    return trace.real_occupancy(burn_in_fraction, 1.0)


def tv_distance(p: dict, q: dict) -> float:
    """Total variation distance (half L1) between two distributions."""
    for name, dist in (("p", p), ("q", q)):
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{name} sums to {total}, not 1")
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def average_distributions(dists: list[dict]) -> dict:
    """Plain average of several distributions over the union support."""
    acc: dict = {}
    for d in dists:
        for k, v in d.items():
            acc[k] = acc.get(k, 0.0) + v
    return {k: v / len(dists) for k, v in acc.items()}


def run(config: ExperimentConfig, seed: int | None = None) -> SimTrace:
    """Simulate one full run; deterministic for a given (config, seed)."""
    top = config.topology
    cat = config.catalog
    if seed is None:
        seed = config.seed
    rngs = substreams(seed)
    r_bs = rngs["bs-pick"]
    r_col = rngs["column-sample"]
    r_arr = rngs["arrivals"]
    r_content = rngs["content-mark"]
    r_segment = rngs["segment-mark"]
    r_server = rngs["server-pick"]

    core = FastCore(
        top,
        cat,
        config.cache_size,
        rate_source="estimate" if config.learning else "exact",
        est_scope=config.estimator.scope,
        est_c0=config.estimator.c0,
        est_t0=config.estimator.t0,
        eta=config.eta,
    )
    n_bs = top.n_bs
    m = cat.m_contents
    lam = cat.intensities
    horizon = config.horizon
    n_windows = config.n_windows
    wlen = horizon / n_windows
    gparams = config.gibbs
    learning = config.learning
    local_scope = config.estimator.scope == "local"
    eta = config.eta

    # Arrival marks: cumulative popularity and segment-area tables.
    cum_lam = []
    acc = 0.0
    for x in lam:
        acc += x
        cum_lam.append(acc)
    total_lam = acc
    cum_area = []
    acc = 0.0
    for a in core.seg_areas:
        acc += a
        cum_area.append(acc)
    total_area = acc
    total_rate = total_lam * total_area
    seg_bs = core.seg_bs  # 1-based station lists per segment
    n_seg = len(seg_bs)

    # Hit rate of an arbitrary (possibly under-full) real configuration,
    # via per-column content bitmasks and memoized per-mask rates.
    mask_rate: dict[int, float] = {0: 0.0}

    def rate_of(mask: int) -> float:
        r = mask_rate.get(mask)
        if r is None:
            r = sum(lam[i] for i in range(m) if mask >> i & 1)
            mask_rate[mask] = r
        return r

    def real_h(masks: list[int]) -> float:
        h = 0.0
        for q in range(n_seg):
            union = 0
            for j in seg_bs[q]:
                union |= masks[j - 1]
            h += core.seg_areas[q] * rate_of(union)
        return h

    # Initial placements: K most popular contents everywhere.
    init_col = most_popular_columns(lam, config.cache_size)
    core.set_columns([init_col] * n_bs)
    v_key = core.columns()
    real_sets = [set(init_col) for _ in range(n_bs)]
    real_masks = [sum(1 << (i - 1) for i in col) for col in [init_col] * n_bs]
    real_key: StateKey = tuple(tuple(sorted(s)) for s in real_sets)
    snap_sets = [set(c) for c in v_key]
    cur_h = real_h(real_masks)
    hit_memo: dict[StateKey, float] = {real_key: cur_h}

    sched = config.make_schedule()
    next_boundary_idx = 1
    next_boundary = sched.boundary(1)

    real_occ: list[dict[StateKey, float]] = [{} for _ in range(n_windows)]
    v_counts: list[Counter] = [Counter() for _ in range(n_windows)]
    hits = [0] * n_windows
    misses = [0] * n_windows
    h_int = [0.0] * n_windows
    events = [] if config.record_events else None
    slots = [] if config.record_slots else None
    snapshots: list[tuple[float, StateKey]] = []

    def add_real_time(t0: float, t1: float, key: StateKey, h_val: float) -> None:
        while t0 < t1 - 1e-12:
            w = min(int(t0 / wlen), n_windows - 1)
            w_end = horizon if w == n_windows - 1 else (w + 1) * wlen
            seg_end = min(t1, w_end)
            if seg_end <= t0:
                break
            dt = seg_end - t0
            occ = real_occ[w]
            occ[key] = occ.get(key, 0.0) + dt
            h_int[w] += h_val * dt
            t0 = seg_end

    spacing = config.slot_spacing
    slot_idx = 0  # number of updates performed; update k fires at (k+1)*spacing
    next_slot = spacing
    last_change = 0.0
    tau = 0.0
    beta = gparams.beta_at(0, n_bs)

    while True:
        t_arr = tau + r_arr.expovariate(total_rate)
        limit = t_arr if t_arr < horizon else horizon
        # Fire slot updates and snapshot refreshes up to the next arrival,
        # snapshots first on ties (the reference is V at the boundary minus).
        while True:
            t_snap = next_boundary
            t_slot = next_slot
            if t_snap <= limit and t_snap <= t_slot:
                snap_sets = [set(c) for c in core.columns()]
                snapshots.append((t_snap, core.columns()))
                next_boundary_idx += 1
                next_boundary = sched.boundary(next_boundary_idx)
                continue
            if t_slot <= limit:
                beta = gparams.beta_at(slot_idx, n_bs)
                j0 = r_bs.randrange(n_bs)
                core.step(j0, beta, r_col.random(), t_slot)
                v_key = core.columns()
                w = min(int(t_slot / wlen), n_windows - 1)
                v_counts[w][v_key] += 1
                if slots is not None:
                    slots.append((slot_idx, j0 + 1, beta, v_key))
                slot_idx += 1
                next_slot += spacing
                continue
            break
        if t_arr >= horizon:
            break
        tau = t_arr

        # Mark the arrival: content and segment identity.
        u = r_content.random() * total_lam
        i0 = bisect.bisect_right(cum_lam, u)
        if i0 >= m:
            i0 = m - 1
        v = r_segment.random() * total_area
        q = bisect.bisect_right(cum_area, v)
        if q >= n_seg:
            q = n_seg - 1
        content = i0 + 1
        if learning and not local_scope:
            core.record_arrival(q, i0)

        # Serving-station selection.
        covering = seg_bs[q]
        explore = eta > 0 and r_server.random() < eta
        if explore:
            pool = covering
        else:
            pool = [j for j in covering if content in real_sets[j - 1]]
            if not pool:
                pool = covering
        j = pool[r_server.randrange(len(pool))] if len(pool) > 1 else pool[0]
        if learning and local_scope and explore:
            core.record_arrival(q, i0, j - 1)

        # Real-cache update.
        w = min(int(tau / wlen), n_windows - 1)
        if content in real_sets[j - 1]:
            hits[w] += 1
            action = "hit"
        else:
            misses[w] += 1
            action = "miss"
            if content in snap_sets[j - 1]:
                new_set = (real_sets[j - 1] & snap_sets[j - 1]) | {content}
                if new_set != real_sets[j - 1]:
                    add_real_time(last_change, tau, real_key, cur_h)
                    last_change = tau
                    real_sets[j - 1] = new_set
                    real_masks[j - 1] = sum(1 << (i - 1) for i in new_set)
                    real_key = tuple(tuple(sorted(s)) for s in real_sets)
                    cur_h = hit_memo.get(real_key)
                    if cur_h is None:
                        cur_h = real_h(real_masks)
                        hit_memo[real_key] = cur_h
                    action = "store"
        if events is not None:
            events.append((tau, content, tuple(covering), j, action))

    add_real_time(last_change, horizon, real_key, cur_h)

    estimator: list[EstimatorSnapshot] = []
    if learning:
        table = 0  # shared table, or station 1's view under local scope
        for q in range(n_seg):
            subset = tuple(seg_bs[q])
            for i0 in range(m):
                estimator.append(
                    EstimatorSnapshot(
                        content=i0 + 1,
                        segment=subset,
                        count=core.est_counts[table][q][i0],
                        theta=core.theta(q, i0, horizon, table),
                        true_rate=core.true_rates[q][i0],
                    )
                )

    return SimTrace(
        horizon=horizon,
        n_windows=n_windows,
        slot_spacing=spacing,
        seed=seed,
        real_occ=real_occ,
        v_counts=v_counts,
        hits=hits,
        misses=misses,
        h_integral=h_int,
        hit_rates=dict(hit_memo),
        n_slots=slot_idx,
        beta_final=beta,
        final_virtual=v_key,
        final_real=real_key,
        estimator=estimator,
        events=events,
        slots=slots,
        snapshots=snapshots,
    )


def run_chain(
    top: CellTopology,
    cat: ContentCatalog,
    cache_size: int,
    params: GibbsParams,
    n_slots: int,
    seed: int,
    record_at: set[int] | None = None,
    initial: StateKey | None = None,
) -> tuple[dict[int, StateKey], Counter, StateKey]:
    """Advance the virtual chain alone for ``n_slots`` updates.

    Returns configurations sampled at the requested slot indices (state
    after that update), occupancy counts over all slots, and the final
    configuration.  Used by convergence diagnostics that need no traffic.
    """
    rngs = substreams(seed)
    r_bs, r_col = rngs["bs-pick"], rngs["column-sample"]
    core = FastCore(top, cat, cache_size)
    if initial is None:
        initial = tuple([most_popular_columns(cat.intensities, cache_size)] * top.n_bs)
    core.set_columns(initial)
    samples: dict[int, StateKey] = {}
    occupancy: Counter = Counter()
    for t in range(n_slots):
        beta = params.beta_at(t, top.n_bs)
        core.step(r_bs.randrange(top.n_bs), beta, r_col.random())
        key = core.columns()
        occupancy[key] += 1
        if record_at and t + 1 in record_at:
            samples[t + 1] = key
    return samples, occupancy, core.columns()
