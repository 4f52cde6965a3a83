"""End-to-end acceptance suite for the placement sampler.

Each test covers one acceptance criterion and emits a single PASS/FAIL
verdict line; the lines are echoed in a terminal summary section after the
run so they survive output capture.
"""

import dataclasses
import math
import random
import numpy as np
import pytest

import gibbscache as gc
from gibbscache.gibbs import GibbsParams, placement_from_key, transition_matrix
import conftest
from conftest import random_instance, random_placement

ARGMAX = ((2,), (1,))
H_MAX = 0.765


def _report(num: int, title: str, ok: bool) -> None:
    line = f"criterion {num} ({title}): {'PASS' if ok else 'FAIL'}"
    print(line)
    conftest.acceptance_results.append(line)


def _check(num: int, title: str, ok: bool, detail: str = "") -> None:
    _report(num, title, ok)
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_golden_reference_values(line2_topology, line2_catalog):
    tol = 1e-9
    report = gc.enumerate_optimal(line2_topology, line2_catalog, 1)
    pop = gc.most_popular_placement(line2_catalog, 2, 1)
    pop_rate = gc.hit_rate(line2_topology, line2_catalog, pop)
    r_star, indep = gc.optimize_two_content_mixture(line2_topology, line2_catalog)
    mixed_a = gc.hit_rate(
        line2_topology, line2_catalog, gc.Placement.from_columns(2, [(1,), (2,)], 1)
    )
    mixed_b = gc.hit_rate(
        line2_topology, line2_catalog, gc.Placement.from_columns(2, [(2,), (2,)], 1)
    )
    checks = {
        "h_max": abs(report.h_max - 0.765) <= tol,
        "argmax": report.argmax == (ARGMAX,),
        "most_popular": abs(pop_rate - 0.55) <= tol,
        "independent": abs(indep - 0.63) <= tol,
        "r_star": abs(r_star - 0.6) <= 1e-4,
        "mixed_0.735": abs(mixed_a - 0.735) <= tol,
        "mixed_0.45": abs(mixed_b - 0.45) <= tol,
    }
    _check(
        1,
        "golden two-station reference values",
        all(checks.values()),
        f"failed parts: {[k for k, v in checks.items() if not v]}",
    )


def test_criterion_2_detailed_balance():
    rng = random.Random(777)
    tol = 1e-10
    worst = 0.0
    tried = 0
    while tried < 12:
        top, cat, k = random_instance(rng, max_n=3, max_m=4, max_k=2)
        n_states = math.comb(cat.m_contents, k) ** top.n_bs
        if n_states > 4096:
            continue
        tried += 1
        for beta in (0.0, 1.0, 5.0):
            states, P = transition_matrix(top, cat, k, beta)
            dist = gc.stationary_distribution(top, cat, k, beta)
            pi = np.array([dist[s] for s in states])
            worst = max(worst, float(np.abs(pi @ P - pi).max()))
            F = pi[:, None] * P
            worst = max(worst, float(np.abs(F - F.T).max()))
    _check(
        2,
        "single-step detailed balance and stationarity",
        worst <= tol,
        f"worst deviation {worst:.3e} > {tol}",
    )


def test_criterion_3_fixed_beta_convergence(line2_config):
    pi2 = gc.stationary_distribution(
        line2_config.topology, line2_config.catalog, line2_config.cache_size, 2.0
    )
    # The real caches re-sync only at epoch boundaries, so 20 runs carry
    # roughly a thousand effective samples and the TV statistic sits near
    # its noise floor; the seed set is pinned for a stable verdict.
    occupancies = []
    for seed in range(100, 120):
        trace = gc.run(line2_config, seed=seed)
        occupancies.append(gc.empirical_distribution(trace, 0.5))
    pooled = gc.average_distributions(occupancies)
    tv = gc.tv_distance(pooled, pi2)
    _check(
        3,
        "real-cache occupancy matches the fixed-temperature law",
        tv <= 0.03,
        f"TV = {tv:.4f} > 0.03",
    )


def test_criterion_4_annealed_optimality(line2_config):
    cfg = dataclasses.replace(
        line2_config,
        gibbs=GibbsParams(mode="annealed", beta0=1.0),
        horizon=1_000_000.0,
    )
    occ = []
    rates = []
    for seed in range(20):
        trace = gc.run(cfg, seed=seed)
        occ.append(trace.virtual_occupancy(2 / 3, 1.0).get(ARGMAX, 0.0))
        rates.append(trace.time_average_hit_rate(2 / 3, 1.0))
    mean_occ = sum(occ) / len(occ)
    mean_rate = sum(rates) / len(rates)
    ok = mean_occ >= 0.95 and abs(mean_rate - H_MAX) <= 0.02 * H_MAX
    _check(
        4,
        "annealed run concentrates on the optimal placement",
        ok,
        f"final-third argmax occupancy {mean_occ:.4f} (need >= 0.95), "
        f"final-third hit rate {mean_rate:.4f} (need within 2% of {H_MAX})",
    )


def test_criterion_5_learning_variant(line2_config):
    cfg = dataclasses.replace(
        line2_config,
        gibbs=GibbsParams(mode="annealed", beta0=1.0),
        learning=True,
        horizon=1_000_000.0,
    )
    occ = []
    worst_rel = 0.0
    for seed in range(20):
        trace = gc.run(cfg, seed=seed)
        occ.append(trace.virtual_occupancy(2 / 3, 1.0).get(ARGMAX, 0.0))
        for snap in trace.estimator:
            worst_rel = max(
                worst_rel, abs(snap.theta - snap.true_rate) / snap.true_rate
            )
    mean_occ = sum(occ) / len(occ)
    ok = mean_occ >= 0.90 and worst_rel <= 0.05
    _check(
        5,
        "rate-learning run concentrates and estimates accurately",
        ok,
        f"final-third argmax occupancy {mean_occ:.4f} (need >= 0.90), "
        f"worst estimator relative error {worst_rel:.4f} (need <= 0.05)",
    )


def test_criterion_6_contraction_diagnostic(line2_topology, line2_catalog):
    beta = 1.0
    n_bs = 2
    delta = 0.315
    reps = 1500
    pi = gc.stationary_distribution(line2_topology, line2_catalog, 1, beta)
    params = GibbsParams(mode="fixed", beta=beta)
    periods = (10, 50, 100)
    slots = {l: l * n_bs for l in periods}
    counts = {l: {} for l in periods}
    for r in range(reps):
        samples, _, _ = gc.run_chain(
            line2_topology,
            line2_catalog,
            1,
            params,
            max(slots.values()),
            seed=50_000 + r,
            record_at=set(slots.values()),
        )
        for l in periods:
            key = samples[slots[l]]
            counts[l][key] = counts[l].get(key, 0) + 1
    # Sampling-noise allowance for the plug-in TV estimator.
    sigma = 0.5 * sum(math.sqrt(p * (1 - p) / reps) for p in pi.values())
    ok = True
    detail = []
    for l in periods:
        emp = {k: v / reps for k, v in counts[l].items()}
        tv = gc.tv_distance(emp, pi)
        bound = gc.dobrushin_bound(beta, delta, n_bs, 2, 1, l)
        detail.append(f"l={l}: TV {tv:.4f} vs bound {bound:.4f} + 3sigma {3 * sigma:.4f}")
        if tv > bound + 3 * sigma:
            ok = False
    _check(6, "empirical mixing never beats the contraction bound", ok, "; ".join(detail))


def test_criterion_7_formula_equivalence():
    rng = random.Random(2024)
    tol = 1e-12
    worst = 0.0
    for _ in range(200):
        top, cat, k = random_instance(rng, max_n=3, max_m=4, max_k=2)
        B = random_placement(rng, cat.m_contents, top.n_bs, k)
        # Network rate decomposes over stations.
        total = gc.hit_rate(top, cat, B)
        per_node = [gc.node_hit_rate(top, cat, B, j) for j in range(1, top.n_bs + 1)]
        worst = max(worst, abs(total - sum(per_node)))
        # ... and each station's rate over segments.
        for j in range(1, top.n_bs + 1):
            by_seg = sum(
                gc.segment_node_hit_rate(top, cat, B, j, s) for s in top.segment_areas
            )
            worst = max(worst, abs(per_node[j - 1] - by_seg))
        # Conditional law via the global distribution equals the local-energy
        # route.
        beta = rng.uniform(0.0, 5.0)
        j = rng.randrange(top.n_bs) + 1
        cands, local = gc.conditional_distribution(top, cat, B, j, beta)
        glob = np.array(
            [
                beta * gc.hit_rate(top, cat, B.with_column(j, c))
                for c in cands
            ]
        )
        glob = np.exp(glob - glob.max())
        glob /= glob.sum()
        worst = max(worst, float(np.abs(glob - local).max()))
    _check(
        7,
        "hit-rate decompositions and conditional laws agree",
        worst <= tol,
        f"worst deviation {worst:.3e} > {tol}",
    )


def test_criterion_8_beta_monotonicity(line2_topology, line2_catalog):
    betas = (1, 2, 5, 10, 20, 50)
    values = [
        gc.expected_hit_rate(line2_topology, line2_catalog, 1, b) for b in betas
    ]
    increasing = all(b > a for a, b in zip(values, values[1:]))
    beats_independent = all(v > 0.63 for b, v in zip(betas, values) if b >= 5)
    below_max = all(v < H_MAX for v in values)
    ok = increasing and beats_independent and below_max
    _check(
        8,
        "expected hit rate rises with inverse temperature",
        ok,
        f"values {[round(v, 5) for v in values]}",
    )
