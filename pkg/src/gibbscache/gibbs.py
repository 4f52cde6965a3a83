"""Virtual-cache Gibbs sampler: conditional column sampling, annealing
schedule, exact stationary distribution, and small-instance diagnostics.

The single-site update resamples one station's cache column from the
conditional distribution whose exponent is the local (neighbor- and
segment-restricted) hit rate; candidate columns are enumerated in
lexicographic order over K-subsets of the catalog and sampled by inverse
CDF, which makes trajectories reproducible for a fixed seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .errors import CapacityError
from .geometry import CellTopology, Subset
from .model import ContentCatalog, Placement, hit_rate, local_energy

# Exact computations are gated so tests stay desk-scale; large instances can
# still run the sampler itself.
COND_ENUM_LIMIT = 100_000  # candidate columns per conditional step
STATE_ENUM_LIMIT = 1_000_000  # full configuration space


@dataclass(frozen=True)
class GibbsParams:
    """Sampler parameters; ``beta`` for fixed mode, ``beta0`` for annealed."""

    mode: Literal["fixed", "annealed"] = "fixed"
    beta: float = 1.0
    beta0: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("fixed", "annealed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "fixed" and self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.mode == "annealed" and self.beta0 <= 0:
            raise ValueError("beta0 must be > 0")

    def beta_at(self, t: int, n_bs: int) -> float:
        if self.mode == "fixed":
            return self.beta
        return anneal_beta(self.beta0, t, n_bs)


@dataclass(frozen=True)
class VirtualState:
    """Virtual-cache configuration after slot ``t``."""

    placement: Placement
    t: int = 0


def candidate_columns(m_contents: int, cache_size: int) -> list[tuple[int, ...]]:
    """All K-subsets of content ids (1-based), lexicographic."""
    n = math.comb(m_contents, cache_size)
    if n > COND_ENUM_LIMIT:
        raise CapacityError(
            f"C({m_contents},{cache_size}) = {n} candidate columns exceeds limit {COND_ENUM_LIMIT}"
        )
    return [
        tuple(i + 1 for i in c)
        for c in itertools.combinations(range(m_contents), cache_size)
    ]


def conditional_distribution(
    top: CellTopology,
    cat: ContentCatalog,
    V: Placement,
    j: int,
    beta: float,
    energy: Callable[[Placement, int], float] | None = None,
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Gibbs conditional over the K-subset columns for station ``j``.

    Returns the lexicographic candidate list and their probabilities.  The
    maximum exponent is subtracted before exponentiation so large ``beta *
    energy`` values cannot overflow.  ``energy`` defaults to the exact local
    energy; the learning variant passes an estimate-driven function.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if energy is None:
        energy = lambda A, jj: local_energy(top, cat, A, jj)
    cands = candidate_columns(cat.m_contents, V.cache_size)
    energies = np.array([energy(V.with_column(j, c), j) for c in cands])
    exponents = beta * energies
    weights = np.exp(exponents - exponents.max())
    return cands, weights / weights.sum()


def gibbs_step(
    state: VirtualState,
    params: GibbsParams,
    top: CellTopology,
    cat: ContentCatalog,
    bs_rng: random.Random,
    col_rng: random.Random,
    energy: Callable[[Placement, int], float] | None = None,
) -> VirtualState:
    """One update of Algorithm-style single-site sampling.

    Picks a station uniformly (from ``bs_rng``), resamples its column by
    inverse CDF over the lexicographic candidates (from ``col_rng``).
    """
    j = bs_rng.randrange(top.n_bs) + 1
    beta = params.beta_at(state.t, top.n_bs)
    cands, probs = conditional_distribution(top, cat, state.placement, j, beta, energy)
    u = col_rng.random()
    acc = 0.0
    chosen = cands[-1]
    for c, p in zip(cands, probs):
        acc += p
        if u < acc:
            chosen = c
            break
    return VirtualState(state.placement.with_column(j, chosen), state.t + 1)


def anneal_beta(beta0: float, t: int, n_bs: int) -> float:
    """Logarithmic cooling: beta_t = beta0 * ln(1 + floor(t / N)).

    Constant within each N-slot period; zero during the first period.
    """
    if beta0 <= 0:
        raise ValueError("beta0 must be > 0")
    return beta0 * math.log(1 + t // n_bs)


@dataclass(frozen=True)
class Beta0Check:
    """Outcome of the annealing admissibility check."""

    ok: bool
    violations: tuple[str, ...]
    max_admissible: float


def validate_beta0(
    beta0: float, delta: float, h_max: float, n_bs: int
) -> Beta0Check:
    """Check ``beta0 * N * delta < 1`` and ``beta0 * h_max < 1`` (strict).

    ``delta`` is the hit-rate spread (max - min) over all feasible
    placements and ``h_max`` the maximum hit rate; both come from the
    brute-force oracle.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if h_max <= 0:
        raise ValueError("h_max must be > 0")
    violations = []
    if beta0 * n_bs * delta >= 1:
        violations.append(
            f"beta0 * N * delta = {beta0 * n_bs * delta:.6g} >= 1"
        )
    if beta0 * h_max >= 1:
        violations.append(f"beta0 * max hit rate = {beta0 * h_max:.6g} >= 1")
    bounds = [1.0 / h_max]
    if delta > 0:
        bounds.append(1.0 / (n_bs * delta))
    return Beta0Check(
        ok=not violations,
        violations=tuple(violations),
        max_admissible=min(bounds),
    )


StateKey = tuple[tuple[int, ...], ...]


def enumerate_states(
    m_contents: int, n_bs: int, cache_size: int
) -> list[StateKey]:
    """All feasible configurations as per-station column tuples, mixed-radix
    lexicographic order."""
    cands = candidate_columns(m_contents, cache_size)
    n_states = len(cands) ** n_bs
    if n_states > STATE_ENUM_LIMIT:
        raise CapacityError(
            f"{n_states} configurations exceed enumeration limit {STATE_ENUM_LIMIT}"
        )
    return [tuple(cols) for cols in itertools.product(cands, repeat=n_bs)]


def placement_from_key(key: StateKey, m_contents: int, cache_size: int) -> Placement:
    return Placement.from_columns(m_contents, key, cache_size)


def stationary_distribution(
    top: CellTopology, cat: ContentCatalog, cache_size: int, beta: float
) -> dict[StateKey, float]:
    """Exact Gibbs distribution exp(beta * h(B)) / Z by full enumeration."""
    states = enumerate_states(cat.m_contents, top.n_bs, cache_size)
    rates = np.array(
        [
            hit_rate(top, cat, placement_from_key(k, cat.m_contents, cache_size))
            for k in states
        ]
    )
    exponents = beta * rates
    weights = np.exp(exponents - exponents.max())
    probs = weights / weights.sum()
    return dict(zip(states, probs.tolist()))


def expected_hit_rate(
    top: CellTopology, cat: ContentCatalog, cache_size: int, beta: float
) -> float:
    """Expected network hit rate under the exact Gibbs distribution."""
    dist = stationary_distribution(top, cat, cache_size, beta)
    return sum(
        p * hit_rate(top, cat, placement_from_key(k, cat.m_contents, cache_size))
        for k, p in dist.items()
    )


def transition_matrix(
    top: CellTopology, cat: ContentCatalog, cache_size: int, beta: float
) -> tuple[list[StateKey], np.ndarray]:
    """Exact single-step transition matrix of the uniform-site sampler.

    Row order matches :func:`enumerate_states`.  Used by the detailed
    balance and convergence diagnostics on small instances.
    """
    states = enumerate_states(cat.m_contents, top.n_bs, cache_size)
    index = {k: i for i, k in enumerate(states)}
    n = top.n_bs
    P = np.zeros((len(states), len(states)))
    for k in states:
        row = index[k]
        B = placement_from_key(k, cat.m_contents, cache_size)
        for j in range(1, n + 1):
            cands, probs = conditional_distribution(top, cat, B, j, beta)
            for c, p in zip(cands, probs):
                target = k[:j - 1] + (c,) + k[j:]
                P[row, index[target]] += p / n
    return states, P


def dobrushin_bound(
    beta: float, delta: float, n_bs: int, m_contents: int, cache_size: int, periods: int
) -> float:
    """Worst-case TV bound after ``periods`` N-slot periods at fixed beta.

    Ergodic-coefficient contraction with the initial TV distance replaced
    by 1; a diagnostic ceiling, loose in practice.
    """
    ncand = math.comb(m_contents, cache_size)
    contraction = 1.0 - (math.exp(-beta * delta) / (n_bs * ncand)) ** n_bs
    return contraction**periods
