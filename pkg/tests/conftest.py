import random

import pytest

import gibbscache as gc

# Verdict lines appended by the acceptance tests; echoed after the run so
# they survive pytest's output capture.
acceptance_results: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_results:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_results:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def line2_topology():
    """Two stations on a line covering [0,6] and [1,10]."""
    return gc.from_intervals([(0, 6), (1, 10)])


@pytest.fixture(scope="session")
def line2_catalog():
    """Two contents, popularities 0.55/0.45, 0.1 requests/time/length."""
    return gc.ContentCatalog((0.055, 0.045))


@pytest.fixture(scope="session")
def line2_config():
    return gc.parse_config("configs/two_station_line.json")


def random_instance(rng: random.Random, max_n=3, max_m=4, max_k=2):
    """Random small topology/catalog/cache-size triple for property tests."""
    n = rng.randint(1, max_n)
    subsets = []
    for mask in range(1, 1 << n):
        subsets.append(frozenset(j + 1 for j in range(n) if mask >> j & 1))
    areas = {}
    for s in subsets:
        if rng.random() < 0.7:
            areas[s] = rng.uniform(0.1, 3.0)
    if not areas:
        areas[frozenset(range(1, n + 1))] = rng.uniform(0.1, 3.0)
    top = gc.from_segments(n, areas)
    m = rng.randint(2, max_m)
    cat = gc.ContentCatalog(tuple(rng.uniform(0.05, 1.0) for _ in range(m)))
    k = rng.randint(1, min(max_k, m - 1))
    return top, cat, k


def random_placement(rng: random.Random, m: int, n: int, k: int) -> gc.Placement:
    cols = [tuple(sorted(rng.sample(range(1, m + 1), k))) for _ in range(n)]
    return gc.Placement.from_columns(m, cols, k)
