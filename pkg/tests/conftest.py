import numpy as np
import pytest

from ilpeda.chess import KrkTablebase
from ilpeda.kb import BackgroundKB, Predicate, Sort


@pytest.fixture(scope="session")
def tablebase():
    return KrkTablebase.load()


N8 = Sort("n", tuple(range(1, 9)))


def small_kb():
    """Two attributes over 1..8 with order/adjacency/successor relations."""
    lt = [(a, b) for a in N8.values for b in N8.values if a < b]
    adj = [(a, b) for a in N8.values for b in N8.values if abs(a - b) == 1]
    preds = [
        Predicate("less_than", (N8, N8), ("+", "+"),
                  tuples_fn=lambda c, t=lt: t),
        Predicate("adjacent", (N8, N8), ("+", "+"),
                  tuples_fn=lambda c, t=adj: t),
        Predicate("above", (N8, N8), ("+", "-"),
                  tuples_fn=lambda c, t=lt: t),
        Predicate("succ", (N8, N8), ("+", "-"),
                  tuples_fn=lambda c: [(a, a + 1) for a in range(1, 8)]),
        Predicate("is_even", (N8,), ("+",),
                  tuples_fn=lambda c: [(v,) for v in (2, 4, 6, 8)]),
    ]
    return BackgroundKB("small", [("x", N8), ("y", N8)], preds)


def all_pairs():
    return [(x, y) for x in N8.values for y in N8.values]


@pytest.fixture()
def skb():
    return small_kb()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(np.random.SeedSequence(7))
