"""Uniform selection, success-set enumeration, rejection sampling."""

import numpy as np
import pytest

from ilpeda import chess
from ilpeda.kb import Theory, entails, ground_solutions, parse_theory
from ilpeda.sampling import (
    ENUMERATE, REJECTION, InstanceEnumerator, SamplerConfig,
    estimate_success_probability, sample,
)

from conftest import all_pairs, small_kb


def pair_enum():
    pairs = all_pairs()
    members = set(pairs)

    def from_grounding(g):
        t = tuple(int(v) for v in g)
        return t if t in members else None

    return InstanceEnumerator(
        random_instance=lambda rng: pairs[int(rng.integers(len(pairs)))],
        all_instances=pairs,
        from_grounding=from_grounding,
        space_size=len(pairs),
    )


LT_THEORY_TEXT = "good(A,B) :- n(A), n(B), less_than(A,B)."


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_config_rejects_bad_fields():
    with pytest.raises(ValueError):
        SamplerConfig(n=0)
    with pytest.raises(ValueError):
        SamplerConfig(delta=0.0)
    with pytest.raises(ValueError):
        SamplerConfig(delta=1.5)
    with pytest.raises(ValueError):
        SamplerConfig(mode="metropolis")
    with pytest.raises(ValueError):
        SamplerConfig(n=100, max_rejection_attempts=50)


# ---------------------------------------------------------------------------
# uniform (empty theory)
# ---------------------------------------------------------------------------

def test_uniform_chess_sample_matches_cumulative(tablebase):
    dom = chess.make_domain("high", tablebase)
    rng = np.random.default_rng(np.random.SeedSequence(3))
    res = sample(SamplerConfig(n=1000), Theory(), dom.kb, dom.enumerator, rng)
    assert len(res.instances) == 1000
    assert len(set(res.instances)) == 1000
    frac = sum(1 for x in res.instances if dom.objective(x) <= 8) / 1000
    # 3 binomial sigma around the full-distribution cumulative at depth 8
    p = dom.baseline_probability(8)
    sigma = (p * (1 - p) / 1000) ** 0.5
    assert abs(frac - p) <= 3 * sigma
    assert abs(p - 0.136) < 0.002


def test_uniform_without_enumerable_space_draws_distinct():
    pairs = all_pairs()
    enum = InstanceEnumerator(
        random_instance=lambda rng: pairs[int(rng.integers(len(pairs)))])
    rng = np.random.default_rng(np.random.SeedSequence(0))
    res = sample(SamplerConfig(n=30), Theory(), small_kb(), enum, rng)
    assert len(res.instances) == 30
    assert len(set(res.instances)) == 30


# ---------------------------------------------------------------------------
# enumerate-success-set mode
# ---------------------------------------------------------------------------

def test_enumerate_delta_one_takes_first_unique_groundings():
    kb = small_kb()
    theory = parse_theory(LT_THEORY_TEXT, kb)
    enum = pair_enum()
    cfg = SamplerConfig(n=10, delta=1.0, mode=ENUMERATE)
    res = sample(cfg, theory, kb, enum, np.random.default_rng(0))
    expected = []
    for g in ground_solutions(theory.clauses[0], kb):
        inst = enum.from_grounding(g)
        if inst is not None and inst not in expected:
            expected.append(inst)
        if len(expected) == 10:
            break
    assert res.instances == expected


def test_enumerate_exhausts_small_success_set():
    kb = small_kb()
    theory = parse_theory(LT_THEORY_TEXT, kb)
    res = sample(SamplerConfig(n=1000, mode=ENUMERATE), theory, kb,
                 pair_enum(), np.random.default_rng(0))
    assert sorted(res.instances) == [(x, y) for x, y in all_pairs() if x < y]


def test_enumerate_matches_exhaustive_entailment_scan(tablebase):
    # single clause; oracle = entailment check over every canonical position
    dom = chess.make_domain("high", tablebase)
    theory = parse_theory(
        "good(A,B,C,D,E,F) :- file(A), rank(B), file(C), rank(D),"
        " file(E), rank(F), bk_corner_dist_eq(0).", dom.kb)
    res = sample(SamplerConfig(n=30000, mode=ENUMERATE), theory, dom.kb,
                 dom.enumerator, np.random.default_rng(0))
    oracle = {x for x in dom.enumerator.all_instances
              if entails(theory, dom.kb.binding_for(x), dom.kb)}
    assert set(res.instances) == oracle
    assert len(res.instances) == len(oracle)  # no duplicates


def test_enumerate_requires_grounding_map():
    kb = small_kb()
    theory = parse_theory(LT_THEORY_TEXT, kb)
    enum = pair_enum()
    enum.from_grounding = None
    with pytest.raises(ValueError):
        sample(SamplerConfig(mode=ENUMERATE), theory, kb, enum)


# ---------------------------------------------------------------------------
# rejection mode
# ---------------------------------------------------------------------------

def test_rejection_sound_unique_deterministic():
    kb = small_kb()
    theory = parse_theory(LT_THEORY_TEXT, kb)
    cfg = SamplerConfig(n=20, mode=REJECTION, max_rejection_attempts=5000)
    out = []
    for _ in range(2):
        rng = np.random.default_rng(np.random.SeedSequence(11))
        res = sample(cfg, theory, kb, pair_enum(), rng)
        assert all(entails(theory, kb.binding_for(x), kb)
                   for x in res.instances)
        assert len(set(res.instances)) == len(res.instances)
        out.append(res.instances)
    assert out[0] == out[1]


def test_rejection_unsatisfiable_theory_exhausts():
    kb = small_kb()
    theory = parse_theory(
        "good(A,B) :- n(A), n(B), less_than(A,B), less_than(B,A).", kb)
    cfg = SamplerConfig(n=5, mode=REJECTION, max_rejection_attempts=200)
    res = sample(cfg, theory, kb, pair_enum(), np.random.default_rng(0))
    assert res.instances == []
    assert res.exhausted


def test_rejection_acceptance_grows_with_delta():
    kb = small_kb()
    theory = parse_theory(LT_THEORY_TEXT, kb)
    enum = pair_enum()

    def mean_count(delta):
        cfg = SamplerConfig(n=28, delta=delta, mode=REJECTION,
                            max_rejection_attempts=40)
        total = 0
        for s in range(30):
            rng = np.random.default_rng(np.random.SeedSequence(s))
            total += len(sample(cfg, theory, kb, enum, rng).instances)
        return total / 30

    low, mid, high = mean_count(0.2), mean_count(0.6), mean_count(1.0)
    assert low < high
    assert low <= mid <= high


# ---------------------------------------------------------------------------
# success-probability estimator
# ---------------------------------------------------------------------------

def test_probability_is_fraction_at_or_below_threshold():
    xs = list(range(1000))
    assert estimate_success_probability(xs, 817, lambda x: x) == 0.818
    assert estimate_success_probability(xs, 2000, lambda x: x) == 1.0


def test_probability_rejects_empty_sample():
    with pytest.raises(ValueError):
        estimate_success_probability([], 1, lambda x: x)
