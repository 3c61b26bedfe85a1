"""5x5 job-shop: simulator, reference pool, schedule vocabulary."""

import numpy as np
import pytest

from ilpeda import jobshop
from ilpeda.jobshop import (
    DUR_HI, DUR_LO, N_JOBS, N_MACHINES, _batch_stats, _matrix_families,
    background_jobshop, ground_atoms, load_matrix_csv, make_domain, makespan,
    pool_orders, random_matrix, random_schedule, reference_matrix,
    reference_pool, save_matrix_csv, schedule_stats, simulate, time_grids,
    validate_schedule,
)


def identity_schedule():
    return tuple(tuple(range(1, N_JOBS + 1)) for _ in range(N_MACHINES))


def longest_path_makespan(schedule, dur):
    """Disjunctive-graph oracle: longest path over task nodes.

    Node (i, m) has weight dur[i][m]; arcs follow job routing m-1 -> m and
    each machine's chosen job sequence.
    """
    preds = {(i, m): [] for i in range(N_JOBS) for m in range(N_MACHINES)}
    for i in range(N_JOBS):
        for m in range(1, N_MACHINES):
            preds[(i, m)].append((i, m - 1))
    for m in range(N_MACHINES):
        seq = [j - 1 for j in schedule[m]]
        for a, b in zip(seq, seq[1:]):
            preds[(b, m)].append((a, m))

    memo = {}

    def finish(node):
        if node not in memo:
            memo[node] = int(dur[node]) + max(
                (finish(p) for p in preds[node]), default=0)
        return memo[node]

    return max(finish(n) for n in preds)


def machine_timeline_stats(schedule, dur):
    """Instrumented re-simulation logging idle gaps per machine."""
    done = simulate(schedule, dur)
    idle, first = [], []
    for m in range(N_MACHINES):
        spans = sorted(
            (int(done[j - 1, m]) - int(dur[j - 1, m]), int(done[j - 1, m]))
            for j in schedule[m])
        first.append(spans[0][0])
        gaps = sum(s - prev_end for (_, prev_end), (s, _) in zip(spans, spans[1:]))
        idle.append(gaps)
    return idle, sum(idle), first


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------

def test_unit_time_flow_line_makespan():
    dur = np.ones((5, 5), dtype=np.int64)
    assert makespan(identity_schedule(), dur) == 9


def test_simulator_matches_longest_path_oracle(rng):
    for _ in range(1000):
        dur = random_matrix(rng)
        s = random_schedule(rng)
        assert makespan(s, dur) == longest_path_makespan(s, dur)


def test_dominant_job_runs_back_to_back(rng):
    for _ in range(100):
        dur = random_matrix(rng, 1, 9)
        big = int(rng.integers(N_JOBS))
        dur[big] = rng.integers(500, 999, size=N_MACHINES)
        s = random_schedule(rng)
        got = makespan(s, dur)
        assert got == longest_path_makespan(s, dur)
        dom = int(dur[big].sum())
        assert dom <= got <= dom + int(np.delete(dur, big, axis=0).sum())


def test_makespan_lower_bounds(rng):
    dur = reference_matrix()
    machine_load = int(dur.sum(axis=0).max())
    job_length = int(dur.sum(axis=1).max())
    for _ in range(500):
        v = makespan(random_schedule(rng), dur)
        assert v >= machine_load
        assert v >= job_length


def test_job_relabelling_equivariance(rng):
    for _ in range(100):
        dur = random_matrix(rng)
        s = random_schedule(rng)
        perm = rng.permutation(N_JOBS)  # old job j -> new job perm[j-1]+1
        s2 = tuple(tuple(int(perm[j - 1]) + 1 for j in o) for o in s)
        dur2 = np.empty_like(dur)
        for j in range(N_JOBS):
            dur2[int(perm[j])] = dur[j]
        assert makespan(s, dur) == makespan(s2, dur2)


def test_validate_schedule_rejects_non_permutations():
    with pytest.raises(ValueError):
        makespan(((1, 2, 3, 4, 4),) * 5, reference_matrix())
    with pytest.raises(ValueError):
        makespan(((1, 2, 3, 4, 5),) * 4, reference_matrix())


# ---------------------------------------------------------------------------
# generators and reference data
# ---------------------------------------------------------------------------

def test_seeded_generators_are_deterministic():
    a = random_schedule(np.random.default_rng(np.random.SeedSequence(9)))
    b = random_schedule(np.random.default_rng(np.random.SeedSequence(9)))
    assert a == b
    ma = random_matrix(np.random.default_rng(np.random.SeedSequence(9)))
    mb = random_matrix(np.random.default_rng(np.random.SeedSequence(9)))
    assert (ma == mb).all()


def test_schedule_positions_are_uniform(rng):
    counts = np.zeros((N_MACHINES, N_JOBS, N_JOBS))
    n = 10_000
    for _ in range(n):
        s = random_schedule(rng)
        for m in range(N_MACHINES):
            for p, j in enumerate(s[m]):
                counts[m, p, j - 1] += 1
    freq = counts / n
    assert np.abs(freq - 0.2).max() <= 0.02


def test_reference_matrix_round_trip(tmp_path):
    dur = reference_matrix()
    assert dur.shape == (5, 5)
    assert dur.min() >= DUR_LO and dur.max() <= DUR_HI
    path = tmp_path / "m.csv"
    save_matrix_csv(dur, path)
    assert (load_matrix_csv(path) == dur).all()


def test_reference_pool_is_unimodal():
    ms = reference_pool()
    assert len(ms) == 100_000
    counts, _ = np.histogram(ms, bins=15)
    peak = int(counts.argmax())
    assert 0 < peak < 14
    # rise to the peak, fall after it, up to 3% counting noise
    slack = 0.03 * counts.max()
    assert all(counts[i] <= counts[i + 1] + slack for i in range(peak))
    assert all(counts[i] >= counts[i + 1] - slack for i in range(peak, 14))
    dur = reference_matrix()
    assert ms.min() >= int(dur.sum(axis=0).max())


def test_batch_stats_agree_with_simulator():
    dur = reference_matrix()
    orders = pool_orders(200)
    idle, first = _batch_stats(orders, dur)
    for i, row in enumerate(orders):
        s = tuple(tuple(int(j) + 1 for j in o) for o in row)
        ref_idle, ref_total, ref_first = schedule_stats(s, dur)
        assert tuple(idle[i]) == ref_idle
        assert tuple(first[i]) == ref_first
        assert int(idle[i].sum()) == ref_total


# ---------------------------------------------------------------------------
# background vocabulary
# ---------------------------------------------------------------------------

def test_early_late_slots():
    s = identity_schedule()
    atoms = ground_atoms(s)
    for m in range(1, N_MACHINES + 1):
        assert ("early", (1, m)) in atoms
        assert ("late", (1, m)) not in atoms
        assert ("late", (5, m)) in atoms
        # position 3 is neither early nor late
        assert ("early", (3, m)) not in atoms
        assert ("late", (3, m)) not in atoms


def test_early_late_mutually_exclusive(rng):
    for _ in range(50):
        atoms = ground_atoms(random_schedule(rng))
        early = {a for n, a in atoms if n == "early"}
        late = {a for n, a in atoms if n == "late"}
        assert not early & late
        assert len(early) == len(late) == 10


def test_fastest_task_is_argmin_with_low_id_ties():
    dur = reference_matrix().copy()
    dur[:, 1] = (5, 9, 3, 7, 4)
    fam = _matrix_families(dur)
    assert (3, 2) in fam["fastest"]
    dur[:, 3] = (6, 2, 2, 8, 8)  # tie between jobs 2 and 3
    fam = _matrix_families(dur)
    assert (2, 4) in fam["fastest"]
    assert (4, 4) in fam["slowest"]  # slowest tie (jobs 4, 5) -> job 4
    assert {(2, 4), (3, 4)} <= set(fam["fast"])
    assert {(4, 4), (5, 4)} <= set(fam["slow"])


def test_time_bound_atoms_match_instrumented_simulator(rng):
    dur = reference_matrix()
    grids = time_grids()
    for _ in range(200):
        s = random_schedule(rng)
        atoms = ground_atoms(s)
        idle, total, first = machine_timeline_stats(s, dur)
        for m in range(1, N_MACHINES + 1):
            for t in grids["idle"]:
                assert (("wait_leq", (m, t)) in atoms) == (idle[m - 1] <= t)
                assert (("wait_geq", (m, t)) in atoms) == (idle[m - 1] >= t)
            for t in grids["start"]:
                assert (("start_leq", (m, t)) in atoms) == (first[m - 1] <= t)
        for t in grids["total_idle"]:
            assert (("total_wait_leq", (t,)) in atoms) == (total <= t)
            assert (("total_wait_geq", (t,)) in atoms) == (total >= t)


def test_atoms_are_pure(rng):
    s = random_schedule(rng)
    assert ground_atoms(s) == ground_atoms(s)


# ---------------------------------------------------------------------------
# domain bundle
# ---------------------------------------------------------------------------

def test_domain_baseline_and_near_total():
    dom = make_domain()
    ms = reference_pool()
    assert dom.baseline_probability(1000) == pytest.approx((ms <= 1000).mean())
    count, exact = dom.near_optimal_total(600)
    assert count == int((ms <= 600).sum())
    assert not exact  # pool-based denominator, not an enumeration


def test_domain_grounding_filter():
    dom = make_domain()
    s = identity_schedule()
    assert dom.enumerator.from_grounding(s) == s
    assert dom.enumerator.from_grounding(((1, 2, 3, 4, 4),) * 5) is None
    assert dom.enumerator.space_size == 120 ** 5
