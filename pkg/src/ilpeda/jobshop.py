"""5x5 job-shop domain: schedules, makespan simulation, background vocabulary.

A fixed 5x5 duration matrix defines how long task j of job i takes on
machine j; every job visits machines 1..5 in order, and an instance is the
per-machine job sequence.  The objective is the semi-active makespan
(idle time included).  A seeded reference matrix and a 100,000-schedule
reference pool anchor the cost thresholds and the background vocabulary's
time grids, making every downstream number reproducible.
"""

import csv
import itertools
import os
import zlib
from functools import lru_cache

import numpy as np

from .cache import cache_dir
from .eda import Domain
from .kb import BackgroundKB, Predicate, Sort
from .kernels import makespan_batch
from .sampling import REJECTION, InstanceEnumerator

N_JOBS = 5
N_MACHINES = 5

# Published defaults for the shipped reference instance.
MATRIX_SEED = 389
DUR_LO = 1
DUR_HI = 99
POOL_SEED = 12345
POOL_SIZE = 100_000
POOL_VERSION = "jobshop-v1"

JOB = Sort("job", tuple(range(1, N_JOBS + 1)))
MACHINE = Sort("machine", tuple(range(1, N_MACHINES + 1)))
ORDER = Sort("order", tuple(itertools.permutations(range(1, N_JOBS + 1))))

_ATTRS = tuple(f"m{m}" for m in range(1, N_MACHINES + 1))

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
_MATRIX_CSV = os.path.join(_DATA_DIR, "jobshop_matrix.csv")


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

def random_matrix(rng, lo: int = DUR_LO, hi: int = DUR_HI) -> np.ndarray:
    """Uniform integer durations in [lo, hi], shape (jobs, machines)."""
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi")
    return rng.integers(lo, hi + 1, size=(N_JOBS, N_MACHINES)).astype(np.int64)


def random_schedule(rng):
    """Independent uniform job permutation per machine."""
    return tuple(
        tuple(int(j) + 1 for j in rng.permutation(N_JOBS))
        for _ in range(N_MACHINES)
    )


def reference_matrix() -> np.ndarray:
    """The shipped duration matrix (loaded from the repo CSV when present)."""
    if os.path.exists(_MATRIX_CSV):
        return load_matrix_csv(_MATRIX_CSV)
    return random_matrix(np.random.default_rng(np.random.SeedSequence(MATRIX_SEED)))


def save_matrix_csv(dur: np.ndarray, path: str) -> None:
    with open(path, "w", newline="") as f:
        csv.writer(f).writerows(dur.tolist())


def load_matrix_csv(path: str) -> np.ndarray:
    with open(path, newline="") as f:
        rows = [[int(v) for v in row] for row in csv.reader(f) if row]
    dur = np.array(rows, dtype=np.int64)
    if dur.shape != (N_JOBS, N_MACHINES) or (dur < 1).any():
        raise ValueError(f"{path}: not a valid {N_JOBS}x{N_MACHINES} duration matrix")
    return dur


def validate_schedule(s) -> None:
    if len(s) != N_MACHINES or any(
        tuple(sorted(o)) != JOB.values for o in s
    ):
        raise ValueError("schedule must give one job permutation per machine")


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(schedule, dur: np.ndarray) -> np.ndarray:
    """Completion time of each (job, machine) task, semi-active semantics.

    Task j of job i starts at max(completion of the job's previous task,
    completion of the machine's previous job in its sequence).
    """
    done = np.zeros((N_JOBS, N_MACHINES), dtype=np.int64)
    for m in range(N_MACHINES):
        mach_free = 0
        for job in schedule[m]:
            i = job - 1
            prev = done[i, m - 1] if m > 0 else 0
            start = max(prev, mach_free)
            mach_free = start + int(dur[i, m])
            done[i, m] = mach_free
    return done


def makespan(schedule, dur: np.ndarray) -> int:
    validate_schedule(schedule)
    return int(simulate(schedule, dur).max())


def schedule_stats(schedule, dur: np.ndarray):
    """(idle per machine, total idle, first-task start per machine).

    Idle on a machine counts the gaps between its consecutive tasks once
    it has started; the wait before its first task is reported separately.
    """
    done = simulate(schedule, dur)
    idle = []
    first = []
    for m in range(N_MACHINES):
        starts = [done[j - 1, m] - int(dur[j - 1, m]) for j in schedule[m]]
        busy = sum(int(dur[j - 1, m]) for j in schedule[m])
        idle.append(int(done[schedule[m][-1] - 1, m]) - starts[0] - busy)
        first.append(int(starts[0]))
    return tuple(idle), sum(idle), tuple(first)


# ---------------------------------------------------------------------------
# Reference pool
# ---------------------------------------------------------------------------

def pool_orders(n: int = POOL_SIZE, seed: int = POOL_SEED) -> np.ndarray:
    """The seeded reference schedules as a (n, machines, jobs) 0-based array."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = np.empty((n, N_MACHINES, N_JOBS), dtype=np.int64)
    for i in range(n):
        for m in range(N_MACHINES):
            out[i, m] = rng.permutation(N_JOBS)
    return out


def reference_pool(dur: np.ndarray = None) -> np.ndarray:
    """Makespans of the 100,000-schedule reference pool (cached on disk)."""
    if dur is None:
        dur = reference_matrix()
    key = "-".join(str(int(v)) for v in dur.ravel())
    digest = zlib.crc32(key.encode())
    path = os.path.join(cache_dir(), f"{POOL_VERSION}-{POOL_SEED}-{digest:08x}.npz")
    if os.path.exists(path):
        data = np.load(path)
        if data["key"].item() == key:
            return data["ms"]
    ms = makespan_batch(pool_orders(), dur)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    np.savez_compressed(path, ms=ms, key=np.array(key))
    return ms


def export_pool_csv(path: str, dur: np.ndarray = None) -> None:
    """Reference pool as CSV: 25 order entries (m1p1..m5p5) + makespan."""
    if dur is None:
        dur = reference_matrix()
    orders = pool_orders()
    ms = reference_pool(dur)
    header = [f"m{m}p{p}" for m in range(1, 6) for p in range(1, 6)] + ["makespan"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row, v in zip(orders, ms):
            w.writerow([int(j) + 1 for j in row.ravel()] + [int(v)])


def _decile_grid(values: np.ndarray) -> tuple:
    qs = np.percentile(values, np.arange(10, 100, 10))
    return tuple(int(v) for v in np.unique(np.round(qs).astype(np.int64)))


def _batch_stats(orders: np.ndarray, dur: np.ndarray):
    """Vectorised per-machine idle and first-start times, (N, machines)."""
    n = len(orders)
    rows = np.arange(n)
    done = np.zeros((n, N_JOBS, N_MACHINES), dtype=np.int64)
    idle = np.empty((n, N_MACHINES), dtype=np.int64)
    first = np.empty((n, N_MACHINES), dtype=np.int64)
    for m in range(N_MACHINES):
        mach_free = np.zeros(n, dtype=np.int64)
        busy = np.zeros(n, dtype=np.int64)
        for p in range(N_JOBS):
            job = orders[:, m, p]
            prev = done[rows, job, m - 1] if m > 0 else 0
            start = np.maximum(prev, mach_free)
            if p == 0:
                first[:, m] = start
            d = dur[job, m]
            busy += d
            mach_free = start + d
            done[rows, job, m] = mach_free
        idle[:, m] = mach_free - first[:, m] - busy
    return idle, first


@lru_cache(maxsize=None)
def time_grids():
    """Threshold constants for the time-bound predicates.

    Deciles of the reference pool's observed per-machine idle, total idle,
    and first-start distributions, frozen by the pool seed.
    """
    dur = reference_matrix()
    idle, first = _batch_stats(pool_orders(), dur)
    return {
        "idle": _decile_grid(idle.ravel()),
        "total_idle": _decile_grid(idle.sum(axis=1)),
        "start": _decile_grid(first.ravel()),
    }


# ---------------------------------------------------------------------------
# Background vocabulary
# ---------------------------------------------------------------------------

def _matrix_families(dur: np.ndarray):
    """fastest/slowest/fast/slow (job, machine) pairs; ties favour lower job id."""
    fastest, slowest, fast, slow = [], [], [], []
    for m in range(N_MACHINES):
        asc = sorted(range(N_JOBS), key=lambda i: (int(dur[i, m]), i))
        desc = sorted(range(N_JOBS), key=lambda i: (-int(dur[i, m]), i))
        fastest.append((asc[0] + 1, m + 1))
        slowest.append((desc[0] + 1, m + 1))
        fast.extend((i + 1, m + 1) for i in asc[:2])
        slow.extend((i + 1, m + 1) for i in desc[:2])
    return {"fastest": fastest, "slowest": slowest, "fast": fast, "slow": slow}


def _make_atoms_fn(dur: np.ndarray):
    grids = time_grids()

    @lru_cache(maxsize=200_000)
    def atoms(schedule):
        out = {}
        out["early"] = [(j, m + 1) for m in range(N_MACHINES)
                        for j in schedule[m][:2]]
        out["late"] = [(j, m + 1) for m in range(N_MACHINES)
                       for j in schedule[m][-2:]]
        idle, total, first = schedule_stats(schedule, dur)
        out["wait_leq"] = [(m + 1, t) for m in range(N_MACHINES)
                           for t in grids["idle"] if idle[m] <= t]
        out["wait_geq"] = [(m + 1, t) for m in range(N_MACHINES)
                           for t in grids["idle"] if idle[m] >= t]
        out["total_wait_leq"] = [(t,) for t in grids["total_idle"] if total <= t]
        out["total_wait_geq"] = [(t,) for t in grids["total_idle"] if total >= t]
        out["start_leq"] = [(m + 1, t) for m in range(N_MACHINES)
                            for t in grids["start"] if first[m] <= t]
        out["start_geq"] = [(m + 1, t) for m in range(N_MACHINES)
                            for t in grids["start"] if first[m] >= t]
        return out

    return atoms


def _sched_of(ctx):
    return tuple(ctx[a] for a in _ATTRS)


def background_jobshop(dur: np.ndarray = None) -> BackgroundKB:
    """Schedule vocabulary: early/late slots, the matrix's fast/slow tasks,
    and grid-thresholded machine idle, total idle, and first-start times.

    Every argument is a grid constant; under a fixed matrix the ground
    atoms carry all the discriminating structure a variable-linked reading
    would, since e.g. "the fastest job on machine m" denotes one fixed job.
    """
    if dur is None:
        dur = reference_matrix()
    grids = time_grids()
    atoms_fn = _make_atoms_fn(dur)
    fam = _matrix_families(dur)

    IDLE_T = Sort("idle_bound", grids["idle"])
    TOTAL_T = Sort("total_idle_bound", grids["total_idle"])
    START_T = Sort("start_bound", grids["start"])

    def on_schedule(name):
        return lambda ctx, k=name: atoms_fn(_sched_of(ctx))[k]

    preds = [
        Predicate("early", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=on_schedule("early"), reads=_ATTRS),
        Predicate("late", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=on_schedule("late"), reads=_ATTRS),
        Predicate("fastest", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=lambda ctx, t=fam["fastest"]: t),
        Predicate("slowest", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=lambda ctx, t=fam["slowest"]: t),
        Predicate("fast", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=lambda ctx, t=fam["fast"]: t),
        Predicate("slow", (JOB, MACHINE), ("#", "#"),
                  tuples_fn=lambda ctx, t=fam["slow"]: t),
        Predicate("wait_leq", (MACHINE, IDLE_T), ("#", "#"),
                  tuples_fn=on_schedule("wait_leq"), reads=_ATTRS),
        Predicate("wait_geq", (MACHINE, IDLE_T), ("#", "#"),
                  tuples_fn=on_schedule("wait_geq"), reads=_ATTRS),
        Predicate("total_wait_leq", (TOTAL_T,), ("#",),
                  tuples_fn=on_schedule("total_wait_leq"), reads=_ATTRS),
        Predicate("total_wait_geq", (TOTAL_T,), ("#",),
                  tuples_fn=on_schedule("total_wait_geq"), reads=_ATTRS),
        Predicate("start_leq", (MACHINE, START_T), ("#", "#"),
                  tuples_fn=on_schedule("start_leq"), reads=_ATTRS),
        Predicate("start_geq", (MACHINE, START_T), ("#", "#"),
                  tuples_fn=on_schedule("start_geq"), reads=_ATTRS),
    ]
    return BackgroundKB("jobshop", [(a, ORDER) for a in _ATTRS], preds)


def ground_atoms(schedule, dur: np.ndarray = None) -> set:
    """All true background atoms of one schedule, as (name, args) pairs."""
    if dur is None:
        dur = reference_matrix()
    kb = make_kb(dur_key(dur))
    ctx = kb.ctx_of(kb.binding_for(schedule))
    out = set()
    for pred in kb.predicates.values():
        if pred.is_type or pred.name == kb.target_name:
            continue
        for tup in pred.tuples_fn(ctx):
            out.add((pred.name, tuple(tup)))
    return out


def dur_key(dur: np.ndarray) -> tuple:
    return tuple(int(v) for v in dur.ravel())


@lru_cache(maxsize=None)
def make_kb(key: tuple = None) -> BackgroundKB:
    dur = reference_matrix() if key is None else np.array(key, dtype=np.int64).reshape(N_JOBS, N_MACHINES)
    return background_jobshop(dur)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------

def make_domain(dur: np.ndarray = None) -> Domain:
    if dur is None:
        dur = reference_matrix()
    pool_ms = reference_pool(dur)
    total = len(pool_ms)

    @lru_cache(maxsize=500_000)
    def objective(schedule):
        return makespan(schedule, dur)

    def from_grounding(g):
        try:
            validate_schedule(g)
        except (ValueError, TypeError):
            return None
        return tuple(tuple(int(j) for j in o) for o in g)

    def baseline_probability(theta):
        return float((pool_ms <= theta).sum()) / total

    def near_optimal_total(theta_star):
        return int((pool_ms <= theta_star).sum()), False

    enum = InstanceEnumerator(
        random_instance=random_schedule,
        all_instances=None,
        from_grounding=from_grounding,
        space_size=len(ORDER.values) ** N_MACHINES,
    )
    return Domain(
        name="jobshop",
        kb=make_kb(dur_key(dur)),
        enumerator=enum,
        objective=objective,
        baseline_probability=baseline_probability,
        near_optimal_total=near_optimal_total,
        default_sampler_mode=REJECTION,
    )
