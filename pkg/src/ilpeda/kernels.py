"""Hot numeric kernels: KRK retrograde fixpoint and batch makespan.

Each kernel has a numba ``@njit`` build and a pure-numpy fallback; the
active path is chosen by :func:`ilpeda.accel.use_numba`.  Both paths are
exact and produce identical arrays.

Board encoding: a square is ``file * 8 + rank`` with file/rank in 0..7,
so a position index ``wk * 4096 + wr * 64 + bk`` orders positions by the
coordinate 6-tuple (wk_file, wk_rank, wr_file, wr_rank, bk_file, bk_rank).
Black is always the side to move in instance-space positions.

Value encoding in the solved arrays:
  -2  illegal position
  -1  undecided / draw (for black-to-move after the fixpoint: draw)
  d>=0  forced mate in d White moves (black-to-move: d = 0 is checkmate)
"""

import numpy as np

from .accel import use_numba

N_SQ = 64
N_POS = N_SQ ** 3
ILLEGAL = -2
UNDECIDED = -1

_KING_DIRS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_ROOK_DIRS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _files_ranks(sq):
    return sq // 8, sq % 8


def _cheb(a, b):
    fa, ra = _files_ranks(a)
    fb, rb = _files_ranks(b)
    return np.maximum(np.abs(fa - fb), np.abs(ra - rb))


def _rook_attacks(wr, target, blocker):
    """Rook on wr attacks target, with a single possible blocker square.

    The attacked piece itself never blocks; only ``blocker`` can interpose.
    """
    fr, rr = _files_ranks(wr)
    ft, rt = _files_ranks(target)
    fb, rb = _files_ranks(blocker)
    same_file = fr == ft
    same_rank = rr == rt
    blocks_file = (fb == fr) & (np.minimum(rr, rt) < rb) & (rb < np.maximum(rr, rt))
    blocks_rank = (rb == rr) & (np.minimum(fr, ft) < fb) & (fb < np.maximum(fr, ft))
    return (same_file & ~blocks_file) | (same_rank & ~blocks_rank)


def build_move_tables():
    """Precompute legality masks and move-target tables for all positions.

    Returns a dict with:
      btm_legal, wtm_legal : bool (N_POS,)
      bk_checked           : bool (N_POS,) black king attacked by the rook
      bdest  : int32 (N_POS, 8)  black king moves -> white-to-move index, -1 pad
      bcapt  : bool (N_POS,)     black has a safe rook capture (escape to draw)
      bhasmove : bool (N_POS,)
      wdest  : int32 (N_POS, 36) white moves -> black-to-move index, -1 pad
    """
    idx = np.arange(N_POS, dtype=np.int64)
    wk = (idx >> 12).astype(np.int64)
    wr = ((idx >> 6) & 63).astype(np.int64)
    bk = (idx & 63).astype(np.int64)

    distinct = (wk != wr) & (wk != bk) & (wr != bk)
    kings_ok = _cheb(wk, bk) >= 2
    bk_checked = _rook_attacks(wr, bk, wk) & distinct
    btm_legal = distinct & kings_ok
    wtm_legal = distinct & kings_ok & ~bk_checked

    fbk, rbk = _files_ranks(bk)
    fwk, rwk = _files_ranks(wk)

    # Black king moves.
    bdest = np.full((N_POS, 8), -1, dtype=np.int32)
    bcapt = np.zeros(N_POS, dtype=bool)
    for col, (df, dr) in enumerate(_KING_DIRS):
        nf, nr = fbk + df, rbk + dr
        on = (nf >= 0) & (nf < 8) & (nr >= 0) & (nr < 8)
        nsq = np.where(on, nf * 8 + nr, 0)
        away_from_wk = _cheb(nsq, wk) >= 2
        ok = btm_legal & on & away_from_wk
        is_capture = ok & (nsq == wr)
        bcapt |= is_capture
        # Rook attacks computed with the black king's origin square vacated.
        safe = ok & ~is_capture & ~_rook_attacks(wr, nsq, wk)
        bdest[:, col] = np.where(safe, wk * 4096 + wr * 64 + nsq, -1)
    bhasmove = bcapt | (bdest >= 0).any(axis=1)

    # White moves: 8 king directions + 4 rook rays of up to 7 steps.
    wdest = np.full((N_POS, 36), -1, dtype=np.int32)
    for col, (df, dr) in enumerate(_KING_DIRS):
        nf, nr = fwk + df, rwk + dr
        on = (nf >= 0) & (nf < 8) & (nr >= 0) & (nr < 8)
        nsq = np.where(on, nf * 8 + nr, 0)
        ok = wtm_legal & on & (nsq != wr) & (_cheb(nsq, bk) >= 2)
        wdest[:, col] = np.where(ok, nsq * 4096 + wr * 64 + bk, -1)
    fwr, rwr = _files_ranks(wr)
    col = 8
    for df, dr in _ROOK_DIRS:
        alive = wtm_legal.copy()
        for step in range(1, 8):
            nf, nr = fwr + df * step, rwr + dr * step
            on = (nf >= 0) & (nf < 8) & (nr >= 0) & (nr < 8)
            alive = alive & on
            nsq = np.where(on, nf * 8 + nr, 0)
            empty = (nsq != wk) & (nsq != bk)
            land = alive & empty
            wdest[:, col] = np.where(land, wk * 4096 + nsq * 64 + bk, -1)
            alive = alive & empty
            col += 1

    return {
        "btm_legal": btm_legal,
        "wtm_legal": wtm_legal,
        "bk_checked": bk_checked,
        "bdest": bdest,
        "bcapt": bcapt,
        "bhasmove": bhasmove,
        "wdest": wdest,
    }


def _solve_krk_numpy(tables):
    btm_legal = tables["btm_legal"]
    wtm_legal = tables["wtm_legal"]
    bdest = tables["bdest"]
    wdest = tables["wdest"]
    bcapt = tables["bcapt"]
    bhasmove = tables["bhasmove"]
    bk_checked = tables["bk_checked"]

    btm_val = np.full(N_POS, UNDECIDED, dtype=np.int16)
    wtm_val = np.full(N_POS, UNDECIDED, dtype=np.int16)
    btm_val[~btm_legal] = ILLEGAL
    wtm_val[~wtm_legal] = ILLEGAL

    btm_val[btm_legal & bk_checked & ~bhasmove] = 0  # checkmate
    # Stalemates and safe rook captures can never be assigned a win.
    assignable = btm_legal & bhasmove & ~bcapt & (btm_val != 0)

    bvalid = bdest >= 0
    wvalid = wdest >= 0
    bgather = np.where(bvalid, bdest, 0)
    wgather = np.where(wvalid, wdest, 0)

    d = 1
    while True:
        changed = 0
        # White to move: wins in d if some reply reaches a mate-in-(d-1).
        cand = wtm_legal & (wtm_val == UNDECIDED)
        succ = btm_val[wgather]
        hit = cand & ((succ == d - 1) & wvalid).any(axis=1)
        wtm_val[hit] = d
        changed += int(hit.sum())

        # Black to move: lost in d once every reply reaches a won position.
        cand = assignable & (btm_val == UNDECIDED)
        succ = wtm_val[bgather]
        all_won = cand & np.where(bvalid, succ >= 0, True).all(axis=1)
        if all_won.any():
            vals = np.where(bvalid[all_won], succ[all_won], 0).max(axis=1)
            btm_val[all_won] = vals.astype(np.int16)
            changed += int(all_won.sum())

        if changed == 0:
            break
        d += 1
    return btm_val, wtm_val


def _solve_krk_loops(btm_legal, wtm_legal, bk_checked, bdest, bcapt, bhasmove, wdest):
    btm_val = np.full(N_POS, UNDECIDED, dtype=np.int16)
    wtm_val = np.full(N_POS, UNDECIDED, dtype=np.int16)
    for i in range(N_POS):
        if not btm_legal[i]:
            btm_val[i] = ILLEGAL
        elif bk_checked[i] and not bhasmove[i]:
            btm_val[i] = 0
        if not wtm_legal[i]:
            wtm_val[i] = ILLEGAL

    d = 1
    while True:
        changed = 0
        for i in range(N_POS):
            if wtm_val[i] != UNDECIDED:
                continue
            for c in range(wdest.shape[1]):
                j = wdest[i, c]
                if j >= 0 and btm_val[j] == d - 1:
                    wtm_val[i] = d
                    changed += 1
                    break
        for i in range(N_POS):
            if btm_val[i] != UNDECIDED or not btm_legal[i]:
                continue
            if bcapt[i] or not bhasmove[i]:
                continue
            worst = -1
            all_won = True
            for c in range(bdest.shape[1]):
                j = bdest[i, c]
                if j < 0:
                    continue
                v = wtm_val[j]
                if v < 0:
                    all_won = False
                    break
                if v > worst:
                    worst = v
            if all_won:
                btm_val[i] = worst
                changed += 1
        if changed == 0:
            break
        d += 1
    return btm_val, wtm_val


_solve_krk_numba = None


def solve_krk(tables):
    """Run the retrograde fixpoint; returns (btm_val, wtm_val)."""
    global _solve_krk_numba
    if use_numba():
        if _solve_krk_numba is None:
            from numba import njit

            _solve_krk_numba = njit(cache=True)(_solve_krk_loops)
        return _solve_krk_numba(
            tables["btm_legal"],
            tables["wtm_legal"],
            tables["bk_checked"],
            tables["bdest"],
            tables["bcapt"],
            tables["bhasmove"],
            tables["wdest"],
        )
    return _solve_krk_numpy(tables)


# ---------------------------------------------------------------------------
# Job-shop batch makespan
# ---------------------------------------------------------------------------


def _makespan_batch_loops(orders, dur):
    """orders: (N, M, J) job index (0-based) per machine slot; dur: (J, M)."""
    n, m, j = orders.shape
    out = np.zeros(n, dtype=np.int64)
    job_ready = np.zeros(j, dtype=np.int64)
    for s in range(n):
        for a in range(j):
            job_ready[a] = 0
        best = 0
        for mach in range(m):
            mach_ready = 0
            for pos in range(j):
                job = orders[s, mach, pos]
                start = max(job_ready[job], mach_ready)
                finish = start + dur[job, mach]
                job_ready[job] = finish
                mach_ready = finish
                if finish > best:
                    best = finish
        out[s] = best
    return out


def _makespan_batch_numpy(orders, dur):
    n, m, j = orders.shape
    job_ready = np.zeros((n, j), dtype=np.int64)
    rows = np.arange(n)
    best = np.zeros(n, dtype=np.int64)
    for mach in range(m):
        mach_ready = np.zeros(n, dtype=np.int64)
        for pos in range(j):
            job = orders[:, mach, pos]
            start = np.maximum(job_ready[rows, job], mach_ready)
            finish = start + dur[job, mach]
            job_ready[rows, job] = finish
            mach_ready = finish
        best = np.maximum(best, mach_ready)
    return best


_makespan_batch_numba = None


def makespan_batch(orders, dur):
    """Makespans for a batch of schedules under one duration matrix.

    ``orders[s, m]`` is the job processing order on machine ``m`` (0-based
    job ids); ``dur[i, m]`` is the duration of job i's task on machine m.
    Machines are visited by every job in index order 0..M-1.
    """
    global _makespan_batch_numba
    orders = np.ascontiguousarray(orders, dtype=np.int64)
    dur = np.ascontiguousarray(dur, dtype=np.int64)
    if use_numba():
        if _makespan_batch_numba is None:
            from numba import njit

            _makespan_batch_numba = njit(cache=True)(_makespan_batch_loops)
        return _makespan_batch_numba(orders, dur)
    return _makespan_batch_numpy(orders, dur)
