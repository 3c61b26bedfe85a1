"""King-and-rook versus king endgame domain.

Instances are legal, symmetry-canonical Black-to-move positions given as
coordinate 6-tuples (wk_file, wk_rank, wr_file, wr_rank, bk_file, bk_rank),
coordinates 1..8.  The cost of an instance is the minimax depth-of-win in
White moves (0 = Black is checkmated); positions Black can hold forever
(stalemate, safe rook capture, no forced mate) carry a draw sentinel cost
above every finite depth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .cache import cache_dir
from .eda import Domain
from .kb import BackgroundKB, Predicate, Sort
from .sampling import ENUMERATE, InstanceEnumerator

DRAW_COST = 100
TB_VERSION = "krk-v1"

FILE = Sort("file", tuple(range(1, 9)))
RANK = Sort("rank", tuple(range(1, 9)))
DIST = Sort("dist", tuple(range(0, 8)))

_SYMMETRY_MAPS = None


def _symmetry_maps() -> np.ndarray:
    """The 8 dihedral board symmetries as square permutation maps."""
    global _SYMMETRY_MAPS
    if _SYMMETRY_MAPS is None:
        sq = np.arange(64)
        f, r = sq // 8, sq % 8
        maps = []
        for swap in (False, True):
            for flip_f in (False, True):
                for flip_r in (False, True):
                    ff, rr = (r, f) if swap else (f, r)
                    if flip_f:
                        ff = 7 - ff
                    if flip_r:
                        rr = 7 - rr
                    maps.append(ff * 8 + rr)
        _SYMMETRY_MAPS = np.array(maps)
    return _SYMMETRY_MAPS


def square(file: int, rank: int) -> int:
    return (file - 1) * 8 + (rank - 1)


def instance_to_index(inst) -> int:
    wkf, wkr, wrf, wrr, bkf, bkr = inst
    return square(wkf, wkr) * 4096 + square(wrf, wrr) * 64 + square(bkf, bkr)


def index_to_instance(idx: int) -> tuple:
    wk, wr, bk = idx >> 12, (idx >> 6) & 63, idx & 63
    return (wk // 8 + 1, wk % 8 + 1, wr // 8 + 1, wr % 8 + 1,
            bk // 8 + 1, bk % 8 + 1)


def canonical_index(idx: int) -> int:
    """Smallest equivalent index = lexicographically smallest 6-tuple."""
    maps = _symmetry_maps()
    wk, wr, bk = idx >> 12, (idx >> 6) & 63, idx & 63
    return int(min(int(m[wk]) * 4096 + int(m[wr]) * 64 + int(m[bk]) for m in maps))


class KrkTablebase:
    """Solved depth-of-win table over every position, plus the canonical set."""

    def __init__(self, btm_val: np.ndarray, canonical: np.ndarray):
        self.btm_val = btm_val  # int16 per index: -2 illegal, -1 draw, d >= 0
        self.canonical_indices = canonical  # sorted int64 canonical position ids
        self._canonical_set = None

    @classmethod
    def build(cls) -> "KrkTablebase":
        tables = kernels.build_move_tables()
        btm_val, _ = kernels.solve_krk(tables)
        maps = _symmetry_maps()
        idx = np.arange(kernels.N_POS)
        wk, wr, bk = idx >> 12, (idx >> 6) & 63, idx & 63
        orbit_min = np.full(kernels.N_POS, np.iinfo(np.int64).max, dtype=np.int64)
        for m in maps:
            orbit_min = np.minimum(orbit_min, m[wk] * 4096 + m[wr] * 64 + m[bk])
        canonical = np.flatnonzero(tables["btm_legal"] & (orbit_min == idx))
        return cls(btm_val.astype(np.int16), canonical.astype(np.int64))

    @classmethod
    def load(cls, rebuild: bool = False) -> "KrkTablebase":
        path = cache_dir() / f"{TB_VERSION}.npz"
        if path.exists() and not rebuild:
            try:
                data = np.load(path, allow_pickle=False)
                if str(data["version"]) == TB_VERSION:
                    return cls(data["btm_val"], data["canonical"])
            except Exception:
                pass  # corrupt or stale cache: rebuild below
        tb = cls.build()
        np.savez_compressed(path, version=TB_VERSION, btm_val=tb.btm_val,
                            canonical=tb.canonical_indices)
        return tb

    def is_legal_index(self, idx: int) -> bool:
        return self.btm_val[idx] != kernels.ILLEGAL

    def is_canonical_index(self, idx: int) -> bool:
        if self._canonical_set is None:
            self._canonical_set = set(self.canonical_indices.tolist())
        return idx in self._canonical_set

    def depth(self, inst) -> int:
        """Raw table value: depth in White moves, or -1 for draw."""
        idx = instance_to_index(inst)
        v = int(self.btm_val[idx])
        if v == kernels.ILLEGAL:
            raise ValueError(f"illegal position {inst}")
        return v

    def cost(self, inst) -> int:
        v = self.depth(inst)
        return DRAW_COST if v < 0 else v

    def canonical_instances(self) -> list:
        return [index_to_instance(int(i)) for i in self.canonical_indices]

    def distribution(self) -> list:
        """(label, count, cumulative frequency) per cost class, draws last."""
        vals = self.btm_val[self.canonical_indices]
        total = len(vals)
        rows = []
        cum = 0
        for d in range(0, int(vals[vals >= 0].max()) + 1):
            c = int((vals == d).sum())
            cum += c
            rows.append((str(d), c, cum / total))
        c = int((vals < 0).sum())
        cum += c
        rows.append(("draw", c, cum / total))
        return rows

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["wk_file", "wk_rank", "wr_file", "wr_rank",
                        "bk_file", "bk_rank", "cost"])
            for i in self.canonical_indices:
                inst = index_to_instance(int(i))
                v = int(self.btm_val[i])
                w.writerow(list(inst) + ["draw" if v < 0 else v])


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def _cheb(f1, r1, f2, r2) -> int:
    return max(abs(f1 - f2), abs(r1 - r2))


def wk_bk_dist(c):
    return _cheb(c["wkf"], c["wkr"], c["bkf"], c["bkr"])


def wk_wr_dist(c):
    return _cheb(c["wkf"], c["wkr"], c["wrf"], c["wrr"])


def wr_bk_dist(c):
    return _cheb(c["wrf"], c["wrr"], c["bkf"], c["bkr"])


def wr_bk_file_dist(c):
    return abs(c["wrf"] - c["bkf"])


def wr_bk_rank_dist(c):
    return abs(c["wrr"] - c["bkr"])


def wk_wr_file_dist(c):
    return abs(c["wkf"] - c["wrf"])


def wk_wr_rank_dist(c):
    return abs(c["wkr"] - c["wrr"])


def wk_bk_file_dist(c):
    return abs(c["wkf"] - c["bkf"])


def wk_bk_rank_dist(c):
    return abs(c["wkr"] - c["bkr"])


def wr_bk_align_dist(c):
    """Distance of the rook from the black king's file/rank lines."""
    return min(wr_bk_file_dist(c), wr_bk_rank_dist(c))


def bk_edge_dist(c):
    f, r = c["bkf"], c["bkr"]
    return min(f - 1, 8 - f, r - 1, 8 - r)


def bk_corner_dist(c):
    f, r = c["bkf"], c["bkr"]
    return min(_cheb(f, r, cf, cr) for cf in (1, 8) for cr in (1, 8))


def wk_centre_dist(c):
    f, r = c["wkf"], c["wkr"]
    return min(_cheb(f, r, cf, cr) for cf in (4, 5) for cr in (4, 5))


def _between(af, ar, bf, br, cf, cr) -> bool:
    """b strictly between a and c on a straight board line."""
    cross = (bf - af) * (cr - ar) - (br - ar) * (cf - af)
    if cross != 0:
        return False
    dot = (af - bf) * (cf - bf) + (ar - br) * (cr - br)
    return dot < 0


def wr_between_kings(c):
    return _between(c["wkf"], c["wkr"], c["wrf"], c["wrr"], c["bkf"], c["bkr"])


def wk_between_wr_bk(c):
    return _between(c["wrf"], c["wrr"], c["wkf"], c["wkr"], c["bkf"], c["bkr"])


def bk_between_wk_wr(c):
    return _between(c["wkf"], c["wkr"], c["bkf"], c["bkr"], c["wrf"], c["wrr"])


def kings_in_opposition(c):
    df = abs(c["wkf"] - c["bkf"])
    dr = abs(c["wkr"] - c["bkr"])
    return (df == 0 and dr == 2) or (dr == 0 and df == 2)


def kings_almost_opposition(c):
    df = abs(c["wkf"] - c["bkf"])
    dr = abs(c["wkr"] - c["bkr"])
    return (df, dr) in ((1, 2), (2, 1))


def l_shaped_pattern(c):
    """Rook orthogonally adjacent to its king, kings in direct opposition."""
    rook_leg = (wk_wr_dist(c) == 1
                and (wk_wr_file_dist(c) == 0 or wk_wr_rank_dist(c) == 0))
    return rook_leg and kings_in_opposition(c)


def wk_wr_adjacent(c):
    return wk_wr_dist(c) == 1


def wk_bk_adjacent(c):
    return wk_bk_dist(c) == 1  # never true on legal positions


def wr_bk_adjacent(c):
    return wr_bk_dist(c) == 1


_ATTRS = ("wkf", "wkr", "wrf", "wrr", "bkf", "bkr")
_PIECE_ATTRS = {
    "wk": ("wkf", "wkr"),
    "wr": ("wrf", "wrr"),
    "bk": ("bkf", "bkr"),
}

_QUANTITIES = [
    # (name, fn, pieces read)
    ("wk_bk_dist", wk_bk_dist, ("wk", "bk")),
    ("wk_wr_dist", wk_wr_dist, ("wk", "wr")),
    ("wr_bk_dist", wr_bk_dist, ("wr", "bk")),
    ("wr_bk_file_dist", wr_bk_file_dist, ("wr", "bk")),
    ("wr_bk_rank_dist", wr_bk_rank_dist, ("wr", "bk")),
    ("wk_wr_file_dist", wk_wr_file_dist, ("wk", "wr")),
    ("wk_wr_rank_dist", wk_wr_rank_dist, ("wk", "wr")),
    ("wk_bk_file_dist", wk_bk_file_dist, ("wk", "bk")),
    ("wk_bk_rank_dist", wk_bk_rank_dist, ("wk", "bk")),
    ("wr_bk_align_dist", wr_bk_align_dist, ("wr", "bk")),
    ("bk_edge_dist", bk_edge_dist, ("bk",)),
    ("bk_corner_dist", bk_corner_dist, ("bk",)),
    ("wk_centre_dist", wk_centre_dist, ("wk",)),
]

_PATTERNS = [
    ("wk_wr_adjacent", wk_wr_adjacent, ("wk", "wr")),
    ("wk_bk_adjacent", wk_bk_adjacent, ("wk", "bk")),
    ("wr_bk_adjacent", wr_bk_adjacent, ("wr", "bk")),
    ("wr_between_kings", wr_between_kings, ("wk", "wr", "bk")),
    ("wk_between_wr_bk", wk_between_wr_bk, ("wk", "wr", "bk")),
    ("bk_between_wk_wr", bk_between_wk_wr, ("wk", "wr", "bk")),
    ("kings_in_opposition", kings_in_opposition, ("wk", "bk")),
    ("kings_almost_opposition", kings_almost_opposition, ("wk", "bk")),
    ("l_shaped_pattern", l_shaped_pattern, ("wk", "wr", "bk")),
]


def _reads(pieces) -> tuple:
    return tuple(a for p in pieces for a in _PIECE_ATTRS[p])


def _quantity_predicates(name, fn, pieces, grid=DIST):
    reads = _reads(pieces)
    return [
        Predicate(f"{name}_eq", (grid,), ("#",),
                  tuples_fn=lambda c, f=fn: [(f(c),)], reads=reads),
        Predicate(f"{name}_leq", (grid,), ("#",),
                  tuples_fn=lambda c, f=fn, g=grid: [(v,) for v in g.values if f(c) <= v],
                  reads=reads),
        Predicate(f"{name}_geq", (grid,), ("#",),
                  tuples_fn=lambda c, f=fn, g=grid: [(v,) for v in g.values if f(c) >= v],
                  reads=reads),
    ]


def _attr_schema():
    return [(a, FILE if a.endswith("f") else RANK) for a in _ATTRS]


def background_high() -> BackgroundKB:
    """Piece-geometry background: distances, patterns, edge/corner/centre."""
    preds = []
    for name, fn, pieces in _QUANTITIES:
        preds.extend(_quantity_predicates(name, fn, pieces))
    for name, fn, pieces in _PATTERNS:
        preds.append(Predicate(name, (), (),
                               tuples_fn=lambda c, f=fn: [()] if f(c) else [],
                               reads=_reads(pieces)))
    return BackgroundKB("krk-high", _attr_schema(), preds)


def background_low() -> BackgroundKB:
    """Board geometry only: coordinate order and adjacency, typed per axis."""
    preds = []
    for sort in (FILE, RANK):
        lt = [(a, b) for a in sort.values for b in sort.values if a < b]
        adj = [(a, b) for a in sort.values for b in sort.values if abs(a - b) == 1]
        preds.append(Predicate(f"{sort.name}_less_than", (sort, sort), ("+", "+"),
                               tuples_fn=lambda c, t=lt: t))
        preds.append(Predicate(f"{sort.name}_adjacent", (sort, sort), ("+", "+"),
                               tuples_fn=lambda c, t=adj: t))
    return BackgroundKB("krk-low", _attr_schema(), preds)


def make_kb(background: str) -> BackgroundKB:
    if background == "high":
        return background_high()
    if background == "low":
        return background_low()
    raise ValueError(f"unknown chess background {background!r}")


# ---------------------------------------------------------------------------
# Domain bundle
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _shared_tablebase() -> KrkTablebase:
    return KrkTablebase.load()


def make_domain(background: str = "high", tablebase: KrkTablebase = None) -> Domain:
    tb = tablebase if tablebase is not None else _shared_tablebase()
    instances = tb.canonical_instances()
    vals = tb.btm_val[tb.canonical_indices]
    total = len(instances)

    def from_grounding(g):
        try:
            idx = instance_to_index(g)
        except Exception:
            return None
        if not tb.is_legal_index(idx) or not tb.is_canonical_index(idx):
            return None
        return tuple(int(v) for v in g)

    def baseline_probability(theta):
        return float(((vals >= 0) & (vals <= theta)).sum()) / total

    def near_optimal_total(theta_star):
        return int(((vals >= 0) & (vals <= theta_star)).sum()), True

    enum = InstanceEnumerator(
        random_instance=lambda rng: instances[int(rng.integers(total))],
        all_instances=instances,
        from_grounding=from_grounding,
        space_size=total,
    )
    return Domain(
        name=f"chess-{background}",
        kb=make_kb(background),
        enumerator=enum,
        objective=tb.cost,
        baseline_probability=baseline_probability,
        near_optimal_total=near_optimal_total,
        default_sampler_mode=ENUMERATE,
    )
