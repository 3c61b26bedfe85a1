"""Clause learning: saturation, bounded best-first search, sequential covering.

A theory is grown by repeatedly picking the first uncovered positive as a
seed, building its bottom clause and searching ordered subsets of the
bottom-clause body for the acceptable clause (training precision at or
above ``minacc``) with the best compression.  Clause quality is always
measured against the full training data, not the residual positives.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from . import kb as kbm
from .kb import (
    BackgroundKB,
    Clause,
    GenerativityError,
    Literal,
    Theory,
    Var,
    check_generative,
    covers,
)


@dataclass(frozen=True)
class LearnerConfig:
    minacc: float = 0.7
    max_clause_literals: int = 4
    max_search_nodes: int = 5000
    bottom_clause_variable_depth: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.minacc <= 1.0):
            raise ValueError("minacc must be in (0, 1]")
        if self.max_clause_literals < 1 or self.max_search_nodes < 1:
            raise ValueError("bounds must be >= 1")


@dataclass
class LabelledData:
    """Positive / negative instances (tuples in a fixed, deterministic order)."""

    positives: list
    negatives: list

    def __post_init__(self):
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"{len(overlap)} instances labelled both ways")


@dataclass(frozen=True)
class ClauseScore:
    pos_covered: int
    neg_covered: int
    body_len: int

    @property
    def precision(self) -> float:
        total = self.pos_covered + self.neg_covered
        if total == 0:
            raise ZeroDivisionError("precision undefined with zero coverage")
        return self.pos_covered / total

    @property
    def compression(self) -> int:
        return self.pos_covered - self.neg_covered - self.body_len


@dataclass
class InducedClause:
    clause: Clause
    score: ClauseScore
    nodes_expanded: int


@dataclass
class InductionResult:
    theory: Theory
    clauses: list = field(default_factory=list)  # InducedClause, theory order
    ungeneralised: list = field(default_factory=list)  # seed instances
    nodes_expanded: int = 0


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------


def saturate(seed, kb: BackgroundKB, cfg: LearnerConfig) -> Clause:
    """Most-specific clause for one positive instance.

    Collects every true ground background atom of the seed and variabilises
    it: '+' arguments map to already-known variables carrying the same
    value (one literal per choice), '#' arguments stay constant, '-'
    arguments introduce a variable per distinct (sort, value), layered to
    the configured depth.  Sort-membership predicates are skipped; they are
    reattached when a searched clause is made generative.
    """
    binding = kb.binding_for(seed)
    ctx = kb.ctx_of(binding)

    by_value: dict = {}  # (sort name, value) -> [Var], deterministic order
    for v, s in zip(kb.head_vars, kb.attr_sorts):
        by_value.setdefault((s.name, binding[v]), []).append(v)

    fresh_count = 0
    body: list = []
    seen = set()

    for _depth in range(max(1, cfg.bottom_clause_variable_depth)):
        new_values: dict = {}
        for pred in kb.predicates.values():
            if pred.is_type or pred.name == kb.target_name:
                continue
            for tup in pred.tuples_fn(ctx):
                choices: list = [[]]
                tentative: dict = {}  # fresh vars held back until the tuple emits
                for val, sort, mode in zip(tup, pred.arg_sorts, pred.arg_modes):
                    if mode == "#":
                        choices = [c + [val] for c in choices]
                    elif mode == "+":
                        known = by_value.get((sort.name, val), [])
                        choices = [c + [v] for c in choices for v in known]
                        if not choices:
                            break
                    else:  # '-'
                        key = (sort.name, val)
                        if key in by_value:
                            var = by_value[key][0]
                        elif key in new_values:
                            var = new_values[key]
                        elif key in tentative:
                            var = tentative[key]
                        else:
                            var = Var(f"U{fresh_count + len(tentative)}")
                            tentative[key] = var
                        choices = [c + [var] for c in choices]
                if not choices:
                    continue
                fresh_count += len(tentative)
                new_values.update(tentative)
                for args in choices:
                    lit = Literal(pred, tuple(args))
                    if lit not in seen:
                        seen.add(lit)
                        body.append(lit)
        if not new_values:
            break
        for key, var in new_values.items():
            by_value.setdefault(key, []).append(var)

    return Clause(kb.head(), tuple(body))


# ---------------------------------------------------------------------------
# Clause search
# ---------------------------------------------------------------------------


class _MaskScorer:
    """Cached per-literal coverage bitmasks over one labelled dataset.

    Valid only for literals whose variables are all head variables; such a
    literal is decided per-instance, so clause coverage is a bitwise AND.
    """

    def __init__(self, data: LabelledData, kb: BackgroundKB):
        self.kb = kb
        self._cache: dict = {}
        self.pos = [(kb.binding_for(x), kb.ctx_of(kb.binding_for(x)))
                    for x in data.positives]
        self.neg = [(kb.binding_for(x), kb.ctx_of(kb.binding_for(x)))
                    for x in data.negatives]

    @staticmethod
    def _true(lit: Literal, binding, ctx) -> bool:
        vals = tuple(binding[a] if isinstance(a, Var) else a for a in lit.args)
        for tup in lit.pred.tuples_fn(ctx):
            if tuple(tup) == vals:
                return True
        return False

    def masks(self, lit: Literal):
        hit = self._cache.get(lit)
        if hit is not None:
            return hit
        pm = 0
        for i, (binding, ctx) in enumerate(self.pos):
            if self._true(lit, binding, ctx):
                pm |= 1 << i
        nm = 0
        for i, (binding, ctx) in enumerate(self.neg):
            if self._true(lit, binding, ctx):
                nm |= 1 << i
        self._cache[lit] = (pm, nm)
        return pm, nm


def _acceptable(p: int, n: int, cfg: LearnerConfig) -> bool:
    # Inclusive precision floor; tiny epsilon guards float boundary cases.
    return p >= 1 and p >= cfg.minacc * (p + n) - 1e-9


def search_clause(bottom: Clause, data: LabelledData, kb: BackgroundKB,
                  cfg: LearnerConfig, scorer: "_MaskScorer" = None):
    """Best-first search over ordered subsets of the bottom clause body.

    Returns (InducedClause | None, nodes expanded).  Only literals fully
    decided by the head binding are searchable (true in all current
    vocabularies); clause coverage then reduces to bitwise conjunction of
    per-literal masks.
    """
    if scorer is None:
        scorer = _MaskScorer(data, kb)
    head_vars = set(bottom.head.variables())
    searchable = []
    for lit in bottom.body:
        if all(v in head_vars for v in lit.variables()):
            searchable.append(lit)

    pos, neg = data.positives, data.negatives
    all_pos = (1 << len(pos)) - 1
    all_neg = (1 << len(neg)) - 1

    lits: list = []
    masks_seen = set()
    for lit in searchable:
        pm, nm = scorer.masks(lit)
        if pm == 0:
            continue
        if pm == all_pos and nm == all_neg:
            continue  # no discrimination
        if (pm, nm) in masks_seen:
            continue
        masks_seen.add((pm, nm))
        lits.append((lit, pm, nm))

    best = None  # (compression, -body_len, order) max
    best_key = None
    expanded = 0

    # Node: (-compression, body_len, literal indices, pos mask, neg mask)
    heap = [(-(len(pos) - len(neg)), 0, (), all_pos, all_neg)]
    while heap and expanded < cfg.max_search_nodes:
        _, _, idxs, pm, nm = heapq.heappop(heap)
        expanded += 1
        lo = idxs[-1] + 1 if idxs else 0
        if len(idxs) >= cfg.max_clause_literals:
            continue
        for j in range(lo, len(lits)):
            _, lpm, lnm = lits[j]
            cpm = pm & lpm
            cnm = nm & lnm
            if cpm == 0:
                continue
            if cpm == pm and cnm == nm:
                continue  # literal adds nothing here
            p = cpm.bit_count()
            n = cnm.bit_count()
            child = idxs + (j,)
            if _acceptable(p, n, cfg):
                key = (p - n - len(child), -len(child), tuple(-i for i in child))
                if best_key is None or key > best_key:
                    best_key = key
                    best = (child, p, n)
            if n > 0 and len(child) < cfg.max_clause_literals:
                heapq.heappush(
                    heap, (-(p - n - len(child)), len(child), child, cpm, cnm)
                )

    if best is None:
        return None, expanded
    idxs, p, n = best
    body = tuple(lits[j][0] for j in idxs)
    clause = Clause(bottom.head, body)
    score = ClauseScore(pos_covered=p, neg_covered=n, body_len=len(body))
    return InducedClause(clause, score, expanded), expanded


def make_generative(clause: Clause, kb: BackgroundKB) -> Clause:
    """Reorder the body and add sort-membership literals so generation works.

    Head variables are bound piece-by-piece with membership literals, and
    each original literal is placed as soon as everything it needs is
    bound, so theory-driven enumeration prunes as early as possible.
    Membership literals are structural and do not count toward the clause
    length bound.
    """
    pending = list(clause.body)
    out: list = []
    bound: set = set()

    def ready(lit):
        for a, m in zip(lit.args, lit.pred.arg_modes):
            if isinstance(a, Var) and m == "+" and a not in bound:
                return False
        for attr in lit.pred.reads:
            if kb.head_vars[kb.attr_names.index(attr)] not in bound:
                return False
        return True

    def flush():
        moved = True
        while moved:
            moved = False
            for lit in list(pending):
                if ready(lit):
                    pending.remove(lit)
                    out.append(lit)
                    bound.update(lit.variables())
                    moved = True

    flush()
    for v, s in zip(kb.head_vars, kb.attr_sorts):
        if v in bound:
            continue
        out.append(kb.type_literal(v, s))
        bound.add(v)
        flush()
    if pending:
        # Literals with non-head variables at input positions: keep order.
        out.extend(pending)
    g = Clause(clause.head, tuple(out))
    check_generative(g, kb)
    return g


def score_clause(clause: Clause, data: LabelledData, kb: BackgroundKB) -> ClauseScore:
    """Re-score a clause with the generic coverage engine (oracle-grade path)."""
    p = sum(1 for x in data.positives if covers(clause, kb.binding_for(x), kb))
    n = sum(1 for x in data.negatives if covers(clause, kb.binding_for(x), kb))
    body_len = sum(1 for lit in clause.body if not lit.pred.is_type)
    return ClauseScore(p, n, body_len)


# ---------------------------------------------------------------------------
# Sequential covering
# ---------------------------------------------------------------------------


def induce(data: LabelledData, kb: BackgroundKB, cfg: LearnerConfig) -> InductionResult:
    """Sequential covering over the positives; empty E+ gives the empty theory."""
    result = InductionResult(theory=Theory())
    if not data.positives:
        return result

    scorer = _MaskScorer(data, kb)
    uncovered = list(data.positives)
    clauses: list = []

    while uncovered:
        seed = uncovered[0]
        bottom = saturate(seed, kb, cfg)
        found, expanded = search_clause(bottom, data, kb, cfg, scorer)
        result.nodes_expanded += expanded
        if found is None:
            result.ungeneralised.append(seed)
            uncovered.pop(0)
            continue
        gen = make_generative(found.clause, kb)
        induced = InducedClause(gen, found.score, found.nodes_expanded)
        clauses.append(gen)
        result.clauses.append(induced)
        # Coverage of the emitted clause over the positives, via the cached
        # masks (type literals are tautologies on instances).
        pm = (1 << len(data.positives)) - 1
        for lit in gen.body:
            if not lit.pred.is_type:
                pm &= scorer.masks(lit)[0]
        pos_index = {x: i for i, x in enumerate(data.positives)}
        still = [x for x in uncovered if not (pm >> pos_index[x]) & 1]
        if len(still) == len(uncovered):
            # Defensive: a clause that covers no remaining positive would loop.
            result.ungeneralised.append(seed)
            uncovered.pop(0)
            continue
        uncovered = still

    result.theory = Theory(tuple(clauses))
    return result
