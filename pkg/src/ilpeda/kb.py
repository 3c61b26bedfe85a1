"""Relational core: sorts, predicates, literals, clauses, theories.

A clause body is evaluated strictly left-to-right with chronological
backtracking.  Background predicates are evaluated against an *instance
context* (the attribute values carried by the clause head variables) plus
their own argument bindings, so the same machinery serves coverage
checking, theory-driven generation and bottom-clause construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping

Constant = Any  # ints or lowercase string tokens


class KBError(Exception):
    pass


class ModeViolation(KBError):
    """An input-moded argument (or required attribute) was unbound."""


class GenerativityError(KBError):
    """A head variable is never bound by the body in evaluation order."""


@dataclass(frozen=True)
class Sort:
    """A finite ordered set of constants."""

    name: str
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise KBError(f"sort {self.name} is empty")

    def __contains__(self, v) -> bool:
        return v in self.values


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Predicate:
    """A background predicate with an evaluator.

    ``tuples_fn(ctx)`` returns every ground argument tuple for which the
    predicate holds, given the instance attribute map ``ctx``.  It must be
    pure and deterministic.  ``reads`` lists the attribute names the
    evaluator consults; those attributes must be bound before the literal
    can be evaluated.  ``is_type`` marks sort-membership predicates used
    only to impose range restrictions.
    """

    name: str
    arg_sorts: tuple
    arg_modes: tuple  # '+', '-' or '#' per argument
    tuples_fn: Callable[[Mapping[str, Any]], Iterable[tuple]] = None
    reads: tuple = ()
    is_type: bool = False

    def __post_init__(self):
        if len(self.arg_sorts) != len(self.arg_modes):
            raise KBError(f"{self.name}: arity mismatch between sorts and modes")
        for m in self.arg_modes:
            if m not in ("+", "-", "#"):
                raise KBError(f"{self.name}: bad mode {m!r}")

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class Literal:
    pred: Predicate
    args: tuple

    def __post_init__(self):
        if len(self.args) != self.pred.arity:
            raise KBError(f"{self.pred.name}: expected {self.pred.arity} args")
        for a, s in zip(self.args, self.pred.arg_sorts):
            if not isinstance(a, Var) and a not in s:
                raise KBError(f"{self.pred.name}: constant {a!r} not in sort {s.name}")

    def variables(self):
        return [a for a in self.args if isinstance(a, Var)]

    def __str__(self):
        if not self.args:
            return self.pred.name
        return f"{self.pred.name}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Clause:
    head: Literal
    body: tuple

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(l) for l in self.body)}."


@dataclass(frozen=True)
class Theory:
    clauses: tuple = ()

    def __post_init__(self):
        heads = {c.head.pred.name for c in self.clauses}
        if len(heads) > 1:
            raise KBError(f"theory mixes head predicates: {sorted(heads)}")

    def __len__(self):
        return len(self.clauses)

    def __bool__(self):
        return bool(self.clauses)


def _var_name(i: int) -> str:
    # A..Z, then V26, V27, ...
    return chr(ord("A") + i) if i < 26 else f"V{i}"


class BackgroundKB:
    """Background predicates plus the target-predicate head schema.

    ``attrs`` maps instance attribute names (in instance-tuple order) to
    their sorts; head variable i carries attribute i.
    """

    def __init__(self, name: str, attrs, predicates, target_name: str = "good"):
        self.name = name
        self.attr_names = tuple(a for a, _ in attrs)
        self.attr_sorts = tuple(s for _, s in attrs)
        self.target_name = target_name
        self.head_vars = tuple(Var(_var_name(i)) for i in range(len(attrs)))
        self.var_attr = dict(zip(self.head_vars, self.attr_names))

        self.sorts = {}
        for s in self.attr_sorts:
            self.sorts[s.name] = s
        for p in predicates:
            for s in p.arg_sorts:
                self.sorts.setdefault(s.name, s)

        self.predicates = {}
        # One membership predicate per sort, for range restriction.
        for s in self.sorts.values():
            self.predicates[s.name] = _sort_predicate(s)
        for p in predicates:
            if p.name in self.predicates:
                raise KBError(f"duplicate predicate name {p.name}")
            self.predicates[p.name] = p

        self.target = Predicate(
            name=target_name,
            arg_sorts=self.attr_sorts,
            arg_modes=tuple("+" for _ in attrs),
        )

    def head(self) -> Literal:
        return Literal(self.target, self.head_vars)

    def binding_for(self, instance) -> dict:
        """Bind every head variable to the instance's attribute values."""
        if len(instance) != len(self.head_vars):
            raise KBError("instance arity does not match head")
        return dict(zip(self.head_vars, instance))

    def ctx_of(self, binding: Mapping) -> dict:
        return {
            self.var_attr[v]: binding[v] for v in self.head_vars if v in binding
        }

    def type_literal(self, var: Var, sort: Sort) -> Literal:
        return Literal(self.predicates[sort.name], (var,))


def _sort_predicate(sort: Sort) -> Predicate:
    vals = [(v,) for v in sort.values]
    return Predicate(
        name=sort.name,
        arg_sorts=(sort,),
        arg_modes=("-",),
        tuples_fn=lambda ctx, _vals=vals: _vals,
        is_type=True,
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate_literal(lit: Literal, binding: Mapping, kb: BackgroundKB) -> Iterator[dict]:
    """All extensions of ``binding`` under which ``lit`` is true.

    Input-moded arguments and every attribute the predicate reads must be
    bound; otherwise :class:`ModeViolation` is raised.
    """
    pred = lit.pred
    vals = []
    for a, m in zip(lit.args, pred.arg_modes):
        if isinstance(a, Var):
            v = binding.get(a)
            if v is None and m == "+":
                raise ModeViolation(f"{lit}: input variable {a} unbound")
            vals.append(v)
        else:
            vals.append(a)
    for attr in pred.reads:
        i = kb.attr_names.index(attr)
        if binding.get(kb.head_vars[i]) is None:
            raise ModeViolation(f"{lit}: required attribute {attr} unbound")
    ctx = kb.ctx_of(binding)
    for tup in pred.tuples_fn(ctx):
        ext = None
        ok = True
        local: dict = {}
        for a, bound_v, tup_v in zip(lit.args, vals, tup):
            if bound_v is not None:
                if bound_v != tup_v:
                    ok = False
                    break
            else:
                if a in local and local[a] != tup_v:
                    ok = False
                    break
                local[a] = tup_v
        if ok:
            if local:
                ext = dict(binding)
                ext.update(local)
                yield ext
            else:
                yield binding  # no new bindings; callers never mutate


def _solve_body(body, binding, kb) -> Iterator[dict]:
    if not body:
        yield binding
        return
    first, rest = body[0], body[1:]
    for ext in evaluate_literal(first, binding, kb):
        yield from _solve_body(rest, ext, kb)


_DECIDED_CACHE: dict = {}


def _decided_by_head(clause: Clause, kb: BackgroundKB) -> bool:
    # A body whose variables are all head variables has no search space:
    # each literal is simply true or false under the head binding.
    entry = _DECIDED_CACHE.get(id(clause))
    if entry is not None and entry[0] is clause:
        return entry[1]
    head_vars = set(clause.head.variables())
    hit = all(
        all(v in head_vars for v in lit.variables()) for lit in clause.body
    )
    if len(_DECIDED_CACHE) > 100_000:
        _DECIDED_CACHE.clear()
    _DECIDED_CACHE[id(clause)] = (clause, hit)  # strong ref keeps id stable
    return hit


def covers(clause: Clause, instance_binding: Mapping, kb: BackgroundKB) -> bool:
    """True iff the body has at least one solution under the head binding."""
    if _decided_by_head(clause, kb):
        ctx = kb.ctx_of(instance_binding)
        for lit in clause.body:
            vals = tuple(
                instance_binding[a] if isinstance(a, Var) else a for a in lit.args
            )
            if vals not in lit.pred.tuples_fn(ctx):
                return False
        return True
    for _ in _solve_body(clause.body, dict(instance_binding), kb):
        return True
    return False


def entails(theory: Theory, instance_binding: Mapping, kb: BackgroundKB) -> bool:
    """Disjunction over clauses; the empty theory entails nothing."""
    return any(covers(c, instance_binding, kb) for c in theory.clauses)


def check_generative(clause: Clause, kb: BackgroundKB) -> None:
    """Verify the body binds every head variable in evaluation order.

    Walks the body left-to-right, tracking which variables are bound: a
    literal is schedulable when its input-moded arguments and required
    attributes are bound, after which all its variables are bound.
    Raises :class:`GenerativityError` otherwise.
    """
    bound = set()
    for lit in clause.body:
        for a, m in zip(lit.args, lit.pred.arg_modes):
            if isinstance(a, Var) and m == "+" and a not in bound:
                raise GenerativityError(
                    f"{clause}: input variable {a} of {lit} unbound at evaluation"
                )
        for attr in lit.pred.reads:
            v = kb.head_vars[kb.attr_names.index(attr)]
            if v not in bound:
                raise GenerativityError(
                    f"{clause}: attribute {attr} read by {lit} unbound at evaluation"
                )
        bound.update(lit.variables())
    unbound = [v for v in clause.head.variables() if v not in bound]
    if unbound:
        raise GenerativityError(
            f"{clause}: head variables never bound: {', '.join(map(str, unbound))}"
        )


def ground_solutions(clause: Clause, kb: BackgroundKB, limit=None) -> Iterator[tuple]:
    """Distinct head groundings with a satisfiable body, in evaluation order."""
    check_generative(clause, kb)
    seen = set()
    head_args = clause.head.args
    for sol in _solve_body(clause.body, {}, kb):
        g = tuple(sol[a] if isinstance(a, Var) else a for a in head_args)
        if g in seen:
            continue
        seen.add(g)
        yield g
        if limit is not None and len(seen) >= limit:
            return


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|-?\d+|[(),.]|:-)")


def format_clause(clause: Clause) -> str:
    return str(clause)


def format_theory(theory: Theory) -> str:
    return "\n".join(format_clause(c) for c in theory.clauses)


def _tokenize(text: str):
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise KBError(f"cannot tokenize near {text[pos:pos + 20]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    return out


def _parse_literal(tokens, i, kb, varmap):
    name = tokens[i]
    i += 1
    args = []
    if i < len(tokens) and tokens[i] == "(":
        i += 1
        while True:
            t = tokens[i]
            if re.fullmatch(r"-?\d+", t):
                args.append(int(t))
            elif t[0].isupper():
                args.append(varmap.setdefault(t, Var(t)))
            else:
                args.append(t)
            i += 1
            if tokens[i] == ",":
                i += 1
                continue
            if tokens[i] == ")":
                i += 1
                break
    if name == kb.target_name:
        pred = kb.target
    elif name in kb.predicates:
        pred = kb.predicates[name]
    else:
        raise KBError(f"unknown predicate {name!r}")
    return Literal(pred, tuple(args)), i


def parse_clause(text: str, kb: BackgroundKB) -> Clause:
    tokens = _tokenize(text)
    varmap: dict = {}
    head, i = _parse_literal(tokens, 0, kb, varmap)
    body = []
    if i < len(tokens) and tokens[i] == ":-":
        i += 1
        while True:
            lit, i = _parse_literal(tokens, i, kb, varmap)
            body.append(lit)
            if i < len(tokens) and tokens[i] == ",":
                i += 1
                continue
            break
    if i < len(tokens) and tokens[i] == ".":
        i += 1
    if i != len(tokens):
        raise KBError(f"trailing tokens in clause: {tokens[i:]}")
    return Clause(head, tuple(body))


def parse_theory(text: str, kb: BackgroundKB) -> Theory:
    clauses = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        clauses.append(parse_clause(line, kb))
    return Theory(tuple(clauses))
