"""Model-guided sampling: success-set enumeration and rejection sampling.

With an empty theory the sampler falls back to uniform selection from the
instance space.  With a non-empty theory it either walks the theory's
success set (generative clauses) or filters uniform draws by entailment,
accepting each candidate with probability ``delta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .kb import BackgroundKB, Theory, entails, ground_solutions

ENUMERATE = "enumerate-success-set"
REJECTION = "rejection"


@dataclass(frozen=True)
class SamplerConfig:
    n: int = 1000
    delta: float = 1.0
    mode: str = ENUMERATE
    max_rejection_attempts: int = 200_000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must be in (0, 1]")
        if self.mode not in (ENUMERATE, REJECTION):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.max_rejection_attempts < self.n:
            raise ValueError("max_rejection_attempts must be >= n")


@dataclass
class InstanceEnumerator:
    """Domain access for the sampler.

    ``all_instances`` enables uniform sampling without replacement and
    exhaustive scans; domains too large to enumerate supply only
    ``random_instance``.  ``from_grounding`` maps a clause-head grounding
    to a canonical member of the instance space (None when the grounding
    is not one).
    """

    random_instance: Callable
    all_instances: Optional[Sequence] = None
    from_grounding: Optional[Callable] = None
    space_size: Optional[int] = None


@dataclass
class SampleResult:
    instances: list
    exhausted: bool = False


def _uniform(cfg: SamplerConfig, enum: InstanceEnumerator, rng) -> SampleResult:
    if enum.all_instances is not None:
        pool = enum.all_instances
        k = min(cfg.n, len(pool))
        picks = rng.choice(len(pool), size=k, replace=False)
        return SampleResult([pool[i] for i in picks])
    seen: dict = {}
    attempts = 0
    while len(seen) < cfg.n and attempts < cfg.max_rejection_attempts:
        x = enum.random_instance(rng)
        seen.setdefault(x, None)
        attempts += 1
    return SampleResult(list(seen), exhausted=len(seen) < cfg.n)


def sample(cfg: SamplerConfig, theory: Theory, kb: BackgroundKB,
           enum: InstanceEnumerator, rng=None) -> SampleResult:
    """Up to ``cfg.n`` distinct instances entailed by the theory.

    Empty theory: uniform selection without replacement.  Returned
    instances are pairwise distinct; rejection mode sets ``exhausted``
    when the attempt budget ran out before ``n`` acceptances.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if not theory:
        return _uniform(cfg, enum, rng)

    if cfg.mode == ENUMERATE:
        if enum.from_grounding is None:
            raise ValueError("enumerate mode needs a grounding-to-instance map")
        seen: dict = {}
        accepted: dict = {}
        for clause in theory.clauses:
            for g in ground_solutions(clause, kb):
                inst = enum.from_grounding(g)
                if inst is None or inst in seen:
                    continue
                seen[inst] = None
                if cfg.delta >= 1.0 or rng.random() < cfg.delta:
                    accepted[inst] = None
                    if len(accepted) >= cfg.n:
                        return SampleResult(list(accepted))
        return SampleResult(list(accepted))

    accepted = {}
    attempts = 0
    while len(accepted) < cfg.n and attempts < cfg.max_rejection_attempts:
        attempts += 1
        x = enum.random_instance(rng)
        if x in accepted:
            continue
        if not entails(theory, kb.binding_for(x), kb):
            continue
        if cfg.delta >= 1.0 or rng.random() < cfg.delta:
            accepted[x] = None
    return SampleResult(list(accepted), exhausted=len(accepted) < cfg.n)


def estimate_success_probability(instances, theta, objective) -> float:
    """Fraction of the sample at or below the cost threshold."""
    if not instances:
        raise ValueError("success probability undefined for an empty sample")
    hits = sum(1 for x in instances if objective(x) <= theta)
    return hits / len(instances)
