"""Outer optimisation loop: threshold schedule, labelling, learning, resampling.

Each iteration labels the accumulated evaluated pool at the current
threshold, learns a discriminating theory, samples a new population
through it (uniform fallback when no theory could be learned), evaluates
the new instances and records per-iteration metrics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kb import BackgroundKB, Theory, format_theory
from .learner import LabelledData, LearnerConfig, induce
from .sampling import InstanceEnumerator, SamplerConfig, SampleResult, sample

INFINITE_GAIN = "inf"


@dataclass(frozen=True)
class ThresholdSchedule:
    thetas: tuple
    theta_star: float

    def __post_init__(self):
        ts = self.thetas
        if any(a <= b for a, b in zip(ts, ts[1:])):
            raise ValueError("thresholds must be strictly decreasing")
        if not ts or not (ts[0] >= self.theta_star >= ts[-1]):
            raise ValueError("theta_star must lie within the schedule bounds")


@dataclass
class Domain:
    """Everything the loop needs to know about an optimisation problem."""

    name: str
    kb: BackgroundKB
    enumerator: InstanceEnumerator
    objective: Callable
    baseline_probability: Callable  # theta -> exact/reference Pr(F <= theta)
    near_optimal_total: Callable  # theta_star -> (count, exact: bool)
    default_sampler_mode: str


@dataclass(frozen=True)
class EoisConfig:
    schedule: ThresholdSchedule
    learner: LearnerConfig = LearnerConfig()
    sampler: SamplerConfig = SamplerConfig()
    background: str = "high"
    reuse_history: bool = True
    seed: int = 0


@dataclass
class IterationRecord:
    k: int
    theta: float
    population_size: int
    e_pos: int
    e_neg: int
    training_size: int
    theory_size: int
    theory_text: str
    model_probability: float
    baseline_probability: float
    gain: Optional[float]
    gain_infinite: bool
    near_optimal_found: int
    near_optimal_total: int
    near_total_exact: bool
    objective_evaluations: int
    new_evaluations: int
    sampler_exhausted: bool
    uniform_fallback: bool
    ungeneralised: int
    clause_stats: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunRecord:
    domain: str
    config: dict
    seed: int
    iterations: list = field(default_factory=list)
    final_population: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({
            "type": "header",
            "domain": self.domain,
            "seed": self.seed,
            "config": self.config,
        }, sort_keys=True)]
        for it in self.iterations:
            d = {"type": "iteration"}
            d.update(it.to_dict())
            lines.append(json.dumps(d, sort_keys=True))
        lines.append(json.dumps({
            "type": "final_population",
            "instances": [list(x) for x in self.final_population],
        }, sort_keys=True))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "RunRecord":
        header = None
        iterations = []
        final = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.pop("type")
            if kind == "header":
                header = d
            elif kind == "iteration":
                d.pop("clause_stats", None)
                iterations.append(IterationRecord(clause_stats=[], **d))
            else:
                final = [tuple(x) for x in d["instances"]]
        rec = RunRecord(domain=header["domain"], config=header["config"],
                        seed=header["seed"])
        rec.iterations = iterations
        rec.final_population = final
        return rec


def label(pool: dict, theta: float) -> LabelledData:
    """Partition an evaluated pool (instance -> cost) at a threshold."""
    pos = [x for x, c in pool.items() if c <= theta]
    neg = [x for x, c in pool.items() if c > theta]
    return LabelledData(pos, neg)


def gain_ratio(record: RunRecord, k: int) -> Optional[float]:
    it = record.iterations[k]
    if it.gain_infinite:
        return math.inf
    return it.gain


def near_optimal_count(record: RunRecord, k: int):
    it = record.iterations[k]
    return it.near_optimal_found, it.near_optimal_total


def run_eois(cfg: EoisConfig, domain: Domain,
             config_snapshot: Optional[dict] = None) -> RunRecord:
    """Run the full schedule-driven loop and return the complete history.

    Iteration 0 is the uniform bootstrap population (no model); iterations
    k >= 1 run while theta_k >= theta_star.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    record = RunRecord(domain=domain.name, seed=cfg.seed,
                       config=config_snapshot or {})

    pool: dict = {}  # instance -> cost, insertion order = evaluation order
    eval_count = 0
    near_total, near_exact = domain.near_optimal_total(cfg.schedule.theta_star)
    near_found: dict = {}  # distinct near-optimal instances from iterations >= 1

    def evaluate(instances):
        nonlocal eval_count
        new = 0
        for x in instances:
            if x not in pool:
                pool[x] = domain.objective(x)
                eval_count += 1
                new += 1
        return new

    def record_iteration(k, theta, result: SampleResult, data, induction,
                         fallback, new_evals):
        population = result.instances
        hits = sum(1 for x in population if pool[x] <= theta)
        model_p = hits / len(population) if population else 0.0
        base_p = domain.baseline_probability(theta)
        if base_p > 0:
            gain, inf_flag = model_p / base_p, False
        else:
            gain, inf_flag = None, True
        if k >= 1:
            for x in population:
                if pool[x] <= cfg.schedule.theta_star:
                    near_found.setdefault(x, None)
        theory = induction.theory if induction else Theory()
        stats = []
        if induction:
            for ic in induction.clauses:
                s = ic.score
                stats.append({
                    "clause": str(ic.clause),
                    "pos": s.pos_covered,
                    "neg": s.neg_covered,
                    "precision": s.precision,
                    "compression": s.compression,
                    "nodes": ic.nodes_expanded,
                })
        record.iterations.append(IterationRecord(
            k=k,
            theta=theta,
            population_size=len(population),
            e_pos=len(data.positives) if data else 0,
            e_neg=len(data.negatives) if data else 0,
            training_size=len(data.positives) + len(data.negatives) if data else 0,
            theory_size=len(theory),
            theory_text=format_theory(theory),
            model_probability=model_p,
            baseline_probability=base_p,
            gain=gain,
            gain_infinite=inf_flag,
            near_optimal_found=len(near_found),
            near_optimal_total=near_total,
            near_total_exact=near_exact,
            objective_evaluations=eval_count,
            new_evaluations=new_evals,
            sampler_exhausted=result.exhausted,
            uniform_fallback=fallback,
            ungeneralised=len(induction.ungeneralised) if induction else 0,
            clause_stats=stats,
        ))

    # Bootstrap: uniform sample, no model.
    sampler_cfg = cfg.sampler
    p0 = sample(sampler_cfg, Theory(), domain.kb, domain.enumerator, rng)
    new = evaluate(p0.instances)
    record_iteration(0, cfg.schedule.thetas[0], p0, None, None, True, new)
    last = p0.instances

    for k, theta in enumerate(cfg.schedule.thetas, start=1):
        if theta < cfg.schedule.theta_star:
            break
        if cfg.reuse_history:
            data = label(pool, theta)
        else:
            data = label({x: pool[x] for x in last}, theta)
        induction = induce(data, domain.kb, cfg.learner)
        fallback = not induction.theory
        result = sample(sampler_cfg, induction.theory, domain.kb,
                        domain.enumerator, rng)
        if fallback:
            pass  # uniform sample already drawn by the empty-theory path
        new = evaluate(result.instances)
        record_iteration(k, theta, result, data, induction, fallback, new)
        last = result.instances

    record.final_population = list(last)
    return record
