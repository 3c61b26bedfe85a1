"""Experiment harness: config loading, runs, reports, artifact export.

Subcommands
-----------
tablebase    build/cache the KRK endgame table and write its cost distribution
run          execute a configured optimisation run and write records + reports
compare      side-by-side table for two persisted runs
export-pool  regenerate the job-shop reference matrix and schedule pool

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import chess, jobshop
from .eda import EoisConfig, RunRecord, ThresholdSchedule, run_eois
from .learner import LearnerConfig
from .sampling import ENUMERATE, REJECTION, SamplerConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def default_config(domain: str = "chess") -> dict:
    """Per-domain defaults: n=1000, delta=1.0, minacc=0.7; chess searches
    4 body literals / 5000 nodes, job-shop 10 / 10000."""
    base = {
        "schema_version": SCHEMA_VERSION,
        "domain": domain,
        "sampler": {"n": 1000, "delta": 1.0, "max_rejection_attempts": 200_000},
        "learner": {"minacc": 0.7},
        "seeds": [0],
    }
    if domain == "chess":
        base["background"] = "high"
        base["schedule"] = {"thetas": [8, 4, 0], "theta_star": 0}
        base["learner"].update({"max_clause_literals": 4, "max_search_nodes": 5000})
        base["sampler"]["mode"] = ENUMERATE
    elif domain == "jobshop":
        base["schedule"] = {"thetas": [1000, 750, 600], "theta_star": 600}
        base["learner"].update({"max_clause_literals": 10, "max_search_nodes": 10000})
        base["sampler"]["mode"] = REJECTION
    else:
        raise ConfigError(f"domain: unknown value {domain!r}")
    return base


def validate_config(cfg: dict) -> list:
    """All validation problems, as 'field: message' strings."""
    problems = []
    if cfg.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version: expected {SCHEMA_VERSION}")
    domain = cfg.get("domain")
    if domain not in ("chess", "jobshop"):
        problems.append(f"domain: must be chess or jobshop, got {domain!r}")
    if domain == "chess" and cfg.get("background") not in ("high", "low"):
        problems.append("background: chess runs need high or low")
    if domain == "jobshop" and "background" in cfg:
        problems.append("background: only meaningful for chess")
    sched = cfg.get("schedule", {})
    try:
        ThresholdSchedule(tuple(sched["thetas"]), sched["theta_star"])
    except (KeyError, TypeError, ValueError) as e:
        problems.append(f"schedule: {e}")
    ln = cfg.get("learner", {})
    try:
        LearnerConfig(**{k: ln[k] for k in
                         ("minacc", "max_clause_literals", "max_search_nodes")
                         if k in ln})
    except (TypeError, ValueError) as e:
        problems.append(f"learner: {e}")
    if not 0 < ln.get("minacc", 0.7) <= 1:
        problems.append("learner.minacc: must be in (0, 1]")
    sm = cfg.get("sampler", {})
    if sm.get("mode") not in (ENUMERATE, REJECTION):
        problems.append(f"sampler.mode: must be {ENUMERATE} or {REJECTION}")
    if sm.get("n", 1000) < 1:
        problems.append("sampler.n: must be positive")
    if not 0 < sm.get("delta", 1.0) <= 1:
        problems.append("sampler.delta: must be in (0, 1]")
    seeds = cfg.get("seeds", [])
    if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        problems.append("seeds: need a non-empty list of non-negative integers")
    return problems


def load_config(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def save_config(cfg: dict, path: str) -> None:
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")


def _build(cfg: dict, seed: int):
    if cfg["domain"] == "chess":
        domain = chess.make_domain(cfg["background"])
    else:
        domain = jobshop.make_domain()
    ln = cfg["learner"]
    sm = cfg["sampler"]
    eois = EoisConfig(
        schedule=ThresholdSchedule(tuple(cfg["schedule"]["thetas"]),
                                   cfg["schedule"]["theta_star"]),
        learner=LearnerConfig(minacc=ln["minacc"],
                              max_clause_literals=ln["max_clause_literals"],
                              max_search_nodes=ln["max_search_nodes"],
                              rng_seed=seed),
        sampler=SamplerConfig(n=sm["n"], delta=sm["delta"], mode=sm["mode"],
                              max_rejection_attempts=sm.get(
                                  "max_rejection_attempts", 200_000)),
        background=cfg.get("background", cfg["domain"]),
        seed=seed,
    )
    return domain, eois


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

_RUN_COLUMNS = (
    ("k", "{:d}"),
    ("theta", "{:g}"),
    ("baseline_p", "{:.6f}"),
    ("model_p", "{:.6f}"),
    ("gain", "{}"),
    ("near_found", "{:d}"),
    ("near_total", "{:d}"),
    ("training", "{:d}"),
    ("theory", "{:d}"),
    ("evaluations", "{:d}"),
)


def _gain_cell(it) -> str:
    return "inf" if it.gain_infinite else f"{it.gain:.3f}"


def run_table_rows(record: RunRecord) -> list:
    rows = []
    for it in record.iterations:
        rows.append([it.k, it.theta, f"{it.baseline_probability:.6f}",
                     f"{it.model_probability:.6f}", _gain_cell(it),
                     it.near_optimal_found, it.near_optimal_total,
                     it.training_size, it.theory_size,
                     it.objective_evaluations])
    return rows


def format_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    out = []
    for row in cells:
        out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(out) + "\n"


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def theory_report(record: RunRecord) -> str:
    out = []
    for it in record.iterations:
        if it.k == 0:
            continue
        out.append(f"# iteration {it.k} (theta={it.theta:g})")
        for cs in it.clause_stats:
            out.append(f"{cs['clause']}")
            out.append(f"  pos={cs['pos']} neg={cs['neg']} "
                       f"precision={cs['precision']:.4f} "
                       f"compression={cs['compression']} nodes={cs['nodes']}")
        if not it.clause_stats:
            out.append(it.theory_text.rstrip() or "(empty theory)")
        out.append("")
    return "\n".join(out)


def compare_table(rec_a: RunRecord, rec_b: RunRecord):
    if rec_a.domain != rec_b.domain:
        raise ConfigError(f"domain mismatch: {rec_a.domain} vs {rec_b.domain}")
    ks_a = [it.k for it in rec_a.iterations]
    ks_b = [it.k for it in rec_b.iterations]
    thetas_a = [it.theta for it in rec_a.iterations]
    thetas_b = [it.theta for it in rec_b.iterations]
    if ks_a != ks_b or thetas_a != thetas_b:
        raise ConfigError("schedule mismatch between the two runs")
    header = ["k", "theta", "model_p_a", "model_p_b", "precision_ratio",
              "near_a", "near_b", "recall_ratio"]
    rows = []
    for a, b in zip(rec_a.iterations, rec_b.iterations):
        pr = a.model_probability / b.model_probability if b.model_probability else "inf"
        rr = (a.near_optimal_found / b.near_optimal_found
              if b.near_optimal_found else "inf")
        rows.append([a.k, a.theta,
                     f"{a.model_probability:.6f}", f"{b.model_probability:.6f}",
                     pr if isinstance(pr, str) else f"{pr:.3f}",
                     a.near_optimal_found, b.near_optimal_found,
                     rr if isinstance(rr, str) else f"{rr:.3f}"])
    return header, rows


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_tablebase(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    tb = chess.KrkTablebase.load()
    rows = tb.distribution()
    total = sum(r[1] for r in rows)
    cum = 0
    table = []
    for label, count, _ in rows:
        cum += count
        table.append([label, count, f"{cum / total:.3f}"])
    text = format_table(["cost", "count", "cumulative"], table)
    text += f"total instances: {total}\n"
    with open(os.path.join(args.out, "krk_distribution.txt"), "w") as f:
        f.write(text)
    write_csv(os.path.join(args.out, "krk_distribution.csv"),
              ["cost", "count", "cumulative"], table)
    tb.export_csv(os.path.join(args.out, "krk_costs.csv"))
    sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else default_config(args.domain)
    if args.seed is not None:
        cfg["seeds"] = [args.seed]
    problems = validate_config(cfg)
    if problems:
        for p in problems:
            print(f"config error - {p}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    save_config(cfg, os.path.join(args.out, "config.json"))
    timings = []
    for seed in cfg["seeds"]:
        domain, eois = _build(cfg, seed)
        snapshot = dict(cfg)
        snapshot["seeds"] = [seed]
        t0 = time.perf_counter()
        record = run_eois(eois, domain, config_snapshot=snapshot)
        elapsed = time.perf_counter() - t0
        timings.append((seed, elapsed))
        tag = f"seed{seed}"
        with open(os.path.join(args.out, f"record-{tag}.jsonl"), "w") as f:
            f.write(record.to_jsonl())
        header = [c for c, _ in _RUN_COLUMNS]
        rows = run_table_rows(record)
        report = (f"domain: {record.domain}  seed: {seed}\n"
                  + format_table(header, rows))
        with open(os.path.join(args.out, f"report-{tag}.txt"), "w") as f:
            f.write(report)
        write_csv(os.path.join(args.out, f"report-{tag}.csv"), header, rows)
        with open(os.path.join(args.out, f"theories-{tag}.txt"), "w") as f:
            f.write(theory_report(record))
        sys.stdout.write(report)
    # Wall-clock lives apart from the records so that reruns with the same
    # seed stay byte-identical everywhere else.
    with open(os.path.join(args.out, "timings.txt"), "w") as f:
        for seed, elapsed in timings:
            f.write(f"seed {seed}: run {elapsed:.2f}s\n")
    return 0


def cmd_compare(args) -> int:
    with open(args.run_a) as f:
        rec_a = RunRecord.from_jsonl(f.read())
    with open(args.run_b) as f:
        rec_b = RunRecord.from_jsonl(f.read())
    header, rows = compare_table(rec_a, rec_b)
    text = format_table(header, rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "compare.txt"), "w") as f:
            f.write(text)
        write_csv(os.path.join(args.out, "compare.csv"), header, rows)
    sys.stdout.write(text)
    return 0


def cmd_export_pool(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    seed = args.seed if args.seed is not None else jobshop.MATRIX_SEED
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dur = jobshop.random_matrix(rng)
    jobshop.save_matrix_csv(dur, os.path.join(args.out, "jobshop_matrix.csv"))
    jobshop.export_pool_csv(os.path.join(args.out, "jobshop_pool.csv"), dur)
    print(f"matrix seed {seed}; pool of {jobshop.POOL_SIZE} schedules written "
          f"to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ilpeda",
        description="Rule-guided estimation-of-distribution optimisation",
    )
    sub = p.add_subparsers(dest="command", required=True)

    tb = sub.add_parser("tablebase", help="build the KRK table, write its "
                                          "cost distribution and full CSV")
    tb.add_argument("--out", default="out")
    tb.set_defaults(fn=cmd_tablebase)

    run = sub.add_parser("run", help="execute a configured optimisation run")
    run.add_argument("--config", help="JSON config path (defaults per domain)")
    run.add_argument("--domain", default="chess", choices=["chess", "jobshop"],
                     help="domain for the default config when --config is absent")
    run.add_argument("--seed", type=int, help="override the config's seed list")
    run.add_argument("--out", default="out")
    run.add_argument("--threads", type=int, default=1,
                     help="worker cap for batch evaluation")
    run.set_defaults(fn=cmd_run)

    cmp_ = sub.add_parser("compare", help="side-by-side table for two runs")
    cmp_.add_argument("run_a")
    cmp_.add_argument("run_b")
    cmp_.add_argument("--out")
    cmp_.set_defaults(fn=cmd_compare)

    ep = sub.add_parser("export-pool", help="regenerate the job-shop "
                                            "reference matrix and pool CSVs")
    ep.add_argument("--out", default="out")
    ep.add_argument("--seed", type=int)
    ep.set_defaults(fn=cmd_export_pool)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # domain/oracle failures
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
