"""Benchmark protocol: elites, then every polishing strategy, then metrics."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import funcs
from .elites import EliteGenConfig, generate_elite_solutions
from .polish import STRATEGIES, PolishConfig, polish

log = logging.getLogger(__name__)

OUTPUT_ENV = "CURVEPOLISH_OUTPUT_DIR"
HIST_EDGES = np.linspace(0.0, 100.0, 11)
GAP_SLACK = 1e-9


def is_solved(f_eval_best: float, f_true: float) -> bool:
    """Within 1% or 0.01 of the optimum, whichever is larger."""
    return abs(f_eval_best - f_true) <= 0.01 * max(1.0, abs(f_true))


def gap_closed(f_true: float, f_before: float, f_after: float) -> float:
    """Percentage of the possible improvement f_before -> f_true that was achieved."""
    if not f_before > f_true:
        raise ValueError("gap closed is undefined when f_before <= f_true")
    return (1.0 - (f_true - f_after) / (f_true - f_before)) * 100.0


@dataclass
class RunRecord:
    function: str
    D: int
    seed: int
    strategy: str
    f_true: float
    f_before: float
    f_after: float
    solved_before: bool
    solved_after: bool
    gap_closed: float | None
    elite_evals: int
    polish_evals: int
    n_elites: int = 0
    elapsed: float = 0.0
    error: str | None = None

    @classmethod
    def from_outcome(cls, f, seed, strategy, f_before, f_after, elite_evals, polish_evals, n_elites, elapsed):
        solved_before = is_solved(f_before, f.f_true)
        gap = None
        if not solved_before:
            gap = gap_closed(f.f_true, f_before, f_after)
            if not -GAP_SLACK <= gap <= 100.0 + GAP_SLACK:
                raise AssertionError(f"gap closed {gap} outside [0, 100] for {f}")
            gap = min(max(gap, 0.0), 100.0)
        return cls(
            f.name, f.dimension, seed, strategy, f.f_true, f_before, f_after,
            solved_before, is_solved(f_after, f.f_true), gap,
            elite_evals, polish_evals, n_elites, elapsed,
        )


@dataclass
class BenchConfig:
    functions: list = field(default_factory=lambda: list(funcs.NAMES))
    dimensions: list = field(default_factory=lambda: [2])
    seeds: int = 5
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    K: int = 5
    fval_max: int = 290
    elite_budget_per_dim: int = 50
    grid_resolution: int = 3201
    solver: str = "pso"
    elite_method: str = "multistart"
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if not self.functions or not self.dimensions or not self.strategies:
            raise ValueError("functions, dimensions and strategies must be nonempty")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        for name in self.functions:
            funcs.canonical_name(name)
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ValueError(f"unknown strategies {bad}")
        if self.K < 1 or self.fval_max < 1 or self.workers < 1:
            raise ValueError("K, fval_max and workers must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "BenchConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)


def run_instance(name: str, dim: int, seed: int, config: BenchConfig):
    """Elite phase plus every configured strategy on one (function, D, seed)."""
    f = funcs.get(name, dim)
    elite_cfg = EliteGenConfig(
        K=config.K,
        budget_per_start=config.elite_budget_per_dim * dim,
        grid_resolution=config.grid_resolution,
        seed=seed,
        solver=config.solver,
        method=config.elite_method,
    )
    records = []
    try:
        run = generate_elite_solutions(f, elite_cfg)
    except Exception as exc:
        log.exception("elite phase failed for %s D=%d seed=%d", name, dim, seed)
        for s in config.strategies:
            records.append(_failed(f, seed, s, exc))
        return records, []
    for strategy in config.strategies:
        try:
            out = polish(run.elites, PolishConfig(strategy=strategy, fval_max=config.fval_max, seed=seed), f)
            records.append(RunRecord.from_outcome(
                f, seed, strategy, out.f_before, out.f_after,
                run.evaluations, out.evaluations_used, len(run.elites), out.elapsed,
            ))
        except Exception as exc:
            log.exception("%s failed on %s D=%d seed=%d", strategy, name, dim, seed)
            records.append(_failed(f, seed, strategy, exc, run.evaluations))
    profile = [(f.name, dim, seed, i + 1, v) for i, v in enumerate(run.trace)]
    return records, profile


def _failed(f, seed, strategy, exc, elite_evals=0) -> RunRecord:
    return RunRecord(
        f.name, f.dimension, seed, strategy, f.f_true, np.nan, np.nan, False, False, None,
        elite_evals, 0, 0, 0.0, f"{type(exc).__name__}: {exc}",
    )


def _job(args):
    return run_instance(*args)


def run_benchmark(config: BenchConfig, write: bool = True):
    """Run the sweep; returns (records, profiles) and writes the summary files."""
    jobs = [
        (funcs.canonical_name(name), dim, seed, config)
        for name in config.functions
        for dim in config.dimensions
        for seed in range(config.seeds)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    records = [r for recs, _ in results for r in recs]
    profiles = [p for _, prof in results for p in prof]
    if write:
        write_outputs(records, profiles, config.resolved_output_dir())
    return records, profiles


def mean_gap_rows(records) -> list:
    """(strategy, D, unsolved count, mean gap closed) over records not solved before polishing."""
    groups: dict = {}
    for r in records:
        if r.error is None and r.gap_closed is not None:
            groups.setdefault((r.strategy, r.D), []).append(r.gap_closed)
    order = {s: i for i, s in enumerate(STRATEGIES)}
    rows = []
    for (s, d), gaps in sorted(groups.items(), key=lambda kv: (kv[0][1], order[kv[0][0]])):
        rows.append((s, d, len(gaps), float(np.mean(gaps))))
    return rows


def histogram_rows(records) -> list:
    groups: dict = {}
    for r in records:
        if r.error is None and r.gap_closed is not None:
            groups.setdefault((r.strategy, r.D), []).append(r.gap_closed)
    order = {s: i for i, s in enumerate(STRATEGIES)}
    rows = []
    for (s, d), gaps in sorted(groups.items(), key=lambda kv: (kv[0][1], order[kv[0][0]])):
        counts, _ = np.histogram(gaps, bins=HIST_EDGES)
        for lo, hi, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], counts):
            rows.append((s, d, lo, hi, int(c)))
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_outputs(records, profiles, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")
    _write_csv(out / "mean_gap.csv", ["strategy", "D", "n_unsolved", "mean_gap_closed"], mean_gap_rows(records))
    _write_csv(out / "histogram.csv", ["strategy", "D", "bin_lo", "bin_hi", "count"], histogram_rows(records))
    _write_csv(
        out / "profiles.csv", ["function", "D", "seed", "evaluation", "best_so_far"],
        [(n, d, s, i, repr(v)) for n, d, s, i, v in profiles],
    )


def load_records(path) -> list:
    with open(path) as fh:
        return [RunRecord(**json.loads(line)) for line in fh if line.strip()]
