"""Solution polishing strategies under a shared fresh-evaluation budget."""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .curve_gen import (
    EliteSet,
    discretize_segment,
    extend_segment_to_box,
    generate_multipoint_curve,
    generate_propeller_curve,
)
from .elites import PsoConfig, pso_minimize
from .funcs import TestFunction
from .line_walker import WalkerSettings, walk
from .qp_curve import QpSettings

log = logging.getLogger(__name__)

STRATEGIES = ("multipoint", "propeller", "straight", "base_solver")
GRID_TARGET = 3200  # grid steps per curve, i.e. 3201 indices


@dataclass(frozen=True)
class PolishConfig:
    strategy: str = "propeller"
    fval_max: int = 290
    n_between: int | None = None  # None -> about GRID_TARGET steps in total
    per_segment_budget: int = 30
    segment_points: int = 1001
    propeller_step: float = 1.0
    swarm_size: int = 20
    seed: int = 0
    walker: WalkerSettings = WalkerSettings()
    qp: QpSettings = QpSettings()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.fval_max < 1:
            raise ValueError("fval_max must be at least 1")
        if self.n_between is not None and self.n_between < 2:
            raise ValueError("n_between must be at least 2")
        if self.per_segment_budget < 3:
            raise ValueError("per_segment_budget must cover the two seeds and one evaluation")


@dataclass
class PolishOutcome:
    strategy: str
    f_before: float
    f_after: float
    best_point: np.ndarray
    evaluations_used: int
    curves: list = field(default_factory=list)  # CurveGrid per 1D search
    walk_logs: list = field(default_factory=list)
    elapsed: float = 0.0

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "f_before": self.f_before,
            "f_after": self.f_after,
            "best_point": self.best_point.tolist(),
            "evals_used": self.evaluations_used,
            "elapsed": self.elapsed,
        }


def default_n_between(strategy: str, n_elites: int, dim: int) -> int:
    if strategy == "multipoint":
        return max(2, round(GRID_TARGET / (2 * (n_elites - 1))))
    return max(2, round(GRID_TARGET / (4 * dim)))


def curve_polisher(elites: EliteSet, config: PolishConfig, f: TestFunction) -> PolishOutcome:
    """One walk along a multipoint or propeller curve with ``fval_max`` fresh evaluations."""
    if config.strategy not in ("multipoint", "propeller"):
        raise ValueError("curve_polisher handles the multipoint and propeller strategies")
    t0 = time.perf_counter()
    best = elites.best
    n_between = config.n_between or default_n_between(config.strategy, len(elites), f.dimension)
    if config.strategy == "multipoint":
        grid = generate_multipoint_curve(elites, n_between, f.box, config.qp)
    else:
        grid = generate_propeller_curve(best, n_between, f.box, config.qp, step=config.propeller_step)
    counter = f.counter()
    try:
        result = walk(grid, f.evaluate, config.fval_max, config.walker)
    finally:
        f.detach(counter)
    f_after, point = best.value, best.point.copy()
    if result.best_value < f_after:
        f_after, point = result.best_value, result.best_point
    return PolishOutcome(
        config.strategy, best.value, f_after, point, counter.count,
        curves=[grid], walk_logs=[result.log], elapsed=time.perf_counter() - t0,
    )


def straight_link_polisher(elites: EliteSet, config: PolishConfig, f: TestFunction) -> PolishOutcome:
    """Independent walks on the box-spanning line through every pair of elites.

    Each pair gets ``per_segment_budget - 2`` walk evaluations (its two elites
    are seeded) plus one final evaluation at the surrogate's minimizer.
    """
    if len(elites) < 2:
        raise ValueError("straight linking needs at least 2 elites")
    t0 = time.perf_counter()
    best = elites.best
    f_after, point = best.value, best.point.copy()
    settings = WalkerSettings(
        surrogate=config.walker.surrogate,
        tabu_radius=config.walker.tabu_radius,
        tabu_tenure=config.walker.tabu_tenure,
        final_eval=True,
    )
    curves, logs = [], []
    counter = f.counter()
    try:
        for a, b in itertools.combinations(elites.solutions, 2):
            remaining = config.fval_max - counter.count
            if remaining <= 0:
                break
            seg = extend_segment_to_box(a, b, f.box)
            grid = discretize_segment(seg, config.segment_points)
            # an elite that could not be seeded costs a walk evaluation instead
            budget = config.per_segment_budget - len(grid.known_values) + 1
            result = walk(grid, f.evaluate, min(budget, remaining), settings)
            curves.append(grid)
            logs.append(result.log)
            if result.best_value < f_after:
                f_after, point = result.best_value, result.best_point
    finally:
        f.detach(counter)
    return PolishOutcome(
        "straight", best.value, f_after, point, counter.count,
        curves=curves, walk_logs=logs, elapsed=time.perf_counter() - t0,
    )


def base_solver_iterations(fval_max: int, particles: int) -> int:
    """Iteration cap keeping (iterations + 1) * particles within the budget."""
    return fval_max // particles - 1


def base_solver_polisher(elites: EliteSet, config: PolishConfig, f: TestFunction) -> PolishOutcome:
    """Particle swarm over the full box, started from the elites plus random particles."""
    t0 = time.perf_counter()
    best = elites.best
    n = config.swarm_size
    iters = base_solver_iterations(config.fval_max, n)
    if iters < 0:
        raise ValueError(f"fval_max {config.fval_max} below one swarm of {n}")
    seeds = elites.solutions[:n]
    counter = f.counter()
    try:
        res = pso_minimize(
            f,
            PsoConfig(particles=n, max_iterations=iters, seed=config.seed),
            initial_particles=[e.point for e in seeds],
            initial_values=[e.value for e in seeds],
        )
    finally:
        f.detach(counter)
    f_after, point = best.value, best.point.copy()
    if res.best_value < f_after:
        f_after, point = res.best_value, res.best_point
    return PolishOutcome(
        "base_solver", best.value, f_after, point, counter.count, elapsed=time.perf_counter() - t0
    )


def polish(elites: EliteSet, config: PolishConfig, f: TestFunction) -> PolishOutcome:
    if config.strategy in ("multipoint", "propeller"):
        return curve_polisher(elites, config, f)
    if config.strategy == "straight":
        return straight_link_polisher(elites, config, f)
    return base_solver_polisher(elites, config, f)
