"""Base solvers (particle swarm, compass pattern search) and elite-set generation."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .curve_gen import Elite, EliteSet
from .funcs import TestFunction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 20
    max_iterations: int = 24
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    velocity_clamp: float = 0.2  # fraction of the box width
    seed: int = 0

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("PSO needs at least 2 particles")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if min(self.inertia, self.cognitive, self.social, self.velocity_clamp) < 0:
            raise ValueError("PSO coefficients must be nonnegative")

    @classmethod
    def for_budget(cls, budget: int, particles: int = 20, **kw) -> "PsoConfig":
        """Largest iteration cap with (iterations + 1) * particles <= budget."""
        if budget < particles:
            raise ValueError(f"budget {budget} is below one swarm evaluation ({particles})")
        return cls(particles=particles, max_iterations=budget // particles - 1, **kw)


@dataclass
class SolverResult:
    best_point: np.ndarray
    best_value: float
    points: np.ndarray  # final personal bests, ascending by value
    values: np.ndarray
    evaluations: int
    trace: list = field(default_factory=list)  # best-so-far after each evaluation


def _reflect(x, v, lower, upper):
    over = x > upper
    x = np.where(over, 2 * upper - x, x)
    v = np.where(over, -v, v)
    under = x < lower
    x = np.where(under, 2 * lower - x, x)
    v = np.where(under, -v, v)
    return np.clip(x, lower, upper), v


def pso_minimize(
    f: TestFunction,
    config: PsoConfig = PsoConfig(),
    initial_particles=None,
    initial_values=None,
    rng: np.random.Generator | None = None,
) -> SolverResult:
    """Global-best particle swarm inside ``f.box``.

    Initial particles with known ``initial_values`` are not re-evaluated, so
    the evaluation count is (iterations + 1) * particles minus the number of
    supplied values.
    """
    box = f.box
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n, d = config.particles, box.dim
    x = box.uniform(rng, n)
    known = np.full(n, np.nan)
    if initial_particles is not None:
        init = np.atleast_2d(np.asarray(initial_particles, dtype=float))
        if len(init) > n:
            raise ValueError("more initial particles than swarm size")
        for p in init:
            if not box.contains(p):
                raise ValueError("initial particle outside the box")
        x[: len(init)] = init
        if initial_values is not None:
            known[: len(init)] = np.asarray(initial_values, dtype=float)
    vmax = config.velocity_clamp * box.width
    v = rng.uniform(-1, 1, (n, d)) * vmax

    evals = 0
    best_so_far = np.inf
    trace = []

    def evaluate(p):
        nonlocal evals, best_so_far
        value = f.evaluate(p)
        evals += 1
        best_so_far = min(best_so_far, value)
        trace.append(best_so_far)
        return value

    fx = np.array([known[i] if np.isfinite(known[i]) else evaluate(x[i]) for i in range(n)])
    pbest, pval = x.copy(), fx.copy()
    g = int(np.argmin(pval))
    for _ in range(config.max_iterations):
        r1, r2 = rng.random((n, d)), rng.random((n, d))
        v = (
            config.inertia * v
            + config.cognitive * r1 * (pbest - x)
            + config.social * r2 * (pbest[g] - x)
        )
        v = np.clip(v, -vmax, vmax)
        x, v = _reflect(x + v, v, box.lower, box.upper)
        fx = np.array([evaluate(p) for p in x])
        better = fx < pval
        pbest[better], pval[better] = x[better], fx[better]
        g = int(np.argmin(pval))
    order = np.argsort(pval, kind="stable")
    return SolverResult(
        best_point=pbest[g].copy(),
        best_value=float(pval[g]),
        points=pbest[order],
        values=pval[order],
        evaluations=evals,
        trace=trace,
    )


def pattern_search(
    f: TestFunction,
    x0,
    budget: int,
    initial_step: float = 0.1,
    min_step: float = 1e-6,
    value0: float | None = None,
) -> SolverResult:
    """Compass search: poll +-step along each axis, halve the step on failure.

    ``initial_step`` and ``min_step`` are fractions of the box width.
    """
    box = f.box
    x = box.clip(x0)
    evals = 0
    trace = []
    if value0 is None:
        fx = f.evaluate(x)
        evals += 1
        trace.append(fx)
    else:
        fx = float(value0)
    step = initial_step
    while evals < budget and step >= min_step:
        improved = False
        for k in range(box.dim):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                y = x.copy()
                y[k] = np.clip(y[k] + sign * step * box.width[k], box.lower[k], box.upper[k])
                if y[k] == x[k]:
                    continue
                fy = f.evaluate(y)
                evals += 1
                if fy < fx:
                    x, fx, improved = y, fy, True
                trace.append(fx)
                if improved:
                    break
            if improved:
                break
        if not improved:
            step /= 2
    return SolverResult(x, float(fx), x[None, :].copy(), np.array([fx]), evals, trace)


def distance_tolerance(box_lower0: float, box_upper0: float, grid_resolution: int, accepted) -> float:
    """Minimum separation between elites, from dimension 1's width and the grid size.

    Divided by the largest coordinate magnitude among accepted elites; when that
    is zero (or nothing has been accepted) the magnitude factor is dropped.
    """
    base = (box_upper0 - box_lower0) / grid_resolution
    if len(accepted) == 0:
        return base
    v = float(np.max(np.abs(np.asarray(accepted))))
    return base / v if v > 0 else base


@dataclass(frozen=True)
class EliteGenConfig:
    K: int = 5
    budget_per_start: int | None = None  # None -> 50 * D
    grid_resolution: int = 3201
    seed: int = 0
    solver: str = "pso"  # "pso" or "pattern"
    method: str = "multistart"  # "multistart" or "swarm"
    max_starts: int | None = None  # None -> 20 * K
    particles: int = 20

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.budget_per_start is not None and self.budget_per_start < 1:
            raise ValueError("budget must be positive")
        if self.solver not in ("pso", "pattern"):
            raise ValueError(f"unknown base solver {self.solver!r}")
        if self.method not in ("multistart", "swarm"):
            raise ValueError(f"unknown elite method {self.method!r}")
        if self.method == "swarm" and self.solver != "pso":
            raise ValueError("the swarm method needs the pso solver")


class EliteGenerationError(RuntimeError):
    def __init__(self, message, partial: EliteSet | None):
        super().__init__(message)
        self.partial = partial


@dataclass
class EliteRun:
    elites: EliteSet
    evaluations: int
    starts: int
    rejected: int
    trace: list  # best-so-far over the whole elite phase
    function: str = ""
    dimension: int = 0
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "dimension": self.dimension,
            "seed": self.seed,
            "points": [p.tolist() for p in self.elites.points],
            "values": self.elites.values.tolist(),
            "evaluations": self.evaluations,
            "starts": self.starts,
            "rejected": self.rejected,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def load_elites(path) -> tuple[EliteSet, dict]:
    with open(path) as fh:
        data = json.load(fh)
    return EliteSet.from_arrays(data["points"], data["values"]), data


def _accept(candidate, accepted_points, box, grid_resolution) -> bool:
    tol = distance_tolerance(box.lower[0], box.upper[0], grid_resolution, accepted_points)
    return all(np.linalg.norm(candidate - p) > tol for p in accepted_points)


def generate_elite_solutions(f: TestFunction, config: EliteGenConfig = EliteGenConfig()) -> EliteRun:
    """K mutually separated solutions from repeated base-solver runs.

    ``multistart``: one budget-limited run per uniform random start; a run's
    result is kept only if it is farther than the current tolerance from every
    accepted elite, even when it is better.  ``swarm``: a single PSO run with
    budget ``K * budget_per_start`` whose final particles are screened in
    ascending order with the same rule.
    """
    box = f.box
    budget = config.budget_per_start or 50 * f.dimension
    counter = f.counter()
    try:
        if config.method == "swarm":
            run = _swarm_elites(f, config, budget)
        else:
            run = _multistart_elites(f, config, budget)
    finally:
        f.detach(counter)
    run.evaluations = counter.count
    run.trace = counter.trace
    run.function, run.dimension, run.seed = f.name, f.dimension, config.seed
    return run


def _multistart_elites(f, config, budget) -> EliteRun:
    box = f.box
    master = np.random.SeedSequence(config.seed)
    max_starts = config.max_starts or 20 * config.K
    accepted: list[Elite] = []
    rejected = starts = 0
    for child in master.spawn(max_starts):
        if len(accepted) >= config.K:
            break
        starts += 1
        rng = np.random.default_rng(child)
        x0 = box.uniform(rng)
        if config.solver == "pso":
            res = pso_minimize(
                f, PsoConfig.for_budget(budget, particles=config.particles), [x0], rng=rng
            )
        else:
            res = pattern_search(f, x0, budget)
        pts = [e.point for e in accepted]
        if _accept(res.best_point, pts, box, config.grid_resolution):
            accepted.append(Elite(res.best_point, res.best_value))
        else:
            rejected += 1
    if len(accepted) < config.K:
        partial = EliteSet(accepted) if accepted else None
        raise EliteGenerationError(
            f"only {len(accepted)} of {config.K} elites after {max_starts} starts", partial
        )
    return EliteRun(EliteSet(accepted), 0, starts, rejected, [])


def _swarm_elites(f, config, budget) -> EliteRun:
    box = f.box
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    total = config.K * budget
    res = pso_minimize(f, PsoConfig.for_budget(total, particles=config.particles), rng=rng)
    accepted: list[Elite] = []
    rejected = 0
    for p, v in zip(res.points, res.values):
        if len(accepted) >= config.K:
            break
        if _accept(p, [e.point for e in accepted], box, config.grid_resolution):
            accepted.append(Elite(p, v))
        else:
            rejected += 1
    if len(accepted) < config.K:
        log.warning("final swarm yielded %d of %d elites for %s", len(accepted), config.K, f)
    return EliteRun(EliteSet(accepted), 0, 1, rejected, [])
