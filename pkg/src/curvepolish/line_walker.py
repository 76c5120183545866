"""Budget-limited global search over a 1D grid of indices.

A surrogate is fitted through the sampled indices; its non-tabu local
extrema are the sampling candidates, with the midpoint of the largest
unexplored run of indices as the fallback.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .qp_curve import CurveGrid

log = logging.getLogger(__name__)

REASONS = ("seed", "extremum", "gap", "final")


class GridExhausted(Exception):
    """Every grid index has already been sampled."""


@dataclass(frozen=True)
class WalkerSettings:
    surrogate: str = "spline"  # "spline" (not-a-knot cubic) or "pchip"
    tabu_radius: int | None = None  # None -> max(1, N // 200)
    tabu_tenure: int = 5
    final_eval: bool = False

    def __post_init__(self):
        if self.surrogate not in ("spline", "pchip"):
            raise ValueError(f"unknown surrogate {self.surrogate!r}")
        if self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be nonnegative")

    def radius(self, grid_size: int) -> int:
        return self.tabu_radius if self.tabu_radius is not None else max(1, grid_size // 200)


@dataclass
class WalkState:
    grid_size: int
    budget_remaining: int
    sampled: dict = field(default_factory=dict)
    tabu: dict = field(default_factory=dict)  # sampled index -> proposals left

    def record(self, index: int, value: float) -> None:
        if not 0 <= index < self.grid_size:
            raise IndexError(index)
        if index in self.sampled:
            raise ValueError(f"index {index} sampled twice")
        self.sampled[index] = float(value)

    @property
    def best_index(self) -> int:
        return min(self.sampled, key=lambda i: (self.sampled[i], i))

    @property
    def best_value(self) -> float:
        return self.sampled[self.best_index]

    def unsampled_count(self) -> int:
        return self.grid_size - len(self.sampled)

    def tick_tabu(self) -> None:
        self.tabu = {i: k - 1 for i, k in self.tabu.items() if k > 1}


class Surrogate:
    """Interpolant over grid indices; exact at every sampled index."""

    def __init__(self, indices: np.ndarray, values: np.ndarray, kind: str = "spline"):
        self.indices = indices
        self.values = values
        self.kind = kind
        if kind == "pchip":
            self._f = PchipInterpolator(indices, values, extrapolate=True)
        else:
            self._f = CubicSpline(indices, values, bc_type="not-a-knot", extrapolate=True)

    def __call__(self, x) -> np.ndarray:
        out = self._f(np.asarray(x, dtype=float))
        # pin sampled indices to their data exactly
        if np.ndim(x):
            pos = np.searchsorted(self.indices, x)
            pos = np.clip(pos, 0, len(self.indices) - 1)
            hit = self.indices[pos] == x
            out = np.where(hit, self.values[pos], out)
        return out

    def on_grid(self, grid_size: int) -> np.ndarray:
        return self(np.arange(grid_size))


def fit_surrogate(state: WalkState, kind: str = "spline") -> Surrogate:
    if len(state.sampled) < 2:
        raise ValueError("a surrogate needs at least 2 samples")
    idx = np.array(sorted(state.sampled), dtype=int)
    vals = np.array([state.sampled[i] for i in idx])
    return Surrogate(idx, vals, kind)


def _local_extrema(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Strict interior local minima and maxima of the surrogate on the grid."""
    mid, left, right = s[1:-1], s[:-2], s[2:]
    minima = np.flatnonzero((mid < left) & (mid < right)) + 1
    maxima = np.flatnonzero((mid > left) & (mid > right)) + 1
    return minima, maxima


def nearest_unsampled(index: int, state: WalkState) -> int | None:
    if index not in state.sampled:
        return index
    for step in range(1, state.grid_size):
        for cand in (index - step, index + step):
            if 0 <= cand < state.grid_size and cand not in state.sampled:
                return cand
    return None


def largest_gap_midpoint(state: WalkState) -> int:
    """Middle of the longest run of unsampled indices (ties: lowest index)."""
    edges = np.array([-1, *sorted(state.sampled), state.grid_size])
    runs = np.diff(edges) - 1
    k = int(np.argmax(runs))
    if runs[k] <= 0:
        raise GridExhausted
    lo, hi = edges[k] + 1, edges[k + 1] - 1
    return int((lo + hi) // 2)


def _is_tabu(index: int, state: WalkState, radius: int) -> bool:
    return any(abs(index - t) <= radius for t in state.tabu)


def propose_next(
    state: WalkState, surrogate: Surrogate, settings: WalkerSettings = WalkerSettings()
) -> tuple[int, str]:
    """Next index to evaluate and the reason (``"extremum"`` or ``"gap"``).

    Minima come first in ascending surrogate value, then maxima in
    descending value; ties go to the lower index.
    """
    if state.unsampled_count() == 0:
        raise GridExhausted
    s = surrogate.on_grid(state.grid_size)
    minima, maxima = _local_extrema(s)
    ranked = sorted(minima, key=lambda i: (s[i], i)) + sorted(maxima, key=lambda i: (-s[i], i))
    radius = settings.radius(state.grid_size)
    for ext in ranked:
        if _is_tabu(int(ext), state, radius):
            continue
        cand = nearest_unsampled(int(ext), state)
        if cand is not None:
            return cand, "extremum"
    return largest_gap_midpoint(state), "gap"


@dataclass
class WalkResult:
    best_index: int
    best_point: np.ndarray
    best_value: float
    log: list  # (step, index, value, reason)
    evaluations: int
    aborted: bool = False
    state: WalkState | None = None


def _duplicate_pins(grid: CurveGrid) -> dict:
    groups: dict = {}
    for i in sorted(grid.pin_indices):
        groups.setdefault(grid.points[i].tobytes(), []).append(i)
    return {i: g for g in groups.values() for i in g}


def walk(
    grid: CurveGrid,
    objective: Callable[[np.ndarray], float],
    budget: int,
    settings: WalkerSettings = WalkerSettings(),
) -> WalkResult:
    """Minimize ``objective`` over the grid points with at most ``budget`` fresh calls.

    Values in ``grid.known_values`` are used for free, and shared with every
    other pin index holding the same point.
    """
    n = len(grid)
    if n < 3:
        raise ValueError("the grid needs at least 3 indices")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    state = WalkState(grid_size=n, budget_remaining=budget)
    twins = _duplicate_pins(grid)
    entries: list = []

    def put(index: int, value: float, reason: str) -> None:
        for j in twins.get(index, [index]):
            if j not in state.sampled:
                state.record(j, value)
                entries.append((len(entries), j, float(value), reason if j == index else "seed"))

    for i, v in sorted(grid.known_values.items()):
        if i not in state.sampled:
            put(i, v, "seed")

    fresh = 0
    aborted = False

    def evaluate(index: int, reason: str) -> bool:
        nonlocal fresh, aborted
        try:
            value = float(objective(grid.points[index]))
        except Exception as exc:  # black box failed: keep what we have
            log.warning("objective failed at grid index %d: %s", index, exc)
            aborted = True
            return False
        fresh += 1
        state.budget_remaining -= 1
        put(index, value, reason)
        state.tabu[index] = settings.tabu_tenure
        return True

    if len(state.sampled) < 3:
        for i in (0, n - 1, (n - 1) // 2):
            if state.budget_remaining == 0 or aborted:
                break
            if i not in state.sampled:
                evaluate(i, "gap")

    while state.budget_remaining > 0 and state.unsampled_count() > 0 and not aborted:
        if settings.final_eval and state.budget_remaining == 1 and len(state.sampled) >= 2:
            s = fit_surrogate(state, settings.surrogate).on_grid(n)
            guess = int(np.argmin(s))
            if guess not in state.sampled:
                evaluate(guess, "final")
                continue
        if len(state.sampled) >= 2:
            index, reason = propose_next(state, fit_surrogate(state, settings.surrogate), settings)
        else:
            index, reason = largest_gap_midpoint(state), "gap"
        state.tick_tabu()
        evaluate(index, reason)

    if not state.sampled:
        raise RuntimeError("walk ended without any sampled index")
    best = state.best_index
    return WalkResult(
        best_index=best,
        best_point=grid.points[best].copy(),
        best_value=state.sampled[best],
        log=entries,
        evaluations=fresh,
        aborted=aborted,
        state=state,
    )


def write_walk_log(result: WalkResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "index", "value", "reason"])
        for step, index, value, reason in result.log:
            writer.writerow([step, index, repr(value), reason])
