"""Pin schedules for multipoint, propeller and straight-segment search grids."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .qp_curve import Box, CurveGrid, InfeasiblePinError, PinSchedule, QpSettings, solve_curve_qp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Elite:
    point: np.ndarray
    value: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).copy())
        object.__setattr__(self, "value", float(self.value))


class EliteSet:
    """Distinct elite solutions sorted by value (stable, so ties keep insertion order)."""

    def __init__(self, solutions: Iterable):
        sols = [s if isinstance(s, Elite) else Elite(*s) for s in solutions]
        if not sols:
            raise ValueError("an elite set cannot be empty")
        dims = {s.point.shape for s in sols}
        if len(dims) != 1:
            raise ValueError("elite points must share one dimension")
        for i in range(len(sols)):
            for j in range(i):
                if np.array_equal(sols[i].point, sols[j].point):
                    raise ValueError(f"elites {j} and {i} are the same point")
        self.solutions = tuple(sorted(sols, key=lambda s: s.value))

    @classmethod
    def from_arrays(cls, points, values) -> "EliteSet":
        return cls(Elite(p, v) for p, v in zip(points, values))

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def __getitem__(self, i) -> Elite:
        return self.solutions[i]

    @property
    def best(self) -> Elite:
        return self.solutions[0]

    @property
    def points(self) -> np.ndarray:
        return np.array([s.point for s in self.solutions])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.solutions])

    @property
    def dim(self) -> int:
        return self.solutions[0].point.size

    def check_inside(self, box: Box) -> None:
        for k, s in enumerate(self.solutions):
            if not box.contains(s.point):
                raise InfeasiblePinError(k, f"elite {k} lies outside the box")


@dataclass(frozen=True)
class SegmentSpec:
    """Box-spanning segment through two elites.

    ``t_a``/``t_b`` are the elites' positions as fractions of the way from
    ``endpoint_a`` to ``endpoint_b``.
    """

    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    elite_a: Elite
    elite_b: Elite
    t_a: float
    t_b: float


def generate_multipoint_curve(
    elites: EliteSet, n_between: int, box: Box, settings: QpSettings = QpSettings()
) -> CurveGrid:
    """Curve from the best elite out to every other elite and back.

    Pins: best, e_2, best, e_3, ..., e_K, best with ``n_between`` steps
    between consecutive pins, so the grid has 2(K-1)*n_between + 1 points.
    """
    if len(elites) < 2:
        raise ValueError("a multipoint curve needs at least 2 elites")
    if n_between < 2:
        raise ValueError("n_between must be at least 2")
    elites.check_inside(box)
    best = elites.best
    points = [best.point]
    values = [best.value]
    for e in elites.solutions[1:]:
        points += [e.point, best.point]
        values += [e.value, best.value]
    schedule = PinSchedule.with_spacing(points, n_between)
    grid = solve_curve_qp(schedule, box, settings)
    grid.known_values = {int(t): v for t, v in zip(schedule.times, values)}
    return grid


def propeller_pins(centre: np.ndarray, box: Box, step: float = 1.0, min_step_frac: float = 1e-6):
    """Arm tips of the propeller, one per (dimension, sign), clipped to the box.

    Arms whose clipped length falls below ``min_step_frac`` of the box width
    are dropped.
    """
    tips = []
    for k in range(box.dim):
        for sign in (1.0, -1.0):
            room = box.upper[k] - centre[k] if sign > 0 else centre[k] - box.lower[k]
            s = min(step, room)
            if s < min_step_frac * box.width[k]:
                log.warning("propeller arm %+d in dimension %d skipped (step %.3g)", int(sign), k, s)
                continue
            tip = centre.copy()
            tip[k] = centre[k] + sign * s
            # land exactly on the face when the step was clipped
            if s == room:
                tip[k] = box.upper[k] if sign > 0 else box.lower[k]
            tips.append(tip)
    return tips


def generate_propeller_curve(
    elite: Elite,
    n_between: int,
    box: Box,
    settings: QpSettings = QpSettings(),
    step: float = 1.0,
    min_step_frac: float = 1e-6,
) -> CurveGrid:
    """Curve looping out along +-step in each coordinate and back through ``elite``.

    Only the elite's own value is seeded; it occurs at every return pin.
    """
    if n_between < 2:
        raise ValueError("n_between must be at least 2")
    if not isinstance(elite, Elite):
        elite = Elite(*elite)
    if not box.contains(elite.point):
        raise InfeasiblePinError(0, "propeller centre lies outside the box")
    tips = propeller_pins(elite.point, box, step, min_step_frac)
    if not tips:
        raise ValueError("every propeller arm was skipped")
    points = [elite.point]
    for tip in tips:
        points += [tip, elite.point]
    schedule = PinSchedule.with_spacing(points, n_between)
    grid = solve_curve_qp(schedule, box, settings)
    grid.known_values = {int(t): elite.value for t in schedule.times[::2]}
    return grid


def extend_segment_to_box(a: Elite, b: Elite, box: Box) -> SegmentSpec:
    """Extend the line through ``a`` and ``b`` in both directions until it hits the box."""
    if not isinstance(a, Elite):
        a = Elite(a, np.nan)
    if not isinstance(b, Elite):
        b = Elite(b, np.nan)
    direction = b.point - a.point
    if not np.any(direction):
        raise ValueError("segment endpoints coincide")
    if not (box.contains(a.point) and box.contains(b.point)):
        raise InfeasiblePinError(0, "segment points must lie inside the box")
    moving = direction != 0
    with np.errstate(over="ignore"):  # near-zero components just give infinite exit times
        t_lo = (box.lower[moving] - a.point[moving]) / direction[moving]
        t_hi = (box.upper[moving] - a.point[moving]) / direction[moving]
    back = np.minimum(t_lo, t_hi)
    fwd = np.maximum(t_lo, t_hi)
    t_min = min(float(back.max()), 0.0)
    t_max = max(float(fwd.min()), 1.0)

    def endpoint(t, faces_t):
        p = box.clip(a.point + t * direction)
        # snap the coordinate(s) that define the hit face exactly onto it
        idx = np.flatnonzero(moving)
        for j in idx[np.isclose(faces_t, t, rtol=0, atol=1e-12 * max(1.0, abs(t)))]:
            p[j] = box.upper[j] if (direction[j] > 0) == (t > 0) else box.lower[j]
        return p

    end_a = endpoint(t_min, back)
    end_b = endpoint(t_max, fwd)
    span = t_max - t_min
    return SegmentSpec(end_a, end_b, a, b, (0.0 - t_min) / span, (1.0 - t_min) / span)


def discretize_segment(seg: SegmentSpec, n_points: int, snap_tol: float = 0.5) -> CurveGrid:
    """Uniform grid from ``endpoint_a`` to ``endpoint_b``.

    Each elite is snapped onto its nearest grid index, and its value seeded
    there, when it lies within ``snap_tol`` grid steps of that index;
    otherwise the index is left for the walker to evaluate.
    """
    if n_points < 3:
        raise ValueError("a segment grid needs at least 3 points")
    s = np.linspace(0.0, 1.0, n_points)[:, None]
    points = (1.0 - s) * seg.endpoint_a + s * seg.endpoint_b
    points[0], points[-1] = seg.endpoint_a, seg.endpoint_b
    known = {}
    pins = set()
    for elite, frac in ((seg.elite_a, seg.t_a), (seg.elite_b, seg.t_b)):
        pos = frac * (n_points - 1)
        idx = int(np.clip(np.rint(pos), 0, n_points - 1))
        if abs(pos - idx) <= snap_tol and idx not in known:
            points[idx] = elite.point
            if np.isfinite(elite.value):
                known[idx] = elite.value
            pins.add(idx)
    return CurveGrid(points=points, known_values=known, pin_indices=frozenset(pins))
