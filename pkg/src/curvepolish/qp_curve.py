"""Smooth curves through pinned waypoints.

The curve is the minimizer of a discretized minimum-acceleration control
problem with a small length penalty.  Velocities and accelerations are
eliminated by substitution, which leaves one box-constrained QP in the
positions per coordinate.  Each of those has a pentadiagonal Hessian and is
solved by a projected Newton method with banded solves on the free set.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded


class InfeasiblePinError(ValueError):
    """A pin lies outside the box."""

    def __init__(self, pin_index: int, message: str = ""):
        self.pin_index = pin_index
        super().__init__(message or f"pin {pin_index} lies outside the box")


class QpConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"curve QP did not converge in {iterations} iterations "
            f"(projected-gradient residual {residual:.3e})"
        )


@dataclass(frozen=True)
class Box:
    """Feasible hyper-rectangle ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("box requires lower < upper in every coordinate")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> "Box":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def uniform(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lower + rng.random(shape) * self.width


@dataclass(frozen=True)
class Pin:
    point: np.ndarray
    time: int


@dataclass(frozen=True)
class PinSchedule:
    """Waypoints the curve must hit at given grid times, plus the horizon T."""

    pins: tuple
    horizon: int

    def __post_init__(self):
        pins = tuple(
            Pin(np.asarray(p.point, dtype=float).copy(), int(p.time)) for p in self.pins
        )
        if len(pins) < 2:
            raise ValueError("a pin schedule needs at least 2 pins")
        dims = {p.point.shape for p in pins}
        if len(dims) != 1 or pins[0].point.ndim != 1:
            raise ValueError("all pins must be vectors of the same dimension")
        times = [p.time for p in pins]
        if times[0] != 0 or times[-1] != self.horizon:
            raise ValueError("first pin must be at time 0 and last pin at the horizon")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("pin times must be strictly increasing")
        object.__setattr__(self, "pins", pins)

    @classmethod
    def equally_spaced(cls, points: Sequence, horizon: int) -> "PinSchedule":
        """Spread ``points`` over ``0..horizon``; leftover steps go to the earliest segments."""
        times = assign_pin_times(len(points), horizon)
        return cls(tuple(Pin(p, t) for p, t in zip(points, times)), horizon)

    @classmethod
    def with_spacing(cls, points: Sequence, n_between: int) -> "PinSchedule":
        times = [k * n_between for k in range(len(points))]
        return cls(tuple(Pin(p, t) for p, t in zip(points, times)), times[-1])

    @property
    def dim(self) -> int:
        return self.pins[0].point.size

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.pins], dtype=int)

    @property
    def points(self) -> np.ndarray:
        return np.array([p.point for p in self.pins])


def assign_pin_times(n_pins: int, horizon: int) -> list[int]:
    if n_pins < 2:
        raise ValueError("need at least 2 pins")
    n_seg = n_pins - 1
    if horizon < n_seg:
        raise ValueError(f"horizon {horizon} too short for {n_pins} pins")
    base, extra = divmod(horizon, n_seg)
    times = [0]
    for k in range(n_seg):
        times.append(times[-1] + base + (1 if k < extra else 0))
    return times


@dataclass
class CurveGrid:
    """Discrete curve points with objective values already known at some indices."""

    points: np.ndarray
    known_values: dict = field(default_factory=dict)
    pin_indices: frozenset = frozenset()

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ValueError("points must be a (T+1, D) array")
        n = len(self.points)
        self.known_values = {int(k): float(v) for k, v in self.known_values.items()}
        self.pin_indices = frozenset(int(i) for i in self.pin_indices)
        bad = [k for k in (*self.known_values, *self.pin_indices) if not 0 <= k < n]
        if bad:
            raise ValueError(f"indices out of range for a grid of {n}: {bad[:5]}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def horizon(self) -> int:
        return len(self.points) - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        write_curve_csv(self, path)


@dataclass(frozen=True)
class QpSettings:
    length_penalty: float = 1e-3
    kkt_tolerance: float = 1e-8
    max_solver_iterations: int | None = None  # None -> 50 * (T + 1)

    def __post_init__(self):
        if self.length_penalty < 0:
            raise ValueError("length_penalty must be nonnegative")
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be positive")
        if self.max_solver_iterations is not None and self.max_solver_iterations < 1:
            raise ValueError("max_solver_iterations must be positive")


@dataclass(frozen=True)
class ArcStats:
    total_length: float
    spacings: np.ndarray


def curve_objective(points: np.ndarray, length_penalty: float) -> float:
    """Squared accelerations plus the penalized squared step lengths (v_0 = 0)."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    v = np.diff(x, axis=0)
    acc = np.diff(np.vstack([np.zeros((1, x.shape[1])), v]), axis=0)
    return float(np.sum(acc**2) + length_penalty * np.sum(v**2))


def curve_hessian(n_points: int, length_penalty: float) -> sparse.csr_matrix:
    """Hessian H of one coordinate's objective, written as 0.5 x'Hx."""
    T = n_points - 1
    # row t-1 holds a_t: a_1 = x_1 - x_0, a_t = x_t - 2 x_{t-1} + x_{t-2}
    centre = np.full(T, -2.0)
    centre[0] = -1.0
    acc = sparse.diags([np.ones(T - 1), centre, np.ones(T)], [-1, 0, 1], shape=(T, n_points))
    diff = sparse.diags([-np.ones(T), np.ones(T)], [0, 1], shape=(T, n_points))
    H = 2.0 * (acc.T @ acc + length_penalty * (diff.T @ diff))
    return sparse.csr_matrix(H)


def _bands(n_points: int, length_penalty: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    H = curve_hessian(n_points, length_penalty).todia()
    h0 = H.diagonal(0).copy()
    h1 = np.append(H.diagonal(1), 0.0)
    h2 = np.append(H.diagonal(2), [0.0, 0.0])[:n_points]
    return h0, h1, h2


def _banded_matvec(h0, h1, h2, x):
    y = h0 * x
    y[:-1] += h1[:-1] * x[1:]
    y[1:] += h1[:-1] * x[:-1]
    y[:-2] += h2[:-2] * x[2:]
    y[2:] += h2[:-2] * x[:-2]
    return y


def _sub_band(h0, h1, h2, idx: np.ndarray) -> np.ndarray:
    """Upper banded storage of H[idx][:, idx]; a principal submatrix keeps bandwidth 2."""
    m = idx.size
    ab = np.zeros((3, m))
    ab[2] = h0[idx]
    if m > 1:
        gap1 = np.diff(idx)
        up1 = np.where(gap1 == 1, h1[idx[:-1]], np.where(gap1 == 2, h2[idx[:-1]], 0.0))
        ab[1, 1:] = up1
    if m > 2:
        gap2 = idx[2:] - idx[:-2]
        ab[0, 2:] = np.where(gap2 == 2, h2[idx[:-2]], 0.0)
    return ab


def _projected_residual(x, g, lo, hi) -> float:
    return float(np.linalg.norm(x - np.clip(x - g, lo, hi)))


def _solve_coordinate(bands, x, free, lo, hi, tol, max_iter):
    """Projected Newton for min 0.5 x'Hx over the free entries of x, within [lo, hi]."""
    h0, h1, h2 = bands
    residual = np.inf
    for it in range(max_iter):
        g = _banded_matvec(h0, h1, h2, x)
        xf, gf = x[free], g[free]
        residual = _projected_residual(xf, gf, lo, hi)
        if residual <= tol:
            return x, residual, it
        bound = ((xf <= lo) & (gf > 0)) | ((xf >= hi) & (gf < 0))
        inner = free[~bound]
        if inner.size == 0:
            # every free variable is pinned against the box with an outward gradient
            x[free] = np.clip(xf - gf, lo, hi)
            continue
        step = np.zeros_like(x)
        step[inner] = solveh_banded(_sub_band(h0, h1, h2, inner), -g[inner], check_finite=False)
        alpha = 1.0
        while True:
            trial = x.copy()
            trial[free] = np.clip(xf + alpha * step[free], lo, hi)
            s = trial - x
            decrease = g @ s + 0.5 * s @ _banded_matvec(h0, h1, h2, s)
            if decrease <= 1e-4 * (g @ s) or alpha < 1e-12:
                break
            alpha *= 0.5
        if np.array_equal(trial, x):
            # no representable progress; fall back to a projected gradient step
            trial[free] = np.clip(xf - gf / max(h0.max(), 1.0), lo, hi)
            if np.array_equal(trial, x):
                break
        x = trial
    g = _banded_matvec(h0, h1, h2, x)
    residual = _projected_residual(x[free], g[free], lo, hi)
    if residual <= tol:
        return x, residual, max_iter
    raise QpConvergenceError(residual, max_iter)


def solve_curve_qp(schedule: PinSchedule, box: Box, settings: QpSettings = QpSettings()) -> CurveGrid:
    """Minimum-acceleration curve through the schedule's pins, kept inside ``box``.

    Pins are fixed variables, so ``points[T_k]`` equals ``p_k`` bitwise.
    """
    if box.dim != schedule.dim:
        raise ValueError(f"box has dimension {box.dim}, pins have {schedule.dim}")
    for k, pin in enumerate(schedule.pins):
        if not box.contains(pin.point):
            raise InfeasiblePinError(k)
    n = schedule.horizon + 1
    times = schedule.times
    pins = schedule.points
    is_pin = np.zeros(n, dtype=bool)
    is_pin[times] = True
    free = np.flatnonzero(~is_pin)
    max_iter = settings.max_solver_iterations or 50 * n
    bands = _bands(n, settings.length_penalty)

    points = np.empty((n, schedule.dim))
    for d in range(schedule.dim):
        lo, hi = box.lower[d], box.upper[d]
        x = np.clip(np.interp(np.arange(n), times, pins[:, d]), lo, hi)
        x[times] = pins[:, d]
        if free.size:
            x, _, _ = _solve_coordinate(bands, x, free, lo, hi, settings.kkt_tolerance, max_iter)
        points[:, d] = x
    return CurveGrid(points=points, pin_indices=frozenset(times.tolist()))


def kkt_residual(grid: CurveGrid, box: Box, length_penalty: float) -> float:
    """Projected-gradient norm over the non-pin variables, all coordinates."""
    n = len(grid)
    H = curve_hessian(n, length_penalty)
    free = np.array(sorted(set(range(n)) - set(grid.pin_indices)), dtype=int)
    if free.size == 0:
        return 0.0
    total = 0.0
    for d in range(grid.dim):
        x = grid.points[:, d]
        g = H @ x
        total += _projected_residual(x[free], g[free], box.lower[d], box.upper[d]) ** 2
    return float(np.sqrt(total))


def curve_arc_stats(grid: CurveGrid) -> ArcStats:
    spacings = np.linalg.norm(np.diff(grid.points, axis=0), axis=1)
    return ArcStats(total_length=float(spacings.sum()), spacings=spacings)


def write_curve_csv(grid: CurveGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", *[f"x_{d + 1}" for d in range(grid.dim)]])
        for i, p in enumerate(grid.points):
            writer.writerow([i, *(repr(float(v)) for v in p)])


def read_curve_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1:]
