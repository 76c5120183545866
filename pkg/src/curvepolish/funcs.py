"""The 19-function benchmark suite: bounds, definitions and global minima.

Formulas follow the standard definitions (Surjanovic & Bingham's library,
optiGTest, and the shifted Bohachevsky/Schaffer functions used in path
relinking studies).  Where a family has variants, the one whose minimum
over the listed bounds equals the tabulated optimum is used.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qp_curve import Box

MAX_DIM = 16

# certified Michalewicz minima (m = 10) for D = 1..16
MICHAL_CERTIFIED = (
    -0.80130341, -1.80130341, -2.76039468, -3.69885710, -4.68765818, -5.68765818,
    -6.68088531, -7.66375735, -8.66015172, -9.66015172, -10.65748226, -11.64957500,
    -12.64781799, -13.64781799, -14.64640019, -15.64186482,
)
# older putative minima, -0.99864 D + 0.30271; wrong, kept only to check against
MICHAL_PUTATIVE_SLOPE, MICHAL_PUTATIVE_INTERCEPT = -0.99864, 0.30271

# per-coordinate minimizers and minima, refined to double precision
COSMIX_XSTAR, COSMIX_FSTAR = 0.18487282318297815, -0.06301220217625031
GIUNTA_XSTAR, GIUNTA_FSTAR = 0.46732002535915806, -0.26776478973154716
SCHWEFEL_XSTAR, SCHWEFEL_CONST = 420.96874636003787, 418.9828872724337
STYBTANG_XSTAR, STYBTANG_FSTAR = -2.9035340278025874, -39.16616570377141

# fixed shifts for the shifted Bohachevsky and Schaffer functions (first D entries used)
BOHA_SHIFT = np.array([
    -39.3114, 27.4072, 58.9515, -6.4837, -71.8066, 15.2448, 44.0196, -23.7735,
    62.5817, -52.0964, 3.8841, 33.6274, -65.1203, 71.2593, -12.9478, -48.5321,
])
SCHAFFER_SHIFT = np.array([
    21.6473, -45.1284, 8.3391, 66.7202, -30.9825, 52.4417, -61.0736, -14.2259,
    37.9050, 74.3318, -5.6617, -47.8843, 12.1026, -72.4561, 29.3188, 59.7704,
])


def ackley(x):
    d = x.size
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2) / d))
        - np.exp(np.sum(np.cos(2 * np.pi * x)) / d)
        + 20.0
        + np.e
    )


def cosine_mixture(x):
    return np.sum(x**2) + 0.1 * np.sum(np.cos(5 * np.pi * x))


def deflected_corrugated_spring(x, alpha=5.0, k=5.0):
    r2 = np.sum((x - alpha) ** 2)
    return 0.1 * r2 - np.cos(k * np.sqrt(r2))


def dixon_price(x):
    i = np.arange(2, x.size + 1)
    return (x[0] - 1) ** 2 + np.sum(i * (2 * x[1:] ** 2 - x[:-1]) ** 2)


def giunta(x):
    z = 16.0 / 15.0 * x - 1.0
    return 0.6 + np.sum(np.sin(z) + np.sin(z) ** 2 + np.sin(4 * z) / 50.0)


def griewank(x):
    i = np.arange(1, x.size + 1)
    return np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0


def levy(x):
    w = 1 + (x - 1) / 4
    head = np.sin(np.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:-1] + 1) ** 2))
    tail = (w[-1] - 1) ** 2 * (1 + np.sin(2 * np.pi * w[-1]) ** 2)
    return head + mid + tail


def michal(x, m=10):
    i = np.arange(1, x.size + 1)
    return -np.sum(np.sin(x) * np.sin(i * x**2 / np.pi) ** (2 * m))


def pinter(x):
    d = x.size
    i = np.arange(1, d + 1)
    prev = np.roll(x, 1)
    nxt = np.roll(x, -1)
    a = prev * np.sin(x) + np.sin(nxt)
    b = prev**2 - 2 * x + 3 * nxt - np.cos(x) + 1
    return np.sum(i * x**2) + np.sum(20 * i * np.sin(a) ** 2) + np.sum(i * np.log10(1 + i * b**2))


def powell(x):
    # dimensions that are not a multiple of 4 are zero-padded to the next block
    pad = (-x.size) % 4
    z = np.concatenate([x, np.zeros(pad)]).reshape(-1, 4)
    return np.sum(
        (z[:, 0] + 10 * z[:, 1]) ** 2
        + 5 * (z[:, 2] - z[:, 3]) ** 2
        + (z[:, 1] - 2 * z[:, 2]) ** 4
        + 10 * (z[:, 0] - z[:, 3]) ** 4
    )


def rastrigin(x):
    return 10.0 * x.size + np.sum(x**2 - 10 * np.cos(2 * np.pi * x))


def rosenbrock(x):
    return np.sum(100 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1) ** 2)


def schwefel(x):
    return SCHWEFEL_CONST * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x))))


def shifted_bohachevsky(x):
    z = x - BOHA_SHIFT[: x.size]
    a, b = z[:-1], z[1:]
    return np.sum(a**2 + 2 * b**2 - 0.3 * np.cos(3 * np.pi * a) - 0.4 * np.cos(4 * np.pi * b) + 0.7)


def shifted_schaffer(x):
    z = x - SCHAFFER_SHIFT[: x.size]
    r2 = z[:-1] ** 2 + z[1:] ** 2
    return np.sum(r2**0.25 * (np.sin(50 * r2**0.1) ** 2 + 1))


def spheref(x):
    return np.sum(x**2)


def stybtang(x):
    return 0.5 * np.sum(x**4 - 16 * x**2 + 5 * x)


def trig2(x):
    z = x - 0.9
    return 1.0 + np.sum(8 * np.sin(7 * z**2) ** 2 + 6 * np.sin(14 * z[0] ** 2) ** 2 + z**2)


def zakharov(x):
    s = np.sum(0.5 * np.arange(1, x.size + 1) * x)
    return np.sum(x**2) + s**2 + s**4


def _dixon_price_xstar(d):
    i = np.arange(1, d + 1)
    return 2.0 ** (-(2.0**i - 2) / 2.0**i)


@dataclass(frozen=True)
class _Entry:
    fn: Callable
    lower: float
    upper: float
    f_true: Callable[[int], float]
    table_value: Callable[[int], float]  # optimum as printed, at the printed precision
    table_tol: Callable[[int], float]
    minimizer: Callable[[int], np.ndarray] | None
    min_dim: int = 1


def _const(c):
    return lambda d: float(c)


def _zero_tol(d):
    return 0.0


def _fill(v):
    return lambda d: np.full(d, float(v))


def _michal_value(d):
    return MICHAL_CERTIFIED[d - 1]


_REGISTRY: dict[str, _Entry] = {
    "ackley": _Entry(ackley, -32.768, 32.768, _const(0), _const(0), _zero_tol, _fill(0)),
    "cosineMixture": _Entry(
        cosine_mixture, -1, 1, lambda d: COSMIX_FSTAR * d, lambda d: -0.06301 * d,
        lambda d: 5e-6 * d, _fill(COSMIX_XSTAR),
    ),
    "deflectedCorrugatedSpring": _Entry(
        deflected_corrugated_spring, 0, 10, _const(-1), _const(-1), _zero_tol, _fill(5)
    ),
    "DixonPrice": _Entry(dixon_price, -10, 10, _const(0), _const(0), _zero_tol, _dixon_price_xstar),
    "giunta": _Entry(
        giunta, -1, 1, lambda d: 0.6 + GIUNTA_FSTAR * d, lambda d: -0.26776 * d + 0.6,
        lambda d: 5e-6 * d, _fill(GIUNTA_XSTAR),
    ),
    "griewank": _Entry(griewank, -600, 600, _const(0), _const(0), _zero_tol, _fill(0)),
    "levy": _Entry(levy, -10, 10, _const(0), _const(0), _zero_tol, _fill(1)),
    "michal": _Entry(michal, 0, 3.14159, _michal_value, _michal_value, _zero_tol, None),
    "pinter": _Entry(pinter, -10, 10, _const(0), _const(0), _zero_tol, _fill(0)),
    "powell": _Entry(powell, -4, 5, _const(0), _const(0), _zero_tol, _fill(0)),
    "rastrigin": _Entry(rastrigin, -5.12, 5.12, _const(0), _const(0), _zero_tol, _fill(0)),
    "rosenbrock": _Entry(rosenbrock, -5, 10, _const(0), _const(0), _zero_tol, _fill(1), min_dim=2),
    "schwefel": _Entry(schwefel, -500, 500, _const(0), _const(0), _zero_tol, _fill(SCHWEFEL_XSTAR)),
    "boha": _Entry(
        shifted_bohachevsky, -100, 100, _const(0), _const(0), _zero_tol,
        lambda d: BOHA_SHIFT[:d].copy(), min_dim=2,
    ),
    "shiftedSchaffer": _Entry(
        shifted_schaffer, -100, 100, _const(0), _const(0), _zero_tol,
        lambda d: SCHAFFER_SHIFT[:d].copy(), min_dim=2,
    ),
    "spheref": _Entry(spheref, -5.12, 5.12, _const(0), _const(0), _zero_tol, _fill(0)),
    "stybtang": _Entry(
        stybtang, -5, 5, lambda d: STYBTANG_FSTAR * d, lambda d: -39.1662 * d,
        lambda d: 5e-5 * d, _fill(STYBTANG_XSTAR),
    ),
    "trig2": _Entry(trig2, -500, 500, _const(1), _const(1), _zero_tol, _fill(0.9)),
    "zakharov": _Entry(zakharov, -5, 10, _const(0), _const(0), _zero_tol, _fill(0)),
}

ALIASES = {
    "dixonpr": "DixonPrice",
    "shiftedBoha1": "boha",
    "rastr": "rastrigin",
    "rosen": "rosenbrock",
    "schwef": "schwefel",
    "trigonometric2": "trig2",
}

NAMES = tuple(_REGISTRY)


class OutOfBoxError(ValueError):
    pass


class EvaluationCounter:
    """Hook that counts evaluations and keeps the best-so-far trace."""

    def __init__(self):
        self.count = 0
        self.best = np.inf
        self.trace: list[float] = []

    def __call__(self, x, value):
        self.count += 1
        self.best = min(self.best, value)
        self.trace.append(self.best)

    def reset(self):
        self.count = 0
        self.best = np.inf
        self.trace = []


class TestFunction:
    """One benchmark instance at a fixed dimension."""

    __test__ = False  # not a pytest class

    def __init__(self, name, dimension, box, f_true, fn, minimizer=None):
        self.name = name
        self.dimension = dimension
        self.box = box
        self.f_true = f_true
        self.minimizer = minimizer
        self._fn = fn
        self.hooks: list = []

    def __repr__(self):
        return f"TestFunction({self.name!r}, D={self.dimension})"

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"{self.name} expects shape ({self.dimension},), got {x.shape}")
        if not self.box.contains(x):
            raise OutOfBoxError(f"point outside the box of {self.name}")
        value = float(self._fn(x))
        for hook in self.hooks:
            hook(x, value)
        return value

    __call__ = evaluate

    def counter(self) -> EvaluationCounter:
        """Attach and return a fresh evaluation counter."""
        c = EvaluationCounter()
        self.hooks.append(c)
        return c

    def detach(self, hook) -> None:
        self.hooks.remove(hook)


def canonical_name(name: str) -> str:
    if name in _REGISTRY:
        return name
    if name in ALIASES:
        return ALIASES[name]
    lowered = {k.lower(): k for k in (*_REGISTRY, *ALIASES)}
    if name.lower() in lowered:
        return canonical_name(lowered[name.lower()])
    raise KeyError(f"unknown test function {name!r}")


def get(name: str, dimension: int) -> TestFunction:
    name = canonical_name(name)
    entry = _REGISTRY[name]
    if not isinstance(dimension, (int, np.integer)) or not entry.min_dim <= dimension <= MAX_DIM:
        raise ValueError(f"{name} supports dimensions {entry.min_dim}..{MAX_DIM}, got {dimension}")
    d = int(dimension)
    minimizer = entry.minimizer(d) if entry.minimizer else None
    return TestFunction(
        name, d, Box.cube(entry.lower, entry.upper, d), float(entry.f_true(d)), entry.fn, minimizer
    )


def table_optimum(name: str, dimension: int) -> tuple[float, float]:
    """Tabulated optimum and the rounding slack of its printed precision."""
    entry = _REGISTRY[canonical_name(name)]
    return float(entry.table_value(dimension)), float(entry.table_tol(dimension))


def michal_separable_minimum(dimension: int, grid_points: int = 200_001) -> float:
    """Michalewicz minimum by per-coordinate grid search plus golden-section polish."""
    total = 0.0
    hi = _REGISTRY["michal"].upper
    xs = np.linspace(0.0, hi, grid_points)
    h = xs[1] - xs[0]
    for i in range(1, dimension + 1):
        term = lambda t, i=i: -np.sin(t) * np.sin(i * t**2 / np.pi) ** 20
        k = int(np.argmin(term(xs)))
        a, b = max(0.0, xs[k] - h), min(hi, xs[k] + h)
        g = (np.sqrt(5) - 1) / 2
        c, d = b - g * (b - a), a + g * (b - a)
        for _ in range(80):
            if term(c) < term(d):
                b, d = d, c
                c = b - g * (b - a)
            else:
                a, c = c, d
                d = a + g * (b - a)
        total += float(min(term(xs[k]), term((a + b) / 2)))
    return total


@dataclass
class RegistryReport:
    ok: bool
    rows: list  # (name, D, check, expected, got, passed)

    def failures(self):
        return [r for r in self.rows if not r[-1]]


def verify_registry(dimensions=(1, 2, 4, 8, 16), tol: float = 1e-6) -> RegistryReport:
    rows = []
    for name in NAMES:
        entry = _REGISTRY[name]
        for d in dimensions:
            if d < entry.min_dim:
                continue
            f = get(name, d)
            table, slack = table_optimum(name, d)
            rows.append((name, d, "table", table, f.f_true, abs(f.f_true - table) <= slack + 1e-12))
            if f.minimizer is not None:
                got = f.evaluate(f.minimizer)
                rows.append((name, d, "minimizer", f.f_true, got, abs(got - f.f_true) <= tol))
            if name == "michal":
                got = michal_separable_minimum(d)
                rows.append((name, d, "separable", f.f_true, got, abs(got - f.f_true) <= tol))
    return RegistryReport(all(r[-1] for r in rows), rows)


def list_csv(dimensions=(2, 4, 8, 16)) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["name", "D", "lower", "upper", "f_true"])
    for name in NAMES:
        for d in dimensions:
            if d < _REGISTRY[name].min_dim:
                continue
            f = get(name, d)
            w.writerow([name, d, f.box.lower[0], f.box.upper[0], repr(f.f_true)])
    return buf.getvalue()
