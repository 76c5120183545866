"""Polish incumbent solutions by searching smooth curves through elite points."""

from .curve_gen import Elite, EliteSet, generate_multipoint_curve, generate_propeller_curve
from .funcs import TestFunction, get
from .line_walker import WalkerSettings, walk
from .polish import PolishConfig, PolishOutcome, polish
from .qp_curve import Box, CurveGrid, Pin, PinSchedule, QpSettings, solve_curve_qp

__version__ = "0.1.0"

__all__ = [
    "Box", "CurveGrid", "Elite", "EliteSet", "Pin", "PinSchedule", "PolishConfig",
    "PolishOutcome", "QpSettings", "TestFunction", "WalkerSettings", "generate_multipoint_curve",
    "generate_propeller_curve", "get", "polish", "solve_curve_qp", "walk",
]
