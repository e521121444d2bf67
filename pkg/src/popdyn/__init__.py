"""Pop dynamics of planar four-bar linkages."""
from .circle import (
    PeriodicityReport,
    PolarConfig,
    RotationEstimate,
    det_jg,
    detect_periodicity,
    f,
    f12,
    f23,
    from_polar,
    invariant_measure,
    lift_step,
    rotation_number_integral,
    rotation_number_orbit,
    to_polar,
)
from .linkage import (
    AngleConfig,
    Linkage,
    MotionClass,
    MotionKind,
    PlanarConfig,
    angles_of,
    classify,
    forward_kinematics,
    lbar,
    on_gamma,
    theorem_conditions,
    wrap,
)
from .pops import OrbitTrace, alpha, orbit, pop12, pop23, pop_geometric

__version__ = "0.1.0"

__all__ = [
    "AngleConfig", "Linkage", "MotionClass", "MotionKind", "PlanarConfig",
    "angles_of", "classify", "forward_kinematics", "lbar", "on_gamma", "theorem_conditions", "wrap",
    "OrbitTrace", "alpha", "orbit", "pop12", "pop23", "pop_geometric",
    "PeriodicityReport", "PolarConfig", "RotationEstimate", "det_jg", "detect_periodicity",
    "f", "f12", "f23", "from_polar", "invariant_measure", "lift_step",
    "rotation_number_integral", "rotation_number_orbit", "to_polar",
]
