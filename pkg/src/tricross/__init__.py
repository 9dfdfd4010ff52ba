"""Monte Carlo and exact-enumeration toolkit for critical percolation
crossing probabilities on the split isosceles triangle."""

__version__ = "0.1.0"

from .geometry import (
    Arc,
    LatticeGraph,
    MeshSpec,
    TriangleDomain,
    build_lattice,
    classify_boundary,
    shift_domain,
    snap_to_lattice,
)
from .randomness import Configuration, UniformField, enumerate_all, sample, threshold
from .events import (
    BlockingQuery,
    CrossingQuery,
    SeparatingQuery,
    TwoArmQuery,
    build_detector,
    crossing_event,
    dual_blocking_event,
    separating_event,
    two_arm_event,
)
from .arms import ArmSpec, arm_event, arm_probability_scan, coarse_six_arm
from .estimators import (
    Estimate,
    Profile,
    critical_bisection,
    estimate,
    exact_probability,
    exponent_fit,
    first_difference,
    second_difference,
    second_difference_identity,
    separating_profile,
    wilson_interval,
)
from .conformal import PHI1_ANGLE, PHI1_PRINTED, PHI2, SCMap, cardy_comparison, composite, sc_inverse, sc_value
from .runner import ExperimentConfig, run, verify
