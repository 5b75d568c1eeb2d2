"""confkit: eccentricity analysis of maps between spaces of different
dimension, induced plane fields with integrability and holonomy tests,
horizontal path lifting, staircase surface sweeps with intrinsic growth
measurement, and discrete conformal modulus estimation."""

__version__ = "0.1.0"

from .analysis import (
    EccentricitySpectrum,
    HConditionReport,
    QcProfile,
    SamplingPlan,
    TripleSampler,
    eccentricity_at,
    global_qc_profile,
    h_condition_test,
)
from .distribution import (
    CoframeField,
    DistributionFrame,
    LiftOptions,
    LiftedPath,
    angle_regularity,
    contact_coframe,
    frame_at,
    frobenius_residual,
    holonomy_defect,
    lift_path,
    lift_vector,
    vertical_coframe,
)
from .maps import MapSpec, builtin, compose, parse_map, registry_listing
from .modulus import (
    CellComplex,
    Curve,
    CurveFamily,
    DensityField,
    ModulusEstimate,
    annulus_complex,
    family_annulus,
    family_lifted_rays,
    family_rectangle,
    grid_complex,
    modulus,
    parabolicity_bound,
    radial_complex,
)
from .staircase import (
    GrowthProfile,
    StaircaseConfig,
    StaircaseSurface,
    build_staircase,
    growth_profile,
    restriction_eccentricity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
