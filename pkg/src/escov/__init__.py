"""Covariance estimation and detection under elliptically symmetric models.

Tyler's distribution-free fixed point and its wrapper form, the radial
M-estimator family with geodesic shooting for sign-changing scores, the
Burg-Tyler Toeplitz-constrained estimator, GLR detection statistics with
analytic or Monte-Carlo thresholds, and a reproducible simulation
harness for detection-probability curves.

The hot kernels run through numba when available; set
ESCOV_BACKEND=numpy to force the pure numpy fallback.
"""

from .errors import (
    CollinearSaturation,
    DegenerateSampleSet,
    DegenerateSegment,
    DimensionMismatch,
    EscovError,
    FileFormatError,
    InsufficientTrials,
    InvalidGeometry,
    InvalidScore,
    NoConvergence,
    NotPositiveDefinite,
    ZeroSample,
)
from .linalg import (
    HermitianPD,
    Normalization,
    as_matrix,
    cholesky,
    geodesic_dist2,
    hermitianize,
    matrix_exp,
    matrix_log,
    matrix_sqrt,
    normalize,
    quad_form,
)
from .samples import Field, SampleSet
from .scores import (
    RadialScore,
    circular_gaussian_score,
    gaussian_score,
    named_score,
    t_score,
)
from .estimators import (
    FitInfo,
    IterationControl,
    cg_cov,
    empirical_radial,
    loglik_concentrated,
    m_cov,
    m_exp_cov,
    m_of,
    scm,
    tyler_fixed_point,
    tyler_of,
)
from .toeplitz import (
    SchurModel,
    burg_multisegment,
    burg_tyler,
    schur_distance,
    schur_to_ar,
    toeplitz_covariance,
    trench_inverse,
)
from .detectors import (
    DetectionReport,
    SteeringVector,
    empirical_threshold,
    glr_cg,
    glr_g,
    matched_filter,
    nmf,
    nmf_multichannel,
    nmf_phi,
    required_h0_trials,
    threshold_from_pfa,
)
from .simulate import (
    CurvePoint,
    DetectorCurve,
    ScenarioConfig,
    ScenarioResult,
    TextureSpec,
    gen_circular_gaussian,
    gen_compound_gaussian,
    gen_target,
    resolve_correlation,
    run_scenario,
    write_curves_csv,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CollinearSaturation",
    "CurvePoint",
    "DegenerateSampleSet",
    "DegenerateSegment",
    "DetectionReport",
    "DetectorCurve",
    "DimensionMismatch",
    "EscovError",
    "Field",
    "FileFormatError",
    "FitInfo",
    "HermitianPD",
    "InsufficientTrials",
    "InvalidGeometry",
    "InvalidScore",
    "IterationControl",
    "NoConvergence",
    "Normalization",
    "NotPositiveDefinite",
    "RadialScore",
    "SampleSet",
    "ScenarioConfig",
    "ScenarioResult",
    "SchurModel",
    "SteeringVector",
    "TextureSpec",
    "ZeroSample",
    "as_matrix",
    "burg_multisegment",
    "burg_tyler",
    "cg_cov",
    "cholesky",
    "circular_gaussian_score",
    "empirical_radial",
    "empirical_threshold",
    "gaussian_score",
    "gen_circular_gaussian",
    "gen_compound_gaussian",
    "gen_target",
    "geodesic_dist2",
    "glr_cg",
    "glr_g",
    "hermitianize",
    "loglik_concentrated",
    "m_cov",
    "m_exp_cov",
    "m_of",
    "matched_filter",
    "matrix_exp",
    "matrix_log",
    "matrix_sqrt",
    "named_score",
    "nmf",
    "nmf_multichannel",
    "nmf_phi",
    "normalize",
    "quad_form",
    "required_h0_trials",
    "resolve_correlation",
    "run_scenario",
    "schur_distance",
    "schur_to_ar",
    "scm",
    "t_score",
    "threshold_from_pfa",
    "toeplitz_covariance",
    "trench_inverse",
    "tyler_fixed_point",
    "tyler_of",
    "write_curves_csv",
]
