"""Upper bounds for polynomial minimization from sum-of-squares densities and needle polynomials."""

from .bounds import (
    BoundResult,
    BoundSeries,
    ConvexBody,
    GradedSolver,
    MomentMatrixPair,
    NeedleBound,
    assemble,
    needle_bound,
    needle_bound_details,
    rate_fit,
    solve,
    upper_bound_series,
)
from .domains import (
    CHEBYSHEV,
    LEBESGUE,
    Ball,
    Box,
    ConeConstants,
    DomainSpec,
    MeasureSpec,
    Polygon,
    Simplex,
    affine_map,
    ball_jacobi,
    box_jacobi,
    cone_constants,
    regular_octagon,
    triangulate,
)
from .errors import *  # noqa: F401,F403
from .estimators import (
    AffineMap,
    LipschitzBound,
    lipschitz_estimator,
    linear_estimator_on_ball,
    quadratic_estimator,
    recentre,
)
from .moments import MomentOracle, NormalizationConstant, normalization_constant, reduce_ball_to_interval
from .needles import (
    ConvexMultivariate,
    ConvexUnivariate,
    InteriorCone,
    MultiNeedleSpec,
    NeedleSpec,
    RadialNeedle,
    h_schedule,
    householder_frame,
    integrate_against,
    lambda_lower,
    multineedle_eval,
    needle,
    needle_eval,
)
from .poly import Polynomial, SmoothnessConstants, compose_affine, evaluate, gradient, hessian, smoothness_constants

__version__ = "0.1.0"
