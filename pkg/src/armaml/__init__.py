"""Maximum likelihood estimation of ARMA models with multi-start optimization.

The exact Gaussian likelihood is evaluated with a Kalman filter; each fit starts
from the conditional-sum-of-squares estimate and then restarts from random
causal, invertible parameters until ``M`` consecutive restarts fail to improve.
"""

__version__ = "0.1.0"

from .core import (
    ArmaError,
    ArmaOrder,
    ArmaParams,
    BoundaryWarning,
    ConjugacyError,
    DimensionError,
    FitResult,
    InconsistentNestingError,
    NumericalDegeneracyError,
    PreconditionError,
    SamplerExhaustedError,
    SingularInformationWarning,
    StationarityError,
    TimeSeries,
    UnsupportedGapError,
    ValidityReport,
    validate_params,
)
from .inference import (
    AicTable,
    ProfileCurve,
    aic,
    build_aic_table,
    chi2_cutoff,
    fisher_se,
    lr_test,
    profile_ci,
    wald_interval,
)
from .likelihood import css_objective, kalman_loglik
from .multistart import MultistartConfig, fit_multistart, fit_single
from .optimize import OptimizerConfig, maximize_loglik, minimize_css
from .poly import RootSet, coeffs_to_inv_roots, inv_roots_to_coeffs
from .sampler import SamplerConfig, sample_params, sample_root_set
from .sim import GeneratorSpec, StudyReport, random_generator, simulate
