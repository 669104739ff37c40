"""Nonparametric specification tests for time-varying coefficient regression.

The package tests whether the coefficient curves of
y_i = x_i' beta(t_i) + eps_i, observed on the grid t_i = i/n, match a known
or parametric form, with errors that may be non-stationary, temporally
dependent and correlated with the regressors.  Calibration is by a robust
wild bootstrap built on a Gaussian quadratic-form approximation of the
bandwidth-averaged RSS statistic, with plug-in asymptotics and the classic
i.i.d. residual bootstrap available for comparison.
"""

__version__ = "0.1.0"

from .calibrate import (
    GaussianQuadraticForm,
    TestOutcome,
    asym_pvalue_averaged,
    asym_pvalue_single,
    component_variance_diagnostic,
    iid_residual_bootstrap_pvalue,
    wild_bootstrap_component_pvalue,
    wild_bootstrap_pvalue,
)
from .data import BandwidthGrid, TimeSeriesSample
from .dgp import DgpSpec, Scenario, simulate_custom, simulate_scenario
from .errors import (
    AllSingularError,
    BadDrawCountError,
    BadRangeError,
    BadSizeError,
    BadWindowError,
    EmptyWeightError,
    FamilyFitError,
    NonpositiveError,
    NoRateFormError,
    NotSymmetricError,
    SingularDesignError,
    TvcspecError,
    ZeroResidualError,
)
from .glrt import StatisticValue, averaged_statistic, glrt_component, glrt_single, prewhiten
from .kernels import (
    Kernel,
    averaged_contrast_l2,
    averaged_contrast_profile,
    custom_kernel,
    get_kernel,
)
from .loclin import (
    LocalLinearFit,
    NullSpec,
    ParametricFamily,
    constant_family,
    design_moment,
    gcv_bandwidth,
    gcv_test_bandwidth,
    linear_family,
    local_linear_fit,
    response_moment,
    rss_null,
    zero_family,
)
from .lrcov import LongRunCov, longrun_cov, psd_sqrt
from .mc import ExperimentConfig, ExperimentReport, SizeStudyReport, run_experiment, run_size_study
from .power import (
    PowerSpec,
    averaged_vs_single_power_ratio,
    f_functionals,
    local_power_averaged,
    local_power_single,
    optimal_c,
    power_ratio_curve,
)
