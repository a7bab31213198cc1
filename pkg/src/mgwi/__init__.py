"""Count time series built on geometric min-thinning.

Stationary and covariate-driven integer autoregressions whose offspring
step replaces binomial thinning with min(X, Z) for a geometric (or
zero-modified geometric) Z, giving nonlinear conditional means. Includes
exact simulation, CLS/MLE estimation with bootstrap standard errors, a
Poisson INAR(1) baseline, residual diagnostics, and a Monte Carlo study
harness; see the ``mgwi`` command-line tool for the packaged workflows.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .datasets import hansen_series
from .diagnostics import (
    ResidualSeries,
    describe,
    pearson_residuals,
    pseudo_residuals,
    sample_acf_pacf,
    sspe,
)
from .distributions import (
    GeoParams,
    ZmgParams,
    geo_cdf,
    geo_moments,
    geo_pgf,
    geo_pmf,
    geo_sample,
    geo_sf,
    zmg_cdf,
    zmg_moments,
    zmg_pgf,
    zmg_pmf,
    zmg_sample,
    zmg_sf,
)
from .estimation import (
    FitResult,
    bootstrap_se,
    cls_gradient,
    cls_objective,
    fit_cls,
    fit_mle,
    loglik,
    moment_start,
)
from .montecarlo import McTable, Scenario, builtin_scenario, run_study
from .process import (
    CountSeries,
    GeoMgwiModel,
    autocorr,
    autocov,
    cond_mean,
    cond_mean_k,
    cond_var,
    joint_pgf,
    simulate,
    transition_matrix,
    transition_prob,
)
from .regression import (
    PredictionRecord,
    RegressionModel,
    bootstrap_se_nonstat,
    build_design,
    fit_nonstat,
    fit_pinar_cls,
    nonstat_cond_mean,
    nonstat_cond_var,
    predict,
    simulate_nonstat,
    simulate_pinar,
)
from .thinning import (
    ThinKind,
    ThinningSpec,
    thin_factorial_moment,
    thin_marginal_closure,
    thin_min_closure,
    thin_pgf,
    thin_pmf,
    thin_sample,
)
from .zmg_process import (
    InfeasibleModelError,
    ZmgMgwiModel,
    innovation_components,
    simulate_zmg_mgwi,
    zmg_mgwi_feasible,
)

__version__ = "0.1.0"
