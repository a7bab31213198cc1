"""Covariate-driven, non-stationary variants and the Poisson INAR baseline.

The min-thinning model takes log links mu_t = exp(w_t' beta) and
alpha_t = exp(v_t' gamma); the Poisson INAR(1) baseline keeps the log link
for mu_t but a logistic link for alpha_t in (0, 1). Fits run over the
coefficient vectors jointly with central-difference gradients; prediction
and the sum of squared prediction errors (SSPE) use the one-step
conditional mean of whichever model is fitted.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from . import _kernels
from .distributions import (
    GeoParams,
    geo_logpmf,
    geo_sample,
    poisson_sample,
    zmg_sample_path,
)
from .estimation import FitResult, hessian_std_errors, moment_start
from .process import CountSeries

__all__ = [
    "RegressionModel",
    "PredictionRecord",
    "build_design",
    "simulate_nonstat",
    "nonstat_cond_mean",
    "nonstat_cond_var",
    "fit_nonstat",
    "fit_pinar_cls",
    "predict",
    "simulate_pinar",
    "bootstrap_se_nonstat",
    "COVARIATE_TERMS",
]

_FD_STEP = 1e-6  # central-difference step on the coefficient scale


def _intercept(t: np.ndarray, n: int) -> np.ndarray:
    return np.ones_like(t, dtype=float)


COVARIATE_TERMS = {
    "intercept": _intercept,
    "t-over-n": lambda t, n: t / float(n),
    "t-over-252": lambda t, n: t / 252.0,
    "cos-12": lambda t, n: np.cos(2.0 * np.pi * t / 12.0),
}


def build_design(n: int, terms: tuple[str, ...] | list[str]) -> np.ndarray:
    """Design matrix for t = 1..n with named columns from COVARIATE_TERMS."""
    t = np.arange(1, n + 1, dtype=float)
    cols = []
    for name in terms:
        if name not in COVARIATE_TERMS:
            raise ValueError(
                f"unknown covariate term {name!r}; available: {sorted(COVARIATE_TERMS)}"
            )
        cols.append(COVARIATE_TERMS[name](t, n))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class RegressionModel:
    """Coefficient vectors and covariate matrices for a time-varying model.

    ``kind`` selects the conditional-mean family: "mgwi" (min-thinning,
    both links exponential) or "pinar" (Poisson INAR baseline, logistic
    link for alpha_t).
    """

    kind: str
    beta: np.ndarray
    gamma: np.ndarray
    W: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in ("mgwi", "pinar"):
            raise ValueError(f"kind must be 'mgwi' or 'pinar', got {self.kind!r}")
        for name in ("beta", "gamma", "W", "V"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.W.ndim != 2 or self.V.ndim != 2:
            raise ValueError("W and V must be 2-D covariate matrices")
        if self.W.shape[0] != self.V.shape[0]:
            raise ValueError("W and V must cover the same time range")
        if self.beta.shape != (self.W.shape[1],):
            raise ValueError(
                f"beta has length {self.beta.size}, W has {self.W.shape[1]} columns"
            )
        if self.gamma.shape != (self.V.shape[1],):
            raise ValueError(
                f"gamma has length {self.gamma.size}, V has {self.V.shape[1]} columns"
            )
        for label, mat in (("W", self.W), ("V", self.V)):
            if np.linalg.matrix_rank(mat) < mat.shape[1]:
                warnings.warn(f"covariate matrix {label} is rank deficient")

    @property
    def n(self) -> int:
        return int(self.W.shape[0])

    def mu_path(self) -> np.ndarray:
        return np.exp(self.W @ self.beta)

    def alpha_path(self) -> np.ndarray:
        lin = self.V @ self.gamma
        return np.exp(lin) if self.kind == "mgwi" else expit(lin)

    def with_coefficients(self, beta, gamma) -> "RegressionModel":
        return RegressionModel(self.kind, beta, gamma, self.W, self.V)


@dataclass(frozen=True)
class PredictionRecord:
    """One-step prediction at time t (1-based, t >= 2)."""

    t: int
    observed: int
    predicted_mean: float
    predicted_var: float | None = None

    def __post_init__(self) -> None:
        if self.predicted_var is not None and self.predicted_var < 0:
            raise ValueError("predicted_var must be nonnegative")


def _innovation_pi(mu: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return alpha / (1.0 + alpha + mu)


def _cond_mean_path(kind: str, mu, alpha, x_prev):
    """Conditional mean at each step given the previous count."""
    x_prev = np.asarray(x_prev, dtype=float)
    if kind == "mgwi":
        astar = alpha / (1.0 + alpha)
        return alpha * (1.0 - astar**x_prev) + mu * (1.0 + mu) / (1.0 + mu + alpha)
    return alpha * x_prev + mu * (1.0 - alpha)


def _cond_var_path_mgwi(mu, alpha, x_prev):
    x_prev = np.asarray(x_prev, dtype=float)
    astar = alpha / (1.0 + alpha)
    pw = astar**x_prev
    pi = _innovation_pi(mu, alpha)
    sigma2 = (1.0 - pi) * mu * (1.0 + mu + pi * mu)
    return alpha * (1.0 - pw) * (1.0 + alpha * (1.0 + pw)) - 2.0 * alpha * x_prev * pw + sigma2


def simulate_nonstat(model: RegressionModel, rng: np.random.Generator) -> CountSeries:
    """Simulate the time-varying min-thinning process over the design range.

    Starts from Geo(mu_1) and applies the recursion with Geo(alpha_t)
    thinning draws and innovations targeting the Geo(mu_t) profile. The
    marginal claim is exact under constant covariates and approximate
    when the paths move quickly. Stream order: start value, thinning
    block, innovation block.
    """
    if model.kind != "mgwi":
        raise ValueError("simulate_nonstat expects the 'mgwi' kind")
    mu = model.mu_path()
    alpha = model.alpha_path()
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha))):
        raise ValueError("links evaluate to non-finite values")
    n = model.n
    x1 = geo_sample(GeoParams(mu[0]), rng)
    if n == 1:
        return CountSeries(np.array([x1], dtype=np.int64))
    z = rng.geometric(1.0 / (1.0 + alpha[1:])).astype(np.int64) - 1
    eps = zmg_sample_path(_innovation_pi(mu[1:], alpha[1:]), mu[1:], rng)
    return CountSeries(_kernels.min_thin_scan(x1, z, eps))


def nonstat_cond_mean(model: RegressionModel, x_prev: int, t: int) -> float:
    """E(X_t | X_{t-1} = x_prev) at 1-based time t in 2..n."""
    if not 2 <= t <= model.n:
        raise ValueError(f"t must lie in 2..{model.n}")
    if x_prev < 0:
        raise ValueError("x_prev must be nonnegative")
    mu = float(model.mu_path()[t - 1])
    alpha = float(model.alpha_path()[t - 1])
    return float(_cond_mean_path(model.kind, mu, alpha, x_prev))


def nonstat_cond_var(model: RegressionModel, x_prev: int, t: int) -> float:
    """Var(X_t | X_{t-1} = x_prev); defined for the mgwi kind."""
    if model.kind != "mgwi":
        raise ValueError("conditional variance is provided for the 'mgwi' kind")
    if not 2 <= t <= model.n:
        raise ValueError(f"t must lie in 2..{model.n}")
    mu = float(model.mu_path()[t - 1])
    alpha = float(model.alpha_path()[t - 1])
    return float(_cond_var_path_mgwi(mu, alpha, x_prev))


# ---------------------------------------------------------------------------
# likelihood machinery for the time-varying model
# ---------------------------------------------------------------------------


def _nonstat_loglik(x: np.ndarray, mu: np.ndarray, alpha: np.ndarray) -> float:
    """Transition log-likelihood plus the Geo(mu_1) term for x_1.

    Transitions are evaluated in a vectorized band over the convolution
    index; entries are exact, with an underflow floor far from the data
    scale.
    """
    xp = x[:-1].astype(np.int64)
    xc = x[1:].astype(np.int64)
    mu_t = mu[1:]
    al_t = alpha[1:]
    pi_t = _innovation_pi(mu_t, al_t)

    kmax = int(np.maximum(np.minimum(xp - 1, xc), -1).max())
    p = np.zeros(len(xc))
    if kmax >= 0:
        k = np.arange(kmax + 1)
        log_qz = np.log(al_t) - np.log1p(al_t)
        lpz = k[None, :] * log_qz[:, None] - np.log1p(al_t)[:, None]
        m = xc[:, None] - k[None, :]
        valid = (m >= 0) & (k[None, :] <= np.minimum(xp - 1, xc)[:, None])
        mc = np.clip(m, 0, None).astype(float)
        log_qe = np.log(mu_t) - np.log1p(mu_t)
        lpe = np.log1p(-pi_t)[:, None] + mc * log_qe[:, None] - np.log1p(mu_t)[:, None]
        pe0 = (pi_t + (1.0 - pi_t) / (1.0 + mu_t))[:, None]
        pe = np.where(mc == 0, pe0, np.exp(lpe))
        p = np.sum(np.where(valid, np.exp(lpz) * pe, 0.0), axis=1)

    # survival term when the step does not fall below the previous count
    me = xc - xp
    sfz = np.exp(xp * (np.log(al_t) - np.log1p(al_t)))  # P(Z_t >= xp)
    mec = np.clip(me, 0, None).astype(float)
    pe_tail = np.where(
        mec == 0,
        pi_t + (1.0 - pi_t) / (1.0 + mu_t),
        np.exp(np.log1p(-pi_t) + mec * (np.log(mu_t) - np.log1p(mu_t)) - np.log1p(mu_t)),
    )
    p = p + np.where(me >= 0, sfz * pe_tail, 0.0)
    total = float(np.sum(np.log(np.maximum(p, 1e-300))))
    total += float(geo_logpmf(GeoParams(float(mu[0])), int(x[0])))
    return total


def _central_diff_jac(fun, step=_FD_STEP):
    def jac(theta):
        g = np.empty_like(theta)
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = step
            g[i] = (fun(theta + e) - fun(theta - e)) / (2.0 * step)
        return g

    return jac


def _polish(fun, x0, cycles=3):
    """Alternate BFGS and Nelder-Mead until the objective stops moving."""
    best_x = np.asarray(x0, dtype=float)
    best_f = fun(best_x)
    extra_iter = 0
    for _ in range(cycles):
        r1 = minimize(fun, best_x, method="BFGS", options={"gtol": 1e-10, "maxiter": 1000})
        r2 = minimize(
            fun,
            r1.x,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 20000, "maxfev": 20000},
        )
        extra_iter += int(r1.nit) + int(r2.nit)
        if r2.fun >= best_f - 1e-10:
            best_x, best_f = (r2.x, float(r2.fun)) if r2.fun < best_f else (best_x, best_f)
            break
        best_x, best_f = r2.x, float(r2.fun)
    return best_x, best_f, extra_iter


def _default_init(series: CountSeries, model: RegressionModel) -> np.ndarray:
    """Warm start: stationary moment estimates through the links, slopes 0."""
    mu0, alpha0 = moment_start(series)
    p = model.W.shape[1]
    q = model.V.shape[1]
    beta0 = np.zeros(p)
    gamma0 = np.zeros(q)
    beta0[0] = np.log(mu0)
    if model.kind == "mgwi":
        gamma0[0] = np.log(alpha0)
    else:
        x = series.values.astype(float)
        centered = x - x.mean()
        denom = float(np.sum(centered**2))
        rho1 = float(np.sum(centered[1:] * centered[:-1])) / denom if denom > 0 else 0.5
        rho1 = min(max(rho1, 0.05), 0.95)
        gamma0[0] = np.log(rho1 / (1.0 - rho1))
    return np.concatenate([beta0, gamma0])


def _fit_regression(
    series: CountSeries,
    model: RegressionModel,
    method: str,
    init,
    options,
) -> FitResult:
    method = method.upper()
    if method not in ("CLS", "MLE"):
        raise ValueError("method must be 'cls' or 'mle'")
    x = series.values
    n = len(x)
    if n < 2:
        raise ValueError("series must have length >= 2")
    if model.n != n:
        raise ValueError(
            f"covariate matrices cover {model.n} steps but the series has {n}"
        )
    opts = {"gtol": 1e-5, "maxiter": 500, "polish": False, **(options or {})}
    p = model.W.shape[1]
    W, V = model.W, model.V
    kind = model.kind

    def paths(theta):
        mu = np.exp(W @ theta[:p])
        lin = V @ theta[p:]
        alpha = np.exp(lin) if kind == "mgwi" else expit(lin)
        return mu, alpha

    def in_domain(mu, alpha):
        if not (np.all(np.isfinite(mu)) and np.all(mu > 0)):
            return False
        if kind == "mgwi":
            return bool(np.all(np.isfinite(alpha)) and np.all(alpha > 0))
        return bool(np.all(alpha > 0.0) and np.all(alpha < 1.0))

    if method == "CLS":

        def fun(theta):
            mu, alpha = paths(theta)
            if not in_domain(mu, alpha):
                return np.inf
            resid = x[1:] - _cond_mean_path(kind, mu[1:], alpha[1:], x[:-1])
            return float(np.sum(resid * resid))

    else:
        if kind != "mgwi":
            raise ValueError("likelihood fitting is provided for the 'mgwi' kind")

        def fun(theta):
            mu, alpha = paths(theta)
            if not in_domain(mu, alpha):
                return np.inf
            return -_nonstat_loglik(x, mu, alpha)

    theta0 = np.asarray(init, dtype=float) if init is not None else _default_init(series, model)
    if theta0.size != p + V.shape[1]:
        raise ValueError("init has the wrong length")

    res = minimize(
        fun,
        theta0,
        jac=_central_diff_jac(fun),
        method="BFGS",
        options={"gtol": opts["gtol"], "maxiter": opts["maxiter"]},
    )
    iterations = int(res.nit)
    best_x, best_f, success = res.x, float(res.fun), bool(res.success)
    if not success:
        rescue = minimize(
            fun, best_x, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 5000, "maxfev": 10000},
        )
        iterations += int(rescue.nit)
        if rescue.fun <= best_f:
            best_x, best_f, success = rescue.x, float(rescue.fun), bool(rescue.success)
    if opts["polish"]:
        best_x, best_f, extra = _polish(fun, best_x)
        iterations += extra
        success = True

    names = [f"beta{i}" for i in range(p)] + [f"gamma{i}" for i in range(V.shape[1])]
    estimates = dict(zip(names, (float(v) for v in best_x)))
    std_errors = None
    message = "" if success else str(res.message)
    if method == "MLE":
        se = hessian_std_errors(fun, best_x)
        if se is not None:
            std_errors = dict(zip(names, (float(v) for v in se)))
        else:
            message = (message + "; " if message else "") + (
                "singular Hessian, no standard errors"
            )
    objective = -best_f if method == "MLE" else best_f
    return FitResult(
        estimates=estimates,
        std_errors=std_errors,
        objective=float(objective),
        converged=success,
        iterations=iterations,
        method=method,
        message=message,
    )


def fit_nonstat(
    series: CountSeries,
    model: RegressionModel,
    method: str = "cls",
    init=None,
    options: dict | None = None,
) -> FitResult:
    """Fit the time-varying min-thinning model by CLS or MLE.

    ``model`` supplies the covariate matrices and kind; its coefficient
    values are ignored. Pass ``options={"polish": True}`` for the
    high-precision alternating BFGS / Nelder-Mead finish used on real
    data fits.
    """
    if model.kind != "mgwi":
        raise ValueError("fit_nonstat expects the 'mgwi' kind; see fit_pinar_cls")
    return _fit_regression(series, model, method, init, options)


def fit_pinar_cls(
    series: CountSeries,
    model: RegressionModel,
    init=None,
    options: dict | None = None,
) -> FitResult:
    """CLS fit of the Poisson INAR baseline conditional mean."""
    if model.kind != "pinar":
        raise ValueError("fit_pinar_cls expects the 'pinar' kind")
    return _fit_regression(series, model, "cls", init, options)


def predict(model: RegressionModel, series: CountSeries) -> list[PredictionRecord]:
    """One-step predictions at t = 2..n from the model's coefficients."""
    x = series.values
    if model.n != len(x):
        raise ValueError("covariate matrices and series lengths differ")
    mu = model.mu_path()
    alpha = model.alpha_path()
    means = _cond_mean_path(model.kind, mu[1:], alpha[1:], x[:-1])
    if model.kind == "mgwi":
        variances = _cond_var_path_mgwi(mu[1:], alpha[1:], x[:-1])
    records = []
    for i in range(len(x) - 1):
        records.append(
            PredictionRecord(
                t=i + 2,
                observed=int(x[i + 1]),
                predicted_mean=float(means[i]),
                predicted_var=float(variances[i]) if model.kind == "mgwi" else None,
            )
        )
    return records


def simulate_pinar(model: RegressionModel, rng: np.random.Generator) -> CountSeries:
    """Poisson INAR(1) path: binomial thinning plus Poisson innovations.

    X_1 ~ Poisson(mu_1) and X_t = Binomial(X_{t-1}, alpha_t) +
    Poisson(mu_t (1 - alpha_t)); draws alternate per step after the start
    value.
    """
    if model.kind != "pinar":
        raise ValueError("simulate_pinar expects the 'pinar' kind")
    mu = model.mu_path()
    alpha = model.alpha_path()
    n = model.n
    x = np.empty(n, dtype=np.int64)
    x[0] = poisson_sample(mu[0], rng)
    for t in range(1, n):
        survivors = int(rng.binomial(int(x[t - 1]), alpha[t]))
        x[t] = survivors + poisson_sample(mu[t] * (1.0 - alpha[t]), rng)
    return CountSeries(x)


def _simulate_poisson_innov_nonstat(
    model: RegressionModel, rng: np.random.Generator
) -> CountSeries:
    """Min-thinning recursion with Poisson innovations of matching mean.

    Bootstrap generator for high-count data: keeps the conditional mean of
    the mgwi kind while dropping the geometric-marginal assumption.
    """
    mu = model.mu_path()
    alpha = model.alpha_path()
    n = model.n
    mu_eps = mu * (1.0 + mu) / (1.0 + mu + alpha)
    x1 = poisson_sample(mu[0], rng)
    if n == 1:
        return CountSeries(np.array([x1], dtype=np.int64))
    z = rng.geometric(1.0 / (1.0 + alpha[1:])).astype(np.int64) - 1
    eps = poisson_sample(mu_eps[1:], rng, size=n - 1)
    return CountSeries(_kernels.min_thin_scan(x1, z, eps))


_NONSTAT_GENERATORS = {
    "geo-mgwi": simulate_nonstat,
    "poisson-mgwi": _simulate_poisson_innov_nonstat,
    "pinar": simulate_pinar,
}


def _bootstrap_rep_nonstat(model, method, theta, rng, generative):
    sim = _NONSTAT_GENERATORS[generative](model, rng)
    try:
        if model.kind == "pinar":
            result = fit_pinar_cls(sim, model, init=theta)
        else:
            result = fit_nonstat(sim, model, method=method, init=theta)
    except (ValueError, FloatingPointError):
        return None
    if not result.converged:
        return None
    return tuple(result.estimates.values())


def bootstrap_se_nonstat(
    series: CountSeries,
    model: RegressionModel,
    fitted: FitResult,
    B: int,
    rng: np.random.Generator,
    generative: str = "poisson-mgwi",
    n_jobs: int = 1,
    max_dropped_frac: float = 0.2,
) -> dict[str, float]:
    """Parametric-bootstrap standard errors for a regression fit.

    ``generative`` picks the simulator: "geo-mgwi" (ZMG innovations),
    "poisson-mgwi" (Poisson innovations with the same conditional mean,
    for high counts), or "pinar". The fitted coefficients seed both the
    generator and each refit.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    if not fitted.converged:
        raise ValueError("bootstrap requires a converged fit")
    if generative not in _NONSTAT_GENERATORS:
        raise ValueError(f"unknown generative model {generative!r}")
    theta = np.array(list(fitted.estimates.values()), dtype=float)
    p = model.W.shape[1]
    gen_model = model.with_coefficients(theta[:p], theta[p:])
    if generative == "pinar" and model.kind != "pinar":
        raise ValueError("pinar generative model requires a pinar fit")
    streams = rng.spawn(B)
    args = [(gen_model, fitted.method, theta, s, generative) for s in streams]
    if n_jobs != 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_bootstrap_rep_nonstat)(*a) for a in args
        )
    else:
        results = [_bootstrap_rep_nonstat(*a) for a in args]
    kept = np.array([r for r in results if r is not None], dtype=float)
    dropped = B - kept.shape[0]
    if dropped > max_dropped_frac * B:
        raise RuntimeError(f"{dropped}/{B} bootstrap replications failed to converge")
    se = kept.std(axis=0, ddof=1)
    out = {name: float(s) for name, s in zip(fitted.estimates, se)}
    out["dropped"] = float(dropped)
    return out
