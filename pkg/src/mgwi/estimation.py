"""Conditional least squares and maximum likelihood for the stationary model.

Both fits run a quasi-Newton search on log-parameters (so the positivity
constraints never bind), with a Nelder-Mead fallback when the line search
stalls. CLS uses the analytic gradient of the squared prediction error
sum; MLE differentiates numerically. Standard errors come from the
numeric Hessian (MLE) or a parametric bootstrap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .distributions import GeoParams, geo_logpmf, geo_sample, poisson_sample
from .process import CountSeries, GeoMgwiModel, simulate, transition_matrix
from . import _kernels

__all__ = [
    "FitResult",
    "moment_start",
    "cls_objective",
    "cls_gradient",
    "fit_cls",
    "loglik",
    "fit_mle",
    "bootstrap_se",
]

_DEFAULT_OPTIONS = {"gtol": 1e-8, "maxiter": 500}


@dataclass
class FitResult:
    """Estimates plus convergence metadata from one fit."""

    estimates: dict[str, float]
    std_errors: dict[str, float] | None
    objective: float
    converged: bool
    iterations: int
    method: str
    message: str = ""


def moment_start(series: CountSeries) -> tuple[float, float]:
    """Method-of-moments starting point.

    mu0 is the sample mean; alpha0 solves
    rho(1) = alpha (1 + alpha) / (1 + mu0 + alpha)^2 against the sample
    lag-1 autocorrelation (the map is increasing in alpha), falling back
    to alpha0 = 1 when the sample value is outside the attainable range.
    """
    x = series.values.astype(float)
    mu0 = max(float(x.mean()), 1e-3)
    alpha0 = 1.0
    centered = x - x.mean()
    denom = float(np.sum(centered**2))
    if denom > 0 and len(x) >= 3:
        rho1 = float(np.sum(centered[1:] * centered[:-1])) / denom

        def gap(a: float) -> float:
            return a * (1.0 + a) / (1.0 + mu0 + a) ** 2 - rho1

        if 0.0 < rho1 and gap(1e6) > 0:
            alpha0 = float(brentq(gap, 1e-9, 1e6))
    return mu0, alpha0


def cls_objective(series: CountSeries, mu: float, alpha: float) -> float:
    """Sum of squared one-step prediction errors."""
    if len(series) < 2:
        raise ValueError("series must have length >= 2")
    x = series.values.astype(float)
    astar = alpha / (1.0 + alpha)
    pred = alpha * (1.0 - astar ** x[:-1]) + mu * (1.0 + mu) / (1.0 + mu + alpha)
    resid = x[1:] - pred
    return float(np.sum(resid * resid))


def cls_gradient(series: CountSeries, mu: float, alpha: float) -> np.ndarray:
    """Analytic gradient (dQ/dmu, dQ/dalpha) of :func:`cls_objective`."""
    if len(series) < 2:
        raise ValueError("series must have length >= 2")
    x = series.values.astype(float)
    xp = x[:-1]
    astar = alpha / (1.0 + alpha)
    mu_eps = mu * (1.0 + mu) / (1.0 + mu + alpha)
    resid = x[1:] - alpha * (1.0 - astar**xp) - mu_eps
    dmu = -2.0 * (1.0 - alpha * (1.0 + alpha) / (1.0 + mu + alpha) ** 2) * float(
        np.sum(resid)
    )
    dalpha_term = (
        1.0
        - astar**xp * (1.0 + xp / (1.0 + alpha))
        - mu * (1.0 + mu) / (1.0 + mu + alpha) ** 2
    )
    dalpha = -2.0 * float(np.sum(resid * dalpha_term))
    return np.array([dmu, dalpha])


def _quasi_newton(fun, jac, theta0_log, gtol, maxiter):
    """BFGS on log-parameters with a Nelder-Mead rescue on failure."""
    res = minimize(
        fun, theta0_log, jac=jac, method="BFGS",
        options={"gtol": gtol, "maxiter": maxiter},
    )
    iterations = int(res.nit)
    if not res.success:
        rescue = minimize(
            fun, res.x, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 2000, "maxfev": 4000},
        )
        iterations += int(rescue.nit)
        if rescue.fun <= res.fun:
            res = rescue
    return res, iterations


def fit_cls(
    series: CountSeries,
    init: tuple[float, float] | None = None,
    options: dict | None = None,
) -> FitResult:
    """Minimize the squared prediction error sum over (mu, alpha).

    A zero-variance series leaves a ridge of equivalent minimizers, so it
    is reported as non-converged with a diagnostic instead of an arbitrary
    answer.
    """
    if len(series) < 2:
        raise ValueError("series must have length >= 2")
    opts = {**_DEFAULT_OPTIONS, **(options or {})}
    x = series.values
    if np.all(x == x[0]):
        return FitResult(
            estimates={"mu": float("nan"), "alpha": float("nan")},
            std_errors=None,
            objective=float("nan"),
            converged=False,
            iterations=0,
            method="CLS",
            message="degenerate series: zero sample variance, CLS surface is flat",
        )
    theta0 = np.log(np.asarray(init if init is not None else moment_start(series)))

    def fun(psi):
        mu, alpha = np.exp(psi)
        return cls_objective(series, mu, alpha)

    def jac(psi):
        theta = np.exp(psi)
        return cls_gradient(series, theta[0], theta[1]) * theta

    res, iterations = _quasi_newton(fun, jac, theta0, opts["gtol"], opts["maxiter"])
    mu, alpha = np.exp(res.x)
    return FitResult(
        estimates={"mu": float(mu), "alpha": float(alpha)},
        std_errors=None,
        objective=float(res.fun),
        converged=bool(res.success),
        iterations=iterations,
        method="CLS",
        message="" if res.success else str(res.message),
    )


def loglik(
    series: CountSeries, mu: float, alpha: float, include_marginal: bool = True
) -> float:
    """Log-likelihood from the one-step transition probabilities.

    ``include_marginal=False`` drops the stationary log-probability of the
    first observation, leaving the purely conditional likelihood. All
    transitions have positive probability for valid parameters; a floor
    guards against floating-point underflow far from the data scale.
    """
    x = series.values
    model = GeoMgwiModel(mu, alpha)
    total = 0.0
    if len(x) >= 2:
        T = transition_matrix(model, int(x.max()) + 1)
        steps = T[x[:-1], x[1:]]
        total = float(np.sum(np.log(np.maximum(steps, 1e-300))))
    if include_marginal:
        total = total + float(geo_logpmf(GeoParams(mu), int(x[0])))
    return total


def _hessian(fun, theta, rel_step=1e-4):
    """Central-difference Hessian of ``fun`` at ``theta``."""
    d = len(theta)
    h = rel_step * np.maximum(np.abs(theta), 1e-3)
    H = np.empty((d, d))
    f0 = fun(theta)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h[i]
        H[i, i] = (fun(theta + ei) - 2.0 * f0 + fun(theta - ei)) / h[i] ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                fun(theta + ei + ej)
                - fun(theta + ei - ej)
                - fun(theta - ei + ej)
                + fun(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def hessian_std_errors(fun_nll, theta: np.ndarray) -> np.ndarray | None:
    """Standard errors from the inverse Hessian of a negative log-likelihood."""
    H = _hessian(fun_nll, np.asarray(theta, dtype=float))
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(cov)
    if np.any(~np.isfinite(diag)) or np.any(diag <= 0):
        return None
    return np.sqrt(diag)


def fit_mle(
    series: CountSeries,
    init: tuple[float, float] | None = None,
    options: dict | None = None,
) -> FitResult:
    """Maximize the transition-probability log-likelihood over (mu, alpha).

    Standard errors use the numeric Hessian at the optimum in natural
    parameter space; a singular Hessian leaves them absent with a note.
    """
    if len(series) < 2:
        raise ValueError("series must have length >= 2")
    opts = {**_DEFAULT_OPTIONS, **(options or {})}
    include_marginal = opts.get("include_marginal", True)
    theta0 = np.log(np.asarray(init if init is not None else moment_start(series)))

    def fun(psi):
        mu, alpha = np.exp(psi)
        return -loglik(series, mu, alpha, include_marginal=include_marginal)

    res, iterations = _quasi_newton(fun, None, theta0, opts["gtol"], opts["maxiter"])
    mu, alpha = np.exp(res.x)

    se = hessian_std_errors(
        lambda th: -loglik(series, th[0], th[1], include_marginal=include_marginal),
        np.array([mu, alpha]),
    )
    message = "" if res.success else str(res.message)
    std_errors = None
    if se is not None:
        std_errors = {"mu": float(se[0]), "alpha": float(se[1])}
    else:
        message = (message + "; " if message else "") + "singular Hessian, no standard errors"
    return FitResult(
        estimates={"mu": float(mu), "alpha": float(alpha)},
        std_errors=std_errors,
        objective=float(-res.fun),
        converged=bool(res.success),
        iterations=iterations,
        method="MLE",
        message=message,
    )


def _simulate_poisson_innovations(
    mu: float, alpha: float, n: int, rng: np.random.Generator
) -> CountSeries:
    """Thinning recursion with Poisson innovations of matching mean.

    Keeps the conditional-mean form of the geometric-marginal model while
    replacing the innovation law; used as a bootstrap generator for data
    whose counts are too large for a geometric marginal.
    """
    mu_eps = mu * (1.0 + mu) / (1.0 + mu + alpha)
    x1 = poisson_sample(mu, rng)
    if n == 1:
        return CountSeries(np.array([x1], dtype=np.int64))
    z = geo_sample(GeoParams(alpha), rng, size=n - 1)
    eps = poisson_sample(np.full(n - 1, mu_eps), rng, size=n - 1)
    return CountSeries(_kernels.min_thin_scan(x1, z, eps))


_GENERATORS = {
    "geo-mgwi": lambda mu, alpha, n, rng: simulate(GeoMgwiModel(mu, alpha), n, rng),
    "poisson-mgwi": _simulate_poisson_innovations,
}


def _bootstrap_rep(mu, alpha, n, method, rng, generative):
    sim = _GENERATORS[generative](mu, alpha, n, rng)
    fitter = fit_cls if method == "CLS" else fit_mle
    try:
        result = fitter(sim, init=(mu, alpha))
    except (ValueError, FloatingPointError):
        return None
    if not result.converged:
        return None
    return (result.estimates["mu"], result.estimates["alpha"])


def bootstrap_se(
    series: CountSeries,
    fitted: FitResult,
    B: int,
    rng: np.random.Generator,
    generative: str = "geo-mgwi",
    n_jobs: int = 1,
    max_dropped_frac: float = 0.2,
) -> dict[str, float]:
    """Parametric-bootstrap standard errors for a stationary fit.

    Simulates ``B`` series of the observed length from the fitted
    generative model, refits each with the same method, and returns the
    per-parameter standard deviation. Replications that fail to converge
    are dropped and counted; more than ``max_dropped_frac`` dropped is an
    error.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    if not fitted.converged:
        raise ValueError("bootstrap requires a converged fit")
    if generative not in _GENERATORS:
        raise ValueError(f"unknown generative model {generative!r}")
    mu = fitted.estimates["mu"]
    alpha = fitted.estimates["alpha"]
    n = len(series)
    streams = rng.spawn(B)
    args = [(mu, alpha, n, fitted.method, s, generative) for s in streams]
    if n_jobs != 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_bootstrap_rep)(*a) for a in args
        )
    else:
        results = [_bootstrap_rep(*a) for a in args]
    kept = np.array([r for r in results if r is not None], dtype=float)
    dropped = B - kept.shape[0]
    if dropped > max_dropped_frac * B:
        raise RuntimeError(
            f"{dropped}/{B} bootstrap replications failed to converge"
        )
    se = kept.std(axis=0, ddof=1)
    return {"mu": float(se[0]), "alpha": float(se[1]), "dropped": float(dropped)}
