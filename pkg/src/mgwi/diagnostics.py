"""Residual analysis and descriptive statistics.

Pearson residuals standardize one-step prediction errors by the model's
conditional standard deviation. The normal pseudo-residuals draw a
uniform between consecutive values of the fitted conditional cdf and map
it through the standard normal quantile; under a correctly specified
model they are approximately iid standard normal even for counts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .distributions import GeoParams, ZmgParams, geo_pmf, geo_sf, zmg_pmf
from .process import CountSeries, GeoMgwiModel, cond_mean, cond_var, transition_matrix
from .regression import RegressionModel, _cond_mean_path, _cond_var_path_mgwi

__all__ = [
    "ResidualSeries",
    "pearson_residuals",
    "pseudo_residuals",
    "sample_acf_pacf",
    "sspe",
    "describe",
]

_QUANTILE_GUARD = 1e-12  # keeps the normal quantile finite in extreme tails


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    """Residuals aligned to t = 2..n."""

    kind: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in ("pearson", "pseudo"):
            raise ValueError(f"kind must be 'pearson' or 'pseudo', got {self.kind!r}")
        arr = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("residuals must be finite")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


def _mean_var_paths(series: CountSeries, model):
    x = series.values
    if isinstance(model, GeoMgwiModel):
        return cond_mean(model, x[:-1]), cond_var(model, x[:-1])
    if isinstance(model, RegressionModel):
        if model.kind != "mgwi":
            raise ValueError(
                "residuals use the min-thinning conditional variance; "
                "the pinar kind has no such formula here"
            )
        if model.n != len(x):
            raise ValueError("covariate matrices and series lengths differ")
        mu = model.mu_path()[1:]
        alpha = model.alpha_path()[1:]
        return (
            _cond_mean_path("mgwi", mu, alpha, x[:-1]),
            _cond_var_path_mgwi(mu, alpha, x[:-1]),
        )
    raise TypeError(f"unsupported model type {type(model).__name__}")


def pearson_residuals(series: CountSeries, model) -> ResidualSeries:
    """(x_t - mean_t) / sd_t for t = 2..n under the fitted model."""
    x = series.values
    if len(x) < 2:
        raise ValueError("series must have length >= 2")
    mean, var = _mean_var_paths(series, model)
    if np.any(var <= 0):
        raise ValueError("conditional variance is not positive")
    return ResidualSeries("pearson", (x[1:] - mean) / np.sqrt(var))


def _conditional_cdf_pairs(series: CountSeries, model):
    """(F(x_t - 1), F(x_t)) where F is the conditional cdf given x_{t-1}."""
    x = series.values
    lo = np.empty(len(x) - 1)
    hi = np.empty(len(x) - 1)
    if isinstance(model, GeoMgwiModel):
        T = transition_matrix(model, int(x.max()) + 1)
        cum = np.cumsum(T, axis=1)
        for i in range(len(x) - 1):
            xc = x[i + 1]
            lo[i] = cum[x[i], xc - 1] if xc >= 1 else 0.0
            hi[i] = cum[x[i], xc]
        return lo, hi
    if not (isinstance(model, RegressionModel) and model.kind == "mgwi"):
        raise TypeError("pseudo-residuals need a stationary or mgwi regression model")
    mu = model.mu_path()
    alpha = model.alpha_path()
    for i in range(len(x) - 1):
        xp, xc = int(x[i]), int(x[i + 1])
        zp = GeoParams(float(alpha[i + 1]))
        ep = ZmgParams(
            pi=float(alpha[i + 1] / (1.0 + alpha[i + 1] + mu[i + 1])),
            mu=float(mu[i + 1]),
        )
        kmax = min(xp - 1, xc)
        probs = np.zeros(xc + 1)
        if kmax >= 0:
            k = np.arange(kmax + 1)
            pe = zmg_pmf(ep, np.arange(xc + 1))
            probs = np.convolve(geo_pmf(zp, k), pe)[: xc + 1]
        if xp <= xc:
            z_geq = 1.0 if xp == 0 else float(geo_sf(zp, xp - 1))
            yy = np.arange(xp, xc + 1)
            probs[yy] += z_geq * zmg_pmf(ep, yy - xp)
        cum = np.cumsum(probs)
        lo[i] = cum[xc - 1] if xc >= 1 else 0.0
        hi[i] = cum[xc]
    return lo, hi


def pseudo_residuals(
    series: CountSeries, model, rng: np.random.Generator
) -> ResidualSeries:
    """Randomized-quantile residuals Phi^{-1}(U_t).

    U_t is uniform on (F(x_t - 1), F(x_t)) with F(-1) = 0; the interval
    endpoints are guarded so the quantile stays finite even when the two
    cdf values coincide numerically.
    """
    x = series.values
    if len(x) < 2:
        raise ValueError("series must have length >= 2")
    lo, hi = _conditional_cdf_pairs(series, model)
    hi = np.maximum(lo, hi)
    u = rng.uniform(lo, hi)
    u = np.clip(u, _QUANTILE_GUARD, 1.0 - _QUANTILE_GUARD)
    return ResidualSeries("pseudo", norm.ppf(u))


def sample_acf_pacf(values, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample ACF (divisor n) and Durbin-Levinson PACF up to ``max_lag``.

    Both arrays have length max_lag + 1 with index 0 fixed at one.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if not 0 < max_lag < n:
        raise ValueError("max_lag must lie in 1..n-1")
    centered = x - x.mean()
    denom = float(np.sum(centered**2))
    if denom == 0:
        raise ValueError("series has zero variance")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = float(np.sum(centered[k:] * centered[:-k])) / denom

    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    phi_prev = np.zeros(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = acf[1]
            phi = np.array([phi_kk])
        else:
            num = acf[k] - float(np.sum(phi_prev * acf[k - 1 : 0 : -1]))
            den = 1.0 - float(np.sum(phi_prev * acf[1:k]))
            phi_kk = num / den
            phi = np.concatenate([phi_prev - phi_kk * phi_prev[::-1], [phi_kk]])
        pacf[k] = phi_kk
        phi_prev = phi
    return acf, pacf


def sspe(series: CountSeries, predictions) -> float:
    """Sum of squared prediction errors over t = 2..n.

    Raises when the prediction records do not align one-to-one with the
    series, both in time index and observed value.
    """
    x = series.values
    if len(predictions) != len(x) - 1:
        raise ValueError(
            f"expected {len(x) - 1} prediction records, got {len(predictions)}"
        )
    total = 0.0
    for rec in predictions:
        if not 2 <= rec.t <= len(x) or int(x[rec.t - 1]) != rec.observed:
            raise ValueError(f"prediction record at t={rec.t} does not match the series")
        diff = rec.observed - rec.predicted_mean
        total += diff * diff
    return float(total)


def describe(series: CountSeries) -> dict[str, float]:
    """Seven summary statistics of the counts.

    Variance uses divisor n - 1; skewness and kurtosis are the moment
    ratios m3 / m2^(3/2) and m4 / m2^2 with biased central moments, and
    kurtosis is reported raw (not excess).
    """
    x = series.values.astype(float)
    out = {
        "minimum": float(x.min()),
        "maximum": float(x.max()),
        "mean": float(x.mean()),
        "median": float(np.median(x)),
    }
    if x.size > 1:
        out["variance"] = float(x.var(ddof=1))
    else:
        out["variance"] = 0.0
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 > 0:
        out["skewness"] = float(np.mean(centered**3)) / m2**1.5
        out["kurtosis"] = float(np.mean(centered**4)) / m2**2
    else:
        out["skewness"] = float("nan")
        out["kurtosis"] = float("nan")
    return out
