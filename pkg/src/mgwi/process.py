"""Stationary count process with geometric marginals and min-thinning.

The process evolves as x[t] = min(x[t-1], Z_t) + eps_t with
Z_t ~ Geo(alpha) and innovations eps_t ~ ZMG(alpha / (1 + mu + alpha), mu),
which makes Geo(mu) the stationary marginal law. The module provides exact
simulation, the one-step transition law, conditional moments at any lag,
the joint pgf of consecutive values, and the autocovariance function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .distributions import (
    GeoParams,
    ZmgParams,
    geo_pgf,
    geo_pmf,
    geo_sample,
    geo_sf,
    zmg_moments,
    zmg_pgf,
    zmg_pmf,
    zmg_sample,
)

__all__ = [
    "GeoMgwiModel",
    "CountSeries",
    "simulate",
    "transition_prob",
    "transition_matrix",
    "cond_mean",
    "cond_var",
    "cond_mean_k",
    "joint_pgf",
    "autocov",
    "autocorr",
]


@dataclass(frozen=True)
class GeoMgwiModel:
    """Stationary model with marginal mean ``mu`` and thinning mean ``alpha``."""

    mu: float
    alpha: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be a positive real, got {self.mu!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive real, got {self.alpha!r}")

    @property
    def alpha_star(self) -> float:
        return self.alpha / (1.0 + self.alpha)

    @property
    def marginal(self) -> GeoParams:
        return GeoParams(self.mu)

    def innovation_params(self) -> ZmgParams:
        """Innovation law that keeps the marginal geometric."""
        return ZmgParams(
            pi=self.alpha / (1.0 + self.mu + self.alpha), mu=self.mu
        )

    @property
    def innovation_mean(self) -> float:
        return zmg_moments(self.innovation_params())[0]

    @property
    def innovation_var(self) -> float:
        return zmg_moments(self.innovation_params())[1]


@dataclass(frozen=True, eq=False)
class CountSeries:
    """Ordered nonnegative integer observations with an optional time label."""

    values: np.ndarray
    origin: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a nonempty 1-D sequence")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("values must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("values must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


def simulate(model: GeoMgwiModel, n: int, rng: np.random.Generator) -> CountSeries:
    """Simulate ``n`` steps started from the stationary marginal.

    Stream consumption order is fixed (start value, then the geometric
    block, then the innovation block), so results are reproducible across
    kernel backends.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x1 = geo_sample(model.marginal, rng)
    if n == 1:
        return CountSeries(np.array([x1], dtype=np.int64))
    z = geo_sample(GeoParams(model.alpha), rng, size=n - 1)
    eps = zmg_sample(model.innovation_params(), rng, size=n - 1)
    return CountSeries(_kernels.min_thin_scan(x1, z, eps))


def transition_prob(model: GeoMgwiModel, x: int, y: int) -> float:
    """One-step transition probability P(X_t = y | X_{t-1} = x)."""
    if x < 0 or y < 0:
        raise ValueError("x and y must be nonnegative")
    zp = GeoParams(model.alpha)
    ep = model.innovation_params()
    kmax = min(x - 1, y)
    acc = 0.0
    if kmax >= 0:
        k = np.arange(kmax + 1)
        acc = float(np.sum(geo_pmf(zp, k) * zmg_pmf(ep, y - k)))
    if x <= y:
        z_geq_x = 1.0 if x == 0 else float(geo_sf(zp, x - 1))
        acc += z_geq_x * float(zmg_pmf(ep, y - x))
    return acc


def transition_matrix(model: GeoMgwiModel, size: int) -> np.ndarray:
    """Matrix T[x, y] of transition probabilities for x, y in 0..size-1.

    Every entry is exact (the inner convolution is finite); rows sum to
    one only up to the mass beyond the window.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    m = size
    k = np.arange(m)
    zp = GeoParams(model.alpha)
    pz = geo_pmf(zp, k)
    pe = zmg_pmf(model.innovation_params(), k)
    z_geq = np.concatenate(([1.0], geo_sf(zp, k[:-1]) if m > 1 else []))
    diff = k[None, :] - k[:, None]  # [j, y] -> y - j
    conv_terms = pz[:, None] * np.where(diff >= 0, pe[np.clip(diff, 0, m - 1)], 0.0)
    prefix = np.cumsum(conv_terms, axis=0)  # prefix[j, y] = sum_{i<=j} pz[i] pe[y-i]
    full = np.diag(prefix)  # complete convolution at y
    X = k[:, None]
    Y = k[None, :]
    head = prefix[np.clip(k - 1, 0, None), :]  # row x -> prefix[x-1, :]
    upper = np.where(X >= 1, head, 0.0) + z_geq[:, None] * np.where(
        Y - X >= 0, pe[np.clip(Y - X, 0, m - 1)], 0.0
    )
    return np.where(Y < X, np.broadcast_to(full, (m, m)), upper)


def cond_mean(model: GeoMgwiModel, x_prev):
    """E(X_t | X_{t-1} = x) = alpha (1 - alpha_star^x) + innovation mean."""
    x = np.asarray(x_prev)
    if np.any(x < 0):
        raise ValueError("x_prev must be nonnegative")
    scalar = x.ndim == 0
    out = model.alpha * (1.0 - model.alpha_star ** x.astype(float)) + (
        model.innovation_mean
    )
    return float(out) if scalar else np.asarray(out, dtype=float)


def cond_var(model: GeoMgwiModel, x_prev):
    """Var(X_t | X_{t-1} = x); nonlinear in x like the conditional mean."""
    x = np.asarray(x_prev)
    if np.any(x < 0):
        raise ValueError("x_prev must be nonnegative")
    scalar = x.ndim == 0
    a = model.alpha
    pw = model.alpha_star ** x.astype(float)
    out = (
        a * (1.0 - pw) * (1.0 + a * (1.0 + pw))
        - 2.0 * a * x.astype(float) * pw
        + model.innovation_var
    )
    return float(out) if scalar else np.asarray(out, dtype=float)


def joint_pgf(model: GeoMgwiModel, s1: float, s2: float) -> float:
    """Joint pgf E(s1^{X_t} s2^{X_{t-1}}) of two consecutive values."""
    mu, a = model.mu, model.alpha
    radius_mu = 1.0 + 1.0 / mu
    if abs(s1) >= radius_mu or abs(s2) >= radius_mu:
        raise ValueError(f"requires |s1|, |s2| < 1 + 1/mu = {radius_mu:.6g}")
    if abs(s1) >= 1.0 + 1.0 / a:
        raise ValueError(f"requires |s1| < 1 + 1/alpha = {1.0 + 1.0 / a:.6g}")
    inner = s1 * s2 * a / (1.0 + a)
    if abs(inner) >= radius_mu:
        raise ValueError("s1 * s2 * alpha / (1 + alpha) outside the marginal radius")
    marg = GeoParams(mu)
    psi_eps = zmg_pgf(model.innovation_params(), s1)
    return (
        psi_eps
        / (1.0 - a * (s1 - 1.0))
        * (geo_pgf(marg, s2) - a * (s1 - 1.0) * geo_pgf(marg, inner))
    )


def _hk_affine(model: GeoMgwiModel, k: int) -> tuple[float, float]:
    """Coefficients (A, B) of the composed affine map H_k(x) = A + B x.

    H_k composes f_2(...(f_k(x))) with f_j(x) = Psi_eps(a*^{j-1})(h_j + g_j x).
    h_j and g_j are evaluated in the overflow-free form obtained by dividing
    numerator and denominator by (1 + alpha)^{j-1}.
    """
    a = model.alpha
    astar = model.alpha_star
    eps = model.innovation_params()
    A, B = 0.0, 1.0
    for j in range(k, 1, -1):
        pw = astar ** (j - 1)
        den = 1.0 + a - a * pw
        h = 1.0 / den
        g = a * (1.0 - pw) / den
        c = zmg_pgf(eps, pw)
        A, B = c * (h + g * A), c * g * B
    return A, B


def cond_mean_k(model: GeoMgwiModel, x_past: int, k: int) -> float:
    """k-step-ahead conditional mean E(X_t | X_{t-k} = x_past).

    k = 1 uses the one-step closed form directly; the composed-map
    recursion starts at k = 2.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if x_past < 0:
        raise ValueError("x_past must be nonnegative")
    if k == 1:
        return cond_mean(model, x_past)
    A, B = _hk_affine(model, k)
    hk = A + B * model.alpha_star ** (k * x_past)
    return model.alpha * (1.0 - hk) + model.innovation_mean


def _mean_x_pow_x(mu: float, s: float) -> float:
    """E(X s^X) = s Psi'(s) for X ~ Geo(mu)."""
    return s * mu / (1.0 + mu * (1.0 - s)) ** 2


def autocov(model: GeoMgwiModel, k: int) -> float:
    """Autocovariance gamma(k) of the stationary process.

    Lag one has the closed form mu alpha (1 + mu)(1 + alpha) /
    (1 + mu + alpha)^2. Higher lags expand the affine form of H_k:
    gamma(k) = alpha (mu - E[X H_k(a*^{kX})]) + mu (innovation mean - mu)
    with E[X H_k(a*^{kX})] = A mu + B E[X s^X] at s = a*^k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mu, a = model.mu, model.alpha
    if k == 1:
        return mu * a * (1.0 + mu) * (1.0 + a) / (1.0 + mu + a) ** 2
    A, B = _hk_affine(model, k)
    exh = A * mu + B * _mean_x_pow_x(mu, model.alpha_star**k)
    return a * (mu - exh) + mu * (model.innovation_mean - mu)


def autocorr(model: GeoMgwiModel, k: int) -> float:
    """Autocorrelation rho(k) = gamma(k) / (mu (1 + mu))."""
    return autocov(model, k) / (model.mu * (1.0 + model.mu))
