"""Geometric, zero-modified geometric (ZMG), and Poisson building blocks.

The geometric law used throughout the package is supported on {0, 1, ...}
and parameterized by its mean ``alpha``:

    P(Z = k) = alpha^k / (1 + alpha)^(k + 1)

The ZMG law keeps the geometric probabilities scaled by ``1 - pi`` for
k >= 1 and moves the remaining mass to zero, inflating (``pi > 0``) or
deflating (``pi < 0``) the zero frequency relative to Geo(``mu``).

All samplers take an explicit :class:`numpy.random.Generator`; there is no
module-level random state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeoParams",
    "ZmgParams",
    "geo_pmf",
    "geo_logpmf",
    "geo_cdf",
    "geo_sf",
    "geo_pgf",
    "geo_pgf_deriv",
    "geo_moments",
    "geo_sample",
    "zmg_pmf",
    "zmg_logpmf",
    "zmg_cdf",
    "zmg_sf",
    "zmg_pgf",
    "zmg_moments",
    "zmg_sample",
    "zmg_sample_path",
    "poisson_sample",
]

# Direct powers keep small-k pmf values exact; switch to exp/log for deep
# tails where the powers would under- or overflow.
_LOG_SPACE_CUTOFF = 500


@dataclass(frozen=True)
class GeoParams:
    """Geometric distribution on {0, 1, ...} with mean ``alpha`` > 0."""

    alpha: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive real, got {self.alpha!r}")


@dataclass(frozen=True)
class ZmgParams:
    """Zero-modified geometric distribution ZMG(``pi``, ``mu``).

    ``mu`` is the mean of the underlying geometric law. The modification
    weight must satisfy ``pi`` in (-1/mu, 1), which keeps the zero mass
    ``pi + (1 - pi)/(1 + mu)`` nonnegative. ``pi = 0`` recovers Geo(mu).
    """

    pi: float
    mu: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be a positive real, got {self.mu!r}")
        if not (-1.0 / self.mu < self.pi < 1.0):
            raise ValueError(
                f"pi must lie in (-1/mu, 1) = ({-1.0 / self.mu:.6g}, 1), got {self.pi!r}"
            )
        # Implied by the range check; asserted anyway as a guard against
        # floating-point edge cases right at the boundary.
        if self.pi + (1.0 - self.pi) / (1.0 + self.mu) < 0:
            raise ValueError("pmf at zero is negative for these parameters")


def _check_nonneg_int(k) -> np.ndarray:
    k = np.asarray(k)
    if not np.issubdtype(k.dtype, np.integer):
        if not np.all(np.equal(np.mod(k, 1), 0)):
            raise ValueError("k must be integer-valued")
        k = k.astype(np.int64)
    if np.any(k < 0):
        raise ValueError("k must be nonnegative")
    return k


def _scalar_or_array(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# geometric law
# ---------------------------------------------------------------------------


def geo_logpmf(p: GeoParams, k):
    """log P(Z = k) for Z ~ Geo(alpha)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    out = k * (np.log(p.alpha) - np.log1p(p.alpha)) - np.log1p(p.alpha)
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def geo_pmf(p: GeoParams, k):
    """P(Z = k) = alpha^k / (1 + alpha)^(k + 1)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    small = k <= _LOG_SPACE_CUTOFF
    ks = np.where(small, k, 0)
    direct = p.alpha**ks / (1.0 + p.alpha) ** (ks + 1.0)
    out = np.where(small, direct, np.exp(geo_logpmf(p, k)))
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def geo_sf(p: GeoParams, k):
    """Survival P(Z > k) = (alpha / (1 + alpha))^(k + 1)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    out = np.exp((k + 1.0) * (np.log(p.alpha) - np.log1p(p.alpha)))
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def geo_cdf(p: GeoParams, k):
    """P(Z <= k)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    out = 1.0 - geo_sf(p, k)
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def geo_pgf(p: GeoParams, s):
    """Probability generating function 1 / (1 + alpha(1 - s)).

    Defined for |s| < 1 + 1/alpha; outside that radius a ValueError is
    raised.
    """
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    if np.any(np.abs(s) >= 1.0 + 1.0 / p.alpha):
        raise ValueError(f"pgf requires |s| < 1 + 1/alpha = {1.0 + 1.0 / p.alpha:.6g}")
    out = 1.0 / (1.0 + p.alpha * (1.0 - s))
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def geo_pgf_deriv(p: GeoParams, s: float, order: int) -> float:
    """``order``-th derivative of the Geo(alpha) pgf at ``s``.

    Closed form: k! alpha^k / (1 + alpha(1 - s))^(k + 1).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if abs(s) >= 1.0 + 1.0 / p.alpha:
        raise ValueError("s outside the pgf convergence radius")
    k = order
    return float(
        math.factorial(k) * p.alpha**k / (1.0 + p.alpha * (1.0 - s)) ** (k + 1)
    )


def geo_moments(p: GeoParams) -> tuple[float, float]:
    """(mean, variance) = (alpha, alpha(1 + alpha))."""
    return p.alpha, p.alpha * (1.0 + p.alpha)


def geo_sample(p: GeoParams, rng: np.random.Generator, size=None):
    """Draw from Geo(alpha); counts failures, so values start at 0."""
    out = rng.geometric(1.0 / (1.0 + p.alpha), size=size)
    if size is None:
        return int(out) - 1
    return out.astype(np.int64) - 1


# ---------------------------------------------------------------------------
# zero-modified geometric law
# ---------------------------------------------------------------------------


def zmg_logpmf(p: ZmgParams, k):
    """log P(Y = k) for Y ~ ZMG(pi, mu)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    tail = np.log1p(-p.pi) + k * (np.log(p.mu) - np.log1p(p.mu)) - np.log1p(p.mu)
    at_zero = np.log(p.pi + (1.0 - p.pi) / (1.0 + p.mu))
    out = np.where(k == 0, at_zero, tail)
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def zmg_pmf(p: ZmgParams, k):
    """P(Y = 0) = pi + (1 - pi)/(1 + mu); P(Y = k) = (1 - pi) mu^k / (1 + mu)^(k+1)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    small = k <= _LOG_SPACE_CUTOFF
    ks = np.where(small, k, 0)
    direct = (1.0 - p.pi) * p.mu**ks / (1.0 + p.mu) ** (ks + 1.0)
    tail = np.where(small, direct, np.exp(zmg_logpmf(p, np.maximum(k, 1))))
    out = np.where(k == 0, p.pi + (1.0 - p.pi) / (1.0 + p.mu), tail)
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def zmg_sf(p: ZmgParams, k):
    """Survival P(Y > k) = (1 - pi) (mu / (1 + mu))^(k + 1)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    out = (1.0 - p.pi) * np.exp((k + 1.0) * (np.log(p.mu) - np.log1p(p.mu)))
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def zmg_cdf(p: ZmgParams, k):
    """P(Y <= k)."""
    k = _check_nonneg_int(k)
    scalar = k.ndim == 0
    out = 1.0 - zmg_sf(p, k)
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def zmg_pgf(p: ZmgParams, s):
    """(1 + pi mu (1 - s)) / (1 + mu (1 - s)) for |s| < 1 + 1/mu."""
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    if np.any(np.abs(s) >= 1.0 + 1.0 / p.mu):
        raise ValueError(f"pgf requires |s| < 1 + 1/mu = {1.0 + 1.0 / p.mu:.6g}")
    out = (1.0 + p.pi * p.mu * (1.0 - s)) / (1.0 + p.mu * (1.0 - s))
    return _scalar_or_array(np.asarray(out, dtype=float), scalar)


def zmg_moments(p: ZmgParams) -> tuple[float, float]:
    """(mean, variance) from the pgf derivatives at s = 1.

    mean = (1 - pi) mu and variance = (1 - pi) mu (1 + mu + pi mu); the
    variance follows from E[Y(Y-1)] = 2 mu^2 (1 - pi).
    """
    mean = (1.0 - p.pi) * p.mu
    var = (1.0 - p.pi) * p.mu * (1.0 + p.mu + p.pi * p.mu)
    return mean, var


def _zmg_inverse_survival(u, pi, mu):
    # smallest k with P(Y > k) <= 1 - u, survival (1-pi) q^(k+1), q = mu/(1+mu)
    r = (np.log1p(-u) - np.log1p(-pi)) / (np.log(mu) - np.log1p(mu))
    return np.maximum(0, np.ceil(r - 1.0))


def zmg_sample(p: ZmgParams, rng: np.random.Generator, size=None):
    """Draw from ZMG(pi, mu) by inverting the closed-form survival function.

    Works for the whole admissible range of ``pi``, including zero
    deflation (pi < 0), unlike the zero-vs-geometric mixture construction
    which needs pi >= 0.
    """
    out = _zmg_inverse_survival(rng.random(size), p.pi, p.mu)
    if size is None:
        return int(out)
    return out.astype(np.int64)


def zmg_sample_path(pi, mu, rng: np.random.Generator) -> np.ndarray:
    """One ZMG draw per entry of the broadcast parameter arrays."""
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    shape = np.broadcast_shapes(pi.shape, mu.shape)
    out = _zmg_inverse_survival(rng.random(shape), pi, mu)
    return out.astype(np.int64)


def poisson_sample(lam, rng: np.random.Generator, size=None):
    """Poisson draw(s); present for the Poisson-innovation bootstrap schemes."""
    out = rng.poisson(lam, size=size)
    if size is None:
        return int(out)
    return np.asarray(out, dtype=np.int64)
