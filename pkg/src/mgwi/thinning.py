"""Min-based thinning operators.

The geometric thinning of a count X is min(X, Z) with an independent
Z ~ Geo(alpha); its zero-modified generalization draws
Z ~ ZMG(1 - eta, alpha) instead. Both contract toward zero (the result
never exceeds X), which is what makes them thinning operators.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    GeoParams,
    ZmgParams,
    geo_pgf_deriv,
    zmg_pmf,
    zmg_sample,
    zmg_sf,
)

__all__ = [
    "ThinKind",
    "ThinningSpec",
    "thin_sample",
    "thin_pmf",
    "thin_pgf",
    "thin_factorial_moment",
    "thin_min_closure",
    "thin_marginal_closure",
    "degenerate_pgf_derivs",
    "geo_pgf_derivs",
]


class ThinKind(enum.Enum):
    GEOMETRIC = "geometric"
    ZMG = "zmg"


@dataclass(frozen=True)
class ThinningSpec:
    """Thinning operator specification.

    ``kind=GEOMETRIC`` uses Z ~ Geo(alpha). ``kind=ZMG`` uses
    Z ~ ZMG(1 - eta, alpha) and requires 1 - eta in (-1/alpha, 1);
    ``eta = 1`` reduces to the geometric operator.
    """

    kind: ThinKind
    alpha: float
    eta: float | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive real, got {self.alpha!r}")
        if self.kind is ThinKind.ZMG:
            if self.eta is None:
                raise ValueError("ZMG thinning requires eta")
            if not (-1.0 / self.alpha < 1.0 - self.eta < 1.0):
                raise ValueError(
                    f"1 - eta must lie in (-1/alpha, 1); got eta = {self.eta!r}"
                )
        elif self.eta is not None:
            raise ValueError("eta is only meaningful for ZMG thinning")

    @property
    def z_params(self) -> ZmgParams:
        """Law of the latent Z as a ZMG (pi = 0 for the geometric kind)."""
        pi = 0.0 if self.kind is ThinKind.GEOMETRIC else 1.0 - self.eta
        return ZmgParams(pi=pi, mu=self.alpha)


def thin_sample(spec: ThinningSpec, x, rng: np.random.Generator):
    """Draw min(x, Z) elementwise; the result never exceeds x."""
    xarr = np.asarray(x)
    if np.any(xarr < 0):
        raise ValueError("x must be nonnegative")
    size = None if xarr.ndim == 0 else xarr.shape
    z = zmg_sample(spec.z_params, rng, size=size)
    out = np.minimum(xarr, z)
    return int(out) if xarr.ndim == 0 else out.astype(np.int64)


def _z_geq(params: ZmgParams, z) -> np.ndarray:
    """P(Z >= z)."""
    z = np.asarray(z)
    return np.where(z <= 0, 1.0, zmg_sf(params, np.maximum(z - 1, 0)))


def thin_pmf(spec: ThinningSpec, x: int, z) -> float | np.ndarray:
    """P(min(x, Z) = z) for a fixed count x.

    Zero above x, P(Z >= x) at z = x, and P(Z = z) below x.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    zarr = np.asarray(z)
    if np.any(zarr < 0):
        raise ValueError("z must be nonnegative")
    scalar = zarr.ndim == 0
    zp = spec.z_params
    out = np.where(
        zarr > x,
        0.0,
        np.where(zarr == x, _z_geq(zp, zarr), zmg_pmf(zp, zarr)),
    )
    out = np.asarray(out, dtype=float)
    return float(out) if scalar else out


def thin_pgf(spec: ThinningSpec, pgf_x: Callable[[float], float], s: float) -> float:
    """pgf of the geometric thinning of X, given the pgf of X.

    Evaluates [1 + alpha(1 - s) Psi_X(alpha s / (1 + alpha))] /
    [1 + alpha(1 - s)]. Only the geometric kind admits this closed form.
    """
    if spec.kind is not ThinKind.GEOMETRIC:
        raise ValueError("thin_pgf is defined for the geometric operator only")
    a = spec.alpha
    if abs(s) >= 1.0 + 1.0 / a:
        raise ValueError(f"requires |s| < 1 + 1/alpha = {1.0 + 1.0 / a:.6g}")
    inner = pgf_x(a * s / (1.0 + a))
    return (1.0 + a * (1.0 - s) * inner) / (1.0 + a * (1.0 - s))


def thin_factorial_moment(
    spec: ThinningSpec, pgf_derivs: Sequence[float], n: int
) -> float:
    """n-th factorial moment of the geometric thinning of X.

    ``pgf_derivs`` supplies Psi_X^(k)(alpha / (1 + alpha)) for
    k = 0 .. n-1; see :func:`geo_pgf_derivs` and
    :func:`degenerate_pgf_derivs` for the two built-in marginals.
    """
    if spec.kind is not ThinKind.GEOMETRIC:
        raise ValueError("factorial moments implemented for the geometric operator")
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(pgf_derivs) < n:
        raise ValueError(f"need derivatives of orders 0..{n - 1}")
    a = spec.alpha
    acc = sum(
        pgf_derivs[k] / (math.factorial(k) * (1.0 + a) ** k) for k in range(n)
    )
    return math.factorial(n) * a**n * (1.0 - acc)


def geo_pgf_derivs(p: GeoParams | float, s: float, n: int) -> list[float]:
    """[Psi^(0)(s), ..., Psi^(n-1)(s)] for a Geo marginal with mean mu."""
    if not isinstance(p, GeoParams):
        p = GeoParams(float(p))
    return [geo_pgf_deriv(p, s, k) for k in range(n)]


def degenerate_pgf_derivs(x: int, s: float, n: int) -> list[float]:
    """Derivatives of Psi(s) = s^x for a point mass at x."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    out = []
    for k in range(n):
        if k > x:
            out.append(0.0)
        else:
            coef = math.factorial(x) / math.factorial(x - k)
            out.append(coef * s ** (x - k))
    return out


def thin_min_closure(alphas: Sequence[float]) -> float:
    """Parameter of the closure law for minima of geometric thinnings.

    For independent Z_k ~ Geo(alpha_k), min_k (alpha_k thinned X_k) equals
    in law alpha~ thinned min_k X_k with
    alpha~ = prod(alpha) / (prod(1 + alpha) - prod(alpha)).
    """
    if len(alphas) == 0:
        raise ValueError("need at least one alpha")
    arr = np.asarray(alphas, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("alphas must be positive")
    num = np.prod(arr)
    return float(num / (np.prod(1.0 + arr) - num))


def thin_marginal_closure(spec: ThinningSpec, marginal: ZmgParams) -> ZmgParams:
    """Law of the thinning applied to a ZMG (or geometric) marginal.

    If X ~ ZMG(p_x, mu) then min(X, Z) ~ ZMG(1 - (1 - p_z)(1 - p_x),
    mu alpha / (1 + mu + alpha)), where p_z is the zero-modification weight
    of Z. Covers the geometric-stability case p_x = p_z = 0.
    """
    p_z = spec.z_params.pi
    p_x = marginal.pi
    mu = marginal.mu
    a = spec.alpha
    return ZmgParams(
        pi=1.0 - (1.0 - p_z) * (1.0 - p_x),
        mu=mu * a / (1.0 + mu + a),
    )
