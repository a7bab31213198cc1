"""Stationary process with zero-modified geometric marginals.

Generalizes the geometric-marginal process by thinning with
Z ~ ZMG(1 - eta, alpha) and targeting a ZMG(1 - pi, mu) marginal. The
innovation law factorizes into a convolution of two ZMG components, which
exists only inside an explicit feasibility region; the geometric operator
(eta = 1) is excluded because the region is empty there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .distributions import ZmgParams, zmg_sample
from .process import CountSeries

__all__ = [
    "InfeasibleModelError",
    "ZmgMgwiModel",
    "zmg_mgwi_feasible",
    "innovation_components",
    "simulate_zmg_mgwi",
]


class InfeasibleModelError(ValueError):
    """Raised when no valid innovation law exists for the parameters."""


def zmg_mgwi_feasible(
    mu: float, pi: float, alpha: float, eta: float
) -> tuple[bool, str]:
    """Check the three feasibility constraints; name the first violation.

    Requires pi * eta < 1, eta != 1, and
    (1 - pi) / (1 - pi eta) * (1 + (1 + mu) / alpha) < 1. Base parameter
    ranges (marginal and operator laws valid individually) are checked
    first and reported the same way.
    """
    if not (np.isfinite(mu) and mu > 0):
        return False, f"mu must be positive, got {mu!r}"
    if not (np.isfinite(alpha) and alpha > 0):
        return False, f"alpha must be positive, got {alpha!r}"
    if not (-1.0 / mu < 1.0 - pi < 1.0):
        return False, f"marginal weight 1 - pi must lie in (-1/mu, 1), got {1.0 - pi!r}"
    if not (-1.0 / alpha < 1.0 - eta < 1.0):
        return (
            False,
            f"operator weight 1 - eta must lie in (-1/alpha, 1), got {1.0 - eta!r}",
        )
    if eta == 1.0:
        return False, "eta = 1 (geometric thinning) admits no ZMG-marginal process"
    if pi * eta >= 1.0:
        return False, f"requires pi * eta < 1, got {pi * eta!r}"
    ratio = (1.0 - pi) / (1.0 - pi * eta) * (1.0 + (1.0 + mu) / alpha)
    if ratio >= 1.0:
        return (
            False,
            f"requires (1 - pi)/(1 - pi eta) (1 + (1 + mu)/alpha) < 1, got {ratio!r}",
        )
    return True, "feasible"


@dataclass(frozen=True)
class ZmgMgwiModel:
    """Marginal X ~ ZMG(1 - pi, mu); operator Z ~ ZMG(1 - eta, alpha).

    Construction fails with :class:`InfeasibleModelError` outside the
    feasibility region, so instances always admit a valid innovation law.
    """

    mu: float
    pi: float
    alpha: float
    eta: float

    def __post_init__(self) -> None:
        ok, why = zmg_mgwi_feasible(self.mu, self.pi, self.alpha, self.eta)
        if not ok:
            raise InfeasibleModelError(why)

    @property
    def marginal(self) -> ZmgParams:
        return ZmgParams(pi=1.0 - self.pi, mu=self.mu)

    @property
    def operator(self) -> ZmgParams:
        return ZmgParams(pi=1.0 - self.eta, mu=self.alpha)

    @property
    def thinned_marginal(self) -> ZmgParams:
        """Law of the thinned value min(X, Z) at stationarity."""
        return ZmgParams(
            pi=1.0 - self.eta * self.pi,
            mu=self.mu * self.alpha / (1.0 + self.mu + self.alpha),
        )


def innovation_components(model: ZmgMgwiModel) -> tuple[ZmgParams, ZmgParams]:
    """The two independent ZMG laws whose convolution is the innovation.

    The product of their pgfs equals the ratio of the marginal pgf to the
    thinned-marginal pgf.
    """
    mu, pi, a, eta = model.mu, model.pi, model.alpha, model.eta
    thin_mu = mu * a / (1.0 + mu + a)
    phi1 = ZmgParams(
        pi=(1.0 - pi) / (1.0 - pi * eta) * (1.0 + (1.0 + mu) / a),
        mu=(1.0 - pi * eta) * thin_mu,
    )
    phi2 = ZmgParams(pi=a / (1.0 + mu + a), mu=mu)
    return phi1, phi2


def simulate_zmg_mgwi(
    model: ZmgMgwiModel, n: int, rng: np.random.Generator
) -> CountSeries:
    """Simulate ``n`` steps started from the stationary ZMG marginal.

    Innovations are drawn as the sum of the two component laws, which is
    exact because the innovation pgf factorizes. Stream order: start
    value, thinning block, then the two innovation blocks.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x1 = zmg_sample(model.marginal, rng)
    if n == 1:
        return CountSeries(np.array([x1], dtype=np.int64))
    phi1, phi2 = innovation_components(model)
    z = zmg_sample(model.operator, rng, size=n - 1)
    eps = zmg_sample(phi1, rng, size=n - 1) + zmg_sample(phi2, rng, size=n - 1)
    return CountSeries(_kernels.min_thin_scan(x1, z, eps))
