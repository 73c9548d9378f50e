"""Reference solution families: Beta, its power pushforward (Kumaraswamy-type),
and the scaled-Bernoulli solution obtained through the h-reparameterization.

The regularized incomplete beta function is computed internally (adaptive
Simpson on the density with an endpoint substitution, then bisection); no
special-function library is involved, so these references stay an independent
check on everything else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dist
from ._kernels import beta_cdf_kernel, beta_quantile_table, beta_quantiles_kernel
from .dist import DEFAULT_K, QuantileDist, midpoint_levels
from .errors import InputError, ParameterError

#: absolute tolerance of the quantile bisection
QUANTILE_TOL = 1e-10


@dataclass(frozen=True)
class BetaParams:
    """Beta parameters; a = 0 or b = 0 encode the point masses at 0 and 1."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ParameterError(f"negative Beta parameters ({self.a}, {self.b})")
        if self.a == 0 and self.b == 0:
            raise ParameterError("Beta(0, 0) is undefined")


def beta_cdf(t: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_t(a, b), abs error ~1e-13."""
    BetaParams(a, b)
    if a == 0:
        return 1.0 if t >= 0 else 0.0
    if b == 0:
        return 1.0 if t >= 1 else 0.0
    return float(beta_cdf_kernel(float(t), float(a), float(b)))


def beta_quantile(a: float, b: float, u: float) -> float:
    """Continuum quantile of Beta(a, b) at level u (bisection to 1e-10)."""
    BetaParams(a, b)
    if not 0 < u < 1:
        raise InputError(f"level must lie in (0, 1), got {u}")
    if a == 0:
        return 0.0
    if b == 0:
        return 1.0
    q = beta_quantiles_kernel(float(a), float(b), np.array([float(u)]), QUANTILE_TOL)
    return float(q[0])


def beta_quantile_dist(a: float, b: float, K: int = DEFAULT_K) -> QuantileDist:
    """Beta(a, b) on [0, 1] as a quantile grid (numeric CDF inversion)."""
    BetaParams(a, b)
    if a == 0:
        return dist.point_mass(0.0, upper=1.0, K=K)
    if b == 0:
        return dist.point_mass(1.0, upper=1.0, K=K)
    q = beta_quantiles_kernel(float(a), float(b), midpoint_levels(K), QUANTILE_TOL)
    return QuantileDist(1.0, q)


def beta_quantile_grid(ab: np.ndarray, K: int = DEFAULT_K) -> np.ndarray:
    """Quantile vectors for an (n, 2) array of Beta parameters (batched)."""
    ab = np.ascontiguousarray(ab, dtype=np.float64)
    if ab.ndim != 2 or ab.shape[1] != 2:
        raise InputError("ab must be an (n, 2) array")
    return beta_quantile_table(ab, midpoint_levels(K), QUANTILE_TOL)


def kumaraswamy_dist(gamma: float, x: float, y: float, K: int = DEFAULT_K) -> QuantileDist:
    """Pushforward of Beta(x, y) under t -> t**(1/gamma)."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    base = beta_quantile_dist(x, y, K)
    return dist.pushforward_monotone(base, lambda t: t ** (1.0 / gamma), upper=1.0)


def h_map(k_mu: float, k_nu: float) -> tuple[Callable[[np.ndarray], np.ndarray],
                                             Callable[[np.ndarray], np.ndarray]]:
    """The reparameterization h(t) = t*k_nu / (t*k_nu + (1-t)*k_mu) and its
    inverse h^{-1}(u) = u*k_mu / (u*k_mu + (1-u)*k_nu).

    Both fix 0 and 1 and are strictly increasing on [0, 1].
    """
    if k_mu <= 0 or k_nu <= 0:
        raise ParameterError("k_mu and k_nu must be positive")

    def h(t):
        t = np.asarray(t, dtype=np.float64)
        return t * k_nu / (t * k_nu + (1.0 - t) * k_mu)

    def h_inv(u):
        u = np.asarray(u, dtype=np.float64)
        return u * k_mu / (u * k_mu + (1.0 - u) * k_nu)

    return h, h_inv


def scaled_bernoulli_solution(k_mu: float, k_nu: float, x: float, y: float,
                              K: int = DEFAULT_K) -> QuantileDist:
    """Limit law of the urn proportion for the scaled-Bernoulli pair with the
    canonical (delta) boundary: h^{-1} applied to Beta(x/k_mu, y/k_nu)."""
    if not 0 < k_nu <= k_mu:
        raise ParameterError(f"need 0 < k_nu <= k_mu, got {k_nu}, {k_mu}")
    base = beta_quantile_dist(x / k_mu, y / k_nu, K)
    _, h_inv = h_map(k_mu, k_nu)
    return dist.pushforward_monotone(base, h_inv, upper=1.0)
