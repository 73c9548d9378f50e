"""Reinforcement-pair parameters: equal-mean distribution couples on [0, beta].

A valid parameter is a couple (mu, nu) of distributions supported in
[0, beta] whose means coincide and are bounded below by m0 > 0.  The couple
space carries the Manhattan metric d_M = d_W(mu1, mu2) + d_W(nu1, nu2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import dist
from .dist import DEFAULT_K, QuantileDist, midpoint_levels
from .errors import DimensionMismatchError, InputError, ParameterError

#: relative tolerance (times beta) for the equal-means check; analytic equal
#: means can differ at rounding level after grid discretization
EQUAL_MEANS_RTOL = 1e-9


@dataclass(frozen=True)
class ReinforcementPair:
    """Validated equal-mean reinforcement couple (mu, nu) on [0, beta]."""

    mu: QuantileDist
    nu: QuantileDist
    beta: float
    m: float
    m0: float

    @property
    def K(self) -> int:
        return self.mu.K

    def to_dict(self) -> dict:
        return {"mu": self.mu.to_dict(), "nu": self.nu.to_dict(),
                "beta": self.beta, "m": self.m, "m0": self.m0}

    @classmethod
    def from_dict(cls, d: dict) -> "ReinforcementPair":
        return validate(QuantileDist.from_dict(d["mu"]),
                        QuantileDist.from_dict(d["nu"]),
                        beta=float(d["beta"]), m0=float(d["m0"]))


def validate(mu: QuantileDist, nu: QuantileDist, beta: float,
             m0: float | None = None) -> ReinforcementPair:
    """Check the parameter-space invariants and build a ReinforcementPair.

    m0 is caller-supplied metadata; it defaults to half the measured common
    mean and is never inferred otherwise.
    """
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    for name, d in (("mu", mu), ("nu", nu)):
        if abs(d.upper - beta) > 1e-12 * beta:
            raise ParameterError(f"{name} lives on [0, {d.upper}], expected [0, {beta}]")
    if mu.K != nu.K:
        raise DimensionMismatchError(f"mu and nu have different K: {mu.K} != {nu.K}")
    m_mu, m_nu = mu.mean(), nu.mean()
    if abs(m_mu - m_nu) > EQUAL_MEANS_RTOL * beta:
        raise ParameterError(f"means differ: {m_mu} vs {m_nu}")
    m = 0.5 * (m_mu + m_nu)
    if m0 is None:
        m0 = 0.5 * m
    if m0 <= 0:
        raise ParameterError(f"m0 must be positive, got {m0}")
    if m < m0 - EQUAL_MEANS_RTOL * beta:
        raise ParameterError(f"common mean {m} below m0 = {m0}")
    return ReinforcementPair(mu=mu, nu=nu, beta=beta, m=m, m0=m0)


def manhattan(p1: ReinforcementPair, p2: ReinforcementPair) -> float:
    """Manhattan distance d_W(mu1, mu2) + d_W(nu1, nu2) on the couple space."""
    if abs(p1.beta - p2.beta) > 1e-12 * p1.beta:
        raise DimensionMismatchError("pairs on different [0, beta] intervals")
    return dist.wasserstein(p1.mu, p2.mu) + dist.wasserstein(p1.nu, p2.nu)


def dilute(p: ReinforcementPair, frac: float) -> ReinforcementPair:
    """Mix both reinforcements with a point mass at 0: frac*mu + (1-frac)*delta_0.

    Leaves the induced solution field unchanged while scaling the common mean
    to frac * m, hence the precondition frac >= m0/m.
    """
    lo = p.m0 / p.m
    if not lo - 1e-12 <= frac <= 1 + 1e-12:
        raise ParameterError(f"frac must lie in [{lo}, 1], got {frac}")
    zero = dist.point_mass(0.0, upper=p.beta, K=p.K)
    mu = dist.mixture([(frac, p.mu), (1.0 - frac, zero)])
    nu = dist.mixture([(frac, p.nu), (1.0 - frac, zero)])
    return validate(mu, nu, beta=p.beta, m0=p.m0)


def bernoulli(scale: float, prob: float, upper: float, K: int = DEFAULT_K) -> QuantileDist:
    """scale * Bernoulli(prob) as a quantile grid on [0, upper]."""
    if not 0 <= prob <= 1:
        raise ParameterError(f"probability {prob} outside [0, 1]")
    if scale > upper:
        raise ParameterError(f"atom {scale} above upper {upper}")
    n_hi = int(round(prob * K))
    q = np.zeros(K)
    if n_hi > 0:
        q[K - n_hi:] = scale
    return QuantileDist(upper, q)


def scaled_bernoulli_pair(k_mu: float, k_nu: float, m: float,
                          K: int = DEFAULT_K, m0: float | None = None) -> ReinforcementPair:
    """mu = k_mu * Bernoulli(m/k_mu), nu = k_nu * Bernoulli(m/k_nu) on [0, k_mu].

    Well-definedness of the success probabilities requires m <= k_nu <= k_mu
    and m > 0.  Note: grid discretization keeps the means exactly equal only
    when m*K/k_mu and m*K/k_nu round consistently; validation rejects the
    construction otherwise.
    """
    if m <= 0:
        raise ParameterError(f"m must be positive, got {m}")
    if not m <= k_nu <= k_mu:
        raise ParameterError(f"need m <= k_nu <= k_mu, got m={m}, k_nu={k_nu}, k_mu={k_mu}")
    beta = k_mu
    mu = bernoulli(k_mu, m / k_mu, upper=beta, K=K)
    nu = bernoulli(k_nu, m / k_nu, upper=beta, K=K)
    return validate(mu, nu, beta=beta, m0=m0)


# ---------------------------------------------------------------------------
# distribution spec mini-language: "delta:v", "bernoulli:p=P,scale=S",
# "uniform:a,b", "file:path.json"
# ---------------------------------------------------------------------------

def parse_dist_spec(spec: str, beta: float, K: int = DEFAULT_K) -> QuantileDist:
    """Build a QuantileDist on [0, beta] from a compact spec string."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "delta":
            return dist.point_mass(float(arg), upper=beta, K=K)
        if kind == "bernoulli":
            kv = dict(part.split("=", 1) for part in arg.split(","))
            scale = float(kv.get("scale", 1.0))
            return bernoulli(scale, float(kv["p"]), upper=beta, K=K)
        if kind == "uniform":
            a, b = (float(v) for v in arg.split(","))
            return dist.uniform(a, b, upper=beta, K=K)
        if kind == "file":
            with open(arg) as fh:
                d = QuantileDist.from_dict(json.load(fh))
            if abs(d.upper - beta) > 1e-12 * beta:
                raise InputError(f"distribution in {arg} lives on [0, {d.upper}], expected [0, {beta}]")
            if d.K != K:
                raise InputError(f"distribution in {arg} has K={d.K}, expected {K}")
            return d
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed distribution spec {spec!r}: {exc}") from exc
    raise InputError(f"unknown distribution spec kind {kind!r} in {spec!r}")
