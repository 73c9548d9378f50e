"""Boundary data: continuous maps from [0, 1] into the distributions on [0, 1].

A ``BoundaryDatum`` stores one QuantileDist per node of a uniform t-grid and
interpolates quantile vectors componentwise and linearly between nodes, which
keeps every interpolated value a valid distribution and makes the stochastic
monotonicity check a finite comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, TYPE_CHECKING

import numpy as np

from . import dist
from .dist import DEFAULT_K, QuantileDist, midpoint_levels
from .errors import DimensionMismatchError, InputError

if TYPE_CHECKING:  # pragma: no cover
    from .solver import SolutionField

DEFAULT_T = 101


@dataclass(frozen=True)
class BoundaryDatum:
    """t-indexed family of distributions on [0, 1], on T uniform t-nodes."""

    values: np.ndarray = field(repr=False)  # (T, K) quantile vectors

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
            raise InputError("values must be a (T, K) array with T, K >= 2")
        if np.any(np.diff(v, axis=1) < -1e-12) or v.min() < -1e-12 or v.max() > 1 + 1e-12:
            raise InputError("boundary values must be monotone quantile vectors in [0, 1]")
        v = np.clip(np.maximum.accumulate(v, axis=1), 0.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.T)

    def evaluate_many(self, t: np.ndarray) -> np.ndarray:
        """Quantile vectors at arbitrary t in [0, 1], shape (..., K)."""
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        pos = t * (self.T - 1)
        j0 = np.minimum(pos.astype(np.int64), self.T - 2)
        ft = (pos - j0)[..., None]
        return (1.0 - ft) * self.values[j0] + ft * self.values[j0 + 1]

    def evaluate(self, t: float) -> QuantileDist:
        return QuantileDist(1.0, self.evaluate_many(np.asarray(t)))

    def node(self, j: int) -> QuantileDist:
        return QuantileDist(1.0, self.values[j])

    def to_dict(self) -> dict:
        return {"T": self.T, "K": self.K,
                "values": [[float(v) for v in row] for row in self.values]}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryDatum":
        v = np.asarray(d["values"], dtype=np.float64)
        if "T" in d and int(d["T"]) != v.shape[0]:
            raise InputError("declared T does not match values")
        return cls(values=v)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def delta_datum(T: int = DEFAULT_T, K: int = DEFAULT_K) -> BoundaryDatum:
    """The canonical datum t -> point mass at t."""
    t = np.linspace(0.0, 1.0, T)
    return BoundaryDatum(np.repeat(t[:, None], K, axis=1))


def constant_datum(xi: QuantileDist, T: int = DEFAULT_T) -> BoundaryDatum:
    """t -> xi for every t."""
    if xi.upper != 1.0:
        raise InputError("boundary values must live on [0, 1]")
    return BoundaryDatum(np.repeat(xi.q[None, :], T, axis=0))


def power_datum(gamma: float, T: int = DEFAULT_T, K: int = DEFAULT_K) -> BoundaryDatum:
    """t -> point mass at t**(1/gamma)."""
    if gamma <= 0:
        raise InputError(f"gamma must be positive, got {gamma}")
    t = np.linspace(0.0, 1.0, T) ** (1.0 / gamma)
    return BoundaryDatum(np.repeat(t[:, None], K, axis=1))


def map_datum(h: Callable[[np.ndarray], np.ndarray], T: int = DEFAULT_T,
              K: int = DEFAULT_K) -> BoundaryDatum:
    """t -> point mass at h(t) for a nondecreasing h: [0,1] -> [0,1]."""
    t = np.asarray(h(np.linspace(0.0, 1.0, T)), dtype=np.float64)
    return BoundaryDatum(np.repeat(t[:, None], K, axis=1))


def pushforward_datum(phi: BoundaryDatum,
                      h: Callable[[np.ndarray], np.ndarray]) -> BoundaryDatum:
    """The datum t -> law of h(W), W ~ phi(t), for nondecreasing continuous h."""
    return BoundaryDatum(np.asarray(h(phi.values), dtype=np.float64))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def sup_distance(phi1: BoundaryDatum, phi2: BoundaryDatum) -> float:
    """Sup over t-nodes of the Wasserstein distance between the two data."""
    if phi1.T != phi2.T or phi1.K != phi2.K:
        raise DimensionMismatchError("boundary data on different grids")
    return float(np.abs(phi1.values - phi2.values).mean(axis=1).max())


def _pooled_equal_weight(vectors: np.ndarray, K: int) -> np.ndarray:
    """Pooled midpoint quantiles of an equal-weight mixture.

    vectors has shape (..., n_atoms); output (..., K).  With equal weights the
    pooled quantile at level (i-1/2)/K is order statistic ceil(level*n) of the
    pooled sample.
    """
    pooled = np.sort(vectors.reshape(vectors.shape[:-2] + (-1,)), axis=-1)
    n = pooled.shape[-1]
    idx = np.minimum(np.ceil(midpoint_levels(K) * n).astype(np.int64) - 1, n - 1)
    return pooled[..., idx]


def gamma_map(phi: BoundaryDatum, xi: QuantileDist) -> QuantileDist:
    """Mix the family phi over xi: the law with mass phi(t)(B) integrated xi(dt).

    Computed as the equal-weight mixture of phi evaluated at each of xi's K
    atoms, pooled back to the K-point grid.
    """
    if xi.upper != 1.0:
        raise InputError("gamma_map requires xi on [0, 1]")
    vec = phi.evaluate_many(xi.q)  # (K, Kphi)
    return QuantileDist(1.0, _pooled_equal_weight(vec, phi.K))


def psi_map(phi: BoundaryDatum, fld: "SolutionField",
            chunk: int = 128) -> "SolutionField":
    """Apply gamma_map nodewise to a solution field; re-pin its boundaries.

    The t-rows become phi(0) and phi(1) and the far-field column becomes
    phi(y*), all exact.
    """
    from .solver import SolutionField  # local import to avoid a module cycle

    Mx, My, K = fld.Q.shape
    flat = fld.Q.reshape(-1, K)
    out = np.empty((flat.shape[0], phi.K))
    for s in range(0, flat.shape[0], chunk):
        block = flat[s:s + chunk]
        out[s:s + block.shape[0]] = _pooled_equal_weight(
            phi.evaluate_many(block), phi.K)
    Q = out.reshape(Mx, My, phi.K)
    Q[:, 0, :] = phi.evaluate_many(np.asarray(0.0))
    Q[:, -1, :] = phi.evaluate_many(np.asarray(1.0))
    Q[0, :, :] = phi.evaluate_many(fld.ys)
    meta = dict(fld.meta)
    meta["boundary"] = "psi-mapped"
    return SolutionField(xs=fld.xs, ys=fld.ys, Q=Q, meta=meta)


def aggregate_phi(phi: BoundaryDatum) -> QuantileDist:
    """The t-average of the family, Phi = integral of phi(t) dt.

    Uses trapezoid endpoint weights on the t-grid so the discrete aggregate
    converges to the integral at rate 1/T.
    """
    w = np.full(phi.T, 1.0 / (phi.T - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    comps = [(float(w[j]), phi.node(j)) for j in range(phi.T)]
    return dist.mixture(comps)


def is_monotonic(phi: BoundaryDatum) -> bool:
    """True iff phi(s) stochastically dominates nothing ahead of it: for all
    adjacent nodes every quantile component is nondecreasing in t."""
    return bool(np.all(np.diff(phi.values, axis=0) >= -1e-12))


# ---------------------------------------------------------------------------
# boundary spec mini-language: "delta", "constant:SPEC", "power:gamma=G",
# "hdelta:kmu=A,knu=B", "file:path.json"
# ---------------------------------------------------------------------------

def parse_boundary_spec(spec: str, T: int = DEFAULT_T, K: int = DEFAULT_K) -> BoundaryDatum:
    kind, _, arg = spec.partition(":")
    try:
        if kind == "delta":
            return delta_datum(T, K)
        if kind == "constant":
            from .params import parse_dist_spec
            return constant_datum(parse_dist_spec(arg, beta=1.0, K=K), T)
        if kind == "power":
            kv = dict(part.split("=", 1) for part in arg.split(","))
            return power_datum(float(kv["gamma"]), T, K)
        if kind == "hdelta":
            from .closed_forms import h_map
            kv = dict(part.split("=", 1) for part in arg.split(","))
            h, _ = h_map(float(kv["kmu"]), float(kv["knu"]))
            return map_datum(h, T, K)
        if kind == "file":
            with open(arg) as fh:
                return BoundaryDatum.from_dict(json.load(fh))
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed boundary spec {spec!r}: {exc}") from exc
    raise InputError(f"unknown boundary spec kind {kind!r} in {spec!r}")
