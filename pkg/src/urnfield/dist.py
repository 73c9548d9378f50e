"""Probability distributions on a compact interval [0, upper], stored as
fixed-resolution quantile grids.

A ``QuantileDist`` holds the K quantiles of a distribution at the midpoint
levels (i - 1/2)/K, i = 1..K, and represents the uniform mixture of K point
masses sitting at those quantiles.  With this representation the 1-D
Wasserstein distance is an exact O(K) sum (quantile coupling is the optimal
coupling in one dimension), convex combinations of quantile vectors are again
valid quantile vectors, and atoms survive re-gridding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolationError, DimensionMismatchError, InputError

DEFAULT_K = 256

#: tolerance (relative to upper) used to repair float-level monotonicity noise
_MONOTONE_SLACK = 1e-12


def midpoint_levels(K: int) -> np.ndarray:
    """Quantile levels (i - 1/2)/K for i = 1..K."""
    return (np.arange(K) + 0.5) / K


@dataclass(frozen=True)
class QuantileDist:
    """Distribution on [0, upper] given by K midpoint quantiles.

    Invariants: 0 <= q[0] <= ... <= q[K-1] <= upper.  Violations beyond a
    1e-12*upper slack raise ``InputError``; smaller ones are repaired, so the
    stored array is exactly monotone and clipped to the support.
    """

    upper: float
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.upper <= 0:
            raise InputError(f"upper must be positive, got {self.upper}")
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] < 2:
            raise InputError("q must be a 1-D array with at least 2 entries")
        slack = _MONOTONE_SLACK * self.upper
        if np.any(np.diff(q) < -slack):
            raise InputError("quantile vector is not monotone")
        if q[0] < -slack or q[-1] > self.upper + slack:
            raise InputError("quantile values outside [0, upper]")
        q = np.clip(np.maximum.accumulate(q), 0.0, self.upper)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def K(self) -> int:
        return self.q.shape[0]

    def mean(self) -> float:
        return float(self.q.mean())

    def quantile(self, v: float) -> float:
        """Generalized inverse CDF, inf{z : F(z) >= v}."""
        i = int(np.ceil(v * self.K)) - 1
        return float(self.q[min(max(i, 0), self.K - 1)])

    def cdf(self, z: float) -> float:
        return float(np.searchsorted(self.q, z, side="right")) / self.K

    def to_dict(self) -> dict:
        return {"upper": self.upper, "K": self.K, "q": [float(v) for v in self.q]}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileDist":
        q = np.asarray(d["q"], dtype=np.float64)
        if "K" in d and int(d["K"]) != q.shape[0]:
            raise InputError("declared K does not match quantile array length")
        return cls(upper=float(d["upper"]), q=q)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def point_mass(a: float, upper: float = 1.0, K: int = DEFAULT_K) -> QuantileDist:
    """The point mass at a, represented on [0, upper]."""
    if not 0 <= a <= upper:
        raise InputError(f"atom {a} outside [0, {upper}]")
    return QuantileDist(upper, np.full(K, float(a)))


def uniform(a: float = 0.0, b: float = 1.0, upper: float | None = None,
            K: int = DEFAULT_K) -> QuantileDist:
    """Uniform distribution on [a, b] within [0, upper]."""
    if upper is None:
        upper = b
    if not 0 <= a <= b <= upper:
        raise InputError(f"need 0 <= {a} <= {b} <= {upper}")
    return QuantileDist(upper, a + (b - a) * midpoint_levels(K))


def from_samples(values: np.ndarray, upper: float, K: int = DEFAULT_K) -> QuantileDist:
    """Empirical law of a sample, re-gridded to K midpoint quantiles."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.shape[0]
    if n == 0:
        raise InputError("empty sample")
    idx = np.minimum(np.ceil(midpoint_levels(K) * n).astype(np.int64) - 1, n - 1)
    return QuantileDist(upper, v[np.maximum(idx, 0)])


# ---------------------------------------------------------------------------
# metric and functional operations
# ---------------------------------------------------------------------------

def _check_same_grid(a: QuantileDist, b: QuantileDist) -> None:
    if a.upper != b.upper:
        raise DimensionMismatchError(f"upper mismatch: {a.upper} != {b.upper}")
    if a.K != b.K:
        raise DimensionMismatchError(f"K mismatch: {a.K} != {b.K}")


def wasserstein(a: QuantileDist, b: QuantileDist) -> float:
    """Exact Wasserstein-1 distance between two quantile-grid distributions.

    Equals the mean absolute difference of the quantile vectors; in one
    dimension the quantile coupling attains the Kantorovich infimum.
    """
    _check_same_grid(a, b)
    return float(np.abs(a.q - b.q).mean())


def kr_dual_lower_bound(a: QuantileDist, b: QuantileDist,
                        h: Callable[[np.ndarray], np.ndarray]) -> float:
    """|int h da - int h db| for a 1-Lipschitz test function h.

    The caller asserts ||h||_L <= 1; by duality the result is bounded by
    wasserstein(a, b) up to numerical slack.
    """
    _check_same_grid(a, b)
    ha = np.asarray(h(a.q), dtype=np.float64)
    hb = np.asarray(h(b.q), dtype=np.float64)
    return float(abs(ha.mean() - hb.mean()))


def from_cdf(F: Callable[[float], float], K: int, upper: float = 1.0) -> QuantileDist:
    """Quantile grid of a distribution given by its CDF on [0, upper].

    Each quantile is the generalized inverse inf{z : F(z) >= level}, found by
    bisection to an absolute tolerance of upper * 1e-12.
    """
    if F(upper) < 1.0 - 1e-9:
        raise InputError(f"F({upper}) = {F(upper)} < 1; not a CDF on [0, {upper}]")
    # bisection output is monotone in the level for any F, so non-monotone
    # inputs must be caught by probing F itself
    probes = np.linspace(0.0, upper, 4 * K + 1)
    fv = np.array([F(z) for z in probes])
    if np.any(np.diff(fv) < -1e-12):
        raise InputError("non-monotone F detected during inversion")
    tol = upper * 1e-12
    q = np.empty(K)
    lo_start = 0.0
    for i, level in enumerate(midpoint_levels(K)):
        lo, hi = lo_start, upper
        if F(lo) >= level:
            q[i] = lo
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if F(mid) >= level:
                hi = mid
            else:
                lo = mid
        q[i] = hi
        lo_start = lo  # warm start: quantiles are nondecreasing in the level
    if np.any(np.diff(q) < -tol):
        raise InputError("non-monotone CDF detected during inversion")
    return QuantileDist(upper, q)


def mixture(components: Sequence[tuple[float, QuantileDist]]) -> QuantileDist:
    """Finite mixture, re-projected to the K-point midpoint quantile grid.

    Pools every component's atoms with their weights, sorts, and reads off the
    pooled quantile at each level (i - 1/2)/K.  Atoms are preserved exactly
    (no smoothing).
    """
    if not components:
        raise InputError("empty mixture")
    weights = np.array([w for w, _ in components], dtype=np.float64)
    if np.any(weights < 0):
        raise InputError("negative mixture weight")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise InputError(f"mixture weights sum to {weights.sum()}, not 1")
    first = components[0][1]
    for _, c in components:
        _check_same_grid(first, c)
    K = first.K
    atoms = np.concatenate([c.q for _, c in components])
    atom_w = np.concatenate([np.full(K, w / K) for w, _ in components])
    order = np.argsort(atoms, kind="stable")
    atoms = atoms[order]
    cum = np.cumsum(atom_w[order])
    idx = np.searchsorted(cum, midpoint_levels(K) - 1e-12, side="left")
    return QuantileDist(first.upper, atoms[np.minimum(idx, atoms.shape[0] - 1)])


def pushforward_monotone(xi: QuantileDist, h: Callable[[np.ndarray], np.ndarray],
                         upper: float | None = None) -> QuantileDist:
    """Image of xi under a nondecreasing map h; exact on quantiles.

    Quantiles commute with monotone maps, so the result is h applied
    componentwise.  Detected decreases beyond 1e-12 raise
    ``ContractViolationError``.
    """
    if upper is None:
        upper = xi.upper
    hq = np.asarray(h(xi.q), dtype=np.float64)
    if np.any(np.diff(hq) < -1e-12):
        raise ContractViolationError("map passed to pushforward_monotone decreases")
    return QuantileDist(upper, hq)


def pushforward_general(xi: QuantileDist, h: Callable[[np.ndarray], np.ndarray],
                        upper: float | None = None) -> QuantileDist:
    """Image of xi under an arbitrary continuous map: map atoms, sort, re-grid."""
    if upper is None:
        upper = xi.upper
    return QuantileDist(upper, np.sort(np.asarray(h(xi.q), dtype=np.float64)))


@dataclass(frozen=True)
class AtomReport:
    """Location and estimated mass of the largest near-atom of a distribution."""

    location: float
    mass_estimate: float


def largest_atom(xi: QuantileDist, tol: float | None = None) -> AtomReport:
    """Longest run of quantiles equal within tol, as an atom candidate.

    mass_estimate is run length / K; location is the midpoint of the run's
    value range.  Default tol is 1e-9 * upper.
    """
    if tol is None:
        tol = 1e-9 * xi.upper
    if tol <= 0:
        raise InputError("tol must be positive")
    q = xi.q
    K = q.shape[0]
    best_len, best_lo, best_hi = 1, q[0], q[0]
    start = 0
    for j in range(1, K):
        if q[j] - q[start] > tol:
            start_new = j
            # runs can overlap tails: restart at the earliest index still in tol
            while q[j] - q[start_new - 1] <= tol and start_new > start + 1:
                start_new -= 1
            start = start_new
        if j - start + 1 > best_len:
            best_len, best_lo, best_hi = j - start + 1, q[start], q[j]
    return AtomReport(location=float(0.5 * (best_lo + best_hi)),
                      mass_estimate=best_len / K)
