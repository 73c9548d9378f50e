"""Randomly reinforced urn simulation.

A trajectory follows the two-color reinforcement dynamics: at each step a
uniform u picks the color proportionally to its current share, and the picked
color's count grows by a draw from its reinforcement law (mu for black / x,
nu for white / y).  Runs stop once the total mass D_n reaches
max(2*beta, 16*beta/eps**2), which bounds the conditional gap between the
stopped proportion and the limit proportion by eps/2.

Reproducibility contract: replicate r consumes the substream
SeedSequence(entropy=seed, spawn_key=(r,)) of a PCG64 generator, and within a
step the three uniforms (u, v, w) are drawn in that order.  The batch engine
and the single-trajectory runner therefore produce bit-identical paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dist
from .dist import DEFAULT_K, QuantileDist
from .errors import DomainError, ParameterError, TruncationError
from .params import ReinforcementPair

_BLOCK_STEPS = 256
_CHUNK_REPLICATES = 4096
DEFAULT_RECORD_STEPS = (1, 2, 5, 10, 20, 50, 100)


@dataclass(frozen=True)
class UrnState:
    """Composition of the urn: X black, Y white, after n steps."""

    X: float
    Y: float
    n: int = 0

    def __post_init__(self):
        if self.X < 0 or self.Y < 0 or self.X + self.Y <= 0:
            raise DomainError(f"invalid composition ({self.X}, {self.Y})")

    @property
    def D(self) -> float:
        return self.X + self.Y

    @property
    def Z(self) -> float:
        return self.X / (self.X + self.Y)


@dataclass(frozen=True)
class RunConfig:
    """Simulation run parameters."""

    seed: int
    eps: float = 0.05
    max_steps: int | None = None
    replicates: int = 10_000

    def __post_init__(self):
        if self.eps <= 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ParameterError("max_steps must be >= 1")
        if self.replicates < 1:
            raise ParameterError("replicates must be >= 1")


@dataclass
class DiagnosticsRecord:
    """Per-trajectory martingale diagnostics.

    sup_compensator tracks the running maximum of |A_r| where A is the
    compensator of the proportion process; bracket_total accumulates the
    predictable quadratic-variation increments; inv_D_at maps selected step
    counts k to the observed 1/D_k.
    """

    sup_compensator: float = 0.0
    bracket_total: float = 0.0
    inv_D_at: dict[int, float] = field(default_factory=dict)


def stopping_threshold(pair: ReinforcementPair, eps: float) -> float:
    """Total-mass threshold max(2*beta, 16*beta/eps**2)."""
    return max(2.0 * pair.beta, 16.0 * pair.beta / (eps * eps))


def default_max_steps(pair: ReinforcementPair, eps: float) -> int:
    """Step budget sized from the worst-case mean growth rate m0."""
    return int(math.ceil(2.0 * stopping_threshold(pair, eps) / pair.m0)) + 10_000


def _substream(seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(r,))))


def _draw_index(v: np.ndarray, K: int) -> np.ndarray:
    """Index of the quantile-function atom at level v (generalized inverse)."""
    return np.clip(np.ceil(v * K).astype(np.int64) - 1, 0, K - 1)


def step(state: UrnState, pair: ReinforcementPair,
         u: float, v: float, w: float) -> UrnState:
    """One urn transition driven by explicit uniforms (u, v, w).

    Both candidate reinforcements q_mu(v) and q_nu(w) are defined every step
    (coupling needs that); only the picked one is applied.
    """
    K = pair.K
    rx = float(pair.mu.q[_draw_index(np.asarray(v), K)])
    ry = float(pair.nu.q[_draw_index(np.asarray(w), K)])
    if state.X > 0 and u <= state.X / state.D:
        return UrnState(state.X + rx, state.Y, state.n + 1)
    return UrnState(state.X, state.Y + ry, state.n + 1)


def _unique_atoms(d: QuantileDist) -> tuple[np.ndarray, np.ndarray]:
    atoms, counts = np.unique(d.q, return_counts=True)
    return atoms, counts / d.K


class _BatchResult:
    __slots__ = ("z", "steps", "truncated", "sup_comp", "bracket", "inv_d")

    def __init__(self, n):
        self.z = np.empty(n)
        self.steps = np.zeros(n, dtype=np.int64)
        self.truncated = np.zeros(n, dtype=bool)
        self.sup_comp = np.zeros(n)
        self.bracket = np.zeros(n)
        self.inv_d: dict[int, np.ndarray] = {}


def _simulate_chunk(x: float, y: float, pair: ReinforcementPair, eps: float,
                    seed: int, max_steps: int, rep_start: int, n_reps: int,
                    track: bool, record_steps: Sequence[int]) -> _BatchResult:
    """Vectorized trajectories for replicates rep_start..rep_start+n_reps-1."""
    thresh = stopping_threshold(pair, eps)
    K = pair.K
    qmu, qnu = pair.mu.q, pair.nu.q
    res = _BatchResult(n_reps)
    record_steps = sorted(set(record_steps)) if track else []
    for k in record_steps:
        res.inv_d[k] = np.full(n_reps, np.nan)

    X = np.full(n_reps, float(x))
    Y = np.full(n_reps, float(y))
    active = (X + Y) < thresh
    res.z[~active] = x / (x + y)
    if track:
        au, wu = _unique_atoms(pair.mu)
        av, wv = _unique_atoms(pair.nu)
        acomp = np.zeros(n_reps)

    gens = [_substream(seed, rep_start + r) for r in range(n_reps)]
    block = np.empty((n_reps, _BLOCK_STEPS, 3))
    n = 0
    while active.any() and n < max_steps:
        for r in np.nonzero(active)[0]:
            gens[r].random(out=block[r])
        for b in range(_BLOCK_STEPS):
            if n >= max_steps or not active.any():
                break
            D = X + Y
            Z = X / D
            if track:
                su1 = np.zeros(n_reps)
                su2 = np.zeros(n_reps)
                sv1 = np.zeros(n_reps)
                sv2 = np.zeros(n_reps)
                for a, wa in zip(au, wu):
                    f = a / (D + a)
                    su1 += wa * f
                    su2 += wa * f * f
                for a, wa in zip(av, wv):
                    f = a / (D + a)
                    sv1 += wa * f
                    sv2 += wa * f * f
                zz = Z * (1.0 - Z)
                d_a = zz * (su1 - sv1)
                d_br = zz * ((1.0 - Z) * su2 + Z * sv2) - d_a * d_a
                acomp = np.where(active, acomp + d_a, acomp)
                res.sup_comp = np.maximum(res.sup_comp, np.abs(acomp))
                res.bracket = np.where(active, res.bracket + d_br, res.bracket)
            u = block[:, b, 0]
            pick = active & (u <= Z) & (X > 0)
            rx = qmu[_draw_index(block[:, b, 1], K)]
            ry = qnu[_draw_index(block[:, b, 2], K)]
            X = np.where(pick, X + rx, X)
            Y = np.where(active & ~pick, Y + ry, Y)
            n += 1
            if track and n in res.inv_d:
                res.inv_d[n][:] = 1.0 / (X + Y)
            newly = active & ((X + Y) >= thresh)
            if newly.any():
                res.z[newly] = (X / (X + Y))[newly]
                res.steps[newly] = n
                active &= ~newly
    if active.any():
        res.z[active] = (X / (X + Y))[active]
        res.steps[active] = n
        res.truncated[active] = True
    return res


def _simulate_batch(x: float, y: float, pair: ReinforcementPair, cfg: RunConfig,
                    track: bool = False,
                    record_steps: Sequence[int] = DEFAULT_RECORD_STEPS) -> _BatchResult:
    max_steps = cfg.max_steps or default_max_steps(pair, cfg.eps)
    R = cfg.replicates
    out = _BatchResult(R)
    if track:
        for k in sorted(set(record_steps)):
            out.inv_d[k] = np.full(R, np.nan)
    for start in range(0, R, _CHUNK_REPLICATES):
        n = min(_CHUNK_REPLICATES, R - start)
        res = _simulate_chunk(x, y, pair, cfg.eps, cfg.seed, max_steps,
                              start, n, track, record_steps)
        sl = slice(start, start + n)
        out.z[sl] = res.z
        out.steps[sl] = res.steps
        out.truncated[sl] = res.truncated
        out.sup_comp[sl] = res.sup_comp
        out.bracket[sl] = res.bracket
        for k, v in res.inv_d.items():
            out.inv_d[k][sl] = v
    return out


def run_until_mass(start: UrnState, pair: ReinforcementPair, cfg: RunConfig,
                   replicate: int = 0,
                   record_steps: Sequence[int] = DEFAULT_RECORD_STEPS
                   ) -> tuple[float, int, DiagnosticsRecord]:
    """Single trajectory until the stopping threshold; returns (Z, steps, diag).

    Raises TruncationError (carrying the partial result) if max_steps is hit
    first; since the total mass grows linearly in expectation this signals an
    undersized step budget, never a silent failure.
    """
    res = _simulate_chunk(start.X, start.Y, pair, cfg.eps, cfg.seed,
                          cfg.max_steps or default_max_steps(pair, cfg.eps),
                          replicate, 1, True, record_steps)
    diag = DiagnosticsRecord(
        sup_compensator=float(res.sup_comp[0]),
        bracket_total=float(res.bracket[0]),
        inv_D_at={k: float(v[0]) for k, v in res.inv_d.items() if k <= res.steps[0]})
    if res.truncated[0]:
        raise TruncationError(
            f"max_steps reached at step {res.steps[0]} before the stopping "
            f"threshold {stopping_threshold(pair, cfg.eps)}",
            z=float(res.z[0]), steps=int(res.steps[0]), diagnostics=diag)
    return float(res.z[0]), int(res.steps[0]), diag


@dataclass
class SimulationResult:
    """Monte Carlo estimate of the limit-proportion law at one start point."""

    law: QuantileDist
    z_samples: np.ndarray
    replicates: int
    truncated: int
    eps: float
    seed: int

    @property
    def bias_bound(self) -> float:
        """Stopping-rule bias bound on each sample, eps/2."""
        return 0.5 * self.eps

    def to_dict(self) -> dict:
        return {"law": self.law.to_dict(), "replicates": self.replicates,
                "truncated": self.truncated, "eps": self.eps,
                "bias_bound": self.bias_bound, "seed": self.seed}


def estimate_limit_law(x: float, y: float, pair: ReinforcementPair,
                       cfg: RunConfig, K: int = DEFAULT_K) -> SimulationResult:
    """Empirical law of the stopped proportion over cfg.replicates trajectories.

    Total error is at most eps/2 stopping bias plus O(replicates**-1/2) Monte
    Carlo noise.  Truncated replicates are included in the law and counted.
    """
    if x < 0 or y < 0 or x + y <= 0:
        raise DomainError(f"start ({x}, {y}) outside the domain")
    res = _simulate_batch(x, y, pair, cfg, track=False)
    law = dist.from_samples(res.z, upper=1.0, K=K)
    return SimulationResult(law=law, z_samples=res.z, replicates=cfg.replicates,
                            truncated=int(res.truncated.sum()), eps=cfg.eps,
                            seed=cfg.seed)


def coupled_pair(start_a: UrnState, start_b: UrnState, pair: ReinforcementPair,
                 steps: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two urns driven by the same uniform streams; returns both proportion paths.

    Output arrays have length steps + 1 and include the initial proportions.
    """
    gen = _substream(seed, 0)
    draws = gen.random((steps, 3))
    za = np.empty(steps + 1)
    zb = np.empty(steps + 1)
    a, b = start_a, start_b
    za[0], zb[0] = a.Z, b.Z
    for n in range(steps):
        u, v, w = draws[n]
        a = step(a, pair, u, v, w)
        b = step(b, pair, u, v, w)
        za[n + 1], zb[n + 1] = a.Z, b.Z
    return za, zb


# ---------------------------------------------------------------------------
# appendix-bound diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    name: str
    estimate: float
    std_error: float
    bound: float
    passed: bool


@dataclass
class DiagnosticsReport:
    rows: list[BoundCheck]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        lines = ["name,estimate,std_error,bound,passed"]
        for r in self.rows:
            lines.append(f"{r.name},{r.estimate!r},{r.std_error!r},{r.bound!r},{r.passed}")
        return "\n".join(lines) + "\n"


def _check(name: str, samples: np.ndarray, bound: float) -> BoundCheck:
    est = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(samples.shape[0])) if samples.shape[0] > 1 else 0.0
    return BoundCheck(name=name, estimate=est, std_error=se, bound=bound,
                      passed=est <= bound + 3.0 * se + 1e-12)


def diagnostics_bounds_check(pair: ReinforcementPair, start: UrnState,
                             cfg: RunConfig,
                             ks: Sequence[int] = DEFAULT_RECORD_STEPS
                             ) -> DiagnosticsReport:
    """Monte Carlo check of the three martingale bounds.

    (a) E[1/D_k] against (1 + (beta-m)/D0) / (D0 + m(k-1) + beta) for each
    recorded k; (b) E[sup_r |A_r|] against beta/D0; (c) the accumulated
    bracket against beta/D0.  Each row reports estimate, standard error and a
    pass flag at three sigma.  Requires D0 >= 2*beta.
    """
    d0 = start.D
    if d0 < 2.0 * pair.beta:
        raise ParameterError(f"diagnostics need D0 >= 2*beta, got D0={d0}, beta={pair.beta}")
    res = _simulate_batch(start.X, start.Y, pair, cfg, track=True, record_steps=ks)
    beta, m = pair.beta, pair.m
    rows = []
    for k in sorted(res.inv_d):
        samples = res.inv_d[k]
        if np.isnan(samples).any():  # horizon shorter than k everywhere
            continue
        bound = (1.0 + (beta - m) / d0) / (d0 + m * (k - 1) + beta)
        rows.append(_check(f"inv_D_at_{k}", samples, bound))
    rows.append(_check("sup_compensator", res.sup_comp, beta / d0))
    rows.append(_check("bracket_total", res.bracket, beta / d0))
    return DiagnosticsReport(rows=rows)
