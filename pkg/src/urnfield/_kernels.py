"""Numba kernels: the Jacobi sweep of the fixed-point operator, and the
incomplete-beta CDF/quantile engine.

Everything here has a slower pure-NumPy/Python counterpart used as an oracle
in the test suite; the kernels are the production path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

# ---------------------------------------------------------------------------
# solver sweep
# ---------------------------------------------------------------------------
# Interpolation rule shared with SolutionField.at_star: componentwise linear in
# (sqrt(x*), y*).  The sqrt warp matches the sqrt(x*) growth of the limit
# law's spread away from the far-field column; with plain bilinear weights the
# first grid cells underestimate that spread by a factor that does not vanish
# under refinement.


@njit(cache=True, inline="always")
def _locate(pos: float, n: int):
    i0 = int(pos)
    if i0 > n - 2:
        i0 = n - 2
    return i0, pos - i0


@njit(cache=True, parallel=True)
def sweep(Q, out, upd, xs, ys, ku, wu, kv, wv, levels):
    """One Jacobi application of the starred operator on the interior.

    Q is the previous field (Mx, My, K); out receives the new interior values
    (its boundary row/column entries must be pre-filled); upd gets the
    nodewise Wasserstein distance between old and new values.
    """
    Mx, My, K = Q.shape
    Umu = ku.shape[0]
    C = Umu + kv.shape[0]
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    for flat in prange((Mx - 1) * (My - 2)):
        i = 1 + flat // (My - 2)
        j = 1 + flat % (My - 2)
        xst = xs[i]
        yst = ys[j]
        comp = np.empty((C, K))
        w = np.empty(C)
        for c in range(C):
            if c < Umu:
                k = ku[c]
                w[c] = yst * wu[c]
            else:
                k = kv[c - Umu]
                w[c] = (1.0 - yst) * wv[c - Umu]
            den = 1.0 + k * xst
            xp = xst / den
            yp = (yst + k * xst) / den if c < Umu else yst / den
            i0, _ = _locate(xp / dx, Mx)
            j0, fy = _locate(yp / dy, My)
            if fy < 0.0:
                fy = 0.0
            elif fy > 1.0:
                fy = 1.0
            sq0 = math.sqrt(xs[i0])
            fx = (math.sqrt(xp) - sq0) / (math.sqrt(xs[i0 + 1]) - sq0)
            if fx < 0.0:
                fx = 0.0
            elif fx > 1.0:
                fx = 1.0
            w00 = (1.0 - fx) * (1.0 - fy)
            w10 = fx * (1.0 - fy)
            w01 = (1.0 - fx) * fy
            w11 = fx * fy
            for t in range(K):
                comp[c, t] = (w00 * Q[i0, j0, t] + w10 * Q[i0 + 1, j0, t]
                              + w01 * Q[i0, j0 + 1, t] + w11 * Q[i0 + 1, j0 + 1, t])
        # pooled midpoint quantiles of the weighted mixture via k-way merge
        pos = np.zeros(C, dtype=np.int64)
        cum = 0.0
        acc = 0.0
        t_out = 0
        val = 0.0
        while t_out < K:
            best = -1
            bval = 1.0e300
            for c in range(C):
                p = pos[c]
                if p < K and comp[c, p] < bval:
                    bval = comp[c, p]
                    best = c
            if best < 0:
                while t_out < K:  # float shortfall below the last level
                    out[i, j, t_out] = val
                    acc += abs(val - Q[i, j, t_out])
                    t_out += 1
                break
            val = bval
            cum += w[best] / K
            pos[best] += 1
            while t_out < K and cum >= levels[t_out] - 1e-15:
                out[i, j, t_out] = val
                acc += abs(val - Q[i, j, t_out])
                t_out += 1
        upd[i, j] = acc / K


# ---------------------------------------------------------------------------
# incomplete beta: adaptive Simpson on the density, with the substitution
# t = s**(1/a) when a < 1 to remove the endpoint singularity; symmetry
# I_t(a, b) = 1 - I_{1-t}(b, a) keeps the integration on the left half.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _integrand(t: float, a: float, b: float, subst: int) -> float:
    if subst == 1:  # variable s, integrand of the substituted integral
        if t <= 0.0:
            return 1.0
        return (1.0 - t ** (1.0 / a)) ** (b - 1.0)
    if t <= 0.0:
        if a > 1.0:
            return 0.0
        return 1.0  # a == 1 exactly
    if t >= 1.0:
        return 0.0 if b > 1.0 else 1.0
    return t ** (a - 1.0) * (1.0 - t) ** (b - 1.0)


@njit(cache=True)
def _simpson(a: float, b: float, lo: float, hi: float, tol: float, subst: int) -> float:
    """Adaptive Simpson of the (possibly substituted) beta density on [lo, hi]."""
    if hi <= lo:
        return 0.0
    stack_lo = np.empty(512)
    stack_hi = np.empty(512)
    stack_tl = np.empty(512)
    stack_lo[0] = lo
    stack_hi[0] = hi
    stack_tl[0] = tol
    sp = 1
    total = 0.0
    while sp > 0:
        sp -= 1
        l = stack_lo[sp]
        h = stack_hi[sp]
        tl = stack_tl[sp]
        m = 0.5 * (l + h)
        fl = _integrand(l, a, b, subst)
        fm = _integrand(m, a, b, subst)
        fh = _integrand(h, a, b, subst)
        whole = (h - l) / 6.0 * (fl + 4.0 * fm + fh)
        lm = 0.5 * (l + m)
        mh = 0.5 * (m + h)
        flm = _integrand(lm, a, b, subst)
        fmh = _integrand(mh, a, b, subst)
        left = (m - l) / 6.0 * (fl + 4.0 * flm + fm)
        right = (h - m) / 6.0 * (fm + 4.0 * fmh + fh)
        err = left + right - whole
        if abs(err) <= 15.0 * tl or (h - l) < 1e-15 or sp > 505:
            total += left + right + err / 15.0
        else:
            stack_lo[sp] = l
            stack_hi[sp] = m
            stack_tl[sp] = 0.5 * tl
            sp += 1
            stack_lo[sp] = m
            stack_hi[sp] = h
            stack_tl[sp] = 0.5 * tl
            sp += 1
    return total


@njit(cache=True)
def _left_mass(t0: float, t1: float, a: float, b: float, lnB: float) -> float:
    """Normalized beta mass on [t0, t1], 0 <= t0 <= t1 <= 0.5 + eps."""
    if a < 1.0:
        raw = _simpson(a, b, t0 ** a, t1 ** a, 1e-14, 1) / a
    else:
        raw = _simpson(a, b, t0, t1, 1e-14, 0)
    return raw * math.exp(-lnB)


@njit(cache=True)
def beta_cdf_kernel(t: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_t(a, b)."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    lnB = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    if t > 0.5:
        return 1.0 - _left_mass(0.0, 1.0 - t, b, a, lnB)
    return _left_mass(0.0, t, a, b, lnB)


@njit(cache=True)
def beta_quantiles_kernel(a: float, b: float, levels, tol: float) -> np.ndarray:
    """Quantiles of Beta(a, b) at ascending levels, bisected to abs tol.

    Incremental: the running CDF value at the previous quantile is reused as
    the integration base for the next one, so each bisection integrates only
    short local panels.
    """
    K = levels.shape[0]
    out = np.empty(K)
    lnB = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    F05 = _left_mass(0.0, 0.5, a, b, lnB)
    # left side: levels <= F05, ascending from base 0
    base_t = 0.0
    base_F = 0.0
    for i in range(K):
        u = levels[i]
        if u > F05:
            break
        lo = base_t
        Flo = base_F
        hi = 0.5
        if Flo >= u:
            out[i] = lo
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            Fm = Flo + _left_mass(lo, mid, a, b, lnB)
            if Fm >= u:
                hi = mid
            else:
                lo = mid
                Flo = Fm
        out[i] = hi
        base_t = lo
        base_F = Flo
    # right side: levels > F05, descending from base 1 (roles of a, b swapped)
    base_t = 0.0  # in the reflected variable s = 1 - t
    base_F = 0.0  # mass of reflected density on [0, base_t]
    for i in range(K - 1, -1, -1):
        u = levels[i]
        if u <= F05:
            break
        target = 1.0 - u  # reflected CDF target
        lo = base_t
        Flo = base_F
        hi = 0.5
        if Flo >= target:
            out[i] = 1.0 - lo
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            Fm = Flo + _left_mass(lo, mid, b, a, lnB)
            if Fm >= target:
                hi = mid
            else:
                lo = mid
                Flo = Fm
        out[i] = 1.0 - hi
        base_t = lo
        base_F = Flo
    return out


@njit(cache=True, parallel=True)
def beta_quantile_table(ab: np.ndarray, levels: np.ndarray, tol: float) -> np.ndarray:
    """Quantile vectors for many (a, b) rows at once; rows with a or b equal to
    0 produce the point-mass conventions (at 0 and 1 respectively)."""
    n = ab.shape[0]
    K = levels.shape[0]
    out = np.empty((n, K))
    for r in prange(n):
        a = ab[r, 0]
        b = ab[r, 1]
        if a == 0.0:
            out[r] = 0.0
        elif b == 0.0:
            out[r] = 1.0
        else:
            out[r] = beta_quantiles_kernel(a, b, levels, tol)
    return out
