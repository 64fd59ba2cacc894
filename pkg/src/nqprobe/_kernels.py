"""Numba kernels for the probe hot path.

Each output value depends only on (replica seed, flat pixel index), so the
``prange`` schedule cannot affect results: any thread count produces
bit-identical sums.  The scalar arithmetic here mirrors ``_rng`` exactly.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

# The TBB shipped in some environments is too old for numba and triggers a
# noisy import-time warning; workqueue behaves identically for these kernels.
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "workqueue"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _ppnd16(p):
    # Wichura AS 241, same coefficients and evaluation order as _rng.normal_quantile.
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        pt = p
    else:
        pt = 1.0 - p
    r = np.sqrt(-np.log(pt))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    if q < 0.0:
        return -val
    return val


@njit(parallel=True, cache=True)
def accumulate_integer(values, seeds, bits, cutoff, val, alias_val, clip, lo, hi, out):
    """Sum quantized replicas for an integer-valued image.

    The rounded noise increment d = round(sigma*N) is sampled from its exact
    discrete distribution via an alias table shared by all pixels; the pixel
    value only shifts (and optionally clamps) the result.
    """
    n = values.size
    R = seeds.size
    shift = np.uint64(64) - bits
    mask = (np.uint64(1) << shift) - np.uint64(1)
    for i in prange(n):
        idx = np.uint64(i + 1) * _GOLDEN
        v = values[i]
        total = np.int64(0)
        for r in range(R):
            u64 = _mix64(seeds[r] + idx)
            j = np.int64(u64 >> shift)
            if (u64 & mask) < cutoff[j]:
                d = val[j]
            else:
                d = alias_val[j]
            y = v + d
            if clip:
                if y < lo:
                    y = lo
                elif y > hi:
                    y = hi
            total += y
        out[i] = total
    return out


@njit(parallel=True, cache=True)
def accumulate_fractional(values, seeds, sigma, clip, lo, hi, out):
    """Sum quantized replicas for a fractional-valued image.

    Noise is sigma * Phi^{-1}(u) per value; rounding is half-away-from-zero.
    """
    n = values.size
    R = seeds.size
    for i in prange(n):
        idx = np.uint64(i + 1) * _GOLDEN
        x = values[i]
        total = np.int64(0)
        for r in range(R):
            u64 = _mix64(seeds[r] + idx)
            u = (np.float64(u64 >> np.uint64(12)) + 0.5) * 2.220446049250313e-16
            t = x + sigma * _ppnd16(u)
            if t >= 0.0:
                y = np.int64(np.floor(t + 0.5))
            else:
                y = np.int64(np.ceil(t - 0.5))
            if clip:
                if y < lo:
                    y = lo
                elif y > hi:
                    y = hi
            total += y
        out[i] = total
    return out


def set_threads(n: int) -> int:
    """Set the kernel worker count, returning the previous value."""
    prev = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return prev
