"""Modified Bessel functions of the first kind, integer order.

Two evaluation paths are used:

* the ascending power series ``I_n(x) = sum_m (x/2)^(2m+n) / (m! (m+n)!)``
  for ``|x| <= SERIES_LIMIT`` (all terms positive, so no cancellation), and
* Miller's backward recurrence ``I_{k-1} = (2k/x) I_k + I_{k+1}``
  normalised with ``exp(x) = I_0(x) + 2 sum_k I_k(x)`` beyond that.

Negative orders are not stored; use ``I_{-n}(x) = I_n(x)``.
Negative arguments follow ``I_n(-x) = (-1)^n I_n(x)``.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_LIMIT = 20.0
_RESCALE = 1e250


def _check_args(n: int, x: float) -> None:
    if int(n) != n or n < 0:
        raise ValueError(f"Bessel order must be a non-negative integer, got {n!r}")
    if not math.isfinite(x):
        raise ValueError(f"Bessel argument must be finite, got {x!r}")


def _series(n: int, x: float) -> float:
    # x >= 0 here
    half = 0.5 * x
    lead = 1.0
    for k in range(1, n + 1):
        lead *= half / k
    if lead == 0.0:
        return 0.0
    q = half * half
    term = lead
    total = lead
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + n))
        total += term
        if term <= 1e-17 * total:
            break
    return total


def _miller_scaled(nmax: int, x: float) -> np.ndarray:
    """exp(-x) * I_k(x) for k = 0..nmax, x > 0, by backward recurrence."""
    start = nmax + int(math.sqrt(80.0 * max(x, nmax, 1.0))) + 30
    vals = np.zeros(nmax + 1)
    i_next, i_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        i_prev = (2.0 * k / x) * i_cur + i_next
        i_next, i_cur = i_cur, i_prev
        # i_cur now holds the (unnormalised) order k-1 value
        if k - 1 <= nmax:
            vals[k - 1] = i_cur
        if k - 1 > 0:
            norm += 2.0 * i_cur
        else:
            norm += i_cur
        if abs(i_cur) > _RESCALE:
            i_cur /= _RESCALE
            i_next /= _RESCALE
            vals /= _RESCALE
            norm /= _RESCALE
    return vals / norm


def bessel_i_scaled_all(nmax: int, x: float) -> np.ndarray:
    """Return ``exp(-|x|) * I_k(x)`` for ``k = 0..nmax``.

    The scaled form never overflows, so ratios such as ``I_1/I_0`` stay
    well defined for arbitrarily large arguments.
    """
    _check_args(nmax, x)
    ax = abs(x)
    if ax == 0.0:
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    if ax <= SERIES_LIMIT:
        scale = math.exp(-ax)
        out = np.array([_series(k, ax) * scale for k in range(nmax + 1)])
    else:
        out = _miller_scaled(nmax, ax)
    if x < 0:
        out[1::2] *= -1.0
    return out


def bessel_i_all(nmax: int, x: float) -> np.ndarray:
    """Return ``[I_0(x), ..., I_nmax(x)]``.

    Raises
    ------
    OverflowError
        If ``I_0(x)`` is not representable as a double.
    """
    scaled = bessel_i_scaled_all(nmax, x)
    ax = abs(x)
    if ax <= SERIES_LIMIT:
        return scaled * math.exp(ax)
    if ax > 709.0:
        raise OverflowError(f"I_k({x}) exceeds the double range")
    return scaled * math.exp(ax)


def bessel_i(n: int, x: float) -> float:
    """Modified Bessel function of the first kind ``I_n(x)``.

    Parameters
    ----------
    n : int
        Non-negative order.
    x : float
        Finite real argument.

    Raises
    ------
    ValueError
        For a negative/non-integer order or a non-finite argument.
    OverflowError
        If the result exceeds the double range.
    """
    _check_args(n, x)
    ax = abs(x)
    sign = -1.0 if (x < 0 and n % 2 == 1) else 1.0
    if ax == 0.0:
        return 1.0 if n == 0 else 0.0
    if ax <= SERIES_LIMIT:
        return sign * _series(int(n), ax)
    scaled = _miller_scaled(int(n), ax)[n]
    if scaled == 0.0:
        return 0.0
    log_val = ax + math.log(scaled)
    if log_val > 709.78:
        raise OverflowError(f"I_{n}({x}) exceeds the double range")
    return sign * math.exp(log_val)


def bessel_ratio(x: float) -> float:
    """``I_1(x) / I_0(x)``, safe for large ``|x|``."""
    s = bessel_i_scaled_all(1, x)
    return s[1] / s[0]


def expansion_order(r: float, rel: float = 1e-16, kmax: int = 4096) -> int:
    """Smallest ``K`` with ``|I_K(r)| < rel * I_0(r)``."""
    k = 16
    while k <= kmax:
        s = bessel_i_scaled_all(k, r)
        small = np.nonzero(np.abs(s) < rel * s[0])[0]
        if small.size:
            return max(int(small[0]), 1)
        k *= 2
    raise ValueError(f"expansion order for r={r} exceeds {kmax}")


def cos_expansion_coeffs(r: float, K: int) -> np.ndarray:
    """Coefficients of ``exp(r cos 2t) = I_0(r) + 2 sum_{k>=1} I_k(r) cos(2kt)``.

    Returns ``[I_0(r), I_1(r), ..., I_K(r)]``.
    """
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    return bessel_i_all(int(K), r)


def eval_cos_expansion(coeffs: np.ndarray, theta) -> np.ndarray:
    """Sum the truncated series ``c_0 + 2 sum_k c_k cos(2k theta)``."""
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, len(coeffs))
    return coeffs[0] + 2.0 * np.cos(2.0 * np.multiply.outer(theta, k)) @ coeffs[1:]
