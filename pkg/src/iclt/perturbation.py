"""Lyapunov exponent and CLT variance from the leftmost Ince eigenvalue.

For ``dX = diag(a, b) X dt + sigma [[0, -1], [1, 0]] X o dW`` the Lyapunov
exponent and CLT variance are

    ell = (a + b)/2 - (sigma^2/2) lambda'(0)
    s2  = -(sigma^2/2) lambda''(0)

where ``lambda(mu)`` is the leftmost eigenvalue of

    y'' + c sin(2x) y' + (lambda - mu c cos(2x)) y = 0,  y'(0) = y'(pi) = 0

with ``c = -(a - b)/sigma^2``.  ``lambda'(0)`` is a Bessel ratio.
``lambda''(0)`` needs the first-order eigenfunction correction ``z(x, 0)``,
which is built from a finite cosine/sine series and one running integral.

Large arguments are handled with exponentially scaled Bessel values
(``exp(-|r|) I_k(r)``); the scale cancels in every ratio below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import quadrature
from .errors import ConvergenceError
from .quadrature import PeriodicGrid
from .specfun import bessel_i_scaled_all

SERIES_REL = 1e-16
DEFAULT_RTOL = 1e-13


@dataclass(frozen=True)
class SdeParams:
    """Drift eigenvalues ``a > b`` and rotational noise intensity ``sigma > 0``."""

    a: float
    b: float
    sigma: float

    def __post_init__(self):
        for name in ("a", "b", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.a > self.b:
            raise ValueError(f"a > b is required (got a={self.a!r}, b={self.b!r})")
        if not self.sigma > 0:
            raise ValueError(f"sigma > 0 is required (got sigma={self.sigma!r})")


@dataclass(frozen=True)
class InceProblem:
    """Ince coefficient ``c`` and perturbation parameter ``mu``."""

    c: float
    mu: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.mu)):
            raise ValueError("c and mu must be finite")

    @classmethod
    def from_params(cls, p: SdeParams, mu: float = 0.0) -> "InceProblem":
        return cls(ince_coefficient(p), mu)


@dataclass
class EigenfunctionCorrection:
    grid: PeriodicGrid
    z_values: np.ndarray
    zprime_values: np.ndarray
    jk: np.ndarray
    K: int


@dataclass
class CltResult:
    params: SdeParams
    ell: float
    s2: float
    lambda1: float
    lambda2: float
    method: str = "perturbation"
    diagnostics: dict = field(default_factory=dict)


def ince_coefficient(p: SdeParams) -> float:
    return -(p.a - p.b) / p.sigma**2


def lambda_prime_zero(c: float) -> float:
    """``lambda'(0) = c I_1(-c/2) / I_0(-c/2)``."""
    if c == 0:
        return 0.0
    s = bessel_i_scaled_all(1, -0.5 * c)
    return c * s[1] / s[0]


def _jk_scaled(c: float, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaled ``J_k`` (k = 1..K) and the scaled Bessel values they came from."""
    s = bessel_i_scaled_all(K + 1, -0.5 * c)
    ratio = s[1] / s[0]
    k = np.arange(1, K + 1)
    return s[k - 1] - 2.0 * ratio * s[k] + s[k + 1], s


def jk_coefficients(c: float, K: int) -> np.ndarray:
    """``J_k = I_{k-1}(r) - 2 (I_1(r)/I_0(r)) I_k(r) + I_{k+1}(r)``, ``r = -c/2``.

    These are the cosine coefficients of the first-order solvability
    integrand: ``(c cos 2t - lambda'(0)) exp(r cos 2t) = c sum_k J_k cos(2kt)``.
    """
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    jk, _ = _jk_scaled(c, int(K))
    return jk * math.exp(0.5 * abs(c))


def series_order(c: float, rel: float = SERIES_REL, kmax: int = 4096) -> int:
    """Smallest ``K`` with ``|J_K| < rel * (|J_1| + 1)``."""
    floor = math.exp(-0.5 * abs(c))
    K = 16
    while K <= kmax:
        jk, _ = _jk_scaled(c, K)
        small = np.nonzero(np.abs(jk) < rel * (abs(jk[0]) + floor))[0]
        if small.size:
            return int(small[0]) + 1
        K *= 2
    raise ConvergenceError(f"J_k series for c={c} needs more than {kmax} terms",
                           float(jk[-2]), float(jk[-1]))


def _series_tail(c: float, K: int) -> float:
    jk, _ = _jk_scaled(c, 2 * K + 1)
    floor = math.exp(-0.5 * abs(c))
    return float(np.sum(np.abs(jk[K:]) / np.arange(K + 1, 2 * K + 2)) / (abs(jk[0]) + floor))


def _zprime(c: float, jk_scaled: np.ndarray, x: np.ndarray) -> np.ndarray:
    r = -0.5 * c
    k = np.arange(1, len(jk_scaled) + 1)
    sines = np.sin(2.0 * np.multiply.outer(x, k)) @ (jk_scaled / k)
    return np.exp(abs(r) - r * np.cos(2.0 * x)) * (0.5 * c) * sines


def eigenfunction_correction(
    c: float, grid: PeriodicGrid, K: Optional[int] = None
) -> EigenfunctionCorrection:
    """First-order correction ``z(x, 0)`` of the leftmost eigenfunction.

    ``z'(x, 0) = exp((c/2) cos 2x) (c/2) sum_k (J_k/k) sin(2kx)`` in closed
    form; ``z`` is its running integral from 0 (so ``z(0) = z'(0) = 0``).
    """
    if K is None:
        K = series_order(c)
    jk, _ = _jk_scaled(c, K)
    zp = _zprime(c, jk, grid.nodes)
    zp[0] = 0.0
    z = quadrature.cumulative_integral(zp, grid)
    return EigenfunctionCorrection(grid, z, zp, jk * math.exp(0.5 * abs(c)), K)


def _lambda2_on_grid(c: float, grid: PeriodicGrid, K: int, lam1: float, i0_scaled: float) -> float:
    corr = eigenfunction_correction(c, grid, K)
    x = grid.nodes
    r = -0.5 * c
    weight = (c * np.cos(2.0 * x) - lam1) * np.exp(r * np.cos(2.0 * x) - abs(r))
    integral = quadrature.integrate_periodic(weight * corr.z_values, grid)
    return 2.0 * integral / (math.pi * i0_scaled)


def _lambda2_adaptive(
    c: float,
    rtol: float = DEFAULT_RTOL,
    m: int = quadrature.DEFAULT_M,
    m_max: int = quadrature.MAX_M,
    K: Optional[int] = None,
) -> tuple[float, dict]:
    if K is None:
        K = series_order(c)
    lam1 = lambda_prime_zero(c)
    i0_scaled = bessel_i_scaled_all(0, -0.5 * c)[0]
    grid = PeriodicGrid(m)
    prev = cur = _lambda2_on_grid(c, grid, K, lam1, i0_scaled)
    while grid.m < m_max:
        grid = grid.refined()
        prev, cur = cur, _lambda2_on_grid(c, grid, K, lam1, i0_scaled)
        if abs(cur - prev) <= rtol * abs(cur):
            info = {"K": K, "m": grid.m, "series_tail": _series_tail(c, K),
                    "refinement_delta": float(abs(cur - prev))}
            return float(cur), info
    # for |c| beyond a few tens the sine series cancels catastrophically near x = pi/2
    raise ConvergenceError(f"lambda''(0) for c={c} did not settle by m={m_max}", float(prev), float(cur))


def lambda_double_prime_zero(
    c: float,
    rtol: float = DEFAULT_RTOL,
    m: int = quadrature.DEFAULT_M,
    m_max: int = quadrature.MAX_M,
    K: Optional[int] = None,
) -> float:
    """``lambda''(0) = 2/(pi I_0(-c/2)) int_0^pi (c cos 2t - lambda'(0)) z(t,0) exp(-(c/2) cos 2t) dt``.

    The grid is doubled until two successive values agree to ``rtol``.

    Raises
    ------
    ConvergenceError
        If the grid reaches ``m_max`` without settling.
    """
    if c == 0:
        return 0.0
    return _lambda2_adaptive(c, rtol, m, m_max, K)[0]


def compute_clt(
    p: SdeParams,
    rtol: float = DEFAULT_RTOL,
    m: int = quadrature.DEFAULT_M,
    K: Optional[int] = None,
) -> CltResult:
    c = ince_coefficient(p)
    lam1 = lambda_prime_zero(c)
    lam2, info = _lambda2_adaptive(c, rtol=rtol, m=m, K=K)
    half_var = 0.5 * p.sigma**2
    info["c"] = c
    return CltResult(
        params=p,
        ell=float(0.5 * (p.a + p.b) - half_var * lam1),
        s2=float(-half_var * lam2),
        lambda1=float(lam1),
        lambda2=lam2,
        diagnostics=info,
    )


def lambda_to_gamma(lam: float, mu: float, p: SdeParams) -> float:
    """Rightmost eigenvalue ``gamma`` of the projected generator from ``lambda``.

    Inverts ``lambda = -2 gamma/sigma^2 + (a + b) mu/sigma^2``.
    """
    return 0.5 * ((p.a + p.b) * mu - p.sigma**2 * lam)


def gamma_to_lambda(gamma: float, mu: float, p: SdeParams) -> float:
    return (-2.0 * gamma + (p.a + p.b) * mu) / p.sigma**2
