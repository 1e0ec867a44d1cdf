"""Two independent routes to ``lambda(mu)`` away from the closed form.

* ``matrix``: leftmost eigenvalue of the truncated tridiagonal matrix with
  diagonal ``4n^2`` and off-diagonals ``q_n = (-n + mu/2) c`` (``sqrt(2)``
  on the first pair).
* ``cfrac``: the root near 0 of
  ``-lambda/2 = p_0/(4*1^2 - lambda - p_1/(4*2^2 - lambda - ...))`` with
  ``p_n = (-n + mu/2)(n + 1 + mu/2) c^2``.

Derivatives at ``mu = 0`` are then recovered by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, EigenSolveError
from .perturbation import lambda_prime_zero

DEFAULT_N = 40
DEFAULT_DEPTH = 60
DEFAULT_FD_MU = 1e-4
MAX_N = 1280


@dataclass(frozen=True)
class TridiagonalTruncation:
    """Leading ``N x N`` block of the infinite Ince matrix.

    ``lower[i]`` is entry ``(i+1, i)`` and ``upper[i]`` is entry ``(i, i+1)``.
    """

    c: float
    mu: float
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def N(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def banded(self) -> np.ndarray:
        ab = np.zeros((3, self.N))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return ab


@dataclass
class EigenEstimate:
    mu: float
    lam: float
    method: str
    truncation: int
    residual: float


@dataclass
class DerivativeEstimate:
    """Central (Richardson-extrapolated) derivatives plus the one-sided pair."""

    lambda1: float
    lambda2: float
    mu: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def build_matrix(c: float, mu: float, N: int = DEFAULT_N) -> TridiagonalTruncation:
    if int(N) != N or N < 8:
        raise ValueError(f"matrix size must be an integer >= 8, got {N!r}")
    n = np.arange(N, dtype=float)

    def q(k):
        return (-k + 0.5 * mu) * c

    diag = 4.0 * n**2
    upper = q(-(n[:-1] + 1.0))
    lower = q(n[:-1])
    root2 = math.sqrt(2.0)
    upper[0] *= root2
    lower[0] *= root2
    return TridiagonalTruncation(c, mu, diag, lower, upper)


def _sturm_count(d: np.ndarray, e2: np.ndarray, x: float) -> int:
    """Number of eigenvalues below ``x`` of the symmetric tridiagonal (d, sqrt(e2))."""
    count = 0
    piv = d[0] - x
    tiny = np.finfo(float).tiny
    if piv < 0:
        count += 1
    for i in range(1, len(d)):
        if piv == 0.0:
            piv = tiny
        piv = d[i] - x - e2[i - 1] / piv
        if piv < 0:
            count += 1
    return count


def _leftmost_sturm(T: TridiagonalTruncation, max_iter: int = 200) -> float:
    e2 = T.lower * T.upper
    e = np.sqrt(e2)
    radius = np.zeros(T.N)
    radius[:-1] += e
    radius[1:] += e
    lo = float(np.min(T.diag - radius))
    hi = float(np.max(T.diag + radius))
    for it in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return mid
        if _sturm_count(T.diag, e2, mid) >= 1:
            hi = mid
        else:
            lo = mid
    raise EigenSolveError("Sturm bisection did not close", max_iter, 0.5 * (lo + hi))


def _leftmost_dense(T: TridiagonalTruncation) -> float:
    ev = np.linalg.eigvals(T.dense())
    scale = max(1.0, float(np.max(np.abs(ev))))
    real = ev.real[np.abs(ev.imag) <= 1e-10 * scale]
    if real.size == 0:
        raise EigenSolveError("no real eigenvalue in truncation", 1, float("nan"))
    return float(real.min())


def _refine(T: TridiagonalTruncation, shift: float, iters: int = 3) -> float:
    """Two-sided Rayleigh quotient iteration started at ``shift``.

    Restores full relative accuracy for eigenvalues much smaller than the
    matrix norm, which a dense solve only delivers in absolute terms.
    """
    A = T.banded()
    At = np.zeros_like(A)
    At[0, 1:] = T.lower
    At[1] = T.diag
    At[2, :-1] = T.upper
    e0 = np.zeros(T.N)
    e0[0] = 1.0
    s = shift
    for it in range(iters):
        B = A.copy()
        B[1] -= s
        Bt = At.copy()
        Bt[1] -= s
        try:
            x = solve_banded((1, 1), B, e0)
            y = solve_banded((1, 1), Bt, e0)
        except np.linalg.LinAlgError:
            # shift already an exact eigenvalue
            return s
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            # shift is an eigenvalue to working precision
            return s
        # scale first so the norm cannot overflow
        x /= np.max(np.abs(x))
        y /= np.max(np.abs(y))
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        Bx = B[1] * x
        Bx[:-1] += B[0, 1:] * x[1:]
        Bx[1:] += B[2, :-1] * x[:-1]
        denom = y @ x
        if not np.isfinite(denom) or denom == 0.0:
            raise EigenSolveError("left/right eigenvectors orthogonal", it + 1, s)
        step = (y @ Bx) / denom
        s = s + step
        if not math.isfinite(s):
            raise EigenSolveError("Rayleigh refinement diverged", it + 1, s)
    return s


def leftmost_eigenvalue(T: TridiagonalTruncation, refine: bool = True) -> float:
    """Smallest real eigenvalue of the truncation.

    If every paired off-diagonal product is positive, the matrix is similar
    to a symmetric one and Sturm bisection applies; otherwise a dense
    eigensolve is used.  Either way the estimate is polished by a two-sided
    Rayleigh quotient iteration.
    """
    products = T.lower * T.upper
    if np.all(products > 0):
        lam = _leftmost_sturm(T)
    else:
        lam = _leftmost_dense(T)
    if refine:
        lam = _refine(T, lam)
    return lam


def _cfrac_denominator(lam: float, c: float, mu: float, depth: int) -> float:
    """``4*1^2 - lam - p_1/(4*2^2 - lam - ... p_{depth-1}/(4*depth^2 - lam))``."""
    c2 = c * c
    half = 0.5 * mu
    t = 4.0 * depth * depth - lam
    for n in range(depth - 1, 0, -1):
        t = 4.0 * n * n - lam - (-n + half) * (n + 1 + half) * c2 / t
    return t


def _cfrac_root(c: float, mu: float, depth: int) -> float:
    p0 = 0.5 * mu * (1.0 + 0.5 * mu) * c * c
    if p0 == 0.0:
        return 0.0

    def F(lam):
        return 0.5 * lam + p0 / _cfrac_denominator(lam, c, mu, depth)

    s = max(1.0, abs(c * mu))
    lo, hi = -s, min(s, 3.999)
    flo, fhi = F(lo), F(hi)
    for _ in range(40):
        if flo * fhi < 0:
            break
        lo *= 2.0
        flo = F(lo)
    else:
        raise BracketError(f"no sign change of the continued-fraction equation near 0 (c={c}, mu={mu})")
    try:
        root = brentq(F, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    except RuntimeError as exc:
        raise ConvergenceError(f"continued-fraction root search failed: {exc}", lo, hi) from exc
    # a pole inside the bracket would flip the denominator's sign
    d = [_cfrac_denominator(x, c, mu, depth) for x in (lo, root, hi)]
    if not (all(v > 0 for v in d) or all(v < 0 for v in d)):
        raise BracketError(f"bracket [{lo}, {hi}] straddles a pole (c={c}, mu={mu})")
    return root


def continued_fraction_lambda(
    c: float, mu: float, depth: int = DEFAULT_DEPTH, tol: float = 1e-14, max_depth: int = 4000
) -> float:
    """Root of the continued-fraction equation continuous in ``mu`` with ``lambda(0) = 0``.

    The depth is grown by 50% until the root moves by less than ``tol``.
    """
    return cfrac_estimate(c, mu, depth, tol, max_depth).lam


def cfrac_estimate(
    c: float, mu: float, depth: int = DEFAULT_DEPTH, tol: float = 1e-14, max_depth: int = 4000
) -> EigenEstimate:
    if int(depth) != depth or depth < 8:
        raise ValueError(f"depth must be an integer >= 8, got {depth!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    cur = _cfrac_root(c, mu, depth)
    while True:
        deeper = depth + depth // 2
        nxt = _cfrac_root(c, mu, deeper)
        if abs(nxt - cur) < tol:
            return EigenEstimate(mu, cur, "cfrac", depth, abs(nxt - cur))
        if deeper > max_depth:
            raise ConvergenceError(f"continued fraction unsettled at depth {deeper}", cur, nxt)
        depth, cur = deeper, nxt


def matrix_estimate(
    c: float, mu: float, N: int = DEFAULT_N, tol: float = 1e-13, max_n: int = MAX_N
) -> EigenEstimate:
    """Leftmost eigenvalue at size ``N``, doubling ``N`` until it moves less than ``tol``."""
    cur = leftmost_eigenvalue(build_matrix(c, mu, N))
    while True:
        nxt = leftmost_eigenvalue(build_matrix(c, mu, 2 * N))
        if abs(nxt - cur) < tol:
            return EigenEstimate(mu, cur, "matrix", N, abs(nxt - cur))
        if 2 * N >= max_n:
            raise ConvergenceError(f"matrix truncation unsettled at N={2 * N}", cur, nxt)
        N, cur = 2 * N, nxt


def eigen_estimate(c: float, mu: float, method: str = "cfrac", **kwargs) -> EigenEstimate:
    if method == "matrix":
        return matrix_estimate(c, mu, **kwargs)
    if method == "cfrac":
        return cfrac_estimate(c, mu, **kwargs)
    raise ValueError(f"unknown method {method!r} (expected 'matrix' or 'cfrac')")


def derivatives_by_differencing(
    c: float, mu: float = DEFAULT_FD_MU, method: str = "cfrac", richardson: bool = True
) -> DerivativeEstimate:
    """Estimate ``lambda'(0)`` and ``lambda''(0)`` from ``lambda(+-mu)``.

    Central differences use ``lambda(0) = 0``:
    ``lambda'(0) ~ (lambda(mu) - lambda(-mu))/(2 mu)`` and
    ``lambda''(0) ~ (lambda(mu) + lambda(-mu))/mu^2``.  With ``richardson``
    the steps ``mu`` and ``mu/2`` are combined as ``(4 D(mu/2) - D(mu))/3``.
    The one-sided estimates ``lambda(mu)/mu`` and
    ``(lambda(mu)/mu - c I_1(-c/2)/I_0(-c/2))/(mu/2)`` go into diagnostics.
    """
    if not 0 < abs(mu) <= 0.1:
        raise ValueError(f"need 0 < |mu| <= 0.1, got {mu!r}")

    def lam(x):
        return eigen_estimate(c, x, method).lam

    def central(h):
        plus, minus = lam(h), lam(-h)
        return (plus - minus) / (2 * h), (plus + minus) / (h * h), plus

    d1, d2, plus = central(mu)
    diagnostics = {
        "one_sided_lambda1": plus / mu,
        "one_sided_lambda2": (plus / mu - lambda_prime_zero(c)) / (0.5 * mu),
        "central_lambda1": d1,
        "central_lambda2": d2,
        "lambda_mu": plus,
    }
    if richardson:
        h1, h2, _ = central(0.5 * mu)
        d1 = (4.0 * h1 - d1) / 3.0
        d2 = (4.0 * h2 - d2) / 3.0
    return DerivativeEstimate(d1, d2, mu, method, diagnostics)
