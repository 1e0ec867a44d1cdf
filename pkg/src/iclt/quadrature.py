"""Quadrature on [0, pi] for smooth pi-periodic integrands.

The trapezoidal rule is spectrally accurate for these integrands, so it is
the only full-interval rule.  Running (cumulative) integrals use composite
Simpson, which is needed when the antiderivative is wanted at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConvergenceError, EvaluationError

Integrand = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

DEFAULT_M = 256
MAX_M = 65536


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid ``theta_j = j*pi/m``, ``j = 0..m``."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 4 or self.m % 2:
            raise ValueError(f"grid size must be an even integer >= 4, got {self.m!r}")

    @property
    def h(self) -> float:
        return math.pi / self.m

    @property
    def nodes(self) -> np.ndarray:
        nodes = np.arange(self.m + 1) * self.h
        nodes[-1] = math.pi
        return nodes

    def refined(self) -> "PeriodicGrid":
        return PeriodicGrid(2 * self.m)


def sample(f: Integrand, grid: PeriodicGrid) -> np.ndarray:
    """Node values of ``f``; accepts a vectorised callable or precomputed values."""
    if callable(f):
        values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), (grid.m + 1,))
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != (grid.m + 1,):
            raise ValueError(f"expected {grid.m + 1} node values, got shape {values.shape}")
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise EvaluationError(int(bad[0]), float(values[bad[0]]))
    return values


def integrate_periodic(f: Integrand, grid: PeriodicGrid) -> float:
    """Composite trapezoidal rule over ``[0, pi]``."""
    v = sample(f, grid)
    return grid.h * (0.5 * (v[0] + v[-1]) + float(np.sum(v[1:-1])))


def cumulative_integral(f: Integrand, grid: PeriodicGrid) -> np.ndarray:
    """``F(theta_j) = int_0^{theta_j} f`` at every node.

    Even nodes use composite Simpson; an odd node adds the three-point
    panel ``h (5 f_{j-1} + 8 f_j - f_{j+1}) / 12`` to its even predecessor.
    """
    v = sample(f, grid)
    h = grid.h
    out = np.zeros_like(v)
    pairs = h / 3.0 * (v[:-2:2] + 4.0 * v[1:-1:2] + v[2::2])
    out[2::2] = np.cumsum(pairs)
    out[1::2] = out[:-2:2] + h / 12.0 * (5.0 * v[:-2:2] + 8.0 * v[1:-1:2] - v[2::2])
    return out


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    m: int = DEFAULT_M,
    rtol: float = 1e-13,
    m_max: int = MAX_M,
    atol: float = 0.0,
) -> tuple[float, PeriodicGrid]:
    """Trapezoid with grid doubling until successive values agree to ``rtol``."""
    grid = PeriodicGrid(m)
    prev = cur = integrate_periodic(f, grid)
    while grid.m < m_max:
        grid = grid.refined()
        prev, cur = cur, integrate_periodic(f, grid)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur, grid
    raise ConvergenceError(f"trapezoid did not settle by m={m_max}", prev, cur)
