"""Monte Carlo estimates of the Lyapunov exponent and its CLT variance.

Writing ``X_t = |X_t| (cos theta_t, sin theta_t)``, the skew-symmetric noise
only rotates ``X_t``, so

    d theta = -((a - b)/2) sin(2 theta) dt + sigma dW
    d ln|X| = (a cos^2 theta + b sin^2 theta) dt

The angle noise is additive, so Ito and Stratonovich forms coincide and
Euler-Maruyama needs no correction term.  ``ln|X_T|/T`` is estimated by a
left-point sum of the growth rate along each path; the long-run variance
comes from non-overlapping batch means.

The Euler-Maruyama time average carries an O(dt) bias.  With
``extrapolate=True`` a second chain with step ``2 dt`` is driven by the
pairwise-summed increments of the same path and the time average uses
``2 * fine - coarse`` window integrals (Talay-Tubaro extrapolation).  The
variance estimate always comes from the fine chain alone; the standard
error of the mean uses the spread of the combined integrals.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import SimulationError
from .perturbation import SdeParams


@dataclass(frozen=True)
class McConfig:
    dt: float = 1e-3
    total_time: float = 1e4
    n_paths: int = 64
    n_batches: int = 32
    seed: int = 20080930
    theta0: float = 0.0
    extrapolate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.total_time >= 1000 * self.dt:
            raise ValueError("total_time must be at least 1000*dt")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths!r}")
        if int(self.n_batches) != self.n_batches or self.n_batches < 8:
            raise ValueError(f"n_batches must be an integer >= 8, got {self.n_batches!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not (math.isfinite(self.theta0) and 0 <= self.theta0 < 2 * math.pi):
            raise ValueError("theta0 must lie in [0, 2*pi)")

    @property
    def batch_steps(self) -> int:
        steps = int(round(self.total_time / self.dt)) // self.n_batches
        return steps - steps % 2 if self.extrapolate else steps

    @property
    def effective_time(self) -> float:
        """Simulated horizon after trimming to whole batches."""
        return self.batch_steps * self.n_batches * self.dt


@dataclass
class McEstimate:
    ell_hat: float
    ell_se: float
    s2_hat: float
    s2_se: float
    per_path_ell: np.ndarray
    per_path_s2: np.ndarray
    params: SdeParams
    config: McConfig
    diagnostics: dict = field(default_factory=dict)


def angle_drift(theta, p: SdeParams):
    """Drift of the projected angle: ``-((a - b)/2) sin(2 theta)``."""
    return -0.5 * (p.a - p.b) * np.sin(2.0 * theta)


def growth_rate(theta, p: SdeParams):
    """Instantaneous log-radius growth ``a cos^2 theta + b sin^2 theta``."""
    return p.a * np.cos(theta) ** 2 + p.b * np.sin(theta) ** 2


def reduce_angle(theta: float) -> float:
    # drift and growth rate are pi-periodic
    return theta - math.pi * math.floor(theta / math.pi)


@njit(nogil=True, cache=True)
def _advance(theta, dw, dt, mean_q, half_gap, sigma):
    """Euler-Maruyama over the increments ``dw``; returns (theta, int Q dt, ok)."""
    acc = 0.0
    for i in range(dw.shape[0]):
        two = 2.0 * theta
        acc += mean_q + half_gap * math.cos(two)
        theta = theta - half_gap * math.sin(two) * dt + sigma * dw[i]
    # the angle is only reduced mod pi between chunks
    ok = math.isfinite(theta) and math.isfinite(acc)
    if ok:
        theta -= math.pi * math.floor(theta / math.pi)
    return theta, acc * dt, ok


@njit(nogil=True, cache=True)
def _advance_pair(theta, coarse, dw, dt, mean_q, half_gap, sigma):
    """As ``_advance``, also stepping a 2*dt chain on summed increment pairs."""
    acc = 0.0
    acc_c = 0.0
    dt2 = 2.0 * dt
    for i in range(0, dw.shape[0] - 1, 2):
        two = 2.0 * coarse
        acc_c += mean_q + half_gap * math.cos(two)
        coarse = coarse - half_gap * math.sin(two) * dt2 + sigma * (dw[i] + dw[i + 1])
        for j in range(i, i + 2):
            two = 2.0 * theta
            acc += mean_q + half_gap * math.cos(two)
            theta = theta - half_gap * math.sin(two) * dt + sigma * dw[j]
    ok = math.isfinite(theta) and math.isfinite(coarse) and math.isfinite(acc) and math.isfinite(acc_c)
    if ok:
        theta -= math.pi * math.floor(theta / math.pi)
        coarse -= math.pi * math.floor(coarse / math.pi)
    return theta, coarse, acc * dt, acc_c * dt2, ok


def integrate_path(p: SdeParams, dt: float, dw: np.ndarray, theta0: float = 0.0) -> tuple[float, float]:
    """Run one path on given Brownian increments; returns (final angle mod pi, int_0^T Q dt)."""
    dw = np.ascontiguousarray(dw, dtype=float)
    theta, acc, ok = _advance(
        reduce_angle(theta0), dw, dt, 0.5 * (p.a + p.b), 0.5 * (p.a - p.b), p.sigma,
    )
    if not ok:
        raise SimulationError(0, len(dw))
    return theta, acc


def path_stream(seed: int, path: int) -> np.random.Generator:
    """Independent generator for ``path``, derived from ``(seed, path)`` only."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(path,))))


def _run_path(p: SdeParams, cfg: McConfig, path: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-window integrals of Q: (for the mean, fine chain)."""
    rng = path_stream(cfg.seed, path)
    steps = cfg.batch_steps
    root_dt = math.sqrt(cfg.dt)
    mean_q, half_gap = 0.5 * (p.a + p.b), 0.5 * (p.a - p.b)
    theta = coarse = reduce_angle(cfg.theta0)
    integrals = np.empty(cfg.n_batches)
    combined = np.empty(cfg.n_batches)
    for j in range(cfg.n_batches):
        dw = rng.standard_normal(steps)
        dw *= root_dt
        if cfg.extrapolate:
            theta, coarse, fine, rough, ok = _advance_pair(
                theta, coarse, dw, cfg.dt, mean_q, half_gap, p.sigma)
            integrals[j] = fine
            combined[j] = 2.0 * fine - rough
        else:
            theta, integrals[j], ok = _advance(theta, dw, cfg.dt, mean_q, half_gap, p.sigma)
            combined[j] = integrals[j]
        if not ok:
            # reported at the end of the offending batch
            raise SimulationError(path, (j + 1) * steps)
    return combined, integrals


def worker_count() -> int:
    n = int(os.environ.get("ICLT_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def batch_means(integrals: np.ndarray, window: float) -> tuple[float, float]:
    """(time average, long-run variance) from per-window integrals of equal length."""
    means = integrals / window
    return float(np.mean(means)), float(window * np.var(means, ddof=1))


def simulate(p: SdeParams, cfg: McConfig, workers: int | None = None) -> McEstimate:
    """Estimate ``ell`` and ``s2`` from ``cfg.n_paths`` independent angle paths.

    Results depend only on ``(p, cfg)``: each path owns its random stream
    and the pooling runs in path order.
    """
    if cfg.batch_steps < 100:
        raise ValueError("each batch must span at least 100 steps")
    workers = workers or worker_count()
    if workers > 1 and cfg.n_paths > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda i: _run_path(p, cfg, i), range(cfg.n_paths)))
    else:
        rows = [_run_path(p, cfg, i) for i in range(cfg.n_paths)]
    window = cfg.batch_steps * cfg.dt
    horizon = cfg.effective_time
    mean_stats = np.array([batch_means(combined, window) for combined, _ in rows])
    ell_paths, mean_var = mean_stats[:, 0], mean_stats[:, 1]
    s2_paths = np.array([batch_means(fine, window)[1] for _, fine in rows])

    ell_hat = float(np.mean(ell_paths))
    s2_hat = float(np.mean(s2_paths))
    # equals s2_hat unless extrapolating
    mean_var_hat = float(np.mean(mean_var))
    ell_se = math.sqrt(mean_var_hat / (cfg.n_paths * horizon))
    if cfg.n_paths > 1:
        s2_se = float(np.std(s2_paths, ddof=1)) / math.sqrt(cfg.n_paths)
        ell_spread_se = float(np.std(ell_paths, ddof=1)) / math.sqrt(cfg.n_paths)
    else:
        s2_se = s2_hat * math.sqrt(2.0 / (cfg.n_batches - 1))
        ell_spread_se = float("nan")
    per_path_sd = math.sqrt(mean_var_hat / horizon)
    max_path_z = float(np.max(np.abs(ell_paths - ell_hat)) / per_path_sd) if per_path_sd > 0 else 0.0
    return McEstimate(
        ell_hat=ell_hat,
        ell_se=ell_se,
        s2_hat=s2_hat,
        s2_se=s2_se,
        per_path_ell=ell_paths,
        per_path_s2=s2_paths,
        params=p,
        config=cfg,
        diagnostics={
            "n_steps": cfg.batch_steps * cfg.n_batches,
            "batch_steps": cfg.batch_steps,
            "effective_time": horizon,
            "ell_se_across_paths": ell_spread_se,
            "max_path_z": max_path_z,
        },
    )
