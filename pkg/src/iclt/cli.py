"""Command-line interface.

Subcommands::

    iclt compute --a 1 --b -2 --sigma 10
    iclt eig --c -3 --mu 1e-4 --method matrix --n 40
    iclt mc --a 1 --b -2 --sigma 1 --dt 1e-3 --time 1e3 --paths 16 --seed 7
    iclt verify [--quick] [--tol 1e-10]
    iclt sweep --a 1 --b -2 --sigma-min 1 --sigma-max 10 --steps 10

``compute``, ``eig`` and ``mc`` print one JSON record per line on stdout,
``sweep`` prints CSV and ``verify`` a pass/fail table.  Exit codes: 0 ok,
1 verification failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import mc_sim, perturbation, quadrature, spectral
from .errors import NumericalError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# (a, b, sigma) -> (ell, s2), printed to 25 digits in the source tables
REFERENCE_VALUES = {
    (1.0, -2.0, 10.0): ("-0.4887503163943852244580286", "0.0112485762885419873084837"),
    (1.0, -2.0, 1.0): ("0.3941998582469360577816389", "0.3841476218435126147382099"),
}


class UsageError(ValueError):
    pass


def _clean(value):
    """Plain JSON-safe Python values; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class OutputRecord:
    """One output line.  Floats use the shortest round-trip representation."""

    command: str
    inputs: dict
    method: str
    ell: Optional[float] = None
    s2: Optional[float] = None
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    FIELDS = ("schema_version", "command", "inputs", "method",
              "ell", "s2", "lambda1", "lambda2", "diagnostics")

    def to_dict(self) -> dict:
        return {k: _clean(getattr(self, k)) for k in self.FIELDS}

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_line(cls, line: str) -> "OutputRecord":
        data = json.loads(line)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")
        return cls(**{k: data[k] for k in cls.FIELDS})


def _emit(record: OutputRecord, out) -> None:
    out.write(record.to_line() + "\n")


def _params(args) -> perturbation.SdeParams:
    return perturbation.SdeParams(args.a, args.b, args.sigma)


def _clt(p: perturbation.SdeParams, args) -> perturbation.CltResult:
    return perturbation.compute_clt(p, rtol=args.tol, m=args.grid, K=args.series_k)


def cmd_compute(args, out=sys.stdout) -> int:
    p = _params(args)
    res = _clt(p, args)
    _emit(OutputRecord(
        command="compute",
        inputs={"a": p.a, "b": p.b, "sigma": p.sigma},
        method=res.method,
        ell=res.ell, s2=res.s2, lambda1=res.lambda1, lambda2=res.lambda2,
        diagnostics=res.diagnostics,
    ), out)
    return EXIT_OK


def cmd_eig(args, out=sys.stdout) -> int:
    c, mu = args.c, args.mu
    if args.method == "matrix":
        est = spectral.matrix_estimate(c, mu, N=args.n)
    else:
        est = spectral.cfrac_estimate(c, mu, depth=args.depth)
    step = mu if 0 < abs(mu) <= 0.1 else spectral.DEFAULT_FD_MU
    deriv = spectral.derivatives_by_differencing(c, step, args.method)
    lam1 = perturbation.lambda_prime_zero(c)
    lam2 = perturbation.lambda_double_prime_zero(c, rtol=args.tol, m=args.grid, K=args.series_k)
    diagnostics = {
        "lambda": est.lam,
        "truncation": est.truncation,
        "residual": est.residual,
        "fd_mu": step,
        "closed_lambda1": lam1,
        "closed_lambda2": lam2,
        "lambda1_deviation": deriv.lambda1 - lam1,
        "lambda2_deviation": deriv.lambda2 - lam2,
        **deriv.diagnostics,
    }
    _emit(OutputRecord(
        command="eig",
        inputs={"c": c, "mu": mu},
        method=args.method,
        lambda1=deriv.lambda1, lambda2=deriv.lambda2,
        diagnostics=diagnostics,
    ), out)
    return EXIT_OK


def cmd_mc(args, out=sys.stdout) -> int:
    p = _params(args)
    cfg = mc_sim.McConfig(
        dt=args.dt, total_time=args.time, n_paths=args.paths,
        n_batches=args.batches, seed=args.seed, theta0=args.theta0,
        extrapolate=args.extrapolate,
    )
    est = mc_sim.simulate(p, cfg)
    ref = _clt(p, args)
    diagnostics = {
        "ell_se": est.ell_se,
        "s2_se": est.s2_se,
        "closed_ell": ref.ell,
        "closed_s2": ref.s2,
        "z_ell": (est.ell_hat - ref.ell) / est.ell_se,
        "z_s2": (est.s2_hat - ref.s2) / est.s2_se if est.s2_se > 0 else None,
        **est.diagnostics,
        "per_path_ell": est.per_path_ell,
        "per_path_s2": est.per_path_s2,
    }
    _emit(OutputRecord(
        command="mc",
        inputs={"a": p.a, "b": p.b, "sigma": p.sigma, "dt": cfg.dt, "time": cfg.total_time,
                "paths": cfg.n_paths, "batches": cfg.n_batches, "seed": cfg.seed,
                "theta0": cfg.theta0, "extrapolate": cfg.extrapolate},
        method="monte-carlo",
        ell=est.ell_hat, s2=est.s2_hat,
        diagnostics=diagnostics,
    ), out)
    return EXIT_OK


@dataclass
class Check:
    name: str
    run: Callable[[], float]
    tol: float
    quick: bool = True


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


def _reference_checks() -> list[Check]:
    checks = []
    for (a, b, sigma), (ell, s2) in REFERENCE_VALUES.items():
        p = perturbation.SdeParams(a, b, sigma)
        checks.append(Check(f"reference ell (sigma={sigma:g})",
                            lambda p=p, ell=ell: _rel(perturbation.compute_clt(p).ell, float(ell)), 1e-12))
        checks.append(Check(f"reference s2 (sigma={sigma:g})",
                            lambda p=p, s2=s2: _rel(perturbation.compute_clt(p).s2, float(s2)), 1e-12))
    return checks


def _integral_ratio(c: float) -> float:
    weight = lambda t: np.exp(-0.5 * c * np.cos(2 * t))
    num, _ = quadrature.integrate_adaptive(lambda t: np.cos(2 * t) * weight(t), atol=1e-300)
    den, _ = quadrature.integrate_adaptive(weight)
    return c * num / den


def _cross_method(cs, mus) -> float:
    return max(
        abs(spectral.leftmost_eigenvalue(spectral.build_matrix(c, mu, 40))
            - spectral.continued_fraction_lambda(c, mu, 60))
        for c in cs for mu in mus
    )


def _zero_mu() -> float:
    return max(max(abs(spectral.leftmost_eigenvalue(spectral.build_matrix(c, 0.0, 40))),
                   abs(spectral.continued_fraction_lambda(c, 0.0, 60)))
               for c in (-0.03, -1.0, -3.0, -10.0))


def _fd(c: float, which: str) -> float:
    d = spectral.derivatives_by_differencing(c, 1e-4, "cfrac")
    lam1 = perturbation.lambda_prime_zero(c)
    lam2 = perturbation.lambda_double_prime_zero(c)
    if which == "central":
        return max(abs(d.lambda1 - lam1), abs(d.lambda2 - lam2))
    return max(abs(d.diagnostics["one_sided_lambda1"] - lam1),
               abs(d.diagnostics["one_sided_lambda2"] - lam2))


def _shift() -> float:
    base = perturbation.compute_clt(perturbation.SdeParams(1.0, -2.0, 10.0))
    worst = 0.0
    for h in (-1.0, 0.5, 3.0):
        r = perturbation.compute_clt(perturbation.SdeParams(1.0 + h, -2.0 + h, 10.0))
        worst = max(worst, abs(r.ell - base.ell - h), abs(r.s2 - base.s2))
    return worst


def _rescale() -> float:
    worst = 0.0
    for sigma in (1.0, 10.0):
        base = perturbation.compute_clt(perturbation.SdeParams(1.0, -2.0, sigma))
        for k in (0.25, 4.0):
            r = perturbation.compute_clt(perturbation.SdeParams(k, -2.0 * k, math.sqrt(k) * sigma))
            worst = max(worst, _rel(r.ell, k * base.ell), _rel(r.s2, k * base.s2))
    return worst


def verification_checks() -> list[Check]:
    checks = _reference_checks()
    checks += [
        Check("lambda'(0) Bessel vs integral ratio",
              lambda: max(abs(perturbation.lambda_prime_zero(c) - _integral_ratio(c))
                          for c in (-0.01, -0.03, -1.0, -3.0, -10.0)), 1e-12),
        Check("matrix vs cfrac (quick grid)",
              lambda: _cross_method((-0.03, -3.0), (1e-3,)), 1e-12),
        Check("matrix vs cfrac (full grid)",
              lambda: _cross_method((-0.03, -1.0, -3.0, -10.0), (1e-4, 1e-3, 1e-2)), 1e-12,
              quick=False),
        Check("lambda(0) = 0 (matrix, cfrac)", _zero_mu, 1e-13),
        Check("central FD derivatives (c=-0.03)", lambda: _fd(-0.03, "central"), 1e-8),
        Check("central FD derivatives (c=-3)", lambda: _fd(-3.0, "central"), 1e-8, quick=False),
        Check("one-sided FD derivatives (c=-0.03)", lambda: _fd(-0.03, "one-sided"), 1e-4),
        Check("one-sided FD derivatives (c=-3)", lambda: _fd(-3.0, "one-sided"), 1e-4, quick=False),
        Check("shift equivariance", _shift, 1e-12, quick=False),
        Check("time rescaling", _rescale, 1e-10, quick=False),
    ]
    return checks


def cmd_verify(args, out=sys.stdout) -> int:
    checks = [c for c in verification_checks() if c.quick or not args.quick]
    failed = 0
    width = max(len(c.name) for c in checks)
    out.write(f"{'check':<{width}}  {'delta':>12}  {'tol':>8}  result\n")
    for check in checks:
        tol = args.tol if args.tol is not None else check.tol
        try:
            delta = check.run()
            ok = delta <= tol
            shown = f"{delta:12.3e}"
        except NumericalError as exc:
            ok, shown = False, f"{'error':>12}"
            print(f"{check.name}: {exc}", file=sys.stderr)
        failed += not ok
        out.write(f"{check.name:<{width}}  {shown}  {tol:8.1e}  {'PASS' if ok else 'FAIL'}\n")
    out.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


SWEEP_HEADER = ("sigma", "c", "ell", "s2", "lambda1", "lambda2")


def cmd_sweep(args, out=sys.stdout) -> int:
    if not args.sigma_min > 0:
        raise UsageError("--sigma-min must be > 0")
    if not args.sigma_min < args.sigma_max:
        raise UsageError("--sigma-min must be < --sigma-max")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.steps == 1:
        sigmas = [args.sigma_min]
    else:
        sigmas = [float(s) for s in np.linspace(args.sigma_min, args.sigma_max, args.steps)]
    params = [perturbation.SdeParams(args.a, args.b, s) for s in sigmas]
    with ThreadPoolExecutor(max_workers=mc_sim.worker_count()) as pool:
        results = list(pool.map(lambda p: _clt(p, args), params))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in results:
        row = (r.params.sigma, r.diagnostics["c"], r.ell, r.s2, r.lambda1, r.lambda2)
        writer.writerow([repr(float(v)) for v in row])
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument("--tol", type=float, default=None,
                           help="relative tolerance for the lambda''(0) grid refinement "
                                "(verify: tolerance applied to every check)")
    overrides.add_argument("--grid", type=int, default=quadrature.DEFAULT_M,
                           help="initial quadrature grid size (even, >= 4)")
    overrides.add_argument("--series-k", type=_positive_int, default=None,
                           help="fixed J_k truncation order instead of the adaptive one")

    parser = argparse.ArgumentParser(prog="iclt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def sde_flags(p):
        p.add_argument("--a", type=float, required=True)
        p.add_argument("--b", type=float, required=True)
        p.add_argument("--sigma", type=float, required=True)

    p = sub.add_parser("compute", parents=[overrides], help="closed-form ell and s2")
    sde_flags(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("eig", parents=[overrides], help="lambda(mu) by matrix or continued fraction")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--method", choices=("matrix", "cfrac"), default="cfrac")
    p.add_argument("--n", type=int, default=spectral.DEFAULT_N)
    p.add_argument("--depth", type=int, default=spectral.DEFAULT_DEPTH)
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("mc", parents=[overrides], help="Monte Carlo estimate of ell and s2")
    sde_flags(p)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--time", type=float, default=1e3)
    p.add_argument("--paths", type=int, default=16)
    p.add_argument("--batches", type=int, default=32)
    p.add_argument("--seed", type=int, default=mc_sim.McConfig.seed)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--extrapolate", action="store_true",
                   help="combine steps dt and 2dt to cancel the O(dt) bias")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("verify", parents=[overrides], help="run the cross-validation battery")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[overrides], help="CSV of ell, s2 over a sigma range")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--sigma-min", type=float, required=True)
    p.add_argument("--sigma-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[list[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command != "verify" and args.tol is None:
        args.tol = perturbation.DEFAULT_RTOL
    try:
        return args.func(args, out)
    except NumericalError as exc:
        print(f"iclt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OverflowError) as exc:
        print(f"iclt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
