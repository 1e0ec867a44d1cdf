"""Lyapunov exponent and CLT variance of a planar linear SDE with rotational noise.

Three independent routes are provided: a closed-form perturbation of the
leftmost Ince eigenvalue (``perturbation``), spectral solves of the
truncated problem (``spectral``) and Monte Carlo simulation of the angle
process (``mc_sim``).
"""

from .perturbation import (
    CltResult,
    InceProblem,
    SdeParams,
    compute_clt,
    ince_coefficient,
    lambda_double_prime_zero,
    lambda_prime_zero,
)

__all__ = [
    "CltResult",
    "InceProblem",
    "SdeParams",
    "compute_clt",
    "ince_coefficient",
    "lambda_double_prime_zero",
    "lambda_prime_zero",
]
__version__ = "0.1.0"
