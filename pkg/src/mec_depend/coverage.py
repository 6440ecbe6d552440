"""Analytical offloading success probability (OSP).

The OSP of a typical device factorizes into a noise term and the Laplace
transforms of out-of-cell and in-cell interference, evaluated at the
channel-inversion operating point s = theta/rho. The in-cell factor uses the
approximate Voronoi neighbor-count distribution with fitting constant 3.575.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .params import SystemParams, derive
from .specfun import HypergeoArgs, gauss_2f1_coverage, log_gamma

# Fitting constant of the approximate PPP Voronoi cell-area distribution.
VORONOI_C = 3.575

_ETA4_MATCH_RTOL = 1e-10


@dataclass(frozen=True)
class OspBreakdown:
    noise_factor: float  # exp(-sigma^2 theta / rho)
    lt_out: float        # out-of-cell interference Laplace factor
    lt_in: float         # in-cell interference Laplace factor
    osp: float           # product of the three

    def __post_init__(self):
        for name in ("noise_factor", "lt_out", "lt_in"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0,1] (got {v})")


def neighbor_pmf(n: int, lambda_d: float, lambda_b: float) -> float:
    """P{N_d = n}: number of devices sharing the typical cell.

    Gamma-mixed Poisson with mean lambda_d/lambda_b, computed in log space
    to stay finite for large n.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0 (got {n})")
    if not (lambda_d > 0.0 and lambda_b > 0.0):
        raise ValueError("densities must be positive")
    c = VORONOI_C
    lbc = lambda_b * c
    log_p = (
        n * math.log(lambda_d)
        + c * math.log(lbc)
        + log_gamma(n + c)
        - (n + c) * math.log(lambda_d + lbc)
        - log_gamma(n + 1.0)
        - log_gamma(c)
    )
    return math.exp(log_p)


def laplace_out(theta_lin: float, p_a: float, kappa: float, eta: float) -> float:
    """Out-of-cell interference factor exp{-2 theta P_a kappa/(eta-2) * 2F1(...)}."""
    if theta_lin == 0.0 or p_a == 0.0 or kappa == 0.0:
        return 1.0
    f = gauss_2f1_coverage(HypergeoArgs(eta=eta, theta_lin=theta_lin))
    return math.exp(-2.0 * theta_lin * p_a * kappa / (eta - 2.0) * f)


def laplace_in(theta_lin: float, p_a: float, kappa: float) -> float:
    """In-cell interference factor (1 + theta P_a kappa / ((1+theta) c))^-c."""
    c = VORONOI_C
    return (1.0 + theta_lin * p_a * kappa / ((1.0 + theta_lin) * c)) ** (-c)


def laplace_in_series(
    theta_lin: float,
    p_a: float,
    lambda_d: float,
    lambda_b: float,
    channels: int,
    n_max: int = 2000,
    kappa: float | None = None,
) -> float:
    """Truncated neighbor-sum form of the in-cell factor.

    Each of the N_d in-cell neighbors is independently an active same-channel
    interferer with probability p_a/channels (binomial thinning), and each
    active one contributes a factor 1/(1+theta), so the sum is
    sum_n pmf(n) * (1 - (p_a/C) * theta/(1+theta))^n. Converges to the
    closed-form laplace_in (its probability generating function).
    """
    if kappa is not None:
        implied = lambda_d / (lambda_b * channels)
        if not math.isclose(kappa, implied, rel_tol=1e-9):
            raise ValueError(
                f"kappa={kappa} inconsistent with lambda_d/(lambda_b*C)={implied}"
            )
    per_neighbor = 1.0 - (p_a / channels) * theta_lin / (1.0 + theta_lin)
    total = 0.0
    mass = 0.0
    factor = 1.0
    for n in range(n_max + 1):
        pn = neighbor_pmf(n, lambda_d, lambda_b)
        mass += pn
        total += pn * factor
        factor *= per_neighbor
    if mass < 1.0 - 1e-9:
        raise ValueError(
            f"n_max={n_max} leaves PMF tail {1.0 - mass:.3e} > 1e-9; increase it"
        )
    return total


def osp_analytical(p: SystemParams) -> OspBreakdown:
    """Closed-form OSP with its three factors.

    For eta = 4 the arctan fast path is used and cross-checked against the
    general hypergeometric path.
    """
    dp = derive(p)
    theta = dp.theta_lin
    noise = math.exp(-dp.sigma2_lin * theta / dp.rho_lin)
    lt_o = laplace_out(theta, dp.p_a, dp.kappa, p.eta)
    if p.eta == 4.0 and theta > 0.0:
        s = math.sqrt(theta)
        fast = math.exp(-dp.p_a * dp.kappa * s * math.atan(s))
        if not math.isclose(fast, lt_o, rel_tol=_ETA4_MATCH_RTOL, abs_tol=0.0):
            raise ArithmeticError(
                f"eta=4 fast path {fast!r} disagrees with general path {lt_o!r}"
            )
        lt_o = fast
    lt_i = laplace_in(theta, dp.p_a, dp.kappa)
    return OspBreakdown(
        noise_factor=noise, lt_out=lt_o, lt_in=lt_i, osp=noise * lt_o * lt_i
    )
