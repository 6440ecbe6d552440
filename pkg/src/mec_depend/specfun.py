"""Special functions for the coverage analysis.

Only the fixed hypergeometric family 2F1(1, 1-2/eta, 2-2/eta, -theta) needed
by the SINR analysis is implemented, which keeps it testable against the
eta = 4 arctan identity. Log-gamma uses the Lanczos approximation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad


class NonConvergenceError(RuntimeError):
    """Series failed to converge within the iteration budget.

    This signals an implementation bug, not a user error: the transformed
    series argument is always inside the unit disc for valid inputs.
    """


# Lanczos g=7, 9-term coefficient set (double precision).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_SERIES_TOL = 1e-16
_SERIES_BUDGET = 1_000_000


@dataclass(frozen=True)
class HypergeoArgs:
    eta: float        # path-loss exponent, > 2
    theta_lin: float  # linear SINR threshold, >= 0

    def __post_init__(self):
        if not self.eta > 2.0:
            raise ValueError(f"eta must exceed 2 (got {self.eta})")
        if not self.theta_lin >= 0.0:
            raise ValueError(f"theta_lin must be >= 0 (got {self.theta_lin})")


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0 via the Lanczos approximation."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0 (got {x})")
    if x < 0.5:
        # reflection keeps the Lanczos series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _LN_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def _series_direct(b: float, c: float, z: float) -> float:
    # 2F1(1, b; c; z) = sum_k (b)_k/(c)_k z^k, |z| < 1.
    # Alternating for z < 0 with |t_k| decreasing, so the tail is bounded
    # by the last term.
    total = 1.0
    term = 1.0
    for k in range(_SERIES_BUDGET):
        term *= (b + k) / (c + k) * z
        total += term
        if abs(term) < _SERIES_TOL * abs(total):
            return total
    raise NonConvergenceError(
        f"direct series did not converge for b={b}, c={c}, z={z}"
    )


def _series_pfaff(c: float, w: float) -> float:
    # 2F1(1, 1; c; w) = sum_k k!/(c)_k w^k with 0 <= w < 1 and c > 1, so the
    # term ratio is below w and the tail below term*w/(1-w).
    if w >= 1.0:  # theta/(1+theta) rounded up to 1; no convergent series left
        raise NonConvergenceError(f"transformed argument {w} reached 1")
    total = 1.0
    term = 1.0
    tail_scale = w / (1.0 - w)
    for k in range(_SERIES_BUDGET):
        term *= (1.0 + k) / (c + k) * w
        total += term
        if term * tail_scale < _SERIES_TOL * total:
            return total
    raise NonConvergenceError(f"Pfaff series did not converge for c={c}, w={w}")


def gauss_2f1_coverage(args: HypergeoArgs) -> float:
    """2F1(1, 1-2/eta, 2-2/eta, -theta) for the coverage exponent.

    Direct power series for small theta; for larger theta the Pfaff
    transformation maps the argument to theta/(1+theta) in (0,1) where the
    series converges with positive terms.
    """
    eta, theta = args.eta, args.theta_lin
    if theta == 0.0:
        return 1.0
    b = 1.0 - 2.0 / eta
    c = 2.0 - 2.0 / eta
    if theta <= 0.5:
        return _series_direct(b, c, -theta)
    # Pfaff: 2F1(1, b; c; -theta) = (1+theta)^-1 * 2F1(1, c-b; c; theta/(1+theta))
    # and c - b = 1 for this family.
    w = theta / (1.0 + theta)
    return _series_pfaff(c, w) / (1.0 + theta)


def tail_integral(eta: float, lower: float) -> float:
    """Integral of y / (y^eta + 1) from ``lower`` to infinity.

    The substitution u = y^-eta maps the tail to a finite interval; a second
    power substitution removes the endpoint singularity, leaving
    (1/(eta-2)) * integral of 1/(1 + t^(eta/(eta-2))) dt over [0, lower^(2-eta)].
    Adaptive quadrature then gives absolute error well below 1e-10.
    """
    if not eta > 2.0:
        raise ValueError(f"eta must exceed 2 (got {eta})")
    if not lower >= 0.0:
        raise ValueError(f"lower must be >= 0 (got {lower})")
    if math.isinf(lower):
        return 0.0
    p = eta / (eta - 2.0)
    if lower == 0.0:
        # full integral; integrand decays like t^-p with p > 1
        val, _ = quad(lambda t: 1.0 / (1.0 + t ** p), 0.0, math.inf,
                      epsabs=1e-13, epsrel=1e-13, limit=200)
        return val / (eta - 2.0)
    upper = lower ** (2.0 - eta)
    val, _ = quad(lambda t: 1.0 / (1.0 + t ** p), 0.0, upper,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val / (eta - 2.0)
