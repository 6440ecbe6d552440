"""Fast invariant battery behind the `selftest` CLI subcommand.

Each check is independent and returns (name, passed, detail); the battery
avoids Monte Carlo so it stays under a few seconds.
"""
from __future__ import annotations

import math

import numpy as np

from . import coverage, ctmc, kpi, specfun
from .params import SystemParams, validate


def table2_params(**overrides) -> SystemParams:
    """Canonical reproduction parameter set (bundled config values)."""
    base = dict(
        lambda_b=0.1, lambda_d=6.4, channels=16,
        rho_dbm=-90.0, sigma2_dbm=-110.0, eta=4.0, theta_db=-10.0,
        lambda_a=0.15, p_a_override=0.25, mu_o=3.0, deg_factor=0.1,
        m_mec=5, m_loc=1, mu_loc=0.1, delta_fail=0.1, gamma_repair=1.0,
    )
    base.update(overrides)
    return validate(SystemParams(**base))


def _check_eta4_identity():
    worst = 0.0
    for theta in np.logspace(-3, 3, 61):
        f = specfun.gauss_2f1_coverage(specfun.HypergeoArgs(4.0, float(theta)))
        ref = math.atan(math.sqrt(theta)) / math.sqrt(theta)
        worst = max(worst, abs(f - ref) / ref)
    return worst <= 1e-10, f"max rel err {worst:.2e} (tol 1e-10)"


def _check_tail_identity():
    worst = 0.0
    for eta in (3.0, 4.0, 6.0):
        for theta in (0.1, 1.0, 10.0):
            lhs = theta ** (2.0 / eta) * specfun.tail_integral(eta, theta ** (-1.0 / eta))
            rhs = theta / (eta - 2.0) * specfun.gauss_2f1_coverage(
                specfun.HypergeoArgs(eta, theta))
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst <= 1e-9, f"max rel err {worst:.2e} (tol 1e-9)"


def _check_log_gamma_recurrence():
    worst = 0.0
    for x in np.linspace(0.1, 50.0, 200):
        lhs = specfun.log_gamma(x + 1.0) - specfun.log_gamma(float(x))
        worst = max(worst, abs(lhs - math.log(x)))
    return worst <= 1e-12, f"max abs err {worst:.2e} (tol 1e-12)"


def _check_pmf_normalization():
    total = sum(coverage.neighbor_pmf(n, 6.4, 0.1) for n in range(2001))
    mean = sum(n * coverage.neighbor_pmf(n, 6.4, 0.1) for n in range(2001))
    ok = abs(total - 1.0) <= 1e-9 and abs(mean / 64.0 - 1.0) <= 5e-3
    return ok, f"sum-1={total - 1.0:.2e}, mean={mean:.3f} (expect 64)"


def _check_osp_factorization():
    p = table2_params()
    b = coverage.osp_analytical(p)
    exact = b.osp == b.noise_factor * b.lt_out * b.lt_in
    mono = True
    prev = 2.0
    for th in np.arange(-20.0, 5.5, 0.5):
        o = coverage.osp_analytical(table2_params(theta_db=float(th))).osp
        mono = mono and o <= prev + 1e-15
        prev = o
    return exact and mono, f"factorized={exact}, monotone in theta={mono}"


def _check_series_vs_closed():
    worst = 0.0
    for th_db in range(-20, 6, 5):
        th = 10.0 ** (th_db / 10.0)
        closed = coverage.laplace_in(th, 0.25, 4.0)
        series = coverage.laplace_in_series(th, 0.25, 6.4, 0.1, 16)
        worst = max(worst, abs(closed - series))
    return worst <= 1e-3, f"max abs diff {worst:.2e} (tol 1e-3)"


def _check_generator_structure():
    msgs = []
    ok = True
    for m in (1, 5, 13, 40):
        model = ctmc.build_generator(m, 2.0, 1.0, 0.1, 1.0)
        n_expect = (m + 1) * (m + 2) // 2
        rowsum = float(np.max(np.abs(model.generator.sum(axis=1))))
        offdiag = model.generator - np.diag(model.generator.diagonal())
        if model.n_states != n_expect or rowsum > 1e-12 or offdiag.min() < 0:
            ok = False
            msgs.append(f"m={m} bad structure")
    return ok, "; ".join(msgs) or "state counts, row sums, signs all good"


def _check_steady_state():
    p = table2_params()
    mec, loc = kpi.build_models(p, 0.83)
    worst = 0.0
    for model in (mec, loc):
        ss = ctmc.steady_state(model)  # includes closed-form cross-check
        worst = max(worst, ss.residual, abs(float(ss.probabilities.sum()) - 1.0))
    return worst <= 1e-9, f"max residual/normalization err {worst:.2e}"


def _check_erlang_b():
    lam, mu, m = 2.0, 1.0, 5
    model = ctmc.build_generator(m, lam, mu, 0.0, 0.0)
    ss, sub = kpi.solve_steady(model)
    blocking = kpi.blocking_mass(ss, sub)
    a = lam / mu
    terms = [a ** k / math.factorial(k) for k in range(m + 1)]
    erlang_b = terms[-1] / sum(terms)
    err = abs(blocking - erlang_b)
    return err <= 1e-9, f"|blocking - ErlangB| = {err:.2e}"


def _check_ter_boundary():
    worst = None
    for gamma in np.arange(0.0, 5.1, 0.5):
        r = kpi.evaluate(table2_params(delta_fail=0.0, gamma_repair=float(gamma))).ter
        if worst is None or abs(r - 1.0) > worst:
            worst = abs(r - 1.0)
    return worst == 0.0, f"max |TER - 1| = {worst:.1e} over gamma sweep"


def _check_kpi_bounds():
    rng = np.random.default_rng(20260810)
    ok = True
    for _ in range(10):
        lam_a, mu_o, mu_l, d, g = np.exp(rng.uniform(np.log(0.01), np.log(10.0), 5))
        p = table2_params(
            lambda_a=float(lam_a), mu_o=float(mu_o), mu_loc=float(mu_l),
            delta_fail=float(d), gamma_repair=float(g),
            m_mec=int(rng.integers(1, 9)),
        )
        r = kpi.evaluate(p)
        ok = ok and 0.0 <= r.cra <= 1.0 and 0.0 <= r.ter <= 1.0 and r.tec >= 0.0
    return ok, "CRA/TER in [0,1], TEC >= 0 over randomized rates"


CHECKS = [
    ("specfun.eta4-arctan-identity", _check_eta4_identity),
    ("specfun.tail-integral-identity", _check_tail_identity),
    ("specfun.log-gamma-recurrence", _check_log_gamma_recurrence),
    ("coverage.neighbor-pmf-normalization", _check_pmf_normalization),
    ("coverage.osp-factorization-monotone", _check_osp_factorization),
    ("coverage.laplace-in-series-vs-closed", _check_series_vs_closed),
    ("ctmc.generator-structure", _check_generator_structure),
    ("ctmc.steady-state-residual-crosscheck", _check_steady_state),
    ("ctmc.erlang-b-restriction", _check_erlang_b),
    ("kpi.ter-equals-one-without-failures", _check_ter_boundary),
    ("kpi.bounds-randomized", _check_kpi_bounds),
]


def run_selftest() -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
