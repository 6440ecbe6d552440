"""Hill-climbing search for the TEC-maximizing MEC VM count.

Starting from one VM, the count is incremented while the task execution
capacity strictly improves; the first non-improving step ends the search in
O(m_star) chain solves. An exhaustive scan is provided as the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ctmc import build_generator
from .kpi import mean_occupied, solve_steady
from .params import SystemParams, arrival_rates, derive, validate

# Relative improvement below this counts as a tie and stops the climb.
_TIE_RTOL = 1e-12

_DEFAULT_M_MAX = 200


@dataclass(frozen=True)
class OptimizationResult:
    m_star: int
    c_star: float
    trace: tuple[tuple[int, float], ...]  # (m, TEC(m)) pairs visited


class _TecEvaluator:
    """TEC(m) with the local-system contribution solved once."""

    def __init__(self, p: SystemParams, osp: float,
                 cross_check: bool | None = None):
        validate(p)
        self.p = p
        self.osp = osp
        self.dp = derive(p)
        self.cross_check = cross_check
        self.lam_mec, lam_loc = arrival_rates(self.dp, p, osp)
        loc = build_generator(
            p.m_loc, lam_loc, self.dp.mu_loc_eff,
            self.dp.delta_eff, self.dp.gamma_eff,
            handover_keeps_task=p.handover_keeps_task,
        )
        ss, loc = solve_steady(loc, cross_check)
        self.loc_term = (1.0 - osp) * self.dp.mu_loc_eff * mean_occupied(ss, loc)

    def __call__(self, m: int) -> float:
        mu_m = self.p.mu_o / (1.0 + self.p.deg_factor) ** (m - 1)
        model = build_generator(
            m, self.lam_mec, mu_m, self.dp.delta_eff, self.dp.gamma_eff,
            handover_keeps_task=self.p.handover_keeps_task,
        )
        ss, model = solve_steady(model, self.cross_check)
        return self.osp * mu_m * mean_occupied(ss, model) + self.loc_term


def optimal_vm_count(
    p: SystemParams,
    osp: float,
    m_max: int = _DEFAULT_M_MAX,
    cross_check: bool | None = None,
) -> OptimizationResult:
    """Smallest m whose successor no longer improves TEC.

    The MEC chain is rebuilt per candidate m with its degraded service rate;
    the local system does not depend on m and is solved once. Ties terminate
    the climb (strict improvement required), returning the smaller m.
    """
    tec_of = _TecEvaluator(p, osp, cross_check)
    trace: list[tuple[int, float]] = []
    best_m, best_c = 0, float("-inf")
    m = 1
    while True:
        c = tec_of(m)
        trace.append((m, c))
        improved = c > best_c * (1.0 + _TIE_RTOL) if best_c > 0 else c > best_c
        if not improved:
            break
        best_m, best_c = m, c
        m += 1
        if m > m_max:
            raise RuntimeError(
                f"TEC still improving at m_max={m_max}; raise the cap"
            )
    return OptimizationResult(m_star=best_m, c_star=best_c, trace=tuple(trace))


def exhaustive_scan(
    p: SystemParams,
    osp: float,
    m_max: int = _DEFAULT_M_MAX,
    cross_check: bool | None = None,
) -> list[tuple[int, float]]:
    """TEC(m) for every m in [1, m_max] (oracle for the hill climb)."""
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1 (got {m_max})")
    tec_of = _TecEvaluator(p, osp, cross_check)
    return [(m, tec_of(m)) for m in range(1, m_max + 1)]


def tec_at(p: SystemParams, osp: float, m: int,
           cross_check: bool | None = None) -> float:
    """TEC for a single VM count (same code path as the scan)."""
    return _TecEvaluator(p, osp, cross_check)(m)
