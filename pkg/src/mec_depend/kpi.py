"""Dependability KPIs over the solved MEC and local CTMCs.

CRA  - probability an arriving task finds an idle VM, mixed over the
       offload/local split given by the OSP.
TEC  - mean rate of successfully executed tasks (occupied-VM throughput),
       same mixture.
TER  - probability an admitted task completes without being aborted by a
       VM failure: R_v = 1 - F_v / Lambda_v per system, then mixed.
"""
from __future__ import annotations

from dataclasses import dataclass


from .coverage import osp_analytical
from .ctmc import CtmcModel, SteadyState, VmState, build_generator, \
    ReducibleChainError, restrict_to_reachable, steady_state
from .params import SystemParams, arrival_rates, derive


class UndefinedKpiError(ValueError):
    """A KPI is undefined at these parameters (e.g. TER with zero admissions)."""


@dataclass(frozen=True)
class SystemKpis:
    lambda_v: float            # offered arrival rate
    mu_v: float                # per-VM service rate
    m_v: int                   # VM count
    blocking: float            # steady-state mass with no idle VM
    admission_rate: float      # Lambda_v = lambda_v * (1 - blocking)
    forced_termination_rate: float   # F_v, aborts per unit time
    mean_occupied: float       # E[x_o]
    retainability: float | None      # 1 - F_v/Lambda_v; None if undefined


@dataclass(frozen=True)
class KpiReport:
    osp: float
    cra: float
    tec: float
    ter: float
    mec: SystemKpis
    loc: SystemKpis


def blocking_mass(ss: SteadyState, model: CtmcModel) -> float:
    """Probability of finding no idle VM."""
    tau = ss.probabilities
    return float(sum(t for t, s in zip(tau, model.states) if s.x_i == 0))


def mean_occupied(ss: SteadyState, model: CtmcModel) -> float:
    tau = ss.probabilities
    return float(sum(t * s.x_o for t, s in zip(tau, model.states)))


def cra(ss_mec: SteadyState, model_mec: CtmcModel,
        ss_loc: SteadyState, model_loc: CtmcModel, osp: float) -> float:
    """Computation resource availability."""
    return (
        osp * (1.0 - blocking_mass(ss_mec, model_mec))
        + (1.0 - osp) * (1.0 - blocking_mass(ss_loc, model_loc))
    )


def tec(ss_mec: SteadyState, model_mec: CtmcModel,
        ss_loc: SteadyState, model_loc: CtmcModel,
        osp: float, mu_mec: float, mu_loc: float) -> float:
    """Task execution capacity (tasks per unit time)."""
    return (
        osp * mu_mec * mean_occupied(ss_mec, model_mec)
        + (1.0 - osp) * mu_loc * mean_occupied(ss_loc, model_loc)
    )


def forced_termination_rate(ss: SteadyState, model: CtmcModel, delta: float) -> float:
    """Mean abort rate F_v: failures of occupied VMs when no idle VM can
    take the task over (states with x_o > 0 and x_i = 0, where the
    non-failed count m_v - x_f equals x_o)."""
    tau = ss.probabilities
    return float(delta * sum(
        t * (model.m_v - s.x_f)
        for t, s in zip(tau, model.states)
        if s.x_o > 0 and s.x_i == 0
    ))


def effective_admission_rate(ss: SteadyState, model: CtmcModel, lambda_v: float) -> float:
    return lambda_v * (1.0 - blocking_mass(ss, model))


def ter(osp: float,
        f_mec: float, adm_mec: float,
        f_loc: float, adm_loc: float) -> float:
    """Task execution retainability, mixed over both systems.

    A system with zero mixture weight is skipped; zero admissions under a
    positive weight make the ratio undefined and raise. Computed as
    1 - sum(weight * F/Lambda) so that a failure-free system yields exactly 1.0.
    """
    loss = 0.0
    for weight, f, adm, name in (
        (osp, f_mec, adm_mec, "MEC"),
        (1.0 - osp, f_loc, adm_loc, "local"),
    ):
        if weight == 0.0:
            continue
        if adm <= 0.0:
            raise UndefinedKpiError(
                f"TER undefined: {name} system has zero admission rate "
                f"with mixture weight {weight}"
            )
        loss += weight * (f / adm)
    return 1.0 - loss


def solve_steady(model: CtmcModel, cross_check: bool | None = None) \
        -> tuple[SteadyState, CtmcModel]:
    """steady_state with a reachability fallback for reducible chains.

    When the full space splits into several closed classes (e.g.
    delta = gamma = 0), the physically relevant law is the stationary
    distribution of the component reachable from the all-idle start.
    """
    try:
        return steady_state(model, cross_check=cross_check), model
    except ReducibleChainError:
        sub = restrict_to_reachable(model, VmState(model.m_v, 0, 0))
        return steady_state(sub, cross_check=cross_check), sub


def build_models(p: SystemParams, osp: float) -> tuple[CtmcModel, CtmcModel]:
    """MEC and local CTMCs for a validated parameter set and OSP value."""
    dp = derive(p)
    lam_mec, lam_loc = arrival_rates(dp, p, osp)
    mec = build_generator(
        p.m_mec, lam_mec, dp.mu_mec, dp.delta_eff, dp.gamma_eff,
        handover_keeps_task=p.handover_keeps_task,
    )
    loc = build_generator(
        p.m_loc, lam_loc, dp.mu_loc_eff, dp.delta_eff, dp.gamma_eff,
        handover_keeps_task=p.handover_keeps_task,
    )
    return mec, loc


def _system_kpis(ss: SteadyState, model: CtmcModel) -> SystemKpis:
    blocking = blocking_mass(ss, model)
    adm = model.lambda_v * (1.0 - blocking)
    f = forced_termination_rate(ss, model, model.delta)
    ret = (1.0 - f / adm) if adm > 0.0 else None
    return SystemKpis(
        lambda_v=model.lambda_v, mu_v=model.mu_v, m_v=model.m_v,
        blocking=blocking, admission_rate=adm,
        forced_termination_rate=f,
        mean_occupied=mean_occupied(ss, model),
        retainability=ret,
    )


def evaluate(
    p: SystemParams,
    osp: float | None = None,
    cross_check: bool | None = None,
    return_details: bool = False,
):
    """Full KPI report for a parameter set.

    The OSP defaults to the analytical value; pass ``osp`` to override
    (e.g. for reproduction runs pinned to a published operating point).
    """
    if osp is None:
        osp = osp_analytical(p).osp
    model_mec, model_loc = build_models(p, osp)
    ss_mec, model_mec = solve_steady(model_mec, cross_check)
    ss_loc, model_loc = solve_steady(model_loc, cross_check)
    sys_mec = _system_kpis(ss_mec, model_mec)
    sys_loc = _system_kpis(ss_loc, model_loc)
    dp = derive(p)
    report = KpiReport(
        osp=osp,
        cra=cra(ss_mec, model_mec, ss_loc, model_loc, osp),
        tec=tec(ss_mec, model_mec, ss_loc, model_loc, osp,
                dp.mu_mec, dp.mu_loc_eff),
        ter=ter(
            osp,
            sys_mec.forced_termination_rate, sys_mec.admission_rate,
            sys_loc.forced_termination_rate, sys_loc.admission_rate,
        ),
        mec=sys_mec,
        loc=sys_loc,
    )
    if return_details:
        return report, {"mec": (model_mec, ss_mec), "loc": (model_loc, ss_loc)}
    return report
