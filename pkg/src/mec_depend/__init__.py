"""Joint communication/computation dependability evaluation for MEC-enabled
uplink networks: analytical offloading success probability under network-wide
interference, failure-prone VM pools as CTMCs, dependability KPIs
(CRA/TEC/TER) and VM-count optimization."""

__version__ = "0.1.0"

from .coverage import OspBreakdown, osp_analytical
from .ctmc import (
    CtmcModel,
    SteadyState,
    VmState,
    build_generator,
    enumerate_states,
    gillespie_occupancy,
    steady_state,
)
from .kpi import KpiReport, SystemKpis, evaluate
from .params import (
    ConfigError,
    DerivedParams,
    ParamError,
    SystemParams,
    arrival_rates,
    derive,
    load_config,
    validate,
    with_updates,
)
from .spatial_sim import OspEstimate, SimConfig, sample_ppp, simulate_osp, simulate_osp_sweep
from .vm_optimizer import OptimizationResult, exhaustive_scan, optimal_vm_count

__all__ = [
    "__version__",
    "ConfigError",
    "CtmcModel",
    "DerivedParams",
    "KpiReport",
    "OptimizationResult",
    "OspBreakdown",
    "OspEstimate",
    "ParamError",
    "SimConfig",
    "SteadyState",
    "SystemKpis",
    "SystemParams",
    "VmState",
    "arrival_rates",
    "build_generator",
    "derive",
    "enumerate_states",
    "evaluate",
    "exhaustive_scan",
    "gillespie_occupancy",
    "load_config",
    "optimal_vm_count",
    "osp_analytical",
    "sample_ppp",
    "simulate_osp",
    "simulate_osp_sweep",
    "steady_state",
    "validate",
    "with_updates",
]
