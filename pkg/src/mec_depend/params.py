"""Model parameters, unit conversions and derived quantities.

Every other module consumes only validated parameter objects built here.
Densities are stored per km^2, powers in dBm (converted to linear mW on
derivation), rates in tasks/events per unit time.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace


class ParamError(ValueError):
    """A parameter violates one of the model invariants."""


class ConfigError(ValueError):
    """A config file cannot be parsed into a valid SystemParams."""


@dataclass(frozen=True)
class SystemParams:
    lambda_b: float          # BS density, BSs per km^2
    lambda_d: float          # device density, devices per km^2
    channels: int            # number of uplink channels C
    rho_dbm: float           # power-control receive target, dBm
    sigma2_dbm: float        # noise power, dBm
    eta: float               # path-loss exponent, > 2
    theta_db: float          # SINR detection threshold, dB
    lambda_a: float          # per-device task arrival rate, tasks/unit time
    mu_o: float              # single-VM execution rate, tasks/unit time
    deg_factor: float        # I/O degradation factor d, >= 0
    m_mec: int               # VMs at the MEC server
    delta_fail: float        # VM failure rate, events/unit time
    gamma_repair: float      # VM repair rate, events/unit time
    m_loc: int = 1           # local VM count
    t_s: float | None = None             # instruction transmission duration
    p_a_override: float | None = None    # direct device-activity probability
    mu_loc: float | None = None          # local execution rate
    mu_r: float | None = None            # relative rate mu_mec / mu_loc
    swap_failure_repair: bool = False    # swap delta/gamma (sensitivity check)
    handover_keeps_task: bool = True     # occupied-VM failure hands task to an idle VM


@dataclass
class DerivedParams:
    p_a: float           # device activity probability
    kappa: float         # devices per BS per channel
    theta_lin: float     # linear SINR threshold
    rho_lin: float       # mW
    sigma2_lin: float    # mW
    mu_mec: float        # effective per-VM rate at the MEC server
    mu_loc_eff: float    # resolved local execution rate
    mu_r_eff: float      # resolved mu_mec / mu_loc ratio
    delta_eff: float     # failure rate after optional swap
    gamma_eff: float     # repair rate after optional swap
    lambda_mec: float | None = None   # set once an OSP is supplied
    lambda_loc: float | None = None


def dbm_to_mw(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def validate(raw: SystemParams) -> SystemParams:
    """Return ``raw`` unchanged if every invariant holds.

    Raises ParamError naming the first violated field and its bound.
    """
    p = raw
    if not p.eta > 2.0:
        raise ParamError(f"eta must exceed 2 (got {p.eta})")
    if not p.lambda_b > 0.0:
        raise ParamError(f"lambda_b must be positive (got {p.lambda_b})")
    for name in ("lambda_d", "lambda_a", "mu_o", "deg_factor",
                 "delta_fail", "gamma_repair"):
        v = getattr(p, name)
        if not v >= 0.0:
            raise ParamError(f"{name} must be >= 0 (got {v})")
    for name in ("channels", "m_mec", "m_loc"):
        v = getattr(p, name)
        if not (isinstance(v, int) and not isinstance(v, bool)):
            raise ParamError(f"{name} must be an integer (got {v!r})")
        if v < 1:
            raise ParamError(f"{name} must be >= 1 (got {v})")
    if (p.mu_loc is None) == (p.mu_r is None):
        raise ParamError("mu_loc and mu_r are mutually exclusive; supply exactly one")
    if p.mu_loc is not None and not p.mu_loc > 0.0:
        raise ParamError(f"mu_loc must be positive (got {p.mu_loc})")
    if p.mu_r is not None and not p.mu_r > 0.0:
        raise ParamError(f"mu_r must be positive (got {p.mu_r})")
    if (p.t_s is None) == (p.p_a_override is None):
        raise ParamError("t_s and p_a_override are mutually exclusive; supply exactly one")
    if p.t_s is not None and not p.t_s >= 0.0:
        raise ParamError(f"t_s must be >= 0 (got {p.t_s})")
    if p.p_a_override is not None and not 0.0 <= p.p_a_override <= 1.0:
        raise ParamError(f"p_a_override must lie in [0,1] (got {p.p_a_override})")
    return p


def derive(p: SystemParams) -> DerivedParams:
    """Populate all derived quantities from validated parameters.

    lambda_mec / lambda_loc stay unset until an OSP value is supplied
    through arrival_rates().
    """
    validate(p)
    if p.t_s is not None:
        p_a = 1.0 - math.exp(-2.0 * p.t_s * p.lambda_a)
    else:
        p_a = float(p.p_a_override)
    kappa = p.lambda_d / (p.lambda_b * p.channels)
    mu_mec = p.mu_o / (1.0 + p.deg_factor) ** (p.m_mec - 1)
    if p.mu_loc is not None:
        mu_loc_eff = p.mu_loc
        mu_r_eff = mu_mec / p.mu_loc
    else:
        mu_r_eff = float(p.mu_r)
        mu_loc_eff = mu_mec / p.mu_r
    delta_eff, gamma_eff = p.delta_fail, p.gamma_repair
    if p.swap_failure_repair:
        delta_eff, gamma_eff = gamma_eff, delta_eff
    return DerivedParams(
        p_a=p_a,
        kappa=kappa,
        theta_lin=db_to_linear(p.theta_db),
        rho_lin=dbm_to_mw(p.rho_dbm),
        sigma2_lin=dbm_to_mw(p.sigma2_dbm),
        mu_mec=mu_mec,
        mu_loc_eff=mu_loc_eff,
        mu_r_eff=mu_r_eff,
        delta_eff=delta_eff,
        gamma_eff=gamma_eff,
    )


def arrival_rates(dp: DerivedParams, p: SystemParams, osp: float) -> tuple[float, float]:
    """Aggregate MEC and per-device local task arrival rates for a given OSP.

    lambda_mec = osp * lambda_a * lambda_d / lambda_b (per BS),
    lambda_loc = (1 - osp) * lambda_a (per device).
    """
    if not 0.0 <= osp <= 1.0:
        raise ParamError(f"osp must lie in [0,1] (got {osp})")
    lambda_mec = osp * p.lambda_a * p.lambda_d / p.lambda_b
    lambda_loc = (1.0 - osp) * p.lambda_a
    dp.lambda_mec = lambda_mec
    dp.lambda_loc = lambda_loc
    return lambda_mec, lambda_loc


_REQUIRED_KEYS = {
    "lambda_b", "lambda_d", "channels", "rho_dbm", "sigma2_dbm", "eta",
    "theta_db", "lambda_a", "mu_o", "deg_factor", "m_mec",
    "delta_fail", "gamma_repair",
}
_OPTIONAL_KEYS = {
    "m_loc", "t_s", "p_a_override", "mu_loc", "mu_r",
    "swap_failure_repair", "handover_keeps_task",
}
_INT_KEYS = {"channels", "m_mec", "m_loc"}
_BOOL_KEYS = {"swap_failure_repair", "handover_keeps_task"}


def params_from_dict(data: dict) -> SystemParams:
    """Build validated SystemParams from a flat config mapping.

    Unknown keys are an error: a typo must not silently change the physics.
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(data) - _REQUIRED_KEYS - _OPTIONAL_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(_REQUIRED_KEYS - set(data))
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    kwargs = {}
    for key, value in data.items():
        if key in _BOOL_KEYS:
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be a boolean (got {value!r})")
            kwargs[key] = value
        elif key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer (got {value!r})")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number (got {value!r})")
            kwargs[key] = float(value)
    try:
        return validate(SystemParams(**kwargs))
    except ParamError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> SystemParams:
    """Load and validate a flat JSON config file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at byte offset {exc.pos}: {exc.msg}"
        ) from exc
    return params_from_dict(data)


def with_updates(p: SystemParams, **changes) -> SystemParams:
    """Copy ``p`` with fields replaced, then re-validate.

    Setting mu_r (or p_a_override) clears its mutually exclusive partner.
    """
    if "mu_r" in changes and "mu_loc" not in changes:
        changes["mu_loc"] = None
    if "mu_loc" in changes and changes["mu_loc"] is not None and "mu_r" not in changes:
        changes["mu_r"] = None
    if "p_a_override" in changes and "t_s" not in changes:
        changes["t_s"] = None
    if "t_s" in changes and changes["t_s"] is not None and "p_a_override" not in changes:
        changes["p_a_override"] = None
    return validate(replace(p, **changes))
