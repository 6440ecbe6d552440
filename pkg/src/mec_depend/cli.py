"""Command-line front end.

Subcommands: osp, osp-verify, kpis, optimize, sweep, selftest.
JSON for single results, CSV for sweeps (',' separator, '.' decimal, LF line
endings, 12 significant digits). Exit statuses: 0 success, 2 config error,
3 numeric failure, 4 undefined KPI. MEC_DEPEND_THREADS caps parallelism.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .coverage import osp_analytical
from .ctmc import NumericError
from .kpi import UndefinedKpiError, evaluate
from .params import ConfigError, ParamError, SystemParams, load_config, with_updates
from .selftest import run_selftest
from .spatial_sim import SimConfig, simulate_osp_sweep
from .specfun import NonConvergenceError
from .vm_optimizer import optimal_vm_count

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNDEFINED_KPI = 4

_SWEEPABLE = (
    "theta_db", "p_a", "lambda_a", "kappa-scaler",
    "gamma_repair", "delta_fail", "m_mec", "mu_r",
)
_KPI_COLUMNS = ("osp", "cra", "ter", "tec")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.parameter not in _SWEEPABLE:
            raise ConfigError(
                f"unknown sweep parameter {self.parameter!r}; "
                f"choose from {', '.join(_SWEEPABLE)}"
            )
        if not self.step > 0.0:
            raise ConfigError(f"sweep step must be positive (got {self.step})")
        if self.start > self.stop:
            raise ConfigError(
                f"sweep start {self.start} exceeds stop {self.stop}"
            )

    def values(self) -> list[float]:
        count = int((self.stop - self.start) / self.step + 1e-9) + 1
        return [self.start + i * self.step for i in range(count)]


def _apply_sweep_value(p: SystemParams, name: str, v: float) -> SystemParams:
    if name == "theta_db":
        return with_updates(p, theta_db=v)
    if name == "p_a":
        return with_updates(p, p_a_override=v)
    if name == "lambda_a":
        return with_updates(p, lambda_a=v)
    if name == "kappa-scaler":
        return with_updates(p, lambda_d=p.lambda_d * v)
    if name == "gamma_repair":
        return with_updates(p, gamma_repair=v)
    if name == "delta_fail":
        return with_updates(p, delta_fail=v)
    if name == "m_mec":
        m = int(round(v))
        if abs(v - m) > 1e-9:
            raise ConfigError(f"m_mec sweep values must be integers (got {v})")
        return with_updates(p, m_mec=m)
    if name == "mu_r":
        return with_updates(p, mu_r=v)
    raise ConfigError(f"unknown sweep parameter {name!r}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_out(text: str, out_path: str | None):
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text)


def _write_csv(header, rows, out_path):
    lines = [",".join(header)]
    lines += [",".join(_fmt(c) for c in row) for row in rows]
    _write_out("\n".join(lines) + "\n", out_path)


def _write_json(obj, out_path):
    _write_out(json.dumps(obj, indent=2) + "\n", out_path)


def _parse_theta_sweep(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigError(
            f"--theta-sweep expects start:stop:step (got {text!r})"
        ) from exc
    return SweepSpec("theta_db", start, stop, step).values()


def _max_workers() -> int:
    env = os.environ.get("MEC_DEPEND_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def cmd_osp(args) -> int:
    p = load_config(args.config)
    if args.theta_db is not None:
        p = with_updates(p, theta_db=args.theta_db)
    b = osp_analytical(p)
    _write_json(dataclasses.asdict(b), args.out)
    return EXIT_OK


def cmd_osp_verify(args) -> int:
    p = load_config(args.config)
    grid = _parse_theta_sweep(args.theta_sweep)
    cfg = SimConfig(trials=args.trials, seed=args.seed,
                    window_km=args.window_km)
    estimates = simulate_osp_sweep(p, cfg, grid)
    rows = []
    for th, est in zip(grid, estimates):
        analytical = osp_analytical(with_updates(p, theta_db=th)).osp
        rows.append((th, analytical, est.mean, est.stderr,
                     abs(analytical - est.mean)))
    _write_csv(("theta_db", "osp_analytical", "osp_sim", "stderr", "abs_diff"),
               rows, args.out)
    return EXIT_OK


def _kpi_report_dict(report, details=None):
    d = dataclasses.asdict(report)
    if details is not None:
        d["steady_states"] = {
            name: {
                "states": [list(s) for s in model.states],
                "tau": [float(x) for x in ss.probabilities],
            }
            for name, (model, ss) in details.items()
        }
    return d


def cmd_kpis(args) -> int:
    p = load_config(args.config)
    if args.verbose:
        report, details = evaluate(p, osp=args.osp, return_details=True)
    else:
        report, details = evaluate(p, osp=args.osp), None
    _write_json(_kpi_report_dict(report, details), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    p = load_config(args.config)
    osp = args.osp if args.osp is not None else osp_analytical(p).osp
    result = optimal_vm_count(p, osp, m_max=args.m_max)
    _write_json({
        "osp": osp,
        "m_star": result.m_star,
        "c_star": result.c_star,
        "trace": [[m, c] for m, c in result.trace],
    }, args.out)
    return EXIT_OK


def _sweep_point(job):
    p, name, value, kpis, osp = job
    p_mod = _apply_sweep_value(p, name, value)
    report = evaluate(p_mod, osp=osp)
    return [value] + [getattr(report, k) for k in kpis]


def cmd_sweep(args) -> int:
    p = load_config(args.config)
    spec = SweepSpec(args.param, args.start, args.stop, args.step)
    kpis = tuple(k.strip() for k in args.kpis.split(","))
    for k in kpis:
        if k not in _KPI_COLUMNS:
            raise ConfigError(
                f"unknown KPI {k!r}; choose from {', '.join(_KPI_COLUMNS)}"
            )
    jobs = [(p, spec.parameter, v, kpis, args.osp) for v in spec.values()]
    workers = _max_workers()
    if workers > 1 and len(jobs) >= 16:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    _write_csv((spec.parameter, *kpis), rows, args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest()
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mec-depend",
        description="Communication/computation dependability KPIs for "
                    "MEC-enabled uplink networks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=None,
                        help="output path (default: stdout)")

    sp = sub.add_parser("osp", help="analytical offloading success probability")
    add_common(sp)
    sp.add_argument("--theta-db", type=float, default=None,
                    help="override the config detection threshold")
    sp.set_defaults(func=cmd_osp)

    sp = sub.add_parser("osp-verify",
                        help="Monte Carlo vs analytical OSP over a theta sweep")
    add_common(sp)
    sp.add_argument("--trials", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--theta-sweep", default="-20:0:1",
                    help="start:stop:step in dB (default -20:0:1)")
    sp.add_argument("--window-km", type=float, default=200.0)
    sp.set_defaults(func=cmd_osp_verify)

    sp = sub.add_parser("kpis", help="CRA / TER / TEC report")
    add_common(sp)
    sp.add_argument("--osp", type=float, default=None,
                    help="override the analytical OSP")
    sp.add_argument("--verbose", action="store_true",
                    help="include both steady-state vectors")
    sp.set_defaults(func=cmd_kpis)

    sp = sub.add_parser("optimize", help="TEC-maximizing MEC VM count")
    add_common(sp)
    sp.add_argument("--osp", type=float, default=None)
    sp.add_argument("--m-max", type=int, default=200)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("sweep", help="KPI sweep over one parameter, CSV out")
    add_common(sp)
    sp.add_argument("--param", required=True, choices=_SWEEPABLE)
    sp.add_argument("--start", type=float, required=True)
    sp.add_argument("--stop", type=float, required=True)
    sp.add_argument("--step", type=float, required=True)
    sp.add_argument("--kpis", default="cra,ter,tec",
                    help="comma list from osp,cra,ter,tec")
    sp.add_argument("--osp", type=float, default=None,
                    help="pin the OSP instead of recomputing per point")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("selftest", help="run the invariant battery")
    add_common(sp, config=False)
    sp.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParamError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UndefinedKpiError as exc:
        print(f"undefined KPI: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED_KPI
    except (NumericError, NonConvergenceError, ArithmeticError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
