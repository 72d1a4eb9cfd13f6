"""Command-line entry point: run, compare, verify, export-schedule.

Exit codes: 0 success, 1 verification failure, 2 usage/config/model error,
3 simulation failure. Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .model import ModelError
from .sim.config import CONTROLLERS, INTEGRATORS, ConfigError, ScenarioConfig, load_scenario_config
from .sim.export import write_log_csv, write_metrics_json
from .sim.metrics import compute_metrics
from .sim.scenario import SimulationError, run_scenario

#: Overrides the output directory of run/compare (the --output-dir flag wins).
OUTPUT_ENV = "SMS_HANDOVER_OUTPUT_DIR"

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SIM = 0, 1, 2, 3

log = logging.getLogger("sms_handover")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind, self.message, self.code = kind, message, code


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return value
    return parse


def _non_negative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _rolling(text):
    """'T' for every phase, or 'PRE,POST'."""
    parts = [_positive(float)(p) for p in text.split(",")]
    if len(parts) == 1:
        return {"pre_grasp": parts[0], "post_grasp": parts[0]}
    if len(parts) == 2:
        return {"pre_grasp": parts[0], "post_grasp": parts[1]}
    raise argparse.ArgumentTypeError("expected T or PRE,POST")


def _scenario_flags(p: argparse.ArgumentParser, controller: bool = True) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="scenario TOML file (default: bundled handover scenario)")
    p.add_argument("--output-dir", type=Path, default=None,
                   help=f"directory for logs and metrics (default: ${OUTPUT_ENV}, else the config's output directory)")
    if controller:
        p.add_argument("--controller", choices=CONTROLLERS, default=None, help="override the controller")
    p.add_argument("--kp", type=_non_negative, default=None, help="PID proportional gain, all joints")
    p.add_argument("--ki", type=_non_negative, default=None, help="PID integral gain, all joints")
    p.add_argument("--kd", type=_non_negative, default=None, help="PID derivative gain, all joints")
    p.add_argument("--rolling-period", type=_rolling, default=None, metavar="T[,T_POST]",
                   help="NMPC rolling period in s: one value, or PRE,POST for before/after the grasp")
    p.add_argument("--dt", type=_positive(float), default=None, help="physics step in s")
    p.add_argument("--duration", type=_positive(float), default=None, help="simulated time in s")
    p.add_argument("--integrator", choices=INTEGRATORS, default=None, help="fixed-step rk4 or adaptive rk45")
    p.add_argument("--seed", type=int, default=None, help="random seed recorded with the run")


def _formatter(prog):
    # fixed width so the generated docs do not depend on the terminal
    return argparse.HelpFormatter(prog, width=100, max_help_position=32)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sms-handover",
        formatter_class=_formatter,
        description="Free-floating dual-arm space manipulator: handover simulation under PID and NMPC control.",
        epilog=f"Exit codes: {EXIT_OK} ok, {EXIT_VERIFY} verification failed, {EXIT_CONFIG} usage/config/model "
               f"error, {EXIT_SIM} simulation failed.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", formatter_class=_formatter,
                       help="run the scenario with one controller; write CSV log and JSON metrics")
    _scenario_flags(p)

    p = sub.add_parser("compare", formatter_class=_formatter,
                       help="run PID and NMPC on the same scenario and print a metrics table")
    _scenario_flags(p, controller=False)
    p.add_argument("--sequential", action="store_true", help="run the two controllers one after the other")

    p = sub.add_parser("verify", formatter_class=_formatter,
                       help="run the self-check suites; nonzero exit if any fails")
    from .verify import SUITES
    p.add_argument("--model", type=Path, default=None, help="model TOML file (default: bundled model)")
    p.add_argument("--suite", action="append", choices=SUITES, default=None,
                   help="run only this suite (repeatable)")
    p.add_argument("--json", action="store_true", help="print results as JSON instead of text")

    p = sub.add_parser("export-schedule", formatter_class=_formatter,
                       help="write the scenario's task schedule as TOML or JSON")
    p.add_argument("--config", type=Path, default=None, help="scenario TOML file (default: bundled scenario)")
    p.add_argument("--format", choices=("toml", "json"), default="toml", help="output format")
    p.add_argument("--output", type=Path, default=None, help="file to write (default: stdout)")
    return parser


def cli_reference() -> str:
    """Help text of the program and every subcommand (the source of the README CLI section)."""
    parser = build_parser()
    blocks = [parser.format_help()]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for name, sp in action.choices.items():
                blocks.append(sp.format_help())
    return "\n".join(b.rstrip() + "\n" for b in blocks)


# -- helpers ----------------------------------------------------------------

def _load_config(args, controller: str | None = None) -> ScenarioConfig:
    try:
        cfg = load_scenario_config(args.config)
        gains = cfg.pid_gains
        for name in ("kp", "ki", "kd"):
            value = getattr(args, name)
            if value is not None:
                gains = replace(gains, **{name: np.full_like(getattr(gains, name), value)})
        cfg = cfg.with_overrides(
            controller=controller or getattr(args, "controller", None),
            pid_gains=gains,
            rolling_periods=args.rolling_period,
            dt=args.dt,
            duration=args.duration,
            integrator=args.integrator,
            seed=args.seed,
        )
        cfg.load_model()
    except (ConfigError, ModelError, ValueError) as exc:
        raise CliError(type(exc).__name__, str(exc), EXIT_CONFIG) from exc
    return cfg


def _output_dir(args, cfg: ScenarioConfig) -> Path:
    if args.output_dir is not None:
        return args.output_dir
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else cfg.output_dir


def _simulate(cfg: ScenarioConfig, out_dir: Path) -> dict:
    """Run one controller and write its artifacts; picklable for worker processes."""
    t0 = time.perf_counter()
    model = cfg.load_model()
    try:
        log_ = run_scenario(cfg, model)
    except SimulationError as exc:
        return {"controller": cfg.controller, "error": str(exc)}
    report = compute_metrics(log_, model.base.mass, model.base.inertia_tensor)
    csv_path = write_log_csv(log_, out_dir / f"{cfg.controller}_log.csv")
    json_path = write_metrics_json(report, out_dir / f"{cfg.controller}_metrics.json", log_)
    return {"controller": cfg.controller, "report": report, "failed": log_.failed, "warnings": log_.warnings,
            "log": str(csv_path), "metrics": str(json_path), "seconds": time.perf_counter() - t0}


def _raise_on_failure(result: dict) -> None:
    if "error" in result:
        raise CliError("SimulationError", f"{result['controller']}: {result['error']}", EXIT_SIM)
    if result["failed"]:
        raise CliError("ScenarioFailed", f"{result['controller']}: " + "; ".join(result["warnings"]), EXIT_SIM)


def comparison_table(reports: dict) -> str:
    """Side-by-side overshoot, settling, max torque and base drift."""
    pid, nmpc = reports["pid"], reports["nmpc"]
    lines = [f"{'joint':<6} {'OS pid %':>9} {'OS nmpc %':>10} {'Ts pid s':>9} {'Ts nmpc s':>10}"]
    names = [f"a{i}" for i in range(1, 8)] + [f"b{i}" for i in range(1, 8)]
    for j, name in enumerate(names):
        lines.append(f"{name:<6} {pid.overshoot_percent[j]:>9.2f} {nmpc.overshoot_percent[j]:>10.2f} "
                     f"{pid.settling_time[j]:>9.2f} {nmpc.settling_time[j]:>10.2f}")
    os_wins = sum(n < p for n, p in zip(nmpc.overshoot_percent, pid.overshoot_percent))
    ts_wins = sum(n < p for n, p in zip(nmpc.settling_time, pid.settling_time))
    lines += [
        f"NMPC better: overshoot {os_wins}/{len(names)} joints, settling {ts_wins}/{len(names)} joints",
        f"{'max |torque| N m':<22} pid {pid.max_abs_torque:.3f}   nmpc {nmpc.max_abs_torque:.3f}",
        f"{'max base drift':<22} pid {pid.max_base_drift:.3e}   nmpc {nmpc.max_base_drift:.3e}",
        "base drift per phase   pid " + " ".join(f"{x:.2e}" for x in pid.base_drift)
        + "   nmpc " + " ".join(f"{x:.2e}" for x in nmpc.base_drift),
    ]
    return "\n".join(lines)


# -- commands ---------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _load_config(args)
    result = _simulate(cfg, _output_dir(args, cfg))
    _raise_on_failure(result)
    r = result["report"]
    print(f"{cfg.controller}: max |torque| {r.max_abs_torque:.3f} N m, max base drift {r.max_base_drift:.3e}, "
          f"{result['seconds']:.1f} s")
    print(f"log: {result['log']}\nmetrics: {result['metrics']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfgs = {c: _load_config(args, c) for c in ("pid", "nmpc")}
    out = _output_dir(args, cfgs["nmpc"])
    if args.sequential or (os.cpu_count() or 1) < 2:
        results = {c: _simulate(cfg, out) for c, cfg in cfgs.items()}
    else:
        with ProcessPoolExecutor(max_workers=2) as pool:
            futures = {c: pool.submit(_simulate, cfg, out) for c, cfg in cfgs.items()}
            results = {c: f.result() for c, f in futures.items()}
    for res in results.values():
        if "error" in res:
            _raise_on_failure(res)
    table = comparison_table({c: r["report"] for c, r in results.items()})
    print(table)
    summary = {c: {"failed": r["failed"], "warnings": r["warnings"], "log": r["log"], "metrics": r["metrics"]}
               for c, r in results.items()}
    (out / "compare.txt").write_text(table + "\n")
    (out / "compare.json").write_text(json.dumps(summary, indent=2) + "\n")
    for res in results.values():
        _raise_on_failure(res)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suites

    results = run_suites(args.model, args.suite, report=None if args.json else print)
    if args.json:
        print(json.dumps([{"suite": r.name, "status": r.status, "detail": r.detail,
                           "seconds": round(r.seconds, 3)} for r in results], indent=2))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_export_schedule(args) -> int:
    import tomli_w

    from .sim.schedule import schedule_to_dict

    try:
        cfg = load_scenario_config(args.config)
    except (ConfigError, ValueError) as exc:
        raise CliError(type(exc).__name__, str(exc), EXIT_CONFIG) from exc
    doc = {"schedule": schedule_to_dict(cfg.schedule)}
    text = json.dumps(doc, indent=2) + "\n" if args.format == "json" else tomli_w.dumps(doc)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(text)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "verify": cmd_verify, "export-schedule": cmd_export_schedule}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(json.dumps({"error": exc.kind, "message": exc.message, "exit_code": exc.code}), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
