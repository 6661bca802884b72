"""Command-line entry point.

Exit codes: 0 all properties pass, 1 a property fails, 2 input error,
3 numerical failure (diverged simulation or persistent QP infeasibility).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .model import ModelError, default_model, load_model
from .qp import OPTIMAL
from .runner import ScenarioRunner, write_logs
from .scenarios import ScenarioError, export_library, get_scenario, load_scenario, scenario_library

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("quadwbc")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadwbc", description="Whole-body control scenarios for a quadruped.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file (or a library scenario name) in closed loop")
    run.add_argument("scenario", help="scenario JSON file, or the name of a built-in scenario")
    run.add_argument("--model", help="robot model JSON (default: scenario's model, else the built-in quadruped)")
    run.add_argument("--dt", type=float, help="control period in seconds (default 1/400)")
    run.add_argument("--sim-dt", type=float, help="simulator step in seconds (default 1e-3)")
    run.add_argument("--mu", type=float, help="initial friction coefficient used by the controller")
    run.add_argument("--integrator", choices=("euler", "rk4"), help="simulator integration scheme")
    run.add_argument("--no-qp", action="store_true", help="disable the constrained-space QP (ablation)")
    run.add_argument("--report", help="write the JSON run report here")
    run.add_argument("--logs", help="write CSV logs and report.json into this directory")
    run.add_argument("--max-infeasible", type=float, default=0.5,
                     help="fraction of infeasible QP cycles treated as a numerical failure (default 0.5)")
    run.add_argument("-q", "--quiet", action="store_true", help="only print the final verdict")

    sub.add_parser("list", help="list the built-in scenarios")
    exp = sub.add_parser("export", help="write the built-in scenarios as JSON files")
    exp.add_argument("directory")
    return p


def _resolve_scenario(arg: str):
    path = Path(arg)
    if path.suffix == ".json" or path.exists():
        sc = load_scenario(path)
        return sc, path.parent
    try:
        return get_scenario(arg), Path.cwd()
    except KeyError as exc:
        raise ScenarioError(exc.args[0]) from None


def _cmd_run(args) -> int:
    try:
        scenario, base_dir = _resolve_scenario(args.scenario)
        if args.model:
            model = load_model(args.model)
        elif scenario.model_path:
            mp = Path(scenario.model_path)
            model = load_model(mp if mp.is_absolute() else base_dir / mp)
        else:
            model = default_model()
        runner = ScenarioRunner(scenario, model, control_period=args.dt, friction_mu=args.mu,
                                use_qp=False if args.no_qp else None, integrator=args.integrator,
                                sim_dt=args.sim_dt)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScenarioError, ModelError, ValueError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_INPUT

    result = runner.run()
    report = result.report
    if args.logs:
        write_logs(result, args.logs)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n")

    if not args.quiet:
        t = report.timing
        print(f"scenario {report.scenario}: {report.sim_steps} sim steps, {report.control_steps} control cycles")
        print(f"  qp status: {json.dumps(report.qp_status, sort_keys=True)}")
        print(f"  cycle time: mean {t['mean'] * 1e3:.3f} ms, p99 {t['p99'] * 1e3:.3f} ms, max {t['max'] * 1e3:.3f} ms")
        print(f"  max contact drift {report.max_constraint_violation:.3g} m")
        for prop in report.properties:
            print(f"  [{'PASS' if prop.passed else 'FAIL'}] {prop.name}: {prop.value:.6g} (limit {prop.limit:.6g})"
                  + (f"  {prop.detail}" if prop.detail else ""))

    if report.error is not None:
        print(f"numerical failure: {report.error}", file=sys.stderr)
        return EXIT_NUMERIC
    total = report.control_steps
    bad = total - report.qp_status.get(OPTIMAL, 0) - report.qp_status.get("disabled", 0)
    if total and bad / total > args.max_infeasible:
        print(f"numerical failure: QP not optimal in {bad} of {total} cycles", file=sys.stderr)
        return EXIT_NUMERIC
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {report.scenario}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        for name, sc in scenario_library().items():
            print(f"{name:24s} {sc.duration:6.2f} s  {sc.description}")
        return EXIT_PASS
    if args.command == "export":
        for p in export_library(args.directory):
            print(p)
        return EXIT_PASS
    return _cmd_run(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
