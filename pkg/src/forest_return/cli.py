"""Command-line front end.

Every command reads one scenario file and writes CSV series plus a JSON
summary into ``--out``. Exit codes:

    0  success
    2  usage error (unknown command or bad flag)
    3  scenario file unreadable (missing, undecodable or malformed YAML)
    4  scenario invalid (schema or constraint violation)
    5  computation failed (infeasible plan, no break-even, singular input,
       violated invariance check)
    6  output could not be written
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .accounting import break_even_rotation, expected_rates, accrual_ledger, rotation_curves
from .errors import ForestReturnError, ScenarioError
from .growth import ConstantResponse, DecayingResponse, ManagementPlan, build_trajectory
from .optimizer import (
    THINNING_TAU_MAX,
    TAU_MAX,
    optimize_rotation,
    optimize_thinnings,
    rotation_by_offset,
    sensitivity_sweep,
)
from .prices import verify_return_rate_invariance
from .scenario import Scenario, scenario_from_dict

log = logging.getLogger("forest_return")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNREADABLE = 3
EXIT_INVALID = 4
EXIT_COMPUTATION = 5
EXIT_OUTPUT = 6

COMMANDS = (
    "evaluate",
    "optimize-rotation",
    "optimize-thinnings",
    "break-even",
    "price-invariance",
    "sensitivity",
    "curves",
)
CURVES_TAU_MAX = 150.0
BREAK_EVEN_TAU_MAX = 500.0
DEFAULT_OFFSETS = (0.0, 5.0, 10.0, 20.0, 40.0)


class _OutputError(Exception):
    pass


class _UsageError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits, ties to even."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if not np.isfinite(x):
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".12g")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(format(value, ".12g")) if np.isfinite(value) else None
    return value


class Writer:
    def __init__(self, out: Path, quiet: bool):
        self.out = out
        self.quiet = quiet
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise _OutputError(f"cannot create output directory {self.out}: {exc}") from None
        return self.out / name

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        path = self._path(name)
        try:
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([fmt(v) for v in row])
        except OSError as exc:
            raise _OutputError(f"cannot write {path}: {exc}") from None
        self.written.append(path)

    def summary(self, name: str, doc: dict) -> None:
        path = self._path(name)
        try:
            path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise _OutputError(f"cannot write {path}: {exc}") from None
        self.written.append(path)

    def say(self, text: str = "") -> None:
        if not self.quiet:
            print(text)


def _report_dict(report) -> dict:
    return {
        "rotation": report.rotation,
        "expected_profit_rate": report.expected_profit_rate,
        "expected_capitalization": report.expected_capitalization,
        "expected_return_rate": report.expected_return_rate,
        "break_even": report.break_even,
    }


def _plan_dict(plan: ManagementPlan) -> dict:
    r = plan.response
    response = (
        {"model": "constant", "delta": r.delta}
        if isinstance(r, ConstantResponse)
        else {"model": "decaying", "decay": r.decay}
    )
    return {
        "rotation": plan.rotation,
        "response": response,
        "thinnings": [{"time": ev.time, "removed": ev.removed} for ev in plan.thinnings],
    }


def _response(args, scenario: Scenario):
    if args.delta is not None and args.decay is not None:
        raise _UsageError("--delta and --decay are mutually exclusive")
    if args.delta is not None:
        return ConstantResponse(args.delta)
    if args.decay is not None:
        return DecayingResponse(args.decay)
    if scenario.plan is not None:
        return scenario.plan.response
    return ConstantResponse()


def _meta(scenario: Scenario, command: str) -> dict:
    return {"command": command, "scenario": scenario.name, "version": __version__}


def cmd_evaluate(args, scenario: Scenario, w: Writer) -> int:
    plan = scenario.plan
    source = "scenario"
    if plan is None:
        # no plan given: evaluate the thinning-free optimum for the chosen objective
        plan = optimize_rotation(
            scenario.yield_params, scenario.econ, args.objective,
            tau_max=args.tau_max or TAU_MAX, step=args.step,
        ).best_plan
        source = f"optimal {args.objective}"
    if args.delta is not None or args.decay is not None:
        plan = ManagementPlan(plan.rotation, plan.thinnings, _response(args, scenario))
    trajectory = build_trajectory(scenario.yield_params, plan, args.step)
    report = expected_rates(trajectory, scenario.econ)
    ledger = accrual_ledger(trajectory, scenario.econ)
    w.csv(
        "trajectory.csv",
        ["age", "volume", "capitalization", "profit_rate"],
        zip(trajectory.ages, trajectory.volumes, ledger.capitalization, ledger.profit_rates),
    )
    doc = _meta(scenario, "evaluate")
    doc["plan"] = _plan_dict(plan)
    doc["plan_source"] = source
    doc["report"] = _report_dict(report)
    doc["thinnings"] = [
        {"age": ev.age, "removed": ev.removed, "pre_volume": ev.pre_volume, "intensity": ev.intensity}
        for ev in trajectory.events
    ]
    doc["total_operating_profit"] = ledger.total_profit()
    w.summary("evaluate.json", doc)
    w.say(f"rotation                 {fmt(report.rotation)} years")
    w.say(f"expected profit rate     {fmt(report.expected_profit_rate)} $/acre/year")
    w.say(f"expected capitalization  {fmt(report.expected_capitalization)} $/acre")
    w.say(f"expected return rate     {fmt(report.expected_return_rate)} 1/year")
    w.say(f"break even               {fmt(report.break_even)}")
    return EXIT_OK


def cmd_optimize_rotation(args, scenario: Scenario, w: Writer) -> int:
    tau_max = args.tau_max or TAU_MAX
    result = optimize_rotation(
        scenario.yield_params, scenario.econ, args.objective, tau_max=tau_max, step=args.step
    )
    w.csv("rotation_trace.csv", ["tau", result.objective], result.trace)
    doc = _meta(scenario, "optimize-rotation")
    doc.update(
        objective=result.objective,
        optimal_rotation=result.best_plan.rotation,
        optimal_value=result.best_objective,
        profitable=result.profitable,
        report=_report_dict(result.best_report),
        evaluations=result.evaluated,
    )
    w.summary("optimize-rotation.json", doc)
    w.say(f"optimal rotation  {fmt(result.best_plan.rotation)} years ({result.objective})")
    w.say(f"objective         {fmt(result.best_objective)}")
    if not result.profitable:
        w.say("warning: no profitable rotation in the search range")
    return EXIT_OK


def cmd_optimize_thinnings(args, scenario: Scenario, w: Writer) -> int:
    tau_max = args.tau_max or THINNING_TAU_MAX
    response = _response(args, scenario)
    params, econ = scenario.yield_params, scenario.econ
    result = optimize_thinnings(
        params, econ, response, args.max_events, objective=args.objective, tau_max=tau_max, step=args.step
    )
    base = result.baseline
    taus = np.arange(1.0, np.floor(tau_max) + 0.5)
    _, _, without = rotation_curves(build_trajectory(params, ManagementPlan(float(taus[-1])), args.step), econ, taus)
    with_thin = np.full_like(taus, np.nan)
    best = result.best_plan
    if best.thinnings:
        last = best.thinnings[-1].time
        mask = taus > last
        long = ManagementPlan(float(taus[-1]), best.thinnings, best.response)
        _, _, ret = rotation_curves(build_trajectory(params, long, args.step), econ, taus[mask])
        with_thin[mask] = ret
    w.csv(
        "thinning_curves.csv",
        ["tau", "return_rate_without_thinning", "return_rate_with_thinning"],
        ((t, a, None if np.isnan(b) else b) for t, a, b in zip(taus, without, with_thin)),
    )
    doc = _meta(scenario, "optimize-thinnings")
    doc.update(
        objective=result.objective,
        response=_plan_dict(best)["response"],
        max_events=args.max_events,
        feasible=result.feasible,
        best_plan=_plan_dict(best),
        best_value=result.best_objective,
        best_report=_report_dict(result.best_report),
        thinning_free_rotation=base.best_plan.rotation,
        thinning_free_value=base.best_objective,
        schedules_evaluated=result.evaluated,
        schedules_skipped=result.skipped,
    )
    w.summary("optimize-thinnings.json", doc)
    verdict = "feasible" if result.feasible else "not feasible"
    w.say(f"thinning {verdict}: best {fmt(result.best_objective)} vs thinning-free {fmt(base.best_objective)}")
    for ev in best.thinnings:
        w.say(f"  thin at {fmt(ev.time)} years, remove {fmt(ev.removed)} MBF/acre")
    w.say(f"  clearcut at {fmt(best.rotation)} years")
    return EXIT_OK


def cmd_break_even(args, scenario: Scenario, w: Writer) -> int:
    tau = break_even_rotation(
        scenario.yield_params, scenario.econ, args.step, args.tau_max or BREAK_EVEN_TAU_MAX
    )
    doc = _meta(scenario, "break-even")
    doc["break_even_rotation"] = tau
    w.summary("break-even.json", doc)
    w.say(f"break-even rotation  {fmt(tau)} years")
    return EXIT_OK


def _offsets(text: str | None) -> list[float]:
    if text is None:
        return list(DEFAULT_OFFSETS)
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"--offsets must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise _UsageError("--offsets is empty")
    return values


def cmd_price_invariance(args, scenario: Scenario, w: Writer) -> int:
    if scenario.price_process is None:
        raise ScenarioError("price-invariance needs a price_process section", "price_process")
    offsets = _offsets(args.offsets)
    params, econ, process = scenario.yield_params, scenario.econ, scenario.price_process
    tau_max = args.tau_max or TAU_MAX
    if scenario.plan is not None:
        plan = scenario.plan
    else:
        plan = optimize_rotation(params, econ, tau_max=tau_max, step=args.step).best_plan
    rows = verify_return_rate_invariance(build_trajectory(params, plan, args.step), econ, process, offsets)
    optima = rotation_by_offset(params, econ, process, offsets, tau_max=tau_max, step=args.step)
    w.csv(
        "price_invariance.csv",
        [
            "offset", "prefactor", "price_multiplier", "expected_profit_rate",
            "expected_capitalization", "expected_return_rate", "profit_scale_error",
            "capitalization_scale_error", "return_rate_error", "optimal_rotation",
        ],
        (
            (r.offset, r.prefactor, r.price_multiplier, r.expected_profit_rate,
             r.expected_capitalization, r.expected_return_rate, r.profit_scale_error,
             r.capitalization_scale_error, r.return_rate_error, opt.best_plan.rotation)
            for r, (_, opt) in zip(rows, optima)
        ),
    )
    rotations = [opt.best_plan.rotation for _, opt in optima]
    holds = all(r.holds for r in rows)
    doc = _meta(scenario, "price-invariance")
    doc.update(
        rotation=plan.rotation,
        offsets=offsets,
        invariance_holds=holds,
        max_return_rate_error=max(r.return_rate_error for r in rows),
        optimal_rotation_spread=max(rotations) - min(rotations),
    )
    w.summary("price-invariance.json", doc)
    w.say(f"return rate invariant across {len(rows)} offsets: {fmt(holds)}")
    w.say(f"optimal rotation spread: {fmt(max(rotations) - min(rotations))} years")
    if not holds:
        log.error("return-rate invariance violated beyond tolerance")
        return EXIT_COMPUTATION
    return EXIT_OK


def cmd_sensitivity(args, scenario: Scenario, w: Writer) -> int:
    sweep = scenario.sweep
    prices = sweep.price_multipliers if sweep else (0.5, 1.0, 2.0)
    expenses = sweep.expense_multipliers if sweep else (0.5, 1.0, 2.0)
    rows = sensitivity_sweep(
        scenario.yield_params, scenario.econ, prices, expenses,
        tau_max=args.tau_max or TAU_MAX, step=args.step,
    )
    w.csv(
        "sensitivity.csv",
        ["price_multiplier", "expense_multiplier", "optimal_rotation", "optimal_return_rate"],
        ((r.price_multiplier, r.expense_multiplier, r.optimal_rotation, r.optimal_return_rate) for r in rows),
    )
    doc = _meta(scenario, "sensitivity")
    doc["rows"] = [r.__dict__ for r in rows]
    w.summary("sensitivity.json", doc)
    for r in rows:
        w.say(
            f"price x{fmt(r.price_multiplier):<5} expenses x{fmt(r.expense_multiplier):<5} "
            f"rotation {fmt(r.optimal_rotation)}"
        )
    return EXIT_OK


def cmd_curves(args, scenario: Scenario, w: Writer) -> int:
    tau_max = args.tau_max or CURVES_TAU_MAX
    if not args.tau_step > 0:
        raise _UsageError("--tau-step must be > 0")
    n = int(np.floor(tau_max / args.tau_step + 1e-9))
    if n < 1:
        raise _UsageError("--tau-max must be at least --tau-step")
    taus = np.round(np.arange(1, n + 1) * args.tau_step, 12)
    trajectory = build_trajectory(scenario.yield_params, ManagementPlan(float(taus[-1])), args.step)
    profit, cap, ret = rotation_curves(trajectory, scenario.econ, taus)
    w.csv(
        "curves.csv",
        ["tau", "expected_profit_rate", "expected_capitalization", "expected_return_rate"],
        zip(taus, profit, cap, ret),
    )
    doc = _meta(scenario, "curves")
    doc.update(
        points=n,
        profit_rate_peak=float(taus[int(np.argmax(profit))]),
        return_rate_peak=float(taus[int(np.argmax(ret))]),
    )
    w.summary("curves.json", doc)
    w.say(f"{n} rotation ages written; profit-rate peak {fmt(doc['profit_rate_peak'])}, "
          f"return-rate peak {fmt(doc['return_rate_peak'])}")
    return EXIT_OK


HANDLERS = {
    "evaluate": cmd_evaluate,
    "optimize-rotation": cmd_optimize_rotation,
    "optimize-thinnings": cmd_optimize_thinnings,
    "break-even": cmd_break_even,
    "price-invariance": cmd_price_invariance,
    "sensitivity": cmd_sensitivity,
    "curves": cmd_curves,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forest-return",
        description="Expected return rate on capital for even-aged forest rotations.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", required=True, help="scenario file (YAML or JSON)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--tau-max", type=float, default=None, help="upper end of the rotation range, years")
    parser.add_argument("--step", type=float, default=0.1, help="trajectory sampling step, years")
    parser.add_argument("--tau-step", type=float, default=1.0, help="rotation grid spacing for curves")
    parser.add_argument("--objective", choices=("return-rate", "profit-rate"), default="return-rate")
    parser.add_argument("--delta", type=float, default=None, help="persistent thinning response")
    parser.add_argument("--decay", type=float, default=None, help="decaying thinning response, 1/year")
    parser.add_argument("--max-events", type=int, choices=(1, 2), default=1)
    parser.add_argument("--offsets", default=None, help="window offsets for price-invariance, e.g. 0,5,10")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    if not args.step > 0:
        log.error("--step must be > 0")
        return EXIT_USAGE

    try:
        doc = yaml.safe_load(Path(args.scenario).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        log.error("cannot read scenario %s: %s", args.scenario, exc)
        return EXIT_UNREADABLE
    except yaml.YAMLError as exc:
        log.error("scenario %s is not well-formed YAML: %s", args.scenario, exc)
        return EXIT_UNREADABLE
    try:
        scenario = scenario_from_dict(doc)
    except ScenarioError as exc:
        log.error("invalid scenario: %s", exc)
        return EXIT_INVALID

    writer = Writer(Path(args.out), args.quiet)
    try:
        return HANDLERS[args.command](args, scenario, writer)
    except _UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except ScenarioError as exc:
        log.error("invalid scenario: %s", exc)
        return EXIT_INVALID
    except _OutputError as exc:
        log.error("%s", exc)
        return EXIT_OUTPUT
    except ForestReturnError as exc:
        log.error("computation failed: %s", exc)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
