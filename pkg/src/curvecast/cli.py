"""Command-line interface.

Subcommands: ``fit`` (one-off prefix fit), ``run`` (full run with stopping),
``evaluate`` (reliability metrics over finished runs) and ``simulate``
(synthetic series and convergence checks).

Exit codes: 0 success, 1 failed checks, 2 input/parse error, 3 run never
reached the convergence level, 4 fit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .anchoring import AnchorPolicy
from .controller import RunConfig, run_stream
from .errors import InsufficientDataError
from .fitting import fit_power_law
from .levels import LevelParams
from .metrics import ControlSequence, evaluate_runs
from .model import PowerLawParams, eval_pattern
from .plotting import emit_plot
from .reports import (
    ObservationFileError,
    build_run_report,
    format_observations,
    metrics_report_to_dict,
    read_observations,
    report_to_csv,
    report_to_json,
)
from .synth import NoiseSpec, SynthSpec, TheoremSuiteConfig, generate_series, theorem_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NO_CLEVEL = 3
EXIT_FIT_FAILURE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvecast",
        description="Learning-curve prediction: fit trends, detect convergence, score estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one prefix and print the parameters")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--level", type=int, default=None,
                       help="number of observations to use (default: all)")

    p_run = sub.add_parser("run", help="consume a series and stop at convergence")
    p_run.add_argument("--input", required=True)
    p_run.add_argument("--tau", type=float, required=True)
    p_run.add_argument("--nu", type=float, default=2e-5)
    p_run.add_argument("--slowdown", type=int, default=1)
    p_run.add_argument("--lookahead", type=int, default=5)
    p_run.add_argument("--anchors", choices=["none", "canonical"], default="none")
    p_run.add_argument("--anchor-mode", choices=["analytic", "finite"], default="analytic")
    p_run.add_argument("--anchor-x", type=float, default=1e200)
    p_run.add_argument("--end-position", type=int, default=None)
    p_run.add_argument("--predict-at", default=None,
                       help="comma-separated positions to estimate")
    p_run.add_argument("--format", choices=["json", "csv"], default="json")
    p_run.add_argument("--output", default=None)
    p_run.add_argument("--plot", default=None, help="write an SVG view here")

    p_eval = sub.add_parser("evaluate", help="score finished runs on control positions")
    p_eval.add_argument("--runs", required=True, help="comma-separated run report files")
    p_eval.add_argument("--truth", required=True,
                        help="comma-separated observation files, one per run")
    p_eval.add_argument("--controls", required=True,
                        help="comma-separated control positions")

    p_sim = sub.add_parser("simulate", help="generate a synthetic series")
    p_sim.add_argument("--a", type=float, required=True)
    p_sim.add_argument("--b", type=float, required=True)
    p_sim.add_argument("--c", type=float, required=True)
    p_sim.add_argument("--noise", default="none",
                       help="none | gaussian:SIGMA | bumps:MAGNITUDE:COUNT[:MAXPOS]")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--kernel", type=int, default=5000)
    p_sim.add_argument("--step", type=int, default=5000)
    p_sim.add_argument("--count", type=int, default=60)
    p_sim.add_argument("--theorems", action="store_true",
                       help="run the convergence checks instead of printing the series")
    return parser


def _parse_noise(text: str) -> NoiseSpec:
    parts = text.split(":")
    kind = parts[0]
    if kind == "none":
        return NoiseSpec()
    if kind == "gaussian":
        if len(parts) != 2:
            raise ValueError("gaussian noise needs a sigma, e.g. gaussian:0.05")
        return NoiseSpec("gaussian", sigma=float(parts[1]))
    if kind == "bumps":
        if len(parts) not in (3, 4):
            raise ValueError("bumps noise is bumps:MAGNITUDE:COUNT[:MAXPOS]")
        max_position = int(float(parts[3])) if len(parts) == 4 else 100_000
        return NoiseSpec("bumps", magnitude=float(parts[1]), count=int(parts[2]),
                         max_position=max_position)
    raise ValueError(f"unknown noise kind {kind!r}")


def _cmd_fit(args) -> int:
    series = read_observations(args.input)
    level = args.level if args.level is not None else len(series)
    points = series.prefix(level)
    result = fit_power_law(points)
    payload = {
        "level": level,
        "a": round(result.params.a, 6),
        "b": round(result.params.b, 6),
        "c": round(result.params.c, 6),
        "converged": result.converged,
        "iterations": result.iterations,
        "final_cost": result.final_cost,
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK if result.converged else EXIT_FIT_FAILURE


def _cmd_run(args) -> int:
    series = read_observations(args.input)
    config = RunConfig(
        tau=args.tau,
        level_params=LevelParams(nu=args.nu, slowdown=args.slowdown,
                                 lookahead=args.lookahead),
        anchor_policy=AnchorPolicy(mode=args.anchors,
                                   representation=args.anchor_mode,
                                   finite_x=args.anchor_x),
        end_position=args.end_position,
    )
    state = run_stream(config, series.points)
    predict_at = []
    if args.predict_at and state.stopped:
        predict_at = [float(v) for v in args.predict_at.split(",") if v.strip()]
    report = build_run_report(state, predict_at=predict_at)
    text = report_to_json(report) if args.format == "json" else report_to_csv(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.plot:
        markers = {}
        if state.wposition is not None:
            markers["working"] = state.wposition
        if state.pposition is not None:
            markers["prediction"] = state.pposition
        if state.cposition is not None:
            markers["convergence"] = state.cposition
        emit_plot(state.trace, state.series, args.plot,
                  selected=state.selected_trend, markers=markers)
    return EXIT_OK if state.stopped else EXIT_NO_CLEVEL


def _cmd_evaluate(args) -> int:
    run_paths = [p for p in args.runs.split(",") if p]
    truth_paths = [p for p in args.truth.split(",") if p]
    controls = [int(float(v)) for v in args.controls.split(",") if v.strip()]
    if len(run_paths) != len(truth_paths):
        raise ValueError("need exactly one truth file per run report")
    if len(run_paths) < 1:
        raise ValueError("need at least one run")
    names = [Path(p).stem for p in run_paths]
    if len(set(names)) != len(names):
        raise ValueError("run report file names must be distinct")

    pairs_by_run: dict[str, tuple] = {}
    segments: dict[str, list[float]] = {}
    for name, run_path, truth_path in zip(names, run_paths, truth_paths):
        with open(run_path, encoding="utf-8") as fh:
            report = json.load(fh)
        summary = report["summary"]
        if not summary.get("stopped") or summary.get("clevel") is None:
            raise ValueError(f"run {name!r} never reached its convergence level")
        selected = next(row for row in report["levels"]
                        if row["level"] == summary["clevel"])
        params = PowerLawParams(selected["a"], selected["b"], selected["c"])
        truth = read_observations(truth_path)
        truth_map = {p.position: p.accuracy for p in truth.points}
        missing = [c for c in controls if c not in truth_map]
        if missing:
            raise ValueError(f"truth for {name!r} lacks control positions {missing}")
        pairs_by_run[name] = tuple(
            (truth_map[c], eval_pattern(params, c)) for c in controls
        )
        if summary["wlevel"] is not None:
            segments[name] = [
                row["alpha"] for row in report["levels"]
                if summary["wlevel"] <= row["level"] <= summary["clevel"]
                and row["converged"]
            ]
    sequence = ControlSequence(positions=tuple(controls), runs=pairs_by_run)
    metrics = evaluate_runs(sequence, backbone_segments=segments)
    print(json.dumps(metrics_report_to_dict(metrics), indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    seed = args.seed
    env_seed = os.environ.get("CURVE_SEED")
    if env_seed:
        seed = int(env_seed)
    spec = SynthSpec(
        true_params=PowerLawParams(args.a, args.b, args.c),
        kernel=args.kernel,
        step=args.step,
        count=args.count,
        noise=_parse_noise(args.noise),
        seed=seed,
    )
    series = generate_series(spec)
    if not args.theorems:
        sys.stdout.write(format_observations(series))
        return EXIT_OK
    budget = 0.0 if spec.noise.kind == "none" else 0.05
    band = 0.0 if spec.noise.kind == "none" else 0.1
    report = theorem_suite(series, TheoremSuiteConfig(
        true_params=spec.true_params,
        violation_budget=budget,
        monotone_tolerance=band,
    ))
    payload = {
        "all_passed": report.all_passed,
        "checks": {
            name: {"passed": res.passed, "violations": res.violations,
                   "checks": res.checks, "detail": res.detail}
            for name, res in report.results.items()
        },
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK if report.all_passed else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit": _cmd_fit,
        "run": _cmd_run,
        "evaluate": _cmd_evaluate,
        "simulate": _cmd_simulate,
    }
    try:
        return handlers[args.command](args)
    except (ObservationFileError, InsufficientDataError, ValueError, OSError,
            json.JSONDecodeError, KeyError, StopIteration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
