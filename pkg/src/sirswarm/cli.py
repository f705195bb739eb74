"""Command line front end.

Subcommands map one-to-one onto the library operations: ``run`` a single
seeded simulation, ``ensemble`` a block of them, ``ode`` the reference
compartment model, ``compare`` the two against the scenario tolerances,
``score`` a run with the game formula, and ``serve`` the live session
service. All results go to stdout as single-line JSON; every failure
prints a single-line JSON error record to stderr.

Exit codes: 0 success, 1 usage or configuration error, 2 comparison
tolerance failure, 3 runtime failure (including I/O).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Any

import numpy as np

from ._version import __version__
from .errors import ConfigError, ScenarioError, SirSwarmError
from .ode import integrate_sir
from .scenario import (
    Scenario,
    compare_ode_agents,
    config_digest,
    default_scenario,
    export_trajectory,
    load_scenario,
    report_mapping,
    resolved_mapping,
)
from .scoring import score_trajectory
from .world import ensemble_run, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_COMPARISON = 2
EXIT_RUNTIME = 3

ENSEMBLE_FORMAT = "sirswarm-ensemble"
ODE_FORMAT = "sirswarm-ode"


def _error_record(code: int, category: str, message: str, **extra: Any) -> str:
    record: dict[str, Any] = {"code": code, "category": category, "message": message}
    record.update({k: v for k, v in extra.items() if v is not None})
    return json.dumps({"error": record})


def _fail(code: int, category: str, message: str, **extra: Any) -> int:
    print(_error_record(code, category, message, **extra), file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which this tool
    # reserves for comparison failures; remap to the config exit code.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, _error_record(EXIT_CONFIG, "usage", message) + "\n")


def _load_scenario(args: argparse.Namespace) -> Scenario:
    if args.config is None:
        scenario = default_scenario()
    else:
        try:
            scenario = load_scenario(args.config)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from exc
    seed = getattr(args, "seed", None)
    if seed is not None:
        scenario = dataclasses.replace(
            scenario, sim=dataclasses.replace(scenario.sim, seed=seed)
        )
    return scenario


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload))


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    trajectory = run(scenario.sim)
    if args.out is not None:
        export_trajectory(trajectory, args.out, args.format, scenario)
    counts = trajectory.counts()
    final = trajectory.frames[-1].counts
    _emit(
        {
            "digest": config_digest(scenario),
            "seed": scenario.sim.seed,
            "peak_infected": int(trajectory.peak_infected),
            "time_of_peak": int(np.argmax(counts[:, 1])),
            "final_counts": {"s": final[0], "i": final[1], "r": final[2], "v": final[3]},
            "total_control_deviation": trajectory.total_control_deviation,
            "out": args.out,
        }
    )
    return EXIT_OK


def _cmd_ensemble(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    n_runs = args.runs if args.runs is not None else scenario.comparison.n_runs
    summary = ensemble_run(scenario.sim, n_runs)
    digest = config_digest(scenario)
    _emit(
        {
            "digest": digest,
            "n_runs": n_runs,
            "mean_peak_infected": float(summary.peaks.mean()),
            "std_peak_infected": float(summary.peaks.std(ddof=1)) if n_runs > 1 else 0.0,
            "mean_time_of_peak": float(summary.peak_times.mean()),
            "mean_final_s": float(summary.final_s.mean()),
            "extinct_runs": int(summary.extinct.sum()),
        }
    )
    if args.out is not None:
        document = {
            "format": ENSEMBLE_FORMAT,
            "version": __version__,
            "digest": digest,
            "config": resolved_mapping(scenario),
            "n_runs": n_runs,
            "mean": summary.mean.tolist(),
            "std": summary.std.tolist(),
            "peaks": summary.peaks.tolist(),
            "peak_times": summary.peak_times.tolist(),
            "final_s": summary.final_s.tolist(),
            "extinct": summary.extinct.tolist(),
        }
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            json.dump(document, handle, separators=(",", ":"))
            handle.write("\n")
    return EXIT_OK


def _cmd_ode(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    ode = scenario.ode
    trajectory = integrate_sir(ode.initial, ode.params, ode.horizon, ode.dt)
    digest = config_digest(scenario)
    final = trajectory.final_state
    _emit(
        {
            "digest": digest,
            "beta": ode.params.beta,
            "alpha": ode.params.alpha,
            "peak_infected": float(trajectory.peak_infected),
            "time_of_peak": float(trajectory.time_of_peak),
            "final_state": {"s": final.s, "i": final.i, "r": final.r},
            "clamped": trajectory.clamped,
        }
    )
    if args.out is not None:
        document = {
            "format": ODE_FORMAT,
            "version": __version__,
            "digest": digest,
            "config": resolved_mapping(scenario),
            "times": trajectory.times.tolist(),
            "s": trajectory.s.tolist(),
            "i": trajectory.i.tolist(),
            "r": trajectory.r.tolist(),
            "clamped": trajectory.clamped,
        }
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            json.dump(document, handle, separators=(",", ":"))
            handle.write("\n")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    report = compare_ode_agents(scenario)
    payload = {"digest": config_digest(scenario)}
    payload.update(report_mapping(report))
    _emit(payload)
    if report.passed:
        return EXIT_OK
    failed = [
        name
        for name, ok in (
            ("peak", report.peak_within_tolerance),
            ("final_s", report.final_s_within_tolerance),
            ("extinction", report.all_extinct or not scenario.comparison.require_extinction),
            ("unimodality", report.unimodal_mean_curve),
        )
        if not ok
    ]
    return _fail(
        EXIT_COMPARISON,
        "comparison",
        f"outside tolerance: {', '.join(failed)}",
    )


def _cmd_score(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    trajectory = run(scenario.sim)
    breakdown = score_trajectory(trajectory)
    _emit(
        {
            "digest": config_digest(scenario),
            "seed": scenario.sim.seed,
            "peak_infected": int(trajectory.peak_infected),
            "total_control_deviation": trajectory.total_control_deviation,
            "s_h": breakdown.s_h,
            "s_f": breakdown.s_f,
            "s_p": breakdown.s_p,
            "s_e": breakdown.s_e,
            "s": breakdown.s,
        }
    )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(session_cap=args.session_cap, default_fps=args.fps)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sirswarm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        sub.add_argument("--config", help="scenario file; defaults apply when omitted")
        return sub

    sub = add("run", _cmd_run, "run one seeded simulation")
    sub.add_argument("--seed", type=int, help="override the scenario seed")
    sub.add_argument("--out", help="write the trajectory to this path")
    sub.add_argument(
        "--format", choices=("csv", "json"), help="artifact format; default from suffix"
    )

    sub = add("ensemble", _cmd_ensemble, "run a block of seeds and aggregate")
    sub.add_argument("--seed", type=int, help="override the base seed")
    sub.add_argument("--runs", type=int, help="override the configured ensemble size")
    sub.add_argument("--out", help="write the full aggregate as json")

    sub = add("ode", _cmd_ode, "integrate the reference compartment model")
    sub.add_argument("--out", help="write the full curve as json")

    add("compare", _cmd_compare, "grade the swarm against the compartment model")

    sub = add("score", _cmd_score, "run one simulation and print the game score")
    sub.add_argument("--seed", type=int, help="override the scenario seed")

    sub = add("serve", _cmd_serve, "start the live session service")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8000)
    sub.add_argument("--session-cap", type=int, default=64)
    sub.add_argument("--fps", type=float, default=20.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ScenarioError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), line=exc.line)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), field=exc.field)
    except OSError as exc:
        return _fail(EXIT_RUNTIME, "io", str(exc), path=getattr(exc, "filename", None))
    except SirSwarmError as exc:
        return _fail(EXIT_RUNTIME, "runtime", str(exc))


if __name__ == "__main__":
    sys.exit(main())
