"""Scenario files, trajectory artifacts, and the agent-vs-compartment
comparison used to validate the swarm against its mean-field reference.

A scenario is a single YAML document. Simulator knobs sit at the top
level under the same names as :class:`~sirswarm.world.SimConfig`; the
optional ``ode`` block configures the reference compartment model (rates
given as numbers or as the string ``derived`` to map them from the
simulator knobs); the optional ``comparison`` block sets the ensemble
size and pass/fail tolerances. Unknown keys are rejected by name so a
typo cannot silently fall back to a default. Every exported artifact
embeds the fully resolved configuration, a digest of it, and the package
version, which is enough to reproduce the artifact exactly.
"""

from __future__ import annotations

import dataclasses
import json
import hashlib
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
import yaml

from ._version import __version__
from .errors import ConfigError, ScenarioError
from .ode import (
    SirParams,
    SirState,
    alpha_from_recovery,
    analytic_peak,
    beta_from_contact,
    final_size,
    integrate_sir,
)
from .world import SimConfig, SimFrame, SimTrajectory, ensemble_run

__all__ = [
    "CSV_HEADER",
    "SIM_FLOAT_FIELDS",
    "SIM_INT_FIELDS",
    "TRAJECTORY_FORMAT",
    "OdeSettings",
    "ComparisonSettings",
    "Scenario",
    "OdeSummary",
    "EnsembleComparisonSummary",
    "ComparisonReport",
    "load_scenario",
    "scenario_from_mapping",
    "default_scenario",
    "resolved_mapping",
    "config_digest",
    "export_trajectory",
    "import_trajectory",
    "compare_ode_agents",
    "report_mapping",
    "is_unimodal",
]

CSV_HEADER = "step,S,I,R,V,active_constraints,control_deviation"
TRAJECTORY_FORMAT = "sirswarm-trajectory"

# Default contact rate pairing the baseline simulation with beta = 0.001
# at p_infection = 1.
DEFAULT_CONTACT_RATE = 0.001
DEFAULT_RECOVERY_PROPORTIONALITY = 1.25

_SIM_FIELDS = tuple(f.name for f in dataclasses.fields(SimConfig))
SIM_FLOAT_FIELDS = frozenset(
    {
        "arena_width",
        "arena_height",
        "p_infection",
        "d_thresh",
        "d_social",
        "gamma",
        "v_max",
        "waypoint_tolerance",
        "vaccinated_fraction",
    }
)
SIM_INT_FIELDS = frozenset({"n_agents", "t_recover", "initial_infected", "t_max", "seed"})
_ODE_KEYS = frozenset(
    {
        "beta",
        "alpha",
        "contact_rate",
        "proportionality",
        "initial_s",
        "initial_i",
        "initial_r",
        "horizon",
        "dt",
    }
)
_COMPARISON_KEYS = frozenset(
    {"n_runs", "peak_rtol", "final_s_rtol", "require_extinction", "smoothing_window"}
)


@dataclass(frozen=True)
class OdeSettings:
    """Resolved reference-model configuration for one scenario."""

    params: SirParams
    initial: SirState
    horizon: int
    dt: float


@dataclass(frozen=True)
class ComparisonSettings:
    """Ensemble size and pass/fail tolerances for the comparison. The
    relative tolerances apply to |ensemble mean - reference| scaled by
    max(reference, 1)."""

    n_runs: int = 50
    peak_rtol: float = 0.25
    final_s_rtol: float = 0.25
    require_extinction: bool = True
    smoothing_window: int = 2


@dataclass(frozen=True)
class Scenario:
    sim: SimConfig
    ode: OdeSettings
    comparison: ComparisonSettings


def _require_mapping(value: Any, where: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ScenarioError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"must be a number, got {value!r}")
    return float(value)


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"must be an integer, got {value!r}")
    return value


def _as_bool(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(key, f"must be true or false, got {value!r}")
    return value


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file.

    Raises ScenarioError (with a line number when the parser provides
    one) for malformed text and ConfigError naming the offending key for
    schema violations. Missing keys take their documented defaults.
    """
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(f"could not parse {path}: {exc}", line=line) from exc
    if data is None:
        data = {}
    return scenario_from_mapping(_require_mapping(data, f"{path}: top level"))


def scenario_from_mapping(data: Mapping) -> Scenario:
    """Resolve a parsed scenario mapping into validated settings."""
    sim_overrides: dict[str, Any] = {}
    ode_block: Mapping = {}
    comparison_block: Mapping = {}
    for key, value in data.items():
        if key == "ode":
            ode_block = _require_mapping(value, "ode block")
        elif key == "comparison":
            comparison_block = _require_mapping(value, "comparison block")
        elif key in SIM_FLOAT_FIELDS:
            sim_overrides[key] = _as_float(key, value)
        elif key in SIM_INT_FIELDS:
            sim_overrides[key] = _as_int(key, value)
        elif key in _SIM_FIELDS:
            sim_overrides[key] = value
        else:
            raise ConfigError(str(key), f"unknown scenario key {key!r}")
    sim = SimConfig(**sim_overrides)
    return Scenario(
        sim=sim,
        ode=_resolve_ode(ode_block, sim),
        comparison=_resolve_comparison(comparison_block),
    )


def default_scenario(**sim_overrides: Any) -> Scenario:
    """Scenario equivalent to an empty file plus the given knobs."""
    mapping: dict[str, Any] = dict(sim_overrides)
    return scenario_from_mapping(mapping)


def _resolve_ode(block: Mapping, sim: SimConfig) -> OdeSettings:
    for key in block:
        if key not in _ODE_KEYS:
            raise ConfigError(f"ode.{key}", f"unknown scenario key {key!r} in ode block")

    contact_rate = _as_float("ode.contact_rate", block.get("contact_rate", DEFAULT_CONTACT_RATE))
    proportionality = _as_float(
        "ode.proportionality", block.get("proportionality", DEFAULT_RECOVERY_PROPORTIONALITY)
    )

    beta_raw = block.get("beta", "derived")
    if isinstance(beta_raw, str):
        if beta_raw != "derived":
            raise ConfigError("ode.beta", f"must be a number or 'derived', got {beta_raw!r}")
        beta = beta_from_contact(sim.p_infection, contact_rate)
    else:
        beta = _as_float("ode.beta", beta_raw)

    alpha_raw = block.get("alpha", "derived")
    if isinstance(alpha_raw, str):
        if alpha_raw != "derived":
            raise ConfigError("ode.alpha", f"must be a number or 'derived', got {alpha_raw!r}")
        if sim.t_recover == 0:
            raise ConfigError("ode.alpha", "cannot derive a recovery rate from t_recover = 0")
        alpha = alpha_from_recovery(sim.t_recover, proportionality)
    else:
        alpha = _as_float("ode.alpha", alpha_raw)

    vaccinated = float(sim.vaccinated_count)
    initial_s = _as_float(
        "ode.initial_s",
        block.get("initial_s", float(sim.n_agents - sim.initial_infected) - vaccinated),
    )
    initial_i = _as_float("ode.initial_i", block.get("initial_i", float(sim.initial_infected)))
    # Vaccinated agents never transmit or fall ill, so by default they
    # start in the removed compartment on the reference side.
    initial_r = _as_float("ode.initial_r", block.get("initial_r", vaccinated))
    horizon = _as_int("ode.horizon", block.get("horizon", sim.t_max))
    if horizon < 1:
        raise ConfigError("ode.horizon", f"must be >= 1, got {horizon!r}")
    dt = _as_float("ode.dt", block.get("dt", 1.0))
    if dt <= 0:
        raise ConfigError("ode.dt", f"must be > 0, got {dt!r}")

    return OdeSettings(
        params=SirParams(beta=beta, alpha=alpha),
        initial=SirState(s=initial_s, i=initial_i, r=initial_r),
        horizon=horizon,
        dt=dt,
    )


def _resolve_comparison(block: Mapping) -> ComparisonSettings:
    for key in block:
        if key not in _COMPARISON_KEYS:
            raise ConfigError(
                f"comparison.{key}", f"unknown scenario key {key!r} in comparison block"
            )
    n_runs = _as_int("comparison.n_runs", block.get("n_runs", 50))
    if n_runs < 1:
        raise ConfigError("comparison.n_runs", f"must be >= 1, got {n_runs!r}")
    peak_rtol = _as_float("comparison.peak_rtol", block.get("peak_rtol", 0.25))
    final_s_rtol = _as_float("comparison.final_s_rtol", block.get("final_s_rtol", 0.25))
    if peak_rtol < 0:
        raise ConfigError("comparison.peak_rtol", f"must be >= 0, got {peak_rtol!r}")
    if final_s_rtol < 0:
        raise ConfigError("comparison.final_s_rtol", f"must be >= 0, got {final_s_rtol!r}")
    require_extinction = _as_bool(
        "comparison.require_extinction", block.get("require_extinction", True)
    )
    smoothing_window = _as_int("comparison.smoothing_window", block.get("smoothing_window", 2))
    if smoothing_window < 0:
        raise ConfigError(
            "comparison.smoothing_window", f"must be >= 0, got {smoothing_window!r}"
        )
    return ComparisonSettings(
        n_runs=n_runs,
        peak_rtol=peak_rtol,
        final_s_rtol=final_s_rtol,
        require_extinction=require_extinction,
        smoothing_window=smoothing_window,
    )


def resolved_mapping(scenario: Scenario) -> dict[str, Any]:
    """Plain mapping mirroring the file schema with every value resolved
    to a number; loading it back yields an equal scenario."""
    out: dict[str, Any] = {name: getattr(scenario.sim, name) for name in _SIM_FIELDS}
    ode = scenario.ode
    out["ode"] = {
        "beta": ode.params.beta,
        "alpha": ode.params.alpha,
        "initial_s": ode.initial.s,
        "initial_i": ode.initial.i,
        "initial_r": ode.initial.r,
        "horizon": ode.horizon,
        "dt": ode.dt,
    }
    cmp = scenario.comparison
    out["comparison"] = {
        "n_runs": cmp.n_runs,
        "peak_rtol": cmp.peak_rtol,
        "final_s_rtol": cmp.final_s_rtol,
        "require_extinction": cmp.require_extinction,
        "smoothing_window": cmp.smoothing_window,
    }
    return out


def _canonical_json(mapping: Mapping) -> str:
    return json.dumps(mapping, sort_keys=True, separators=(",", ":"))


def config_digest(scenario: Scenario) -> str:
    """Short stable fingerprint of the resolved configuration."""
    blob = _canonical_json(resolved_mapping(scenario)).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def export_trajectory(
    trajectory: SimTrajectory,
    path: str,
    fmt: str | None = None,
    scenario: Scenario | None = None,
) -> None:
    """Write a finished trajectory to ``path`` as csv or json.

    ``fmt`` defaults to the path suffix. When no scenario is given the
    embedded configuration is rebuilt from the trajectory's SimConfig
    with default ode and comparison blocks.
    """
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"must be 'csv' or 'json', got {fmt!r}")
    if scenario is None:
        scenario = Scenario(
            sim=trajectory.config,
            ode=_resolve_ode({}, trajectory.config),
            comparison=ComparisonSettings(),
        )
    mapping = resolved_mapping(scenario)
    digest = config_digest(scenario)
    if fmt == "csv":
        _write_csv(trajectory, mapping, digest, path)
    else:
        _write_json(trajectory, mapping, digest, path)


def _write_csv(
    trajectory: SimTrajectory, mapping: Mapping, digest: str, path: str
) -> None:
    lines = [
        f"# {TRAJECTORY_FORMAT} v{__version__}",
        f"# digest: {digest}",
        f"# config: {_canonical_json(mapping)}",
        CSV_HEADER,
    ]
    for frame in trajectory.frames:
        s, i, r, v = frame.counts
        lines.append(
            f"{frame.step},{s},{i},{r},{v},"
            f"{frame.active_constraints},{frame.control_deviation!r}"
        )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def _frame_to_mapping(frame: SimFrame) -> dict[str, Any]:
    return {
        "step": frame.step,
        "positions": frame.positions.tolist(),
        "health": frame.health.tolist(),
        "counts": list(frame.counts),
        "active_constraints": frame.active_constraints,
        "control_deviation": frame.control_deviation,
        "fallback": frame.fallback,
    }


def _write_json(
    trajectory: SimTrajectory, mapping: Mapping, digest: str, path: str
) -> None:
    document = {
        "format": TRAJECTORY_FORMAT,
        "version": __version__,
        "digest": digest,
        "config": mapping,
        "frames": [_frame_to_mapping(frame) for frame in trajectory.frames],
    }
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump(document, handle, separators=(",", ":"))
        handle.write("\n")


def _frame_from_mapping(data: Mapping, where: str) -> SimFrame:
    try:
        positions = np.asarray(data["positions"], dtype=np.float64).reshape(-1, 2)
        health = np.asarray(data["health"], dtype=np.uint8)
        counts = tuple(int(c) for c in data["counts"])
        frame = SimFrame(
            step=int(data["step"]),
            positions=positions,
            health=health,
            counts=(counts[0], counts[1], counts[2], counts[3]),
            active_constraints=int(data["active_constraints"]),
            control_deviation=float(data["control_deviation"]),
            fallback=bool(data["fallback"]),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"{where}: malformed frame record: {exc}") from exc
    positions.setflags(write=False)
    health.setflags(write=False)
    return frame


def import_trajectory(path: str) -> tuple[Scenario, SimTrajectory]:
    """Read back a json artifact written by :func:`export_trajectory`."""
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"could not parse {path}: {exc}", line=exc.lineno) from exc
    if not isinstance(document, Mapping) or document.get("format") != TRAJECTORY_FORMAT:
        raise ScenarioError(f"{path}: not a {TRAJECTORY_FORMAT} artifact")
    scenario = scenario_from_mapping(_require_mapping(document.get("config"), f"{path}: config"))
    raw_frames = document.get("frames")
    if not isinstance(raw_frames, list):
        raise ScenarioError(f"{path}: frames must be a list")
    frames = tuple(
        _frame_from_mapping(_require_mapping(entry, f"{path}: frame {k}"), f"{path}: frame {k}")
        for k, entry in enumerate(raw_frames)
    )
    if not frames:
        raise ScenarioError(f"{path}: artifact holds no frames")
    trajectory = SimTrajectory(
        config=scenario.sim,
        frames=frames,
        peak_infected=max(frame.counts[1] for frame in frames),
        total_control_deviation=float(sum(frame.control_deviation for frame in frames)),
    )
    return scenario, trajectory


def is_unimodal(values: np.ndarray, smoothing: int = 0, tolerance: float = 1e-9) -> bool:
    """True when the series rises to a single maximum and falls after it.

    ``smoothing`` > 0 first applies a centered moving average of width
    2*smoothing + 1, which forgives stochastic wiggles of that scale.
    ``tolerance`` bounds how far the series may retreat from its running
    maximum on the way up, and climb back above its running minimum on
    the way down; a dip or rebound larger than that is a second mode.
    Plateaus count as monotone.
    """
    series = np.asarray(values, dtype=float)
    width = 2 * smoothing + 1
    if smoothing > 0 and series.size >= width:
        series = np.convolve(series, np.full(width, 1.0 / width), mode="valid")
    if series.size <= 2:
        return True
    top = int(np.argmax(series))
    rise = series[: top + 1]
    fall = series[top:]
    drawdown = float((np.maximum.accumulate(rise) - rise).max())
    rebound = float((fall - np.minimum.accumulate(fall)).max())
    return drawdown <= tolerance and rebound <= tolerance


@dataclass(frozen=True)
class OdeSummary:
    """Reference-side headline numbers: peak prevalence, when it occurs,
    and the susceptibles left at the end."""

    peak_infected: float
    time_of_peak: float
    final_s: float


@dataclass(frozen=True)
class EnsembleComparisonSummary:
    mean_peak_infected: float
    std_peak_infected: float
    mean_time_of_peak: float
    mean_final_s: float
    extinct_runs: int
    n_runs: int


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of one agent-vs-compartment comparison.

    ``ode`` carries the closed-form peak and final-size values (the time
    of peak comes from the integrated curve, which is the only place a
    time exists); ``integrated`` carries the same summary read directly
    off the forward-Euler trajectory at the configured dt. Relative
    errors compare the ensemble means against ``ode``.
    """

    ode: OdeSummary
    integrated: OdeSummary
    ensemble: EnsembleComparisonSummary
    peak_relative_error: float
    final_s_relative_error: float
    peak_within_tolerance: bool
    final_s_within_tolerance: bool
    all_extinct: bool
    unimodal_mean_curve: bool
    # Dip depth forgiven by the shape check: one standard error of the
    # estimated mean curve at its noisiest step.
    unimodal_tolerance: float
    passed: bool


def compare_ode_agents(scenario: Scenario) -> ComparisonReport:
    """Run the reference model and a seeded ensemble with matched
    parameters and grade the agreement against the scenario tolerances.

    Deterministic given the scenario: ensemble member seeds derive from
    the base seed.
    """
    ode = scenario.ode
    settings = scenario.comparison
    trajectory = integrate_sir(ode.initial, ode.params, ode.horizon, ode.dt)
    time_of_peak = float(trajectory.time_of_peak)
    reference = OdeSummary(
        peak_infected=analytic_peak(ode.initial, ode.params),
        time_of_peak=time_of_peak,
        final_s=final_size(ode.initial, ode.params),
    )
    integrated = OdeSummary(
        peak_infected=float(trajectory.peak_infected),
        time_of_peak=time_of_peak,
        final_s=float(trajectory.s[-1]),
    )

    summary = ensemble_run(scenario.sim, settings.n_runs)
    ensemble = EnsembleComparisonSummary(
        mean_peak_infected=float(summary.peaks.mean()),
        std_peak_infected=float(summary.peaks.std(ddof=1)) if settings.n_runs > 1 else 0.0,
        mean_time_of_peak=float(summary.peak_times.mean()),
        mean_final_s=float(summary.final_s.mean()),
        extinct_runs=int(summary.extinct.sum()),
        n_runs=settings.n_runs,
    )

    peak_error = abs(ensemble.mean_peak_infected - reference.peak_infected) / max(
        reference.peak_infected, 1.0
    )
    final_s_error = abs(ensemble.mean_final_s - reference.final_s) / max(reference.final_s, 1.0)
    peak_ok = peak_error <= settings.peak_rtol
    final_s_ok = final_s_error <= settings.final_s_rtol
    all_extinct = ensemble.extinct_runs == settings.n_runs
    # A Monte Carlo mean wiggles at the scale of its standard error, so
    # the shape check forgives dips up to that; a real second wave rises
    # far above it.
    noise = max(float(summary.std[:, 1].max()) / math.sqrt(settings.n_runs), 1e-9)
    unimodal = is_unimodal(summary.mean[:, 1], settings.smoothing_window, tolerance=noise)
    passed = (
        peak_ok and final_s_ok and unimodal and (all_extinct or not settings.require_extinction)
    )
    return ComparisonReport(
        ode=reference,
        integrated=integrated,
        ensemble=ensemble,
        peak_relative_error=peak_error,
        final_s_relative_error=final_s_error,
        peak_within_tolerance=peak_ok,
        final_s_within_tolerance=final_s_ok,
        all_extinct=all_extinct,
        unimodal_mean_curve=unimodal,
        unimodal_tolerance=noise,
        passed=passed,
    )


def report_mapping(report: ComparisonReport) -> dict[str, Any]:
    """Plain-types view of a report for serialization."""
    return {
        "ode": dataclasses.asdict(report.ode),
        "integrated": dataclasses.asdict(report.integrated),
        "ensemble": dataclasses.asdict(report.ensemble),
        "peak_relative_error": report.peak_relative_error,
        "final_s_relative_error": report.final_s_relative_error,
        "peak_within_tolerance": report.peak_within_tolerance,
        "final_s_within_tolerance": report.final_s_within_tolerance,
        "all_extinct": report.all_extinct,
        "unimodal_mean_curve": report.unimodal_mean_curve,
        "unimodal_tolerance": report.unimodal_tolerance,
        "passed": report.passed,
    }
