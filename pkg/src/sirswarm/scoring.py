"""Game score for a finished run.

Players tune the three knobs (p_infection, t_recover, d_social) and are
ranked by a composite of four terms: health rewards a low infection peak
and a short recovery window, freedom rewards leaving transmission and
movement unrestricted, peak re-rewards flattening the curve, economy
rewards short recovery windows and low transmission probability. The
freedom term divides t_max by the accumulated control deviation, which
is undefined for an untouched swarm, so the quotient is capped at
FREEDOM_CAP with an epsilon guard; the cap matches the magnitude of the
other terms so a zero-restriction policy is rewarded but bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .world import SimTrajectory

__all__ = [
    "EPSILON",
    "FREEDOM_CAP",
    "ScoreInputs",
    "ScoreBreakdown",
    "compute_score",
    "control_effort",
    "score_trajectory",
]

EPSILON = 1e-9
FREEDOM_CAP = 10.0


@dataclass(frozen=True)
class ScoreInputs:
    """Everything the score depends on, extracted from a run."""

    peak_infected: int
    t_recover: int
    p_infection: float
    t_max: int
    total_control_deviation: float

    def __post_init__(self) -> None:
        if not isinstance(self.peak_infected, int) or self.peak_infected < 0:
            raise ConfigError("peak_infected", f"must be an integer >= 0, got {self.peak_infected!r}")
        if not isinstance(self.t_recover, int) or self.t_recover < 0:
            raise ConfigError("t_recover", f"must be an integer >= 0, got {self.t_recover!r}")
        if not 0.0 <= self.p_infection <= 1.0:
            raise ConfigError("p_infection", f"must be in [0, 1], got {self.p_infection!r}")
        if not isinstance(self.t_max, int) or self.t_max < 1:
            raise ConfigError("t_max", f"must be an integer >= 1, got {self.t_max!r}")
        deviation = self.total_control_deviation
        if not math.isfinite(deviation) or deviation < 0:
            raise ConfigError(
                "total_control_deviation", f"must be finite and >= 0, got {deviation!r}"
            )


@dataclass(frozen=True)
class ScoreBreakdown:
    """The four component scores and their 100-scaled total."""

    s_h: float
    s_f: float
    s_p: float
    s_e: float
    s: float


def compute_score(inputs: ScoreInputs) -> ScoreBreakdown:
    """Evaluate the composite score.

    s_h = 10/(1+peak) + 10/(1+t_recover)
    s_f = p_infection + min(t_max / max(deviation, EPSILON), FREEDOM_CAP)
    s_p = 10/(1+peak)
    s_e = 0.1*t_recover + 10*(1-p_infection) + 10/(1+peak)
    s   = 100 * (s_h + s_f + s_p + s_e)
    """
    peak_term = 10.0 / (1.0 + inputs.peak_infected)
    s_h = peak_term + 10.0 / (1.0 + inputs.t_recover)
    s_f = inputs.p_infection + min(
        inputs.t_max / max(inputs.total_control_deviation, EPSILON), FREEDOM_CAP
    )
    s_p = peak_term
    s_e = 0.1 * inputs.t_recover + 10.0 * (1.0 - inputs.p_infection) + peak_term
    return ScoreBreakdown(s_h=s_h, s_f=s_f, s_p=s_p, s_e=s_e, s=100.0 * (s_h + s_f + s_p + s_e))


def control_effort(trajectory: SimTrajectory) -> float:
    """Total control deviation over all frames of a finished run.

    Each frame's contribution is the per-step deviation recorded by the
    simulation (stacked-vector norm by default; padded terminal frames
    contribute zero).
    """
    return float(sum(frame.control_deviation for frame in trajectory.frames))


def score_trajectory(trajectory: SimTrajectory) -> ScoreBreakdown:
    """Score a finished run directly from its trajectory and config."""
    config = trajectory.config
    return compute_score(
        ScoreInputs(
            peak_infected=trajectory.peak_infected,
            t_recover=config.t_recover,
            p_infection=config.p_infection,
            t_max=config.t_max,
            total_control_deviation=control_effort(trajectory),
        )
    )
