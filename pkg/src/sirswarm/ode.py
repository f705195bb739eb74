"""Mean-field SIR reference curves.

The agent simulation in :mod:`sirswarm.world` is stochastic; this module
provides the deterministic compartment model it is judged against. The
model is the classic susceptible-infected-recovered system

    dS/dt = -beta * I * S
    dI/dt =  beta * I * S - alpha * I
    dR/dt =  alpha * I

integrated with a fixed-step forward Euler scheme, plus the two closed-form
checks the curves must satisfy: the peak-infection level implied by the
conserved quantity I + S - (alpha/beta) ln S, and the final-size equation
for the susceptibles left standing once the outbreak burns out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, IntegrationError

__all__ = [
    "SirParams",
    "SirState",
    "SirTrajectory",
    "sir_derivative",
    "integrate_sir",
    "beta_from_contact",
    "alpha_from_recovery",
    "analytic_peak",
    "final_size",
]


@dataclass(frozen=True)
class SirParams:
    """Transmission rate beta and recovery rate alpha, both per step."""

    beta: float
    alpha: float

    def __post_init__(self) -> None:
        for name in ("beta", "alpha"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(name, f"must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class SirState:
    """Compartment populations at one instant. Fractions are fine; the
    model never assumes integer counts."""

    s: float
    i: float
    r: float

    def __post_init__(self) -> None:
        for name in ("s", "i", "r"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(name, f"must be finite and >= 0, got {value!r}")

    @property
    def total(self) -> float:
        return self.s + self.i + self.r


@dataclass(frozen=True)
class SirTrajectory:
    """Result of :func:`integrate_sir`.

    times, s, i, r are aligned arrays including the initial state at
    index 0. ``clamped`` records whether any step had to be limited to
    keep a compartment from going negative.
    """

    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    clamped: bool

    @property
    def peak_infected(self) -> float:
        return float(self.i.max())

    @property
    def time_of_peak(self) -> float:
        return float(self.times[int(np.argmax(self.i))])

    @property
    def final_state(self) -> SirState:
        return SirState(float(self.s[-1]), float(self.i[-1]), float(self.r[-1]))


def sir_derivative(state: SirState, params: SirParams) -> tuple[float, float, float]:
    """Instantaneous rates of change (dS, dI, dR) at ``state``."""
    flow_si = params.beta * state.i * state.s
    flow_ir = params.alpha * state.i
    return (-flow_si, flow_si - flow_ir, flow_ir)


def integrate_sir(
    initial: SirState,
    params: SirParams,
    horizon: float,
    dt: float = 1.0,
) -> SirTrajectory:
    """Integrate the compartment model with forward Euler.

    Steps are taken at t = 0, dt, 2*dt, ... up to and including horizon.
    Wherever an unmodified Euler step would drive a compartment negative,
    the inter-compartment flows for that step are limited to what the
    source compartment actually holds; this keeps every compartment
    non-negative and the population total exactly conserved, and sets the
    ``clamped`` flag on the returned trajectory.

    Raises IntegrationError if the state ever turns non-finite, which can
    only happen with extreme parameter magnitudes.
    """
    if not math.isfinite(dt) or dt <= 0:
        raise ConfigError("dt", f"must be finite and > 0, got {dt!r}")
    if not math.isfinite(horizon) or horizon < 0:
        raise ConfigError("horizon", f"must be finite and >= 0, got {horizon!r}")

    n_steps = int(math.floor(horizon / dt + 1e-9))
    s = np.empty(n_steps + 1)
    i = np.empty(n_steps + 1)
    r = np.empty(n_steps + 1)
    s[0], i[0], r[0] = initial.s, initial.i, initial.r
    clamped = False

    # Overflow may surface as inf here; the finiteness check turns it
    # into a typed error instead of a numpy warning.
    with np.errstate(over="ignore"):
        for k in range(n_steps):
            flow_si = dt * params.beta * i[k] * s[k]
            flow_ir = dt * params.alpha * i[k]
            # Limit each flow to what its source holds so no compartment
            # can undershoot zero; infection feeds I before recovery
            # drains it.
            if flow_si > s[k]:
                flow_si = s[k]
                clamped = True
            if flow_ir > i[k] + flow_si:
                flow_ir = i[k] + flow_si
                clamped = True
            s[k + 1] = s[k] - flow_si
            i[k + 1] = i[k] + flow_si - flow_ir
            r[k + 1] = r[k] + flow_ir
            if not (
                math.isfinite(s[k + 1])
                and math.isfinite(i[k + 1])
                and math.isfinite(r[k + 1])
            ):
                raise IntegrationError(k + 1)

    times = np.arange(n_steps + 1, dtype=float) * dt
    return SirTrajectory(times=times, s=s, i=i, r=r, clamped=clamped)


def beta_from_contact(p_infection: float, contact_rate: float) -> float:
    """Transmission rate for a given per-contact infection probability
    and pairwise contact rate."""
    if not 0.0 <= p_infection <= 1.0:
        raise ConfigError("p_infection", f"must be in [0, 1], got {p_infection!r}")
    if not math.isfinite(contact_rate) or contact_rate < 0:
        raise ConfigError("contact_rate", f"must be finite and >= 0, got {contact_rate!r}")
    return p_infection * contact_rate


def alpha_from_recovery(t_recover: float, proportionality: float = 1.25) -> float:
    """Recovery rate equivalent to a fixed infectious period.

    The constant rescales a deterministic t_recover-step infection into
    the exponential clearing the compartment model assumes.
    """
    if not math.isfinite(t_recover) or t_recover <= 0:
        raise ConfigError("t_recover", f"must be finite and > 0, got {t_recover!r}")
    if not math.isfinite(proportionality) or proportionality <= 0:
        raise ConfigError(
            "proportionality", f"must be finite and > 0, got {proportionality!r}"
        )
    return proportionality / t_recover


def analytic_peak(initial: SirState, params: SirParams) -> float:
    """Peak infected level implied by the conserved quantity of the model.

    Along any trajectory I + S - (alpha/beta) ln S is constant, and I is
    maximal where S crosses alpha/beta. Independent of the integrator, so
    it serves as a cross-check on integrate_sir output.
    """
    if params.beta == 0:
        return initial.i
    s_star = params.alpha / params.beta
    if initial.s <= s_star or initial.i == 0:
        # Below the threshold the infected pool only decays.
        return initial.i
    return initial.i + initial.s - s_star + s_star * math.log(s_star / initial.s)


def final_size(initial: SirState, params: SirParams) -> float:
    """Susceptibles remaining after the outbreak, S_inf.

    Solves S_inf = S0 * exp(-(beta/alpha) * (N - S_inf - R0)), obtained by
    integrating dS/dR = -(beta/alpha) S and letting I -> 0. Like
    analytic_peak this bypasses the integrator entirely.
    """
    if initial.i == 0 or params.beta == 0 or initial.s == 0:
        return initial.s
    if params.alpha == 0:
        # Nobody ever recovers, so infection eats the whole pool.
        return 0.0
    ratio = params.beta / params.alpha
    n = initial.total

    def residual(s: float) -> float:
        return initial.s * math.exp(-ratio * (n - s - initial.r)) - s

    # residual(0) > 0 and residual(S0) <= 0, so one root lies between.
    return float(brentq(residual, 0.0, initial.s, xtol=1e-12, rtol=8.9e-16))
