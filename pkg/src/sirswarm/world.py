"""Agent-based epidemic simulation on a swarm of random-walk agents.

Agents live in a rectangular arena, wander between uniformly drawn
waypoints under a speed cap, and carry one of four health states:
susceptible, infected, recovered, vaccinated. Infection spreads on
contact onset: when a susceptible and an infectious agent first come
within d_thresh of each other, one Bernoulli(p_infection) draw decides
transmission. Infected agents recover after t_recover steps. With
d_social > 0 every step's nominal velocities are filtered through the
distancing QP of :mod:`sirswarm.safety` before being applied.

Determinism contract: every run is a pure function of (config, seed).
The generator is numpy's PCG64 seeded through SeedSequence(seed), and
draws happen in one canonical order:

  at init     placement candidates (two uniforms per attempt, agents in
              id order), then one permutation assigning infected and
              vaccinated roles, then one waypoint (two uniforms) per
              agent in id order;
  each step   waypoint renewals in agent id order, then any coincidence
              jitter angles in agent id order (only when the filter is
              on), then transmission Bernoullis in ascending (i, j)
              pair order.

Batched draws are used internally but consume the stream exactly as the
equivalent sequence of per-agent draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import ConfigError, EnsembleError, SirSwarmError
from .errors import PlacementError
from .neighbors import contact_pairs
from .safety import BarrierSpec, safe_velocities

__all__ = [
    "HealthState",
    "HEALTH_TAGS",
    "Agent",
    "SimConfig",
    "SimFrame",
    "SimTrajectory",
    "EnsembleSummary",
    "World",
    "init_world",
    "nominal_control",
    "detect_contacts",
    "apply_transmission",
    "apply_recovery",
    "step",
    "initial_frame",
    "padding_frames",
    "run",
    "ensemble_run",
]

_SEED_SPACE = 2**64


class HealthState(IntEnum):
    SUSCEPTIBLE = 0
    INFECTED = 1
    RECOVERED = 2
    VACCINATED = 3


HEALTH_TAGS = {
    HealthState.SUSCEPTIBLE: "s",
    HealthState.INFECTED: "i",
    HealthState.RECOVERED: "r",
    HealthState.VACCINATED: "v",
}


def _check_real(field: str, value: float, low: float | None = None, strict: bool = False):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(field, f"must be a finite number, got {value!r}")
    if low is not None and (value < low or (strict and value == low)):
        bound = f"> {low}" if strict else f">= {low}"
        raise ConfigError(field, f"must be {bound}, got {value!r}")


def _check_int(field: str, value: int, low: int):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(field, f"must be an integer, got {value!r}")
    if value < low:
        raise ConfigError(field, f"must be >= {low}, got {value!r}")


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one run. Defaults reproduce the baseline
    validation experiment except for seed, which callers should set."""

    n_agents: int = 100
    arena_width: float = 10.0
    arena_height: float = 10.0
    p_infection: float = 1.0
    t_recover: int = 50
    d_thresh: float = 0.2
    d_social: float = 0.0
    gamma: float = 1.0
    v_max: float = 0.1
    waypoint_tolerance: float = 0.05
    initial_infected: int = 1
    vaccinated_fraction: float = 0.0
    t_max: int = 1000
    seed: int = 0
    # How a step's control deviation aggregates over agents: the norm of
    # the stacked 2n-vector, or the sum of per-agent norms.
    deviation_norm: str = "stacked"

    def __post_init__(self) -> None:
        _check_int("n_agents", self.n_agents, 1)
        _check_real("arena_width", self.arena_width, 0.0, strict=True)
        _check_real("arena_height", self.arena_height, 0.0, strict=True)
        _check_real("p_infection", self.p_infection, 0.0)
        if self.p_infection > 1.0:
            raise ConfigError("p_infection", f"must be <= 1, got {self.p_infection!r}")
        _check_int("t_recover", self.t_recover, 0)
        _check_real("d_thresh", self.d_thresh, 0.0)
        if self.d_thresh >= min(self.arena_width, self.arena_height):
            raise ConfigError("d_thresh", "must be smaller than the arena's short side")
        _check_real("d_social", self.d_social, 0.0)
        _check_real("gamma", self.gamma, 0.0, strict=True)
        _check_real("v_max", self.v_max, 0.0, strict=True)
        _check_real("waypoint_tolerance", self.waypoint_tolerance, 0.0, strict=True)
        _check_int("initial_infected", self.initial_infected, 0)
        _check_real("vaccinated_fraction", self.vaccinated_fraction, 0.0)
        if self.vaccinated_fraction > 1.0:
            raise ConfigError(
                "vaccinated_fraction", f"must be <= 1, got {self.vaccinated_fraction!r}"
            )
        if self.initial_infected + self.vaccinated_count > self.n_agents:
            raise ConfigError(
                "initial_infected",
                "initial_infected plus vaccinated agents exceeds n_agents",
            )
        _check_int("t_max", self.t_max, 1)
        _check_int("seed", self.seed, 0)
        if self.seed >= _SEED_SPACE:
            raise ConfigError("seed", "must fit in 64 bits")
        if self.deviation_norm not in ("stacked", "per_agent"):
            raise ConfigError(
                "deviation_norm", f"must be 'stacked' or 'per_agent', got {self.deviation_norm!r}"
            )

    @property
    def vaccinated_count(self) -> int:
        return int(round(self.vaccinated_fraction * self.n_agents))


@dataclass
class Agent:
    """Snapshot view of one agent. Mutations do not write back to the
    world; :func:`nominal_control` operates on this value type."""

    id: int
    position: np.ndarray
    health: HealthState
    waypoint: np.ndarray
    last_nominal: np.ndarray
    last_applied: np.ndarray
    infected_since: int | None = None


@dataclass(frozen=True)
class SimFrame:
    """State emitted after one step: positions, health codes, compartment
    counts (S, I, R, V) and the step's filter diagnostics. Arrays are
    read-only and safe to share across threads."""

    step: int
    positions: np.ndarray
    health: np.ndarray
    counts: tuple[int, int, int, int]
    active_constraints: int
    control_deviation: float
    fallback: bool = False

    @property
    def agents(self) -> list[tuple[int, tuple[float, float], str]]:
        tags = [HEALTH_TAGS[HealthState(code)] for code in self.health.tolist()]
        return [
            (idx, (float(self.positions[idx, 0]), float(self.positions[idx, 1])), tags[idx])
            for idx in range(len(tags))
        ]


@dataclass(frozen=True)
class SimTrajectory:
    """A finished run: t_max + 1 frames (padded past extinction), the
    infection peak, and the summed control deviation."""

    config: SimConfig
    frames: tuple[SimFrame, ...]
    peak_infected: int
    total_control_deviation: float

    def counts(self) -> np.ndarray:
        """Per-frame (S, I, R, V) counts as an integer array."""
        return np.array([frame.counts for frame in self.frames], dtype=np.int64)


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-step mean and sample standard deviation of the compartment
    counts over independent seeds, plus per-run scalars used by the
    comparison harness. Columns are ordered (S, I, R, V)."""

    config: SimConfig
    n_runs: int
    mean: np.ndarray  # (t_max + 1, 4)
    std: np.ndarray  # (t_max + 1, 4)
    peaks: np.ndarray  # (n_runs,) per-run max infected
    peak_times: np.ndarray  # (n_runs,) first step attaining the peak
    final_s: np.ndarray  # (n_runs,) susceptibles in the last frame
    extinct: np.ndarray  # (n_runs,) bool, infection died out


class World:
    """Single-owner mutable simulation state. Use :func:`init_world` to
    construct one; frames it emits are immutable values."""

    def __init__(
        self,
        config: SimConfig,
        rng: np.random.Generator,
        positions: np.ndarray,
        waypoints: np.ndarray,
        health: np.ndarray,
        infected_since: np.ndarray,
    ):
        self.config = config
        self.rng = rng
        self.current_step = 0
        self.positions = positions
        self.waypoints = waypoints
        self.health = health
        self.infected_since = infected_since
        n = config.n_agents
        self.last_nominal = np.zeros((n, 2))
        self.last_applied = np.zeros((n, 2))
        self.prev_contacts: set[tuple[int, int]] = set()
        self.arena_low = np.zeros(2)
        self.arena_high = np.array([config.arena_width, config.arena_height])

    @property
    def n(self) -> int:
        return self.config.n_agents

    def counts(self) -> tuple[int, int, int, int]:
        tallies = np.bincount(self.health, minlength=4)
        return (int(tallies[0]), int(tallies[1]), int(tallies[2]), int(tallies[3]))

    def agent(self, agent_id: int) -> Agent:
        code = HealthState(int(self.health[agent_id]))
        since = int(self.infected_since[agent_id]) if code == HealthState.INFECTED else None
        return Agent(
            id=agent_id,
            position=self.positions[agent_id].copy(),
            health=code,
            waypoint=self.waypoints[agent_id].copy(),
            last_nominal=self.last_nominal[agent_id].copy(),
            last_applied=self.last_applied[agent_id].copy(),
            infected_since=since,
        )

    def agents(self) -> list[Agent]:
        return [self.agent(i) for i in range(self.n)]


def _squared_norms(vectors: np.ndarray) -> np.ndarray:
    # Explicit component form keeps the scalar and batched code paths
    # bit-identical (no BLAS reduction variance).
    return vectors[..., 0] ** 2 + vectors[..., 1] ** 2


def _cap_speed(velocities: np.ndarray, v_max: float) -> np.ndarray:
    norms_sq = _squared_norms(velocities)
    over = norms_sq > v_max * v_max
    if np.any(over):
        velocities = velocities.copy()
        velocities[over] *= (v_max / np.sqrt(norms_sq[over]))[..., None]
    return velocities


def init_world(config: SimConfig) -> World:
    """Place and tag agents from the seeded stream.

    Positions are drawn uniformly and rejection-resampled until every
    pair is at least max(d_thresh, d_social) apart, so a run starts with
    no contacts and the distancing constraints all satisfied. A budget
    of 10 * n_agents^2 candidate draws bounds the rejection loop; an
    arena too crowded for the requested separation raises PlacementError.
    Infection and vaccination roles come from one shuffle: the first
    initial_infected slots of the permutation are infected (since step
    0), the next round(vaccinated_fraction * n) are vaccinated.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_agents
    separation = max(config.d_thresh, config.d_social)
    separation_sq = separation * separation
    low = np.zeros(2)
    high = np.array([config.arena_width, config.arena_height])

    positions = np.empty((n, 2))
    placed = 0
    attempts = 0
    budget = 10 * n * n
    while placed < n:
        if attempts >= budget:
            raise PlacementError(placed, attempts)
        candidate = rng.uniform(low, high)
        attempts += 1
        if placed:
            gaps = _squared_norms(positions[:placed] - candidate)
            if gaps.min() < separation_sq:
                continue
        positions[placed] = candidate
        placed += 1

    order = rng.permutation(n)
    health = np.full(n, HealthState.SUSCEPTIBLE, dtype=np.uint8)
    infected_since = np.full(n, -1, dtype=np.int64)
    infected_ids = order[: config.initial_infected]
    vaccinated_ids = order[config.initial_infected : config.initial_infected + config.vaccinated_count]
    health[infected_ids] = HealthState.INFECTED
    infected_since[infected_ids] = 0
    health[vaccinated_ids] = HealthState.VACCINATED

    waypoints = rng.uniform(low, high, size=(n, 2))
    return World(config, rng, positions, waypoints, health, infected_since)


def nominal_control(agent: Agent, config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Waypoint-seeking velocity for one agent, capped at v_max.

    If the agent has reached its waypoint (within waypoint_tolerance) a
    fresh uniform waypoint is drawn first and written to the agent. The
    returned velocity is the unit-gain proportional term toward the
    waypoint, rescaled onto the speed cap when it exceeds it.
    """
    delta = agent.waypoint - agent.position
    tol = config.waypoint_tolerance
    if _squared_norms(delta) <= tol * tol:
        agent.waypoint = rng.uniform(
            np.zeros(2), np.array([config.arena_width, config.arena_height])
        )
        delta = agent.waypoint - agent.position
    norm_sq = _squared_norms(delta)
    if norm_sq > config.v_max * config.v_max:
        delta = delta * (config.v_max / np.sqrt(norm_sq))
    return delta


def detect_contacts(world: World) -> set[tuple[int, int]]:
    """Unordered id pairs strictly closer than d_thresh."""
    return contact_pairs(world.positions, world.config.d_thresh)


def apply_transmission(
    world: World, contacts: set[tuple[int, int]], rng: np.random.Generator
) -> list[int]:
    """Resolve transmission on contact onsets; returns newly infected ids.

    Only pairs absent from the previous step's contact set are eligible,
    so a pair staying in range draws exactly once, at onset. Eligible
    pairs are visited in ascending (i, j) order and consume one Bernoulli
    draw each, whatever p_infection is. Agents infected earlier in this
    same step have infected_since == current_step and do not transmit
    until the next one.
    """
    config = world.config
    now = world.current_step
    health = world.health
    since = world.infected_since
    infected = []
    for i, j in sorted(contacts - world.prev_contacts):
        if (
            health[i] == HealthState.INFECTED
            and since[i] < now
            and health[j] == HealthState.SUSCEPTIBLE
        ):
            target = j
        elif (
            health[j] == HealthState.INFECTED
            and since[j] < now
            and health[i] == HealthState.SUSCEPTIBLE
        ):
            target = i
        else:
            continue
        if rng.random() < config.p_infection:
            health[target] = HealthState.INFECTED
            since[target] = now
            infected.append(target)
    return infected


def apply_recovery(world: World) -> list[int]:
    """Recover agents whose infection has lasted t_recover steps.

    An agent infected during the current step is never eligible, so with
    t_recover = 0 recovery happens on the following step, after exactly
    one chance to transmit.
    """
    now = world.current_step
    eligible = (
        (world.health == HealthState.INFECTED)
        & (world.infected_since < now)
        & (now - world.infected_since >= world.config.t_recover)
    )
    ids = np.flatnonzero(eligible)
    world.health[ids] = HealthState.RECOVERED
    return [int(i) for i in ids]


def _jitter_coincident(world: World) -> None:
    """Nudge exact position duplicates apart so the QP rows are defined.

    For each coincident pair the higher id moves 1e-6 units along a
    seeded random direction, in ascending id order. Repeats in the
    (vanishingly unlikely) event a jitter lands on another duplicate.
    """
    for _ in range(8):
        equal = (world.positions[:, None, :] == world.positions[None, :, :]).all(axis=2)
        equal[np.tril_indices(world.n)] = False
        if not equal.any():
            return
        movers = sorted(set(np.nonzero(equal)[1].tolist()))
        for agent_id in movers:
            angle = world.rng.uniform(0.0, 2.0 * math.pi)
            offset = 1e-6 * np.array([math.cos(angle), math.sin(angle)])
            moved = world.positions[agent_id] + offset
            world.positions[agent_id] = np.clip(moved, world.arena_low, world.arena_high)


def step(world: World) -> SimFrame:
    """Advance the world one step and emit the resulting frame.

    Pipeline order is fixed: nominal velocities (with waypoint renewals),
    distancing filter when d_social > 0, speed cap, position integration
    with component-wise arena clamping, contact detection, transmission,
    recovery, frame emission.
    """
    config = world.config
    if world.current_step >= config.t_max:
        raise SirSwarmError("cannot step past t_max")

    delta = world.waypoints - world.positions
    tol_sq = config.waypoint_tolerance**2
    renew = _squared_norms(delta) <= tol_sq
    n_renew = int(renew.sum())
    if n_renew:
        world.waypoints[renew] = world.rng.uniform(
            world.arena_low, world.arena_high, size=(n_renew, 2)
        )
        delta = world.waypoints - world.positions
    nominal = _cap_speed(delta, config.v_max)

    if config.d_social > 0.0:
        _jitter_coincident(world)
        solution = safe_velocities(
            world.positions,
            nominal,
            BarrierSpec(d_social=config.d_social, gamma=config.gamma),
        )
        applied = _cap_speed(solution.velocities, config.v_max)
        active = solution.active_count
        fallback = solution.status == "fallback"
        gap = applied - nominal
        if config.deviation_norm == "stacked":
            deviation = float(np.sqrt(_squared_norms(gap).sum()))
        else:
            deviation = float(np.sqrt(_squared_norms(gap)).sum())
    else:
        applied = nominal
        active = 0
        fallback = False
        deviation = 0.0

    world.positions = np.clip(world.positions + applied, world.arena_low, world.arena_high)
    world.last_nominal = nominal
    world.last_applied = applied
    world.current_step += 1

    contacts = detect_contacts(world)
    apply_transmission(world, contacts, world.rng)
    apply_recovery(world)
    world.prev_contacts = contacts
    return _make_frame(world, active, deviation, fallback)


def _make_frame(
    world: World, active_constraints: int, control_deviation: float, fallback: bool
) -> SimFrame:
    positions = world.positions.copy()
    positions.setflags(write=False)
    health = world.health.copy()
    health.setflags(write=False)
    return SimFrame(
        step=world.current_step,
        positions=positions,
        health=health,
        counts=world.counts(),
        active_constraints=active_constraints,
        control_deviation=control_deviation,
        fallback=fallback,
    )


def initial_frame(world: World) -> SimFrame:
    """Step-zero snapshot emitted before any stepping."""
    return _make_frame(world, 0, 0.0, False)


def padding_frames(terminal: SimFrame, t_max: int) -> list[SimFrame]:
    """Frames extending a finished run out to step t_max.

    With nobody infected the dynamics are frozen, so the tail is the
    terminal state repeated under advancing step indices, with zero
    control deviation and no active constraints.
    """
    return [
        SimFrame(
            step=k,
            positions=terminal.positions,
            health=terminal.health,
            counts=terminal.counts,
            active_constraints=0,
            control_deviation=0.0,
            fallback=False,
        )
        for k in range(terminal.step + 1, t_max + 1)
    ]


def run(config: SimConfig) -> SimTrajectory:
    """Run one seeded simulation to t_max and collect every frame.

    Once the infected count reaches zero no later step can change any
    compartment, so the loop stops early and the remaining frames are
    copies of the terminal state (with zero deviation and advancing step
    indices), keeping the trajectory length at t_max + 1 regardless.
    """
    world = init_world(config)
    frames = [initial_frame(world)]
    while world.current_step < config.t_max and frames[-1].counts[1] > 0:
        frames.append(step(world))
    frames.extend(padding_frames(frames[-1], config.t_max))
    return SimTrajectory(
        config=config,
        frames=tuple(frames),
        peak_infected=max(frame.counts[1] for frame in frames),
        total_control_deviation=float(sum(frame.control_deviation for frame in frames)),
    )


def ensemble_run(config: SimConfig, n_runs: int) -> EnsembleSummary:
    """Aggregate compartment counts over runs seeded seed, seed+1, ...

    Returns per-step means and sample standard deviations (ddof 1, zero
    for a single run) plus per-run peak/final/extinction scalars.
    """
    _check_int("n_runs", n_runs, 1)
    horizon = config.t_max + 1
    counts = np.empty((n_runs, horizon, 4))
    for k in range(n_runs):
        member_seed = (config.seed + k) % _SEED_SPACE
        member = replace(config, seed=member_seed)
        try:
            counts[k] = run(member).counts()
        except SirSwarmError as exc:
            raise EnsembleError(member_seed, exc) from exc
    if n_runs > 1:
        std = counts.std(axis=0, ddof=1)
    else:
        std = np.zeros((horizon, 4))
    return EnsembleSummary(
        config=config,
        n_runs=n_runs,
        mean=counts.mean(axis=0),
        std=std,
        peaks=counts[:, :, 1].max(axis=1),
        peak_times=counts[:, :, 1].argmax(axis=1),
        final_s=counts[:, -1, 0],
        extinct=counts[:, -1, 1] == 0,
    )
