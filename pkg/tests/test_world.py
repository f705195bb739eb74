"""Tests for the agent simulation.

The heaviest check here is a scalar reference pipeline: a from-scratch
re-implementation of init and step that draws per agent in plain loops,
detects contacts by brute force, and follows the documented draw order.
Package trajectories must match it bit for bit, which pins both the
semantics and the RNG stream layout.
"""

from __future__ import annotations

import numpy as np
import pytest

from sirswarm import (
    ConfigError,
    EnsembleError,
    HealthState,
    PlacementError,
    SimConfig,
    SirSwarmError,
    World,
    apply_recovery,
    apply_transmission,
    detect_contacts,
    ensemble_run,
    init_world,
    nominal_control,
    run,
    step,
)
from sirswarm.neighbors import contact_pairs
from sirswarm.safety import BarrierSpec, safe_velocities

S, I, R, V = (
    HealthState.SUSCEPTIBLE,
    HealthState.INFECTED,
    HealthState.RECOVERED,
    HealthState.VACCINATED,
)


def small_config(**overrides) -> SimConfig:
    base = dict(
        n_agents=12,
        arena_width=3.0,
        arena_height=3.0,
        p_infection=0.6,
        t_recover=8,
        d_thresh=0.4,
        v_max=0.25,
        waypoint_tolerance=0.05,
        t_max=40,
        seed=123,
    )
    base.update(overrides)
    return SimConfig(**base)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("n_agents", 0),
            ("n_agents", 2.5),
            ("arena_width", 0.0),
            ("arena_height", -3.0),
            ("p_infection", 1.5),
            ("p_infection", -0.1),
            ("t_recover", -1),
            ("d_thresh", -0.2),
            ("gamma", 0.0),
            ("v_max", 0.0),
            ("waypoint_tolerance", 0.0),
            ("initial_infected", -1),
            ("vaccinated_fraction", 1.2),
            ("t_max", 0),
            ("seed", -1),
            ("seed", 2**64),
            ("deviation_norm", "both"),
        ],
    )
    def test_bad_field_named(self, field: str, value) -> None:
        with pytest.raises(ConfigError) as exc:
            SimConfig(**{field: value})
        assert exc.value.field == field

    def test_d_thresh_must_fit_arena(self) -> None:
        with pytest.raises(ConfigError) as exc:
            SimConfig(arena_width=2.0, arena_height=5.0, d_thresh=2.0)
        assert exc.value.field == "d_thresh"

    def test_roles_cannot_exceed_population(self) -> None:
        with pytest.raises(ConfigError) as exc:
            SimConfig(n_agents=10, initial_infected=6, vaccinated_fraction=0.5)
        assert exc.value.field == "initial_infected"

    def test_defaults_are_valid(self) -> None:
        config = SimConfig()
        assert config.n_agents == 100
        assert config.vaccinated_count == 0


class TestInit:
    def test_baseline_counts(self) -> None:
        world = init_world(SimConfig(seed=42))
        assert world.counts() == (99, 1, 0, 0)

    def test_single_susceptible_agent(self) -> None:
        world = init_world(SimConfig(n_agents=1, initial_infected=0, seed=5))
        assert world.counts() == (1, 0, 0, 0)

    def test_bit_identical_across_calls(self) -> None:
        first = init_world(small_config())
        second = init_world(small_config())
        assert np.array_equal(first.positions, second.positions)
        assert np.array_equal(first.waypoints, second.waypoints)
        assert np.array_equal(first.health, second.health)

    def test_minimum_separation(self) -> None:
        for seed in range(5):
            config = SimConfig(n_agents=40, d_social=0.5, seed=seed)
            world = init_world(config)
            deltas = world.positions[:, None, :] - world.positions[None, :, :]
            dist = np.sqrt(deltas[..., 0] ** 2 + deltas[..., 1] ** 2)
            dist[np.diag_indices(40)] = np.inf
            assert dist.min() >= max(config.d_thresh, config.d_social)

    def test_overcrowded_arena(self) -> None:
        config = SimConfig(
            n_agents=30, arena_width=1.0, arena_height=1.0, d_thresh=0.9, d_social=0.95, seed=1
        )
        with pytest.raises(PlacementError) as exc:
            init_world(config)
        assert exc.value.attempts == 10 * 30 * 30

    def test_vaccinated_block(self) -> None:
        world = init_world(SimConfig(n_agents=10, vaccinated_fraction=0.3, seed=9))
        assert world.counts() == (6, 1, 0, 3)

    def test_positions_inside_arena(self) -> None:
        world = init_world(small_config())
        assert np.all(world.positions >= 0.0)
        assert np.all(world.positions <= [3.0, 3.0])


class TestNominalControl:
    def test_far_waypoint_hits_speed_cap(self) -> None:
        config = SimConfig(seed=0)
        world = init_world(config)
        agent = world.agent(0)
        agent.position = np.array([0.0, 0.0])
        agent.waypoint = np.array([10.0, 0.0])
        v = nominal_control(agent, config, world.rng)
        assert v == pytest.approx([0.1, 0.0], abs=1e-12)

    def test_near_waypoint_unclipped(self) -> None:
        config = SimConfig(waypoint_tolerance=0.01, seed=0)
        world = init_world(config)
        agent = world.agent(0)
        agent.position = np.array([5.0, 5.0])
        agent.waypoint = np.array([5.0, 5.05])
        v = nominal_control(agent, config, world.rng)
        assert v == pytest.approx([0.0, 0.05], abs=1e-12)

    def test_reached_waypoint_renews(self) -> None:
        config = SimConfig(seed=3)
        world = init_world(config)
        agent = world.agent(0)
        agent.position = np.array([2.0, 2.0])
        agent.waypoint = np.array([2.0, 2.0])
        v = nominal_control(agent, config, world.rng)
        assert not np.array_equal(agent.waypoint, [2.0, 2.0])
        direction = agent.waypoint - np.array([2.0, 2.0])
        scale = np.dot(v, direction) / np.dot(direction, direction)
        assert scale > 0.0  # velocity points at the fresh waypoint
        assert float(np.sqrt(v @ v)) <= config.v_max + 1e-12


class TestContacts:
    def test_pair_inside_threshold(self) -> None:
        world = init_world(SimConfig(n_agents=2, d_thresh=0.2, seed=0))
        world.positions = np.array([[1.0, 1.0], [1.19, 1.0]])
        assert detect_contacts(world) == {(0, 1)}

    def test_boundary_is_exclusive(self) -> None:
        # 0.25 and 1.25 are exact in binary, so the distance equals
        # d_thresh with no rounding and the strict inequality must fail.
        world = init_world(SimConfig(n_agents=2, d_thresh=0.25, seed=0))
        world.positions = np.array([[1.0, 1.0], [1.25, 1.0]])
        assert detect_contacts(world) == set()

    def test_single_agent(self) -> None:
        world = init_world(SimConfig(n_agents=1, initial_infected=0, seed=0))
        assert detect_contacts(world) == set()

    def test_grid_matches_brute_force(self) -> None:
        rng = np.random.default_rng(404)
        for _ in range(300):
            n = int(rng.integers(2, 51))
            span = float(rng.uniform(0.5, 10.0))
            radius = float(rng.uniform(0.05, 1.5))
            points = rng.uniform(0.0, span, size=(n, 2))
            expected = set()
            for i in range(n):
                for j in range(i + 1, n):
                    d = points[i] - points[j]
                    if d[0] ** 2 + d[1] ** 2 < radius * radius:
                        expected.add((i, j))
            assert contact_pairs(points, radius) == expected

    def test_zero_radius(self) -> None:
        points = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert contact_pairs(points, 0.0) == set()


def two_agent_world(p_infection: float, seed: int = 0, t_recover: int = 50) -> World:
    world = init_world(
        SimConfig(
            n_agents=2,
            arena_width=5.0,
            arena_height=5.0,
            p_infection=p_infection,
            t_recover=t_recover,
            initial_infected=1,
            seed=seed,
        )
    )
    world.positions = np.array([[1.0, 1.0], [1.1, 1.0]])
    world.current_step = 1  # pretend one step has elapsed so index cases transmit
    return world


class TestTransmission:
    def test_certain_transmission_on_onset(self) -> None:
        world = two_agent_world(p_infection=1.0)
        new = apply_transmission(world, detect_contacts(world), world.rng)
        assert len(new) == 1
        assert world.counts() == (0, 2, 0, 0)

    def test_vaccinated_never_infected(self) -> None:
        world = two_agent_world(p_infection=1.0)
        susceptible = int(np.flatnonzero(world.health == S)[0])
        world.health[susceptible] = V
        new = apply_transmission(world, detect_contacts(world), world.rng)
        assert new == []
        assert world.counts() == (0, 1, 0, 1)

    def test_sustained_contact_draws_once(self) -> None:
        world = two_agent_world(p_infection=0.0)
        contacts = detect_contacts(world)
        apply_transmission(world, contacts, world.rng)
        world.prev_contacts = contacts
        state_after_onset = world.rng.bit_generator.state
        # Ten more steps of the same contact: no onset, so no draws.
        for step_index in range(2, 12):
            world.current_step = step_index
            new = apply_transmission(world, contacts, world.rng)
            assert new == []
        assert world.rng.bit_generator.state == state_after_onset

    def test_onset_rate_matches_probability(self) -> None:
        infections = 0
        for seed in range(10_000):
            world = two_agent_world(p_infection=0.5, seed=seed)
            infections += len(apply_transmission(world, detect_contacts(world), world.rng))
        assert infections / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_agent_infected_this_step_does_not_transmit(self) -> None:
        world = init_world(
            SimConfig(n_agents=3, arena_width=5.0, arena_height=5.0, p_infection=1.0, seed=2)
        )
        # Chain layout: index case - middle - far, spaced so only
        # adjacent pairs are in contact. The middle agent is infected
        # during this step and must not pass it on until the next one.
        infected = int(np.flatnonzero(world.health == I)[0])
        middle, far = [a for a in range(3) if a != infected]
        world.positions[infected] = [1.0, 1.0]
        world.positions[middle] = [1.15, 1.0]
        world.positions[far] = [1.3, 1.0]
        world.current_step = 1
        new = apply_transmission(world, detect_contacts(world), world.rng)
        assert new == [middle]
        assert world.health[far] == S


class TestRecovery:
    def test_recovers_exactly_at_t_recover(self) -> None:
        world = two_agent_world(p_infection=0.0, t_recover=50)
        infected = int(np.flatnonzero(world.health == I)[0])
        world.current_step = 49
        assert apply_recovery(world) == []
        world.current_step = 50
        assert apply_recovery(world) == [infected]
        assert world.health[infected] == R

    def test_zero_recovery_window_waits_one_step(self) -> None:
        world = two_agent_world(p_infection=1.0, t_recover=0)
        world.current_step = 1
        newly = apply_transmission(world, detect_contacts(world), world.rng)
        # Both the index case and the fresh infection are present now;
        # only the index case (since step 0) recovers this step.
        assert apply_recovery(world) != []
        assert world.health[newly[0]] == I
        world.current_step = 2
        assert apply_recovery(world) == newly

    def test_recovered_is_absorbing(self) -> None:
        world = two_agent_world(p_infection=0.0)
        infected = int(np.flatnonzero(world.health == I)[0])
        world.current_step = 60
        apply_recovery(world)
        assert world.health[infected] == R
        world.current_step = 120
        assert apply_recovery(world) == []
        assert world.health[infected] == R


class TestStep:
    def test_no_infection_keeps_counts(self) -> None:
        config = small_config(initial_infected=0)
        world = init_world(config)
        before_counts = world.counts()
        before_positions = world.positions.copy()
        frame = step(world)
        assert frame.counts == before_counts
        assert not np.array_equal(world.positions, before_positions)

    def test_disabled_filter_has_zero_deviation(self) -> None:
        trajectory = run(small_config(d_social=0.0))
        assert all(frame.control_deviation == 0.0 for frame in trajectory.frames)
        assert all(frame.active_constraints == 0 for frame in trajectory.frames)

    def test_baseline_run_reaches_clean_extinction(self) -> None:
        trajectory = run(SimConfig(seed=42))
        s_end, i_end, r_end, v_end = trajectory.frames[-1].counts
        assert i_end == 0 and v_end == 0
        assert s_end + r_end == 100

    def test_step_past_horizon_rejected(self) -> None:
        config = small_config(t_max=2)
        world = init_world(config)
        step(world)
        step(world)
        with pytest.raises(SirSwarmError):
            step(world)

    def test_coincident_agents_jittered_not_fatal(self) -> None:
        config = small_config(d_social=0.3, n_agents=6)
        world = init_world(config)
        world.positions[1] = world.positions[0].copy()
        frame = step(world)
        assert frame.step == 1
        assert not np.array_equal(world.positions[0], world.positions[1])

    def test_speed_cap_and_containment(self) -> None:
        for overrides in ({}, {"d_social": 0.3, "seed": 7}, {"v_max": 0.6, "seed": 11}):
            config = small_config(**overrides)
            world = init_world(config)
            previous = world.positions.copy()
            for _ in range(config.t_max):
                step(world)
                moved = world.positions - previous
                speeds = np.sqrt(moved[:, 0] ** 2 + moved[:, 1] ** 2)
                assert speeds.max() <= config.v_max * (1 + 1e-12)
                assert np.all(world.positions >= 0.0)
                assert np.all(
                    world.positions <= [config.arena_width, config.arena_height]
                )
                previous = world.positions.copy()


class TestRun:
    def test_deterministic_trajectories(self) -> None:
        config = small_config(d_social=0.25, seed=77)
        first = run(config)
        second = run(config)
        assert len(first.frames) == len(second.frames)
        for a, b in zip(first.frames, second.frames):
            assert a.step == b.step
            assert a.counts == b.counts
            assert np.array_equal(a.positions, b.positions)
            assert np.array_equal(a.health, b.health)
            assert a.control_deviation == b.control_deviation

    def test_lone_index_case_recovers_on_schedule(self) -> None:
        config = SimConfig(p_infection=0.0, t_recover=50, seed=4)
        trajectory = run(config)
        assert trajectory.peak_infected == 1
        assert trajectory.frames[49].counts[1] == 1
        assert trajectory.frames[50].counts[1] == 0
        assert len(trajectory.frames) == config.t_max + 1
        # Padded tail: steps keep counting, state frozen, no deviation.
        for k, frame in enumerate(trajectory.frames):
            assert frame.step == k
        assert all(f.control_deviation == 0.0 for f in trajectory.frames[51:])
        assert all(f.counts == (99, 0, 1, 0) for f in trajectory.frames[51:])

    def test_conservation_and_monotonicity(self) -> None:
        rng = np.random.default_rng(50)
        for _ in range(8):
            config = small_config(
                p_infection=float(rng.uniform(0, 1)),
                t_recover=int(rng.integers(0, 12)),
                vaccinated_fraction=float(rng.uniform(0, 0.4)),
                seed=int(rng.integers(0, 1000)),
            )
            trajectory = run(config)
            counts = trajectory.counts()
            assert np.all(counts.sum(axis=1) == config.n_agents)
            s_plus_v = counts[:, 0] + counts[:, 3]
            assert np.all(np.diff(s_plus_v) <= 0)
            assert np.all(np.diff(counts[:, 2]) >= 0)

    def test_states_absorb_correctly(self) -> None:
        trajectory = run(small_config(vaccinated_fraction=0.25, seed=31))
        for earlier, later in zip(trajectory.frames, trajectory.frames[1:]):
            was, now = earlier.health, later.health
            assert np.all(now[was == R] == R)
            assert np.all(now[was == V] == V)
            assert np.all(np.isin(now[was == S], [S, I]))
            assert np.all(np.isin(now[was == I], [I, R]))

    def test_peak_and_deviation_aggregates(self) -> None:
        trajectory = run(small_config(d_social=0.3, seed=13))
        assert trajectory.peak_infected == max(f.counts[1] for f in trajectory.frames)
        assert trajectory.total_control_deviation == pytest.approx(
            sum(f.control_deviation for f in trajectory.frames), rel=1e-12
        )

    def test_deviation_conventions_ordered(self) -> None:
        stacked = run(small_config(d_social=0.35, seed=21))
        per_agent = run(small_config(d_social=0.35, seed=21, deviation_norm="per_agent"))
        # Sum of norms dominates the stacked norm; equality only if at
        # most one agent deviates at a time.
        assert per_agent.total_control_deviation >= stacked.total_control_deviation - 1e-12


class TestEnsemble:
    def test_single_run_matches_trajectory(self) -> None:
        config = small_config(seed=88)
        summary = ensemble_run(config, 1)
        trajectory = run(config)
        assert np.array_equal(summary.mean, trajectory.counts())
        assert np.all(summary.std == 0.0)
        assert summary.peaks[0] == trajectory.peak_infected

    def test_no_transmission_is_variance_free(self) -> None:
        config = SimConfig(p_infection=0.0, t_recover=30, t_max=100, seed=10)
        summary = ensemble_run(config, 8)
        assert np.all(summary.std == 0.0)
        assert np.all(summary.extinct)
        assert np.all(summary.peaks == 1)

    def test_member_failure_carries_seed(self) -> None:
        config = SimConfig(
            n_agents=40,
            arena_width=1.0,
            arena_height=1.0,
            d_thresh=0.9,
            d_social=0.95,
            seed=3,
        )
        with pytest.raises(EnsembleError) as exc:
            ensemble_run(config, 4)
        assert exc.value.seed == 3

    def test_rejects_zero_runs(self) -> None:
        with pytest.raises(ConfigError, match="n_runs"):
            ensemble_run(small_config(), 0)


class TestFrameViews:
    def test_agent_tuples(self) -> None:
        world = init_world(SimConfig(n_agents=3, vaccinated_fraction=0.34, seed=6))
        frame = step(world)
        listed = frame.agents
        assert [entry[0] for entry in listed] == [0, 1, 2]
        assert {entry[2] for entry in listed} <= {"s", "i", "r", "v"}
        assert listed[1][1] == (
            float(frame.positions[1, 0]),
            float(frame.positions[1, 1]),
        )

    def test_agent_view_reflects_infection(self) -> None:
        world = init_world(SimConfig(seed=42))
        infected = int(np.flatnonzero(world.health == I)[0])
        view = world.agent(infected)
        assert view.health == I
        assert view.infected_since == 0
        susceptible = int(np.flatnonzero(world.health == S)[0])
        assert world.agent(susceptible).infected_since is None

    def test_frames_are_immutable(self) -> None:
        world = init_world(small_config())
        frame = step(world)
        with pytest.raises(ValueError):
            frame.positions[0, 0] = 99.0


def reference_trajectory(config: SimConfig, n_steps: int):
    """Scalar re-implementation of init + step, documented draw order."""
    rng = np.random.default_rng(config.seed)
    n = config.n_agents
    low = np.zeros(2)
    high = np.array([config.arena_width, config.arena_height])
    separation = max(config.d_thresh, config.d_social)

    positions = []
    attempts = 0
    while len(positions) < n:
        assert attempts < 10 * n * n
        candidate = rng.uniform(low, high)
        attempts += 1
        ok = True
        for existing in positions:
            dx = existing[0] - candidate[0]
            dy = existing[1] - candidate[1]
            if dx * dx + dy * dy < separation * separation:
                ok = False
                break
        if ok:
            positions.append(candidate)
    positions = np.array(positions)

    order = rng.permutation(n)
    health = np.full(n, int(S), dtype=np.uint8)
    since = np.full(n, -1, dtype=np.int64)
    n_vacc = int(round(config.vaccinated_fraction * n))
    for idx in order[: config.initial_infected]:
        health[idx] = int(I)
        since[idx] = 0
    for idx in order[config.initial_infected : config.initial_infected + n_vacc]:
        health[idx] = int(V)
    waypoints = np.array([rng.uniform(low, high) for _ in range(n)])

    snapshots = [(positions.copy(), health.copy())]
    prev_contacts: set[tuple[int, int]] = set()
    for t in range(1, n_steps + 1):
        for a in range(n):
            d = waypoints[a] - positions[a]
            if d[0] ** 2 + d[1] ** 2 <= config.waypoint_tolerance**2:
                waypoints[a] = rng.uniform(low, high)
        nominal = np.empty((n, 2))
        for a in range(n):
            d = waypoints[a] - positions[a]
            norm_sq = d[0] ** 2 + d[1] ** 2
            if norm_sq > config.v_max**2:
                d = d * (config.v_max / np.sqrt(norm_sq))
            nominal[a] = d
        if config.d_social > 0.0:
            solution = safe_velocities(
                positions, nominal, BarrierSpec(config.d_social, config.gamma)
            )
            applied = solution.velocities
            for a in range(n):
                norm_sq = applied[a, 0] ** 2 + applied[a, 1] ** 2
                if norm_sq > config.v_max**2:
                    applied[a] = applied[a] * (config.v_max / np.sqrt(norm_sq))
        else:
            applied = nominal
        positions = np.clip(positions + applied, low, high)

        contacts = set()
        for i_ in range(n):
            for j_ in range(i_ + 1, n):
                dx = positions[i_, 0] - positions[j_, 0]
                dy = positions[i_, 1] - positions[j_, 1]
                if dx * dx + dy * dy < config.d_thresh**2:
                    contacts.add((i_, j_))
        for i_, j_ in sorted(contacts - prev_contacts):
            if health[i_] == int(I) and since[i_] < t and health[j_] == int(S):
                target = j_
            elif health[j_] == int(I) and since[j_] < t and health[i_] == int(S):
                target = i_
            else:
                continue
            if rng.random() < config.p_infection:
                health[target] = int(I)
                since[target] = t
        for a in range(n):
            if health[a] == int(I) and since[a] < t and t - since[a] >= config.t_recover:
                health[a] = int(R)
        prev_contacts = contacts
        snapshots.append((positions.copy(), health.copy()))
    return snapshots


class TestReferencePipeline:
    @pytest.mark.parametrize(
        "overrides",
        [
            {},
            {"p_infection": 1.0, "t_recover": 3, "seed": 9},
            {"d_social": 0.35, "gamma": 0.8, "n_agents": 10, "seed": 17},
            {"vaccinated_fraction": 0.25, "seed": 31},
        ],
    )
    def test_bit_identical_to_scalar_reference(self, overrides) -> None:
        config = small_config(**overrides)
        expected = reference_trajectory(config, config.t_max)
        world = init_world(config)
        assert np.array_equal(world.positions, expected[0][0])
        assert np.array_equal(world.health, expected[0][1])
        for t in range(1, config.t_max + 1):
            step(world)
            ref_positions, ref_health = expected[t]
            assert np.array_equal(world.positions, ref_positions), f"positions diverge at {t}"
            assert np.array_equal(world.health, ref_health), f"health diverges at {t}"
