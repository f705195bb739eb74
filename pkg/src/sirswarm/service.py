"""Live session service bridging the simulator to interactive clients.

One session wraps one world. Clients create a session over HTTP, then
attach a websocket that carries commands in and an ordered stream of
frame messages out, closed by a single score message when the run ends.
Knob changes are accepted while configuring or paused, take effect at
the next step, and are logged with the step they apply from, so a
session's (initial config, seed, knob log) fully determines its frame
stream; :func:`replay_frames` rebuilds the stream from that record.

State machine per session: configuring -> running <-> paused, any state
-> configuring via reset (which bumps the seed by one), running or
paused -> finished when the horizon is reached or the infection dies
out. On early extinction the remaining frames are flushed immediately
rather than paced, since nothing can change after them.

Frames and the score broadcast to every attached socket; command
acknowledgments and errors go only to the socket that issued the
command, interleaved in order with that socket's broadcast stream. A
socket attaching late first receives the session's full message history.
Sessions with no attached socket are reaped after a grace period.
"""

from __future__ import annotations

import asyncio
import contextlib
import dataclasses
import json
import uuid
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware

from ._version import __version__
from .errors import ConfigError
from .scenario import SIM_FLOAT_FIELDS
from .scoring import ScoreBreakdown, score_trajectory
from .world import (
    SimConfig,
    SimFrame,
    SimTrajectory,
    World,
    init_world,
    initial_frame,
    padding_frames,
    step,
)

__all__ = [
    "KNOB_FIELDS",
    "KnobEvent",
    "Session",
    "Registry",
    "create_app",
    "frame_message",
    "score_message",
    "replay_frames",
]

KNOB_FIELDS = ("p_infection", "t_recover", "d_social")

_SIM_FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SimConfig))


def frame_message(frame: SimFrame) -> dict[str, Any]:
    s, i, r, v = frame.counts
    return {
        "type": "frame",
        "step": frame.step,
        "agents": [
            {"id": idx, "x": x, "y": y, "state": tag} for idx, (x, y), tag in frame.agents
        ],
        "counts": {"s": s, "i": i, "r": r, "v": v},
        "deviation": frame.control_deviation,
    }


def score_message(breakdown: ScoreBreakdown) -> dict[str, Any]:
    return {
        "type": "score",
        "breakdown": {
            "s_h": breakdown.s_h,
            "s_f": breakdown.s_f,
            "s_p": breakdown.s_p,
            "s_e": breakdown.s_e,
            "s": breakdown.s,
        },
    }


def config_mapping(config: SimConfig) -> dict[str, Any]:
    return {name: getattr(config, name) for name in _SIM_FIELD_NAMES}


@dataclass(frozen=True)
class KnobEvent:
    """One accepted set_knobs command issued after the world existed:
    the step it landed on and the values that changed. The new values
    govern every step after ``step``. Changes made while configuring
    are not events; they fold into the generation's initial config."""

    step: int
    values: Mapping[str, Any]


@dataclass(frozen=True)
class ReplayRecord:
    """Everything needed to rebuild one generation's frame stream."""

    initial_config: SimConfig
    events: tuple[KnobEvent, ...]


class Session:
    """One world plus its subscribers. All mutation happens under
    ``lock``; the pacing loop and every command handler take it, so a
    step is atomic with respect to commands."""

    def __init__(self, session_id: str, config: SimConfig, fps: float):
        self.id = session_id
        self.config = config
        self.initial_config = config
        self.fps = fps
        self.state = "configuring"
        self.world: World | None = None
        self.frames: list[SimFrame] = []
        self.messages: list[dict[str, Any]] = []
        self.knob_events: list[KnobEvent] = []
        self.archive: list[ReplayRecord] = []
        self.score: ScoreBreakdown | None = None
        self.subscribers: dict[int, asyncio.Queue] = {}
        self.next_token = 0
        self.run_task: asyncio.Task | None = None
        self.reaper: asyncio.Task | None = None
        self.lock = asyncio.Lock()

    def replay_record(self) -> ReplayRecord:
        return ReplayRecord(self.initial_config, tuple(self.knob_events))

    def _broadcast(self, message: dict[str, Any]) -> None:
        self.messages.append(message)
        for queue in self.subscribers.values():
            queue.put_nowait(message)

    def _knobs(self) -> dict[str, Any]:
        return {name: getattr(self.config, name) for name in KNOB_FIELDS}

    def _ack(self, command: str) -> dict[str, Any]:
        return {
            "type": "ack",
            "command": command,
            "state": self.state,
            "knobs": self._knobs(),
        }

    def _illegal(self, command: str, message: str | None = None) -> dict[str, Any]:
        return {
            "type": "error",
            "command": command,
            "state": self.state,
            "message": message or f"command {command!r} is not legal in state {self.state!r}",
        }

    def _advance(self) -> bool:
        """Take one step, broadcast its frame, and finish the session if
        the run ended. Returns True when finished. Caller holds lock."""
        assert self.world is not None
        frame = step(self.world)
        self.frames.append(frame)
        self._broadcast(frame_message(frame))
        if frame.counts[1] == 0 or self.world.current_step >= self.config.t_max:
            self._finish()
            return True
        return False

    def _finish(self) -> None:
        for frame in padding_frames(self.frames[-1], self.config.t_max):
            self.frames.append(frame)
            self._broadcast(frame_message(frame))
        trajectory = SimTrajectory(
            config=self.config,
            frames=tuple(self.frames),
            peak_infected=max(frame.counts[1] for frame in self.frames),
            total_control_deviation=float(
                sum(frame.control_deviation for frame in self.frames)
            ),
        )
        self.score = score_trajectory(trajectory)
        self._broadcast(score_message(self.score))
        self.state = "finished"

    async def _stop_run_task(self) -> None:
        task = self.run_task
        self.run_task = None
        if task is not None and not task.done():
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    async def handle_command(self, raw: str) -> dict[str, Any]:
        """Apply one command message; returns the issuer-only reply."""
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            return {
                "type": "error",
                "state": self.state,
                "message": f"command is not valid JSON: {exc}",
            }
        if not isinstance(data, Mapping) or not isinstance(data.get("type"), str):
            return {
                "type": "error",
                "state": self.state,
                "message": "command must be an object with a string 'type'",
            }
        command = data["type"]
        async with self.lock:
            if command == "set_knobs":
                return self._handle_set_knobs(data)
            if command == "start":
                return self._handle_start()
            if command == "pause":
                return await self._handle_pause()
            if command == "reset":
                return await self._handle_reset()
            if command == "step":
                return self._handle_step(data)
            return self._illegal(command, f"unknown command type {command!r}")

    def _handle_set_knobs(self, data: Mapping) -> dict[str, Any]:
        if self.state not in ("configuring", "paused"):
            return self._illegal("set_knobs")
        changes: dict[str, Any] = {}
        for key, value in data.items():
            if key == "type":
                continue
            if key not in KNOB_FIELDS:
                return self._illegal("set_knobs", f"{key!r} is not a tunable knob")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return self._illegal("set_knobs", f"{key} must be a number, got {value!r}")
            changes[key] = value if key == "t_recover" else float(value)
        if "t_recover" in changes and not isinstance(changes["t_recover"], int):
            return self._illegal(
                "set_knobs", f"t_recover must be an integer, got {changes['t_recover']!r}"
            )
        if changes:
            try:
                new_config = replace(self.config, **changes)
            except ConfigError as exc:
                return self._illegal("set_knobs", str(exc))
            self.config = new_config
            if self.world is None:
                # Not an event: tuning before start is part of the
                # generation's initial configuration (it can influence
                # world initialization, e.g. the placement separation).
                self.initial_config = new_config
            else:
                self.world.config = new_config
                self.knob_events.append(
                    KnobEvent(step=self.world.current_step, values=dict(changes))
                )
        return self._ack("set_knobs")

    def _handle_start(self) -> dict[str, Any]:
        if self.state not in ("configuring", "paused"):
            return self._illegal("start")
        if self.world is None:
            self.world = init_world(self.config)
            first = initial_frame(self.world)
            self.frames.append(first)
            self._broadcast(frame_message(first))
        self.state = "running"
        self.run_task = asyncio.get_running_loop().create_task(self._run_loop())
        return self._ack("start")

    async def _handle_pause(self) -> dict[str, Any]:
        if self.state != "running":
            return self._illegal("pause")
        self.state = "paused"
        await self._stop_run_task()
        return self._ack("pause")

    async def _handle_reset(self) -> dict[str, Any]:
        await self._stop_run_task()
        if self.frames:
            self.archive.append(self.replay_record())
        self.config = replace(self.config, seed=(self.config.seed + 1) % 2**64)
        self.initial_config = self.config
        self.knob_events = []
        self.frames = []
        self.world = None
        self.score = None
        self.state = "configuring"
        return self._ack("reset")

    def _handle_step(self, data: Mapping) -> dict[str, Any]:
        if self.state != "paused":
            return self._illegal("step")
        n = data.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            return self._illegal("step", f"n must be a positive integer, got {n!r}")
        for _ in range(n):
            if self._advance():
                break
        return self._ack("step")

    async def _run_loop(self) -> None:
        interval = 1.0 / self.fps
        while True:
            await asyncio.sleep(interval)
            async with self.lock:
                if self.state != "running":
                    return
                if self._advance():
                    return


class Registry:
    """All live sessions plus the app-level limits."""

    def __init__(self, session_cap: int, default_fps: float, reattach_ttl: float):
        self.sessions: dict[str, Session] = {}
        self.session_cap = session_cap
        self.default_fps = default_fps
        self.reattach_ttl = reattach_ttl

    def arm_reaper(self, session: Session) -> None:
        self.disarm_reaper(session)
        session.reaper = asyncio.get_running_loop().create_task(self._reap_later(session))

    def disarm_reaper(self, session: Session) -> None:
        if session.reaper is not None:
            session.reaper.cancel()
            session.reaper = None

    async def _reap_later(self, session: Session) -> None:
        await asyncio.sleep(self.reattach_ttl)
        async with session.lock:
            if session.subscribers:
                return
            await session._stop_run_task()
            self.sessions.pop(session.id, None)

    async def shutdown(self) -> None:
        for session in list(self.sessions.values()):
            self.disarm_reaper(session)
            await session._stop_run_task()
        self.sessions.clear()


def _validated_overrides(body: Mapping) -> tuple[dict[str, Any], float | None]:
    overrides: dict[str, Any] = {}
    fps: float | None = None
    for key, value in body.items():
        if key == "fps":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError("fps", f"must be a positive number, got {value!r}")
            fps = float(value)
        elif key in _SIM_FIELD_NAMES:
            if key in SIM_FLOAT_FIELDS and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            overrides[key] = value
        else:
            raise ConfigError(str(key), f"unknown configuration key {key!r}")
    return overrides, fps


def create_app(
    session_cap: int = 64,
    default_fps: float = 20.0,
    reattach_ttl: float = 120.0,
) -> FastAPI:
    """Build the service. Limits are fixed per app instance; pacing can
    also be set per session at creation time."""
    registry = Registry(session_cap, default_fps, reattach_ttl)

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        await registry.shutdown()

    app = FastAPI(title="sirswarm session service", version=__version__, lifespan=lifespan)
    # Browser clients are served from wherever; there is nothing origin-
    # scoped here worth protecting.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"])
    app.state.registry = registry

    @app.get("/healthz")
    async def healthz() -> dict[str, Any]:
        return {"status": "ok", "sessions": len(registry.sessions), "version": __version__}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request) -> dict[str, Any]:
        raw = await request.body()
        if raw:
            try:
                body = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise HTTPException(
                    status_code=422, detail={"field": None, "message": f"invalid JSON: {exc}"}
                ) from exc
        else:
            body = {}
        if not isinstance(body, Mapping):
            raise HTTPException(
                status_code=422, detail={"field": None, "message": "body must be an object"}
            )
        if len(registry.sessions) >= registry.session_cap:
            raise HTTPException(
                status_code=429,
                detail={"message": f"session cap of {registry.session_cap} reached"},
            )
        try:
            overrides, fps = _validated_overrides(body)
            config = SimConfig(**overrides)
        except ConfigError as exc:
            raise HTTPException(
                status_code=422, detail={"field": exc.field, "message": str(exc)}
            ) from exc
        session = Session(uuid.uuid4().hex, config, fps or registry.default_fps)
        registry.sessions[session.id] = session
        registry.arm_reaper(session)
        return {"id": session.id, "config": config_mapping(config), "fps": session.fps}

    @app.websocket("/sessions/{session_id}/ws")
    async def session_socket(websocket: WebSocket, session_id: str) -> None:
        await websocket.accept()
        session = registry.sessions.get(session_id)
        if session is None:
            await websocket.send_json(
                {"type": "error", "message": f"unknown session {session_id!r}"}
            )
            await websocket.close(code=1008)
            return
        queue: asyncio.Queue = asyncio.Queue()
        async with session.lock:
            # Replay history and subscribe in one critical section so the
            # stream has no gap and no duplicate around the attach point.
            for message in session.messages:
                queue.put_nowait(message)
            token = session.next_token
            session.next_token += 1
            session.subscribers[token] = queue
            registry.disarm_reaper(session)
        sender = asyncio.get_running_loop().create_task(_pump(websocket, queue))
        try:
            while True:
                raw = await websocket.receive_text()
                reply = await session.handle_command(raw)
                queue.put_nowait(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            async with session.lock:
                session.subscribers.pop(token, None)
                if not session.subscribers and registry.sessions.get(session_id) is session:
                    registry.arm_reaper(session)

    return app


async def _pump(websocket: WebSocket, queue: asyncio.Queue) -> None:
    while True:
        message = await queue.get()
        await websocket.send_json(message)


def replay_frames(
    initial_config: SimConfig | ReplayRecord, events: Iterable[KnobEvent] = ()
) -> list[dict[str, Any]]:
    """Rebuild one generation's broadcast stream from its replay record.

    Walks the same step pipeline a live session uses, applying each
    logged knob change before the first step computed after it was
    issued. Returns the frame messages followed by the score message;
    a live session that ran to completion broadcasts exactly this list.
    """
    if isinstance(initial_config, ReplayRecord):
        initial_config, events = initial_config.initial_config, initial_config.events
    pending = list(events)
    config = initial_config
    world = init_world(config)
    frames = [initial_frame(world)]
    messages = [frame_message(frames[0])]
    while world.current_step < config.t_max and frames[-1].counts[1] > 0:
        while pending and pending[0].step <= world.current_step:
            config = replace(config, **dict(pending.pop(0).values))
            world.config = config
        frames.append(step(world))
        messages.append(frame_message(frames[-1]))
    for frame in padding_frames(frames[-1], config.t_max):
        frames.append(frame)
        messages.append(frame_message(frame))
    trajectory = SimTrajectory(
        config=config,
        frames=tuple(frames),
        peak_infected=max(frame.counts[1] for frame in frames),
        total_control_deviation=float(sum(frame.control_deviation for frame in frames)),
    )
    messages.append(score_message(score_trajectory(trajectory)))
    return messages
