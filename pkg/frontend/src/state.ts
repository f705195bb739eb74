// UI session state and its reducer. The reducer is the single place
// server messages become visible state, so the "every displayed number
// came over the wire" rule is checkable in one spot. It is pure: tests
// feed it message lists and inspect the result.

import type {
    AckMessage,
    Counts,
    ErrorMessage,
    FrameMessage,
    Knobs,
    ScoreBreakdown,
    ServerMessage,
    SessionRunState,
} from "./types.js";
import { STATE_COLORS } from "./types.js";

export interface CountPoint extends Counts {
    step: number;
}

export interface UiSessionState {
    runState: SessionRunState;
    knobs: Knobs;
    latestFrame: FrameMessage | null;
    history: CountPoint[];
    lastScore: ScoreBreakdown | null;
    bestScores: ScoreBreakdown[];
    banner: string | null;
    toast: string | null;
}

export type UiEvent = ServerMessage | { type: "connection_lost" };

const BEST_SCORES_KEPT = 10;

export function createInitialState(knobs: Knobs): UiSessionState {
    return {
        runState: "configuring",
        knobs,
        latestFrame: null,
        history: [],
        lastScore: null,
        bestScores: [],
        banner: null,
        toast: null,
    };
}

function isFiniteNumber(value: unknown): value is number {
    return typeof value === "number" && Number.isFinite(value);
}

// A frame must be safe to render before it touches the state: bad ones
// raise the banner but never break the stream.
export function frameProblem(msg: FrameMessage): string | null {
    if (!isFiniteNumber(msg.step) || msg.step < 0) {
        return `frame has a bad step: ${String(msg.step)}`;
    }
    const counts = msg.counts as unknown;
    if (typeof counts !== "object" || counts === null) {
        return "frame has no counts";
    }
    for (const key of ["s", "i", "r", "v"] as const) {
        if (!isFiniteNumber((counts as Record<string, unknown>)[key])) {
            return `frame count '${key}' is not a number`;
        }
    }
    if (!Array.isArray(msg.agents)) {
        return "frame agents is not a list";
    }
    for (const agent of msg.agents) {
        if (!isFiniteNumber(agent?.x) || !isFiniteNumber(agent?.y)) {
            return "frame agent without a position";
        }
        if (typeof agent.state !== "string" || !(agent.state in STATE_COLORS)) {
            return `frame agent with unknown state tag ${JSON.stringify(agent?.state)}`;
        }
    }
    return null;
}

function applyFrame(state: UiSessionState, msg: FrameMessage): UiSessionState {
    const problem = frameProblem(msg);
    if (problem !== null) {
        return { ...state, banner: problem };
    }
    const point: CountPoint = { step: msg.step, ...msg.counts };
    const last = state.history[state.history.length - 1];
    // A step that does not advance means a new generation started
    // (reattach across a reset); the curves restart with it.
    const history = last !== undefined && msg.step <= last.step ? [point] : [...state.history, point];
    return { ...state, latestFrame: msg, history, banner: null };
}

function applyAck(state: UiSessionState, msg: AckMessage): UiSessionState {
    const next: UiSessionState = {
        ...state,
        runState: msg.state,
        knobs: { ...msg.knobs },
        toast: null,
    };
    if (msg.command === "reset") {
        next.latestFrame = null;
        next.history = [];
        next.lastScore = null;
    }
    return next;
}

function applyScore(state: UiSessionState, breakdown: ScoreBreakdown): UiSessionState {
    const bestScores = [...state.bestScores, breakdown]
        .sort((a, b) => b.s - a.s)
        .slice(0, BEST_SCORES_KEPT);
    return { ...state, lastScore: breakdown, bestScores, runState: "finished" };
}

function applyError(state: UiSessionState, msg: ErrorMessage): UiSessionState {
    // Rejected commands leave the state untouched; the toast tells the
    // player why and the controls re-render from the unchanged knobs.
    return { ...state, toast: msg.message };
}

export function reduce(state: UiSessionState, event: UiEvent): UiSessionState {
    switch (event.type) {
        case "frame":
            return applyFrame(state, event);
        case "ack":
            return applyAck(state, event);
        case "score":
            return applyScore(state, event.breakdown);
        case "error":
            return applyError(state, event);
        case "connection_lost":
            return { ...state, banner: "connection to the session lost" };
        default:
            return state;
    }
}

export function knobsFromConfig(config: Record<string, number | string>): Knobs {
    return {
        p_infection: Number(config.p_infection),
        t_recover: Number(config.t_recover),
        d_social: Number(config.d_social),
    };
}
