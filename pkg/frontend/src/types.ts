// Wire schema for the session service. Field names mirror the server
// payloads exactly; every number shown in the UI originates from one of
// these messages, never from client-side simulation.

export interface AgentMarker {
    id: number;
    x: number;
    y: number;
    state: string;
}

export interface Counts {
    s: number;
    i: number;
    r: number;
    v: number;
}

export interface FrameMessage {
    type: "frame";
    step: number;
    agents: AgentMarker[];
    counts: Counts;
    deviation: number;
}

export interface ScoreBreakdown {
    s_h: number;
    s_f: number;
    s_p: number;
    s_e: number;
    s: number;
}

export interface ScoreMessage {
    type: "score";
    breakdown: ScoreBreakdown;
}

export type SessionRunState = "configuring" | "running" | "paused" | "finished";

export interface Knobs {
    p_infection: number;
    t_recover: number;
    d_social: number;
}

export interface AckMessage {
    type: "ack";
    command: string;
    state: SessionRunState;
    knobs: Knobs;
}

export interface ErrorMessage {
    type: "error";
    command?: string;
    state?: string;
    message: string;
}

export type ServerMessage = FrameMessage | ScoreMessage | AckMessage | ErrorMessage;

// Response of POST /sessions: id plus the fully resolved config.
export interface SessionInfo {
    id: string;
    config: Record<string, number | string>;
    fps: number;
}

export const KNOB_RANGES = {
    p_infection: { min: 0, max: 1, step: 0.01 },
    t_recover: { min: 0, max: 200, step: 1 },
    d_social: { min: 0, max: 2, step: 0.05 },
} as const;

export type KnobName = keyof typeof KNOB_RANGES;

export const KNOB_NAMES: readonly KnobName[] = ["p_infection", "t_recover", "d_social"];

// Health tag colors, fixed project-wide.
export const STATE_COLORS: Record<string, string> = {
    s: "#1f77d0",
    i: "#d02f1f",
    r: "#1fd05a",
    v: "#e8d81f",
};
