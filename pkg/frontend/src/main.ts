// Control room bootstrap: create a session over HTTP, attach to its
// socket, and keep the DOM in sync with the reducer state.

import { renderArena } from "./arena.js";
import { createButton, createSlider, type ButtonHandle, type SliderHandle } from "./controls.js";
import { renderCurves } from "./curves.js";
import { renderScore } from "./score.js";
import { openSessionSocket, socketUrl, type SessionSocket } from "./socket.js";
import {
    createInitialState,
    knobsFromConfig,
    reduce,
    type UiEvent,
    type UiSessionState,
} from "./state.js";
import { KNOB_RANGES, type KnobName, type SessionInfo } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (node === null) {
        throw new Error(`missing element #${id}`);
    }
    return node as T;
}

const serviceInput = el<HTMLInputElement>("service-url");
const sessionButton = el<HTMLButtonElement>("new-session");
const sessionLabel = el<HTMLElement>("session-label");
const statusLabel = el<HTMLElement>("status-label");
const bannerBox = el<HTMLElement>("banner");
const toastBox = el<HTMLElement>("toast");
const knobPanel = el<HTMLElement>("knob-panel");
const runPanel = el<HTMLElement>("run-panel");
const ringToggle = el<HTMLInputElement>("ring-toggle");
const arenaCanvas = el<HTMLCanvasElement>("arena");
const curvesCanvas = el<HTMLCanvasElement>("curves");
const scoreBox = el<HTMLElement>("score-panel");

let state: UiSessionState | null = null;
let socket: SessionSocket | null = null;
let session: SessionInfo | null = null;
let renderQueued = false;

function dispatch(event: UiEvent): void {
    if (state === null) {
        return;
    }
    state = reduce(state, event);
    if (!renderQueued) {
        renderQueued = true;
        requestAnimationFrame(() => {
            renderQueued = false;
            render();
        });
    }
}

const sliders = {} as Record<KnobName, SliderHandle>;
const knobFormats: Record<KnobName, (value: number) => string> = {
    p_infection: (value) => value.toFixed(2),
    t_recover: (value) => `${value} steps`,
    d_social: (value) => `${value.toFixed(2)} units`,
};

for (const name of Object.keys(KNOB_RANGES) as KnobName[]) {
    const range = KNOB_RANGES[name];
    sliders[name] = createSlider({
        label: name,
        min: range.min,
        max: range.max,
        step: range.step,
        value: range.min,
        format: knobFormats[name],
        oncommit: (value) => {
            // One commit, one message; the ack (or rejection) that comes
            // back is what actually moves the stored knob value.
            socket?.send({ type: "set_knobs", [name]: value });
        },
    });
    sliders[name].setEnabled(false);
    knobPanel.append(sliders[name].root);
}

const buttons: Record<string, ButtonHandle> = {
    start: createButton("start", () => socket?.send({ type: "start" })),
    pause: createButton("pause", () => socket?.send({ type: "pause" })),
    step: createButton("step 1", () => socket?.send({ type: "step", n: 1 })),
    reset: createButton("reset", () => socket?.send({ type: "reset" })),
};
for (const handle of Object.values(buttons)) {
    handle.setEnabled(false);
    runPanel.append(handle.root);
}

ringToggle.addEventListener("change", () => render());

function render(): void {
    if (state === null || session === null) {
        return;
    }
    const knobsEditable = state.runState === "configuring" || state.runState === "paused";
    for (const name of Object.keys(sliders) as KnobName[]) {
        sliders[name].setValue(state.knobs[name]);
        sliders[name].setEnabled(knobsEditable);
    }
    buttons.start?.setEnabled(knobsEditable);
    buttons.pause?.setEnabled(state.runState === "running");
    buttons.step?.setEnabled(state.runState === "paused");
    buttons.reset?.setEnabled(true);

    const step = state.latestFrame?.step;
    const counts = state.latestFrame?.counts;
    statusLabel.textContent =
        counts === undefined
            ? state.runState
            : `${state.runState} | step ${step} | S ${counts.s} I ${counts.i} R ${counts.r} V ${counts.v}`;

    bannerBox.textContent = state.banner ?? "";
    bannerBox.hidden = state.banner === null;
    toastBox.textContent = state.toast ?? "";
    toastBox.hidden = state.toast === null;

    const arenaCtx = arenaCanvas.getContext("2d");
    if (arenaCtx !== null && state.latestFrame !== null) {
        renderArena(arenaCtx, state.latestFrame, {
            arenaWidth: Number(session.config.arena_width),
            arenaHeight: Number(session.config.arena_height),
            canvasWidth: arenaCanvas.width,
            canvasHeight: arenaCanvas.height,
            socialRing: ringToggle.checked ? state.knobs.d_social : 0,
        });
    }

    const curvesCtx = curvesCanvas.getContext("2d");
    if (curvesCtx !== null) {
        renderCurves(curvesCtx, state.history, {
            width: curvesCanvas.width,
            height: curvesCanvas.height,
            tMax: Number(session.config.t_max),
            nAgents: Number(session.config.n_agents),
            padding: 24,
        });
    }

    renderScore(scoreBox, state.lastScore, state.bestScores);
}

async function newSession(): Promise<void> {
    socket?.close();
    const base = serviceInput.value.trim().replace(/\/+$/, "");
    sessionLabel.textContent = "creating session…";
    let info: SessionInfo;
    try {
        const response = await fetch(`${base}/sessions`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({}),
        });
        if (!response.ok) {
            throw new Error(`service answered ${response.status}`);
        }
        info = (await response.json()) as SessionInfo;
    } catch (error) {
        sessionLabel.textContent = `session creation failed: ${String(error)}`;
        return;
    }
    session = info;
    state = createInitialState(knobsFromConfig(info.config));
    sessionLabel.textContent = `session ${info.id.slice(0, 8)} | ${info.config.n_agents} agents, ` +
        `${info.config.arena_width}×${info.config.arena_height} arena, seed ${info.config.seed}`;
    socket = openSessionSocket(
        socketUrl(base, info.id),
        (message) => dispatch(message),
        () => dispatch({ type: "connection_lost" })
    );
    render();
}

sessionButton.addEventListener("click", () => {
    void newSession();
});
