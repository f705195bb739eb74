// Arena rendering: agents as colored dots in a letterboxed viewport.
// The geometry helpers are pure so the scaling math is testable without
// a browser canvas.

import type { FrameMessage } from "./types.js";
import { STATE_COLORS } from "./types.js";

export interface ViewTransform {
    scale: number;
    offsetX: number;
    offsetY: number;
}

// Fit the arena into the canvas preserving aspect ratio, centered, so
// one arena unit is the same number of pixels in x and y.
export function fitArena(
    arenaWidth: number,
    arenaHeight: number,
    canvasWidth: number,
    canvasHeight: number
): ViewTransform {
    const scale = Math.min(canvasWidth / arenaWidth, canvasHeight / arenaHeight);
    return {
        scale,
        offsetX: (canvasWidth - arenaWidth * scale) / 2,
        offsetY: (canvasHeight - arenaHeight * scale) / 2,
    };
}

export function toCanvas(view: ViewTransform, x: number, y: number): [number, number] {
    return [view.offsetX + x * view.scale, view.offsetY + y * view.scale];
}

export function agentColor(tag: string): string {
    return STATE_COLORS[tag] ?? "#888888";
}

// The subset of the 2D context the renderer touches; tests substitute a
// recording fake.
export interface ArenaContext {
    fillStyle: string | CanvasGradient | CanvasPattern;
    strokeStyle: string | CanvasGradient | CanvasPattern;
    lineWidth: number;
    clearRect(x: number, y: number, w: number, h: number): void;
    fillRect(x: number, y: number, w: number, h: number): void;
    strokeRect(x: number, y: number, w: number, h: number): void;
    beginPath(): void;
    arc(x: number, y: number, r: number, a0: number, a1: number): void;
    fill(): void;
    stroke(): void;
}

export interface ArenaOptions {
    arenaWidth: number;
    arenaHeight: number;
    canvasWidth: number;
    canvasHeight: number;
    // Radius of the distancing keep-out ring, in arena units; 0 hides it.
    socialRing: number;
}

const AGENT_RADIUS_PX = 3.5;

export function renderArena(ctx: ArenaContext, frame: FrameMessage, opts: ArenaOptions): void {
    const view = fitArena(opts.arenaWidth, opts.arenaHeight, opts.canvasWidth, opts.canvasHeight);
    ctx.clearRect(0, 0, opts.canvasWidth, opts.canvasHeight);
    ctx.fillStyle = "#fafafa";
    const [left, top] = toCanvas(view, 0, 0);
    ctx.fillRect(left, top, opts.arenaWidth * view.scale, opts.arenaHeight * view.scale);
    ctx.strokeStyle = "#444444";
    ctx.lineWidth = 1;
    ctx.strokeRect(left, top, opts.arenaWidth * view.scale, opts.arenaHeight * view.scale);

    if (opts.socialRing > 0) {
        ctx.strokeStyle = "#bbbbbb";
        for (const agent of frame.agents) {
            const [cx, cy] = toCanvas(view, agent.x, agent.y);
            ctx.beginPath();
            ctx.arc(cx, cy, opts.socialRing * view.scale, 0, Math.PI * 2);
            ctx.stroke();
        }
    }

    for (const agent of frame.agents) {
        const [cx, cy] = toCanvas(view, agent.x, agent.y);
        ctx.fillStyle = agentColor(agent.state);
        ctx.beginPath();
        ctx.arc(cx, cy, AGENT_RADIUS_PX, 0, Math.PI * 2);
        ctx.fill();
    }
}
