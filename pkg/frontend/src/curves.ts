// Live S/I/R/V curves. Polyline geometry is computed by a pure helper
// so the "curves equal the received counts point for point" rule has a
// direct test.

import type { CountPoint } from "./state.js";
import { STATE_COLORS } from "./types.js";

export type SeriesKey = "s" | "i" | "r" | "v";

export const SERIES_KEYS: readonly SeriesKey[] = ["s", "i", "r", "v"];

export interface CurveLayout {
    width: number;
    height: number;
    tMax: number;
    nAgents: number;
    padding: number;
}

export function seriesPolyline(
    history: readonly CountPoint[],
    key: SeriesKey,
    layout: CurveLayout
): Array<[number, number]> {
    const plotW = layout.width - 2 * layout.padding;
    const plotH = layout.height - 2 * layout.padding;
    const xOf = (step: number) => layout.padding + (step / Math.max(layout.tMax, 1)) * plotW;
    const yOf = (count: number) =>
        layout.padding + (1 - count / Math.max(layout.nAgents, 1)) * plotH;
    return history.map((point) => [xOf(point.step), yOf(point[key])]);
}

export interface CurvesContext {
    strokeStyle: string | CanvasGradient | CanvasPattern;
    fillStyle: string | CanvasGradient | CanvasPattern;
    lineWidth: number;
    clearRect(x: number, y: number, w: number, h: number): void;
    strokeRect(x: number, y: number, w: number, h: number): void;
    beginPath(): void;
    moveTo(x: number, y: number): void;
    lineTo(x: number, y: number): void;
    stroke(): void;
}

export function renderCurves(
    ctx: CurvesContext,
    history: readonly CountPoint[],
    layout: CurveLayout
): void {
    ctx.clearRect(0, 0, layout.width, layout.height);
    ctx.strokeStyle = "#444444";
    ctx.lineWidth = 1;
    ctx.strokeRect(
        layout.padding,
        layout.padding,
        layout.width - 2 * layout.padding,
        layout.height - 2 * layout.padding
    );
    if (history.length === 0) {
        return;
    }
    for (const key of SERIES_KEYS) {
        const points = seriesPolyline(history, key, layout);
        ctx.strokeStyle = STATE_COLORS[key] ?? "#888888";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        points.forEach(([x, y], index) => {
            if (index === 0) {
                ctx.moveTo(x, y);
            } else {
                ctx.lineTo(x, y);
            }
        });
        ctx.stroke();
    }
}
