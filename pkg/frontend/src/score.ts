// Score panel: the terminal breakdown with the formula behind each
// component, plus the session's local best-scores list.

import type { ScoreBreakdown } from "./types.js";

const COMPONENT_FORMULAS: Array<[keyof ScoreBreakdown, string, string]> = [
    ["s_h", "health", "10/(1+peak) + 10/(1+t_recover)"],
    ["s_f", "freedom", "p_infection + min(t_max/Σ‖u*−û‖, 10)"],
    ["s_p", "peak", "10/(1+peak)"],
    ["s_e", "economy", "0.1·t_recover + 10·(1−p_infection) + 10/(1+peak)"],
];

export function renderScore(
    container: HTMLElement,
    score: ScoreBreakdown | null,
    bestScores: readonly ScoreBreakdown[]
): void {
    container.replaceChildren();
    if (score === null) {
        const waiting = document.createElement("p");
        waiting.className = "muted";
        waiting.textContent = "score appears when the run finishes";
        container.append(waiting);
    } else {
        const total = document.createElement("div");
        total.className = "score-total";
        total.textContent = `s = ${score.s.toFixed(2)}`;
        container.append(total);

        const note = document.createElement("p");
        note.className = "muted";
        note.textContent = "s = 100 · (s_h + s_f + s_p + s_e)";
        container.append(note);

        const table = document.createElement("table");
        for (const [key, label, formula] of COMPONENT_FORMULAS) {
            const row = table.insertRow();
            row.insertCell().textContent = label;
            row.insertCell().textContent = score[key].toFixed(3);
            const cell = row.insertCell();
            cell.className = "muted";
            cell.textContent = formula;
        }
        container.append(table);
    }

    if (bestScores.length > 0) {
        const heading = document.createElement("h3");
        heading.textContent = "best scores";
        container.append(heading);
        const list = document.createElement("ol");
        for (const entry of bestScores) {
            const item = document.createElement("li");
            item.textContent = entry.s.toFixed(2);
            list.append(item);
        }
        container.append(list);
    }
}
