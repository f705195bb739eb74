// Websocket client for one session: parse server messages, hand them to
// the dispatcher in arrival order, expose a send helper for commands.

import type { ServerMessage } from "./types.js";

export interface SessionSocket {
    send(command: Record<string, unknown>): void;
    close(): void;
}

export function openSessionSocket(
    url: string,
    dispatch: (message: ServerMessage) => void,
    onclose: () => void
): SessionSocket {
    const websocket = new WebSocket(url);

    websocket.onopen = () => {
        console.log("session socket open:", url);
    };

    websocket.onerror = (event) => {
        console.error("session socket error:", event);
    };

    websocket.onclose = () => {
        console.log("session socket closed");
        onclose();
    };

    websocket.onmessage = (event) => {
        let message: ServerMessage;
        try {
            message = JSON.parse(event.data as string) as ServerMessage;
        } catch (error) {
            console.error("unparseable server message:", error);
            return;
        }
        dispatch(message);
    };

    return {
        send(command: Record<string, unknown>) {
            websocket.send(JSON.stringify(command));
        },
        close() {
            websocket.close();
        },
    };
}

export function socketUrl(serviceBase: string, sessionId: string): string {
    const base = new URL(serviceBase);
    const scheme = base.protocol === "https:" ? "wss:" : "ws:";
    return `${scheme}//${base.host}/sessions/${sessionId}/ws`;
}
