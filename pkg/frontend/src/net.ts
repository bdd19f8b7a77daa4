// WebSocket connection with automatic reconnect. On every (re)connect the
// server answers the join with a fresh view snapshot and, when a decision
// is still pending, the current round_start, so a dropped connection in
// the middle of a round recovers without extra client logic.

export interface Connection {
  sendMove(round: number, action: "skip" | "search", cell?: [number, number]): void;
  close(): void;
}

export interface NetHandlers {
  onMessage(msg: unknown): void;
  onStatus(status: "connecting" | "open" | "closed"): void;
}

export function connect(
  baseUrl: string,
  sessionId: string,
  token: string,
  handlers: NetHandlers,
): Connection {
  let socket: WebSocket | null = null;
  let closed = false;
  let retryMs = 500;

  const wsUrl =
    baseUrl.replace(/^http/, "ws").replace(/\/$/, "") +
    `/sessions/${sessionId}/ws`;

  function open(): void {
    if (closed) return;
    handlers.onStatus("connecting");
    socket = new WebSocket(wsUrl);
    socket.onopen = () => {
      retryMs = 500;
      handlers.onStatus("open");
      socket?.send(JSON.stringify({ type: "join", session: sessionId, token }));
    };
    socket.onmessage = (event) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(event.data as string);
      } catch {
        return;
      }
      handlers.onMessage(parsed);
    };
    socket.onclose = () => {
      handlers.onStatus("closed");
      socket = null;
      if (!closed) {
        setTimeout(open, retryMs);
        retryMs = Math.min(retryMs * 2, 8000);
      }
    };
    socket.onerror = () => {
      socket?.close();
    };
  }

  open();
  return {
    sendMove(round, action, cell) {
      const message: Record<string, unknown> = { type: "move", round, action };
      if (cell) message["cell"] = cell;
      socket?.send(JSON.stringify(message));
    },
    close() {
      closed = true;
      socket?.close();
    },
  };
}
