// Server message schema and the information-hygiene guard.
//
// The client accepts exactly the session server's JSON messages and nothing
// else. validateMessage throws on anything that could leak information a
// player must not have: unknown message types, unexpected fields, or a
// failed-search reveal attributed to another seat.

export type Cell = [number, number];

export interface RevealEntry {
  cell: Cell;
  color: "yellow" | "red" | "black";
  owner: number;
}

export interface ZoneEntry {
  cells: Cell[];
  owner?: number;
  own?: boolean;
  active: boolean;
}

export interface ViewMessage {
  type: "view";
  phase: string;
  game_index: number;
  games: number;
  seat: number;
  condition: string;
  round?: number;
  rounds?: number;
  payoff?: number;
  grand_total?: number;
  width?: number;
  height?: number;
  own_black?: Cell[];
  own_yellow?: Cell[];
  other_red?: Cell[];
  zones?: ZoneEntry[];
  cost?: number;
  moved?: boolean;
  grand_totals?: number[];
}

export interface RoundStartMessage {
  type: "round_start";
  round: number;
  cost: number;
  game_index: number;
}

export interface RoundResultMessage {
  type: "round_result";
  round: number;
  payoff: number;
  reveals: RevealEntry[];
  zones: ZoneEntry[];
  total: number;
}

export interface GameOverMessage {
  type: "game_over";
  totals: number[];
  game_index: number;
}

export interface SessionOverMessage {
  type: "session_over";
  grand_totals: number[];
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | ViewMessage
  | RoundStartMessage
  | RoundResultMessage
  | GameOverMessage
  | SessionOverMessage
  | ErrorMessage;

const ALLOWED_KEYS: Record<string, Set<string>> = {
  view: new Set([
    "type", "phase", "game_index", "games", "seat", "condition", "round",
    "rounds", "payoff", "grand_total", "width", "height", "own_black",
    "own_yellow", "other_red", "zones", "cost", "moved", "grand_totals",
  ]),
  round_start: new Set(["type", "round", "cost", "game_index"]),
  round_result: new Set(["type", "round", "payoff", "reveals", "zones", "total"]),
  game_over: new Set(["type", "totals", "game_index"]),
  session_over: new Set(["type", "grand_totals"]),
  error: new Set(["type", "code", "detail"]),
};

export class ProtocolError extends Error {}

function isCell(value: unknown): value is Cell {
  return (
    Array.isArray(value) &&
    value.length === 2 &&
    Number.isInteger(value[0]) &&
    Number.isInteger(value[1])
  );
}

/** Throws ProtocolError unless msg is well-formed and leaks nothing that
 * does not belong to `mySeat`. Returns the message, narrowed. */
export function validateMessage(msg: unknown, mySeat: number): ServerMessage {
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    throw new ProtocolError("message must be an object");
  }
  const record = msg as Record<string, unknown>;
  const type = record["type"];
  if (typeof type !== "string" || !(type in ALLOWED_KEYS)) {
    throw new ProtocolError(`unknown message type ${String(type)}`);
  }
  const allowed = ALLOWED_KEYS[type];
  for (const key of Object.keys(record)) {
    if (!allowed.has(key)) {
      throw new ProtocolError(`unexpected field ${key} in ${type}`);
    }
  }
  if (type === "round_result") {
    const reveals = record["reveals"];
    if (!Array.isArray(reveals)) throw new ProtocolError("reveals must be a list");
    for (const entry of reveals) {
      const reveal = entry as Record<string, unknown>;
      if (!isCell(reveal["cell"])) throw new ProtocolError("reveal without cell");
      const color = reveal["color"];
      if (color !== "yellow" && color !== "red" && color !== "black") {
        throw new ProtocolError(`bad reveal color ${String(color)}`);
      }
      // the hygiene core: a black cell is a failed search, and the only
      // failed searches a client may ever see are its own
      if (color === "black" && reveal["owner"] !== mySeat) {
        throw new ProtocolError("received another seat's failed search");
      }
    }
    const zones = record["zones"];
    if (!Array.isArray(zones)) throw new ProtocolError("zones must be a list");
  }
  if (type === "view") {
    for (const key of ["own_black", "own_yellow", "other_red"] as const) {
      const cells = record[key];
      if (cells !== undefined) {
        if (!Array.isArray(cells) || !cells.every(isCell)) {
          throw new ProtocolError(`${key} must be a list of cells`);
        }
      }
    }
  }
  return record as unknown as ServerMessage;
}
