"""Live session service: humans and bots playing the game over HTTP/WebSocket.

A session seats n players (mix of humans and threshold bots), plays the
standard four games of fifty rounds with the same group, and persists an
append-only decision log in the engine's CSV format. Moves are held until
every seat has committed, then the round resolves atomically and every seat
receives its own tailored result: public reveals, zone outlines, its own
payoff, and its own failed search only. Nothing a player could not see in
the lab ever crosses the wire.

Message schema (JSON, `type` field):
  client -> server: join {session, token}
                    move {round, action: "skip"|"search", cell: [col,row]}
  server -> client: round_start {round, cost, game_index}
                    round_result {round, payoff, reveals, zones, total}
                    game_over {totals, game_index}
                    session_over {grand_totals}
                    error {code, detail}

HTTP: POST /sessions, GET /sessions/{id}/view, POST /sessions/{id}/moves,
GET /sessions/{id}/log (CSV), GET /health.
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import anyio
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect

from .agents import Strategy, ThresholdAgent
from .engine import (
    Condition,
    GameConfig,
    GameState,
    Move,
    RejectedMoveError,
    _record_to_row,
    LOG_COLUMNS,
    draw_costs,
    is_legal,
    new_game,
    player_view,
    resolve_round,
)
from .hexmap import cell_coord, generate_map
from .rng import child_seed

LOBBY = "lobby"
AWAITING = "awaiting_moves"
RESOLVED = "resolved"
FINISHED = "finished"

DEFAULT_GAMES = 4


@dataclass
class Seat:
    index: int
    kind: str  # "human" | "bot"
    token: Optional[str] = None
    strategy: Optional[Strategy] = None
    agent: Optional[ThresholdAgent] = None
    joined: bool = False
    outboxes: list = field(default_factory=list)


class SessionError(Exception):
    def __init__(self, code: str, detail: str, status: int = 400):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.status = status


class Session:
    """One experiment session: a single logical actor, all mutations behind
    one lock; distinct sessions are fully independent."""

    def __init__(self, sid: str, condition: Condition, seat_plan: list[dict],
                 seed: int, games: int, rounds: int, log_dir: Path,
                 timeout_s: Optional[float] = None):
        self.id = sid
        self.condition = condition
        self.seed = seed
        self.games = games
        self.rounds = rounds
        self.lock = threading.RLock()
        self.phase = LOBBY
        self.game_index = 0
        self.state: Optional[GameState] = None
        self.costs: Optional[list[int]] = None
        self.pending: dict[int, Move] = {}
        self.grand_totals = [0] * len(seat_plan)
        self.timeout_s = timeout_s
        self._timer: Optional[threading.Timer] = None
        self.log_path = log_dir / f"{sid}.csv"
        self.log_path.write_text(",".join(LOG_COLUMNS) + "\n")
        self._game_logged = 0  # rows of the current game already on disk

        self.seats: list[Seat] = []
        for i, plan in enumerate(seat_plan):
            kind = plan.get("type")
            if kind == "human":
                self.seats.append(Seat(i, "human", token=secrets.token_hex(12)))
            elif kind == "bot":
                strategy = Strategy(
                    float(plan.get("initial_threshold", 20)),
                    float(plan.get("sequential_threshold", 20)),
                )
                self.seats.append(Seat(i, "bot", strategy=strategy, joined=True))
            else:
                raise SessionError("bad_seat", f"seat {i}: unknown type {kind!r}")
        if not any(True for s in self.seats):
            raise SessionError("bad_seat", "empty seat plan")

        manifest = {
            "session": sid,
            "condition": condition.value,
            "seed": seed,
            "games": games,
            "rounds": rounds,
            "seats": [s.kind for s in self.seats],
        }
        (log_dir / f"{sid}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # -- seat lookup -------------------------------------------------------

    def seat_by_token(self, token: str) -> Seat:
        for seat in self.seats:
            if seat.kind == "human" and seat.token == token:
                return seat
        raise SessionError("auth", "unknown token", status=401)

    # -- lifecycle ---------------------------------------------------------

    def mark_joined(self, seat: Seat) -> None:
        with self.lock:
            seat.joined = True
            if self.phase == LOBBY and all(s.joined for s in self.seats):
                self._start_next_game()
                self._drain_bot_rounds()

    def _start_next_game(self) -> None:
        self.game_index += 1
        game_seed = child_seed(self.seed, "game", self.game_index)
        tmap = generate_map(child_seed(self.seed, "map", self.game_index))
        config = GameConfig(
            condition=self.condition,
            n_players=len(self.seats),
            rounds=self.rounds,
            seed=game_seed,
            game_index=self.game_index,
        )
        self.state = new_game(config, tmap)
        self._game_logged = 0
        for seat in self.seats:
            if seat.kind == "bot":
                seat.agent = ThresholdAgent(seat.strategy, seed=seat.index)
                seat.agent.begin(config, tmap, seat.index)
        self._begin_round()

    def _begin_round(self) -> None:
        self.costs = draw_costs(self.state)
        self.pending = {}
        self.phase = AWAITING
        for seat in self.seats:
            self._push(
                seat,
                {
                    "type": "round_start",
                    "round": self.state.round_index + 1,
                    "cost": self.costs[seat.index],
                    "game_index": self.game_index,
                },
            )
        for seat in self.seats:
            if seat.kind == "bot":
                self.pending[seat.index] = seat.agent.decide(self.costs[seat.index])
        if self.timeout_s:
            self._timer = threading.Timer(self.timeout_s, self._timeout_skip)
            self._timer.daemon = True
            self._timer.start()

    def _timeout_skip(self) -> None:
        with self.lock:
            if self.phase != AWAITING:
                return
            for seat in self.seats:
                if seat.index not in self.pending:
                    self.pending[seat.index] = Move.skip()
            self._resolve_if_complete()
            self._drain_bot_rounds()

    def _drain_bot_rounds(self) -> None:
        # bot-only sessions advance without external input
        while self.phase == AWAITING and len(self.pending) == len(self.seats):
            self._resolve()

    def submit(self, seat: Seat, round_no: int, action: str,
               cell: Optional[list] = None) -> None:
        with self.lock:
            if self.phase == FINISHED:
                raise SessionError("finished", "session is over", status=409)
            if self.phase != AWAITING:
                raise SessionError("phase", f"not accepting moves in phase {self.phase}", status=409)
            current = self.state.round_index + 1
            if round_no != current:
                raise SessionError(
                    "out_of_sync", f"move for round {round_no}, current round is {current}",
                    status=409,
                )
            if seat.index in self.pending:
                raise SessionError("duplicate", "move already submitted for this round", status=409)
            if action == "skip":
                move = Move.skip()
            elif action == "search":
                if (
                    not isinstance(cell, (list, tuple))
                    or len(cell) != 2
                    or not all(isinstance(v, int) for v in cell)
                ):
                    raise SessionError("bad_cell", "search needs cell [col,row]")
                col, row = cell
                if not (0 <= col < self.state.map.width and 0 <= row < self.state.map.height):
                    raise SessionError("bad_cell", f"cell [{col},{row}] out of bounds")
                idx = row * self.state.map.width + col
                if not is_legal(self.state, seat.index, idx):
                    raise SessionError(
                        "illegal_cell", f"cell [{col},{row}] is not selectable", status=409
                    )
                move = Move.search(idx)
            else:
                raise SessionError("bad_action", f"unknown action {action!r}")
            self.pending[seat.index] = move
            self._resolve_if_complete()
            self._drain_bot_rounds()

    def _resolve_if_complete(self) -> None:
        if len(self.pending) == len(self.seats):
            self._resolve()

    def _resolve(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        state = self.state
        moves = [self.pending[i] for i in range(len(self.seats))]
        try:
            result = resolve_round(state, moves)
        except RejectedMoveError as exc:
            # validated at submit time; a race here means a bug upstream
            raise SessionError("illegal_cell", str(exc), status=500) from exc
        self._append_log(state)
        width = state.map.width
        for seat in self.seats:
            p = seat.index
            b = state.board_index(p)
            reveals = []
            for cell, searchers in result.reveals.get(b, ()):
                reveals.append(
                    {
                        "cell": list(cell_coord(cell, width)),
                        "color": "yellow" if p in searchers else "red",
                        "owner": searchers[0],
                    }
                )
            if result.outcomes[p] == "fail":
                reveals.append(
                    {
                        "cell": list(cell_coord(moves[p].cell, width)),
                        "color": "black",
                        "owner": p,
                    }
                )
            board = state.board_of(p)
            zones = [
                {
                    "cells": [list(cell_coord(c, width)) for c in sorted(z.cells)],
                    "owner": z.owner,
                    "active": z.active,
                }
                for z in board.zones.values()
                if z.active
            ]
            self._push(
                seat,
                {
                    "type": "round_result",
                    "round": result.round,
                    "payoff": _as_number(result.net[p]),
                    "reveals": reveals,
                    "zones": zones,
                    "total": _as_number(state.payoffs[p]),
                },
            )
            if seat.kind == "bot":
                own_fail = (
                    moves[p].cell
                    if moves[p].action == "search" and result.outcomes[p] == "fail"
                    else None
                )
                seat.agent.observe(
                    result.reveals.get(b, ()),
                    own_fail,
                    [(c, o) for bb, c, o in result.zones_opened if bb == b],
                    [c for bb, c in result.zones_closed if bb == b],
                )

        if state.over:
            totals = [_as_number(v) for v in state.payoffs]
            for i, v in enumerate(state.payoffs):
                self.grand_totals[i] = self.grand_totals[i] + v
            for seat in self.seats:
                self._push(
                    seat,
                    {"type": "game_over", "totals": totals, "game_index": self.game_index},
                )
            if self.game_index >= self.games:
                self.phase = FINISHED
                grand = [_as_number(v) for v in self.grand_totals]
                for seat in self.seats:
                    self._push(seat, {"type": "session_over", "grand_totals": grand})
            else:
                self.phase = RESOLVED
                self._start_next_game()
        else:
            self._begin_round()

    def _append_log(self, state: GameState) -> None:
        rows = state.records[self._game_logged:]
        with open(self.log_path, "a", newline="") as fh:
            for rec in rows:
                fh.write(",".join(_record_to_row(rec)) + "\n")
        self._game_logged = len(state.records)

    # -- messaging ---------------------------------------------------------

    def _push(self, seat: Seat, message: dict) -> None:
        for box in list(seat.outboxes):
            box.put(message)

    def attach(self, seat: Seat, box) -> None:
        with self.lock:
            seat.outboxes.append(box)

    def detach(self, seat: Seat, box) -> None:
        with self.lock:
            if box in seat.outboxes:
                seat.outboxes.remove(box)

    # -- views ---------------------------------------------------------------

    def view_payload(self, seat: Seat) -> dict:
        with self.lock:
            payload = {
                "phase": self.phase,
                "game_index": self.game_index,
                "games": self.games,
                "seat": seat.index,
                "condition": self.condition.value,
            }
            if self.state is not None:
                view = player_view(self.state, seat.index)
                payload.update(
                    {
                        "round": view.round + 1 if self.phase == AWAITING else view.round,
                        "rounds": view.rounds,
                        "payoff": _as_number(view.payoff),
                        "grand_total": _as_number(self.grand_totals[seat.index]),
                        "width": view.width,
                        "height": view.height,
                        "own_black": _cells(view.own_black, view.width),
                        "own_yellow": _cells(view.own_yellow, view.width),
                        "other_red": _cells(view.other_red, view.width),
                        "zones": [
                            {
                                "cells": _cells(z["cells"], view.width),
                                "own": z["own"],
                                "active": z["active"],
                            }
                            for z in view.zones
                        ],
                    }
                )
                if self.phase == AWAITING:
                    payload["cost"] = self.costs[seat.index]
                    payload["moved"] = seat.index in self.pending
            if self.phase == FINISHED:
                payload["grand_totals"] = [_as_number(v) for v in self.grand_totals]
            return payload


def _cells(idxs, width) -> list[list[int]]:
    return [list(cell_coord(i, width)) for i in sorted(idxs)]


def _as_number(value):
    return value if isinstance(value, int) else float(value)


# -- the FastAPI app -------------------------------------------------------------


def create_app(log_dir: str = "sessions", static_dir: Optional[str] = None,
               seed: int = 0) -> FastAPI:
    app = FastAPI(title="treasurehunt session server")
    sessions: dict[str, Session] = {}
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)
    counter = {"n": 0}

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(404, detail="no such session")
        return session

    @app.get("/health")
    def health():
        return {"ok": True, "sessions": len(sessions)}

    @app.post("/sessions")
    def create_session(body: dict):
        try:
            condition = Condition(body.get("condition", "protection"))
        except ValueError:
            raise HTTPException(400, detail=f"unknown condition {body.get('condition')!r}")
        seats = body.get("seats")
        if not isinstance(seats, list) or not seats:
            raise HTTPException(400, detail="seats must be a non-empty list")
        counter["n"] += 1
        sid = f"s{counter['n']:04d}-{secrets.token_hex(4)}"
        session_seed = body.get("seed")
        if session_seed is None:
            session_seed = child_seed(seed, "session", sid)
        try:
            session = Session(
                sid,
                condition,
                seats,
                seed=int(session_seed),
                games=int(body.get("games", DEFAULT_GAMES)),
                rounds=int(body.get("rounds", 50)),
                log_dir=log_path,
                timeout_s=body.get("timeout_s"),
            )
        except SessionError as exc:
            raise HTTPException(exc.status, detail=exc.detail)
        except ValueError as exc:
            raise HTTPException(400, detail=str(exc))
        sessions[sid] = session
        if all(s.joined for s in session.seats):  # bot-only: plays itself out
            session.mark_joined(session.seats[0])
        return {
            "session_id": sid,
            "phase": session.phase,
            "join_tokens": {
                str(s.index): s.token for s in session.seats if s.kind == "human"
            },
        }

    @app.get("/sessions/{sid}/view")
    def session_view(sid: str, token: str = Query(...)):
        session = get_session(sid)
        try:
            seat = session.seat_by_token(token)
        except SessionError as exc:
            raise HTTPException(exc.status, detail=exc.detail)
        if not seat.joined:
            session.mark_joined(seat)
        return session.view_payload(seat)

    @app.post("/sessions/{sid}/moves")
    def submit_move(sid: str, body: dict):
        session = get_session(sid)
        try:
            seat = session.seat_by_token(str(body.get("token", "")))
            if not seat.joined:
                session.mark_joined(seat)
            session.submit(
                seat,
                int(body.get("round", -1)),
                str(body.get("action", "")),
                body.get("cell"),
            )
        except SessionError as exc:
            raise HTTPException(exc.status, detail={"code": exc.code, "detail": exc.detail})
        return {"ok": True, "round": body.get("round")}

    @app.get("/sessions/{sid}/log")
    def download_log(sid: str):
        from fastapi.responses import PlainTextResponse

        session = get_session(sid)
        return PlainTextResponse(
            session.log_path.read_text(), media_type="text/csv"
        )

    @app.websocket("/sessions/{sid}/ws")
    async def websocket_endpoint(websocket: WebSocket, sid: str):
        await websocket.accept()
        session = sessions.get(sid)
        if session is None:
            await websocket.send_json(
                {"type": "error", "code": "no_session", "detail": "no such session"}
            )
            await websocket.close()
            return
        try:
            first = await websocket.receive_json()
        except WebSocketDisconnect:
            return
        if first.get("type") != "join":
            await websocket.send_json(
                {"type": "error", "code": "protocol", "detail": "first message must be join"}
            )
            await websocket.close()
            return
        try:
            seat = session.seat_by_token(str(first.get("token", "")))
        except SessionError as exc:
            await websocket.send_json(
                {"type": "error", "code": exc.code, "detail": exc.detail}
            )
            await websocket.close()
            return

        box: queue.Queue = queue.Queue()
        session.mark_joined(seat)  # may start the game; box not listening yet
        with session.lock:
            # snapshot and attach atomically so the client sees the current
            # round exactly once, whether it was broadcast or recovered here
            view_message = {"type": "view", **session.view_payload(seat)}
            start_message = None
            if session.phase == AWAITING and seat.index not in session.pending:
                start_message = {
                    "type": "round_start",
                    "round": session.state.round_index + 1,
                    "cost": session.costs[seat.index],
                    "game_index": session.game_index,
                }
            seat.outboxes.append(box)
        await websocket.send_json(view_message)
        if start_message is not None:
            await websocket.send_json(start_message)

        async def writer():
            while True:
                try:
                    item = await anyio.to_thread.run_sync(
                        lambda: box.get(timeout=0.25)
                    )
                except queue.Empty:
                    continue
                if item is None:
                    return
                await websocket.send_json(item)

        async def reader():
            while True:
                msg = await websocket.receive_json()
                if msg.get("type") != "move":
                    await websocket.send_json(
                        {"type": "error", "code": "protocol", "detail": "expected move"}
                    )
                    continue
                try:
                    session.submit(
                        seat,
                        int(msg.get("round", -1)),
                        str(msg.get("action", "")),
                        msg.get("cell"),
                    )
                except SessionError as exc:
                    await websocket.send_json(
                        {"type": "error", "code": exc.code, "detail": exc.detail}
                    )

        try:
            async with anyio.create_task_group() as tg:

                async def run_writer():
                    await writer()
                    tg.cancel_scope.cancel()

                async def run_reader():
                    try:
                        await reader()
                    except WebSocketDisconnect:
                        pass
                    tg.cancel_scope.cancel()

                tg.start_soon(run_writer)
                tg.start_soon(run_reader)
        finally:
            session.detach(seat, box)

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
