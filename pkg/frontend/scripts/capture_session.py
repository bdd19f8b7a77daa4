"""Regenerate the captured-session fixture for the web client's tests.

Plays one full Protection session (one human seat, three threshold bots)
against the real session server in-process, driving the human over the
WebSocket exactly like the browser client would. Records every message the
client received, every move it sent, plus mid-game and final view snapshots
for the reconnection and consistency audits.

Usage: python3 frontend/scripts/capture_session.py [out.json]
"""

import json
import random
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from treasurehunt.server import create_app

OUT = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "fixtures" / "protection_session.json")


def selectable(cell, colored, zones, seat=0):
    if tuple(cell) in colored:
        return False
    for zone in zones:
        own = zone["own"] if "own" in zone else zone.get("owner") == seat
        if not own and zone["active"] and cell in zone["cells"]:
            return False
    return True


def main():
    rng = random.Random(2024)
    app = create_app(log_dir="/tmp/capture_logs", seed=99)
    received = []
    sent = []
    snapshots = {}
    with TestClient(app) as client:
        out = client.post(
            "/sessions",
            json={
                "condition": "protection",
                "seed": 424242,
                "games": 1,
                "rounds": 50,
                "seats": [{"type": "human"}]
                + [{"type": "bot", "initial_threshold": 25, "sequential_threshold": 25}] * 3,
            },
        ).json()
        sid = out["session_id"]
        token = out["join_tokens"]["0"]
        colored = set()
        zones = []
        with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
            ws.send_json({"type": "join", "token": token})
            done = False
            while not done:
                msg = ws.receive_json()
                received.append(msg)
                mtype = msg.get("type")
                if mtype == "view":
                    colored = {
                        tuple(c)
                        for key in ("own_black", "own_yellow", "other_red")
                        for c in msg.get(key, [])
                    }
                    zones = msg.get("zones", [])
                elif mtype == "round_start":
                    rnd = msg["round"]
                    cost = msg["cost"]
                    if rnd == 25:
                        # snapshot for the reconnection test
                        snapshots["mid_round_25"] = client.get(
                            f"/sessions/{sid}/view", params={"token": token}
                        ).json()
                    if cost < 25:
                        for _ in range(400):
                            cell = [rng.randrange(70), rng.randrange(30)]
                            if selectable(cell, colored, zones):
                                break
                        move = {"type": "move", "round": rnd, "action": "search", "cell": cell}
                    else:
                        move = {"type": "move", "round": rnd, "action": "skip"}
                    ws.send_json(move)
                    sent.append(move)
                elif mtype == "round_result":
                    for reveal in msg["reveals"]:
                        colored.add(tuple(reveal["cell"]))
                    zones = msg["zones"]
                elif mtype == "session_over":
                    done = True
                elif mtype == "error":
                    raise SystemExit(f"capture hit a server error: {msg}")
        snapshots["final"] = client.get(
            f"/sessions/{sid}/view", params={"token": token}
        ).json()
        log_text = client.get(f"/sessions/{sid}/log").text

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps(
            {
                "session": {"condition": "protection", "games": 1, "rounds": 50, "seat": 0},
                "received": received,
                "sent": sent,
                "snapshots": snapshots,
                "log_rows": len(log_text.strip().splitlines()) - 1,
            },
            indent=1,
        )
        + "\n"
    )
    print(f"wrote {OUT} ({len(received)} messages, {len(sent)} moves)")


if __name__ == "__main__":
    main()
