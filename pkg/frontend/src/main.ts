// UI wiring: join from the URL, show the round's cost, offer Skip/Explore,
// let the player pick a hexagon, and show the round's payoff.

import { boardPixelSize, Layout, pixelToCell } from "./hex.js";
import { BoardModel } from "./model.js";
import { connect, Connection } from "./net.js";
import { drawBoard } from "./render.js";

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session") ?? "";
const token = params.get("token") ?? "";
const server = params.get("server") ?? window.location.origin;

const canvas = document.getElementById("board") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const roundEl = document.getElementById("round")!;
const costEl = document.getElementById("cost")!;
const payoffEl = document.getElementById("payoff")!;
const promptEl = document.getElementById("prompt")!;
const skipBtn = document.getElementById("skip") as HTMLButtonElement;
const exploreBtn = document.getElementById("explore") as HTMLButtonElement;
const cancelBtn = document.getElementById("cancel") as HTMLButtonElement;
const zoomInBtn = document.getElementById("zoom-in") as HTMLButtonElement;
const zoomOutBtn = document.getElementById("zoom-out") as HTMLButtonElement;
const toastEl = document.getElementById("toast")!;

const model = new BoardModel();
let layout: Layout = { size: 9, originX: 0, originY: 0 };
let hover: [number, number] | null = null;
let conn: Connection | null = null;

function resizeCanvas(): void {
  const { w, h } = boardPixelSize(model.width, model.height, layout.size);
  canvas.width = w;
  canvas.height = h;
}

function toast(text: string): void {
  toastEl.textContent = text;
  toastEl.classList.add("visible");
  setTimeout(() => toastEl.classList.remove("visible"), 2500);
}

function describePhase(): string {
  switch (model.phase) {
    case "connecting":
      return "connecting…";
    case "lobby":
      return "waiting for the other players to arrive";
    case "deciding":
      return `round ${model.round}: search cost is ${model.cost}. Explore or skip?`;
    case "picking":
      return "click a white hexagon to search it";
    case "waiting":
      return "wait for the other players";
    case "between-games":
      return `game ${model.gameIndex} over - next game starting`;
    case "finished":
      return "session over - thanks for playing";
  }
}

function redraw(): void {
  drawBoard(ctx, model, layout, hover);
  statusEl.textContent = describePhase();
  roundEl.textContent = model.round
    ? `game ${model.gameIndex}/${model.games} - round ${model.round}/${model.rounds}`
    : "";
  costEl.textContent = model.cost !== null ? `cost: ${model.cost}` : "";
  payoffEl.textContent = `points: ${model.total}`;
  const deciding = model.phase === "deciding";
  skipBtn.disabled = !deciding;
  exploreBtn.disabled = !deciding;
  cancelBtn.hidden = model.phase !== "picking";
  if (model.lastError) {
    toast(model.lastError);
    model.lastError = null;
  }
}

skipBtn.onclick = () => {
  if (model.canSubmit()) {
    const round = model.round;
    model.markSubmitted();
    conn?.sendMove(round, "skip");
    toast("skipped: 0 points this round");
    redraw();
  }
};

exploreBtn.onclick = () => {
  model.choosePick();
  redraw();
};

cancelBtn.onclick = () => {
  model.cancelPick();
  redraw();
};

function setZoom(size: number): void {
  layout = { ...layout, size: Math.min(22, Math.max(5, size)) };
  resizeCanvas();
  redraw();
}

zoomInBtn.onclick = () => setZoom(layout.size + 2);
zoomOutBtn.onclick = () => setZoom(layout.size - 2);

canvas.addEventListener("mousemove", (event) => {
  const rect = canvas.getBoundingClientRect();
  hover = pixelToCell(
    event.clientX - rect.left,
    event.clientY - rect.top,
    layout,
    model.width,
    model.height,
  );
  if (model.phase === "picking") redraw();
});

canvas.addEventListener("click", (event) => {
  if (model.phase !== "picking") return;
  const rect = canvas.getBoundingClientRect();
  const cell = pixelToCell(
    event.clientX - rect.left,
    event.clientY - rect.top,
    layout,
    model.width,
    model.height,
  );
  if (!cell) return;
  if (!model.selectable(cell[0], cell[1])) {
    toast("that hexagon is not available");
    return;
  }
  if (model.canSubmit()) {
    const round = model.round;
    model.markSubmitted();
    conn?.sendMove(round, "search", cell);
    redraw();
  }
});

if (!sessionId || !token) {
  statusEl.textContent = "missing ?session=...&token=... in the URL";
} else {
  conn = connect(server, sessionId, token, {
    onMessage(raw) {
      try {
        const msg = model.apply(raw);
        if (msg.type === "view") {
          resizeCanvas();
        }
        if (msg.type === "round_result") {
          const payoff = model.lastPayoff ?? 0;
          if (payoff > 0) toast(`+${payoff} points`);
          else if (payoff < 0) toast(`${payoff} points`);
        }
        if (msg.type === "game_over") {
          toast(`game ${msg.game_index} finished with ${model.total} points`);
        }
      } catch (err) {
        console.error("rejected message", err, raw);
        return;
      }
      redraw();
    },
    onStatus(status) {
      promptEl.textContent = status === "open" ? "" : status;
    },
  });
}

resizeCanvas();
redraw();
