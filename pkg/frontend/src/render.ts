// Canvas painter for the hive. Pure drawing, no game logic: colors come
// straight from the model's cell states, zone outlines from its zone list.

import { cellCenter, hexCorners, Layout } from "./hex.js";
import { BoardModel, CellState } from "./model.js";

const FILL: Record<CellState, string> = {
  unknown: "#f5f1e3",
  "own-black": "#26221c",
  "own-yellow": "#f2c230",
  "other-red": "#d1403a",
};

const EDGE = "#b9b2a0";
const OWN_ZONE = "#2f8f4e";
const FOREIGN_ZONE = "#7a4fd1";

export function drawBoard(
  ctx: CanvasRenderingContext2D,
  model: BoardModel,
  layout: Layout,
  hover: [number, number] | null,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (let row = 0; row < model.height; row += 1) {
    for (let col = 0; col < model.width; col += 1) {
      const { x, y } = cellCenter(col, row, layout);
      const corners = hexCorners(x, y, layout.size * 0.96);
      ctx.beginPath();
      ctx.moveTo(corners[0][0], corners[0][1]);
      for (const [cx, cy] of corners.slice(1)) ctx.lineTo(cx, cy);
      ctx.closePath();
      ctx.fillStyle = FILL[model.cellState(col, row)];
      if (
        hover &&
        hover[0] === col &&
        hover[1] === row &&
        model.phase === "picking" &&
        model.selectable(col, row)
      ) {
        ctx.fillStyle = "#cfe8ff";
      }
      ctx.fill();
      ctx.strokeStyle = EDGE;
      ctx.lineWidth = 0.5;
      ctx.stroke();
    }
  }
  for (const zone of model.zones) {
    if (!zone.active) continue;
    ctx.strokeStyle = zone.own ? OWN_ZONE : FOREIGN_ZONE;
    ctx.lineWidth = 2;
    for (const [col, row] of zone.cells) {
      const { x, y } = cellCenter(col, row, layout);
      const corners = hexCorners(x, y, layout.size * 0.9);
      ctx.beginPath();
      ctx.moveTo(corners[0][0], corners[0][1]);
      for (const [cx, cy] of corners.slice(1)) ctx.lineTo(cx, cy);
      ctx.closePath();
      ctx.stroke();
    }
  }
}
