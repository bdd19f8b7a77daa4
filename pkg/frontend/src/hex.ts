// Pointy-top hex layout in odd-row offset coordinates (odd rows shifted
// half a hex to the right), matching the server's board topology.

export const SQRT3 = Math.sqrt(3);

export interface Layout {
  size: number; // hex circumradius in pixels
  originX: number;
  originY: number;
}

export function cellCenter(col: number, row: number, layout: Layout): { x: number; y: number } {
  const shift = (row & 1) * 0.5;
  return {
    x: layout.originX + layout.size * SQRT3 * (col + shift + 0.5),
    y: layout.originY + layout.size * (1.5 * row + 1),
  };
}

export function hexCorners(cx: number, cy: number, size: number): [number, number][] {
  const corners: [number, number][] = [];
  for (let i = 0; i < 6; i += 1) {
    const angle = (Math.PI / 180) * (60 * i - 30);
    corners.push([cx + size * Math.cos(angle), cy + size * Math.sin(angle)]);
  }
  return corners;
}

/** Inverse of cellCenter: the cell whose center is nearest to (x, y), or
 * null when the point misses the board. Checking the two candidate rows
 * around the point is exact enough for click targets. */
export function pixelToCell(
  x: number,
  y: number,
  layout: Layout,
  width: number,
  height: number,
): [number, number] | null {
  let best: [number, number] | null = null;
  let bestDist = Infinity;
  const approxRow = Math.round((y - layout.originY - layout.size) / (1.5 * layout.size));
  for (let row = approxRow - 1; row <= approxRow + 1; row += 1) {
    if (row < 0 || row >= height) continue;
    const shift = (row & 1) * 0.5;
    const approxCol = Math.round(
      (x - layout.originX) / (layout.size * SQRT3) - shift - 0.5,
    );
    for (let col = approxCol - 1; col <= approxCol + 1; col += 1) {
      if (col < 0 || col >= width) continue;
      const center = cellCenter(col, row, layout);
      const dist = Math.hypot(center.x - x, center.y - y);
      if (dist < bestDist) {
        bestDist = dist;
        best = [col, row];
      }
    }
  }
  if (best !== null && bestDist <= layout.size * 0.95) {
    return best;
  }
  return null;
}

export function boardPixelSize(
  width: number,
  height: number,
  size: number,
): { w: number; h: number } {
  return {
    w: size * SQRT3 * (width + 0.5) + 2,
    h: size * (1.5 * height + 0.5) + 2,
  };
}
