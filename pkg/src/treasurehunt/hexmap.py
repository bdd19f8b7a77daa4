"""Hexagonal board, neighbor topology and treasure-map generation.

Coordinates are odd-row offset coordinates on a pointy-top hex grid: cell
(col, row) with odd rows shifted half a hex to the right. The default board
is 70 columns by 30 rows (2100 cells) carrying 35 mines of 3 mutually
adjacent treasure cells each, i.e. a treasure density of exactly 0.05.

Mines are "tight triangles": three pairwise-adjacent cells. Distinct mines
never touch (no cell of one mine is adjacent to a cell of another), which is
what makes treasure attribution unambiguous everywhere else in the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

from .rng import stream

DEFAULT_WIDTH = 70
DEFAULT_HEIGHT = 30
DEFAULT_MINES = 35

PLACEMENT_BUDGET = 10_000

MAP_SCHEMA_VERSION = 1


class MapError(Exception):
    pass


class InvalidCoordinateError(MapError):
    pass


class MapGenerationError(MapError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class MapParseError(MapError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{message}" + (f" (at {location})" if location else ""))
        self.location = location


def in_bounds(col: int, row: int, width: int, height: int) -> bool:
    return 0 <= col < width and 0 <= row < height


def neighbors(col: int, row: int, width: int, height: int) -> list[tuple[int, int]]:
    """In-bounds neighbors of (col, row) under odd-row offset adjacency.

    Interior cells have exactly 6 neighbors; edge and corner cells fewer.
    Raises InvalidCoordinateError for out-of-bounds input.
    """
    if not in_bounds(col, row, width, height):
        raise InvalidCoordinateError(f"cell ({col},{row}) outside {width}x{height} board")
    shift = row & 1
    cand = (
        (col - 1, row),
        (col + 1, row),
        (col - 1 + shift, row - 1),
        (col + shift, row - 1),
        (col - 1 + shift, row + 1),
        (col + shift, row + 1),
    )
    return [(c, r) for c, r in cand if in_bounds(c, r, width, height)]


@lru_cache(maxsize=8)
def neighbor_table(width: int, height: int) -> tuple[tuple[int, ...], ...]:
    """Neighbor indices for every cell, indexed by cell id row*width+col.

    Cached per board size; the table is shared read-only by engine and agents.
    """
    table = []
    for row in range(height):
        for col in range(width):
            table.append(
                tuple(r * width + c for c, r in neighbors(col, row, width, height))
            )
    return tuple(table)


def cell_index(col: int, row: int, width: int) -> int:
    return row * width + col


def cell_coord(idx: int, width: int) -> tuple[int, int]:
    return idx % width, idx // width


@dataclass(frozen=True)
class Mine:
    id: int
    cells: tuple[tuple[int, int], ...]  # exactly 3 (col, row) pairs


@dataclass
class TreasureMap:
    width: int
    height: int
    seed: int
    mines: list[Mine]
    _cell_to_mine: dict[int, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._cell_to_mine:
            for m in self.mines:
                for c, r in m.cells:
                    self._cell_to_mine[cell_index(c, r, self.width)] = m.id

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def treasure_cells(self) -> set[int]:
        return set(self._cell_to_mine)

    def mine_at(self, idx: int) -> int:
        """Mine id owning cell idx, or -1 for an empty cell."""
        return self._cell_to_mine.get(idx, -1)

    def mine_cell_indices(self, mine_id: int) -> tuple[int, ...]:
        return tuple(cell_index(c, r, self.width) for c, r in self.mines[mine_id].cells)

    def flat(self) -> tuple[list[int], tuple[tuple[int, ...], ...]]:
        """Flat lookup structures for the engine: a cell -> mine id array
        (-1 for empty) and per-mine cell-index triples. Built once."""
        cached = getattr(self, "_flat", None)
        if cached is None:
            cell_mine = [-1] * self.n_cells
            mine_cells = []
            for m in self.mines:
                idxs = tuple(cell_index(c, r, self.width) for c, r in m.cells)
                mine_cells.append(idxs)
                for i in idxs:
                    cell_mine[i] = m.id
            cached = (cell_mine, tuple(mine_cells))
            object.__setattr__(self, "_flat", cached)
        return cached

    @property
    def density(self) -> float:
        return 3 * len(self.mines) / self.n_cells


def _triangle(col: int, row: int, shape: int, width: int, height: int):
    """The 4 triangle placements anchored at (col,row).

    Every tight triangle is a horizontal domino plus the common neighbor
    above or below it; shapes 0..3 are (right-domino, left-domino) x (up,
    down). Returns the 3 cells or None when any falls off the board.
    """
    if shape < 2:
        a, b = (col, row), (col + 1, row)
    else:
        a, b = (col - 1, row), (col, row)
    dr = -1 if shape % 2 == 0 else 1
    apex = (a[0] + (row & 1), row + dr)
    cells = (a, b, apex)
    for c, r in cells:
        if not in_bounds(c, r, width, height):
            return None
    return cells


@lru_cache(maxsize=8)
def _placement_table(width: int, height: int) -> tuple:
    """Flat (cell, shape) -> triangle cell-index triple (or None), so the
    generator's rejection loop is pure table lookups."""
    table = []
    for row in range(height):
        for col in range(width):
            for shape in range(4):
                cells = _triangle(col, row, shape, width, height)
                table.append(
                    None
                    if cells is None
                    else tuple(cell_index(c, r, width) for c, r in cells)
                )
    return tuple(table)


def generate_map(
    seed: int,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    mine_count: int = DEFAULT_MINES,
) -> TreasureMap:
    """Generate a random treasure map; pure function of its arguments.

    Placement is rejection sampling: draw a cell and one of the 4 anchored
    triangle shapes, accept if the triangle fits on the board, does not
    overlap an accepted mine and is not adjacent to one. Gives up after
    PLACEMENT_BUDGET draws.
    """
    if mine_count < 0 or 3 * mine_count > width * height:
        raise MapGenerationError(
            f"cannot place {mine_count} mines on a {width}x{height} board", attempts=0
        )
    rng = stream(seed, "map", width, height, mine_count)
    nbrs = neighbor_table(width, height)
    placements = _placement_table(width, height)
    n_slots = len(placements)
    blocked: set[int] = set()  # mine cells plus their neighbors
    mines: list[Mine] = []
    attempts = 0
    rand = rng.random
    while len(mines) < mine_count:
        if attempts >= PLACEMENT_BUDGET:
            raise MapGenerationError(
                f"placed only {len(mines)}/{mine_count} mines after {attempts} attempts",
                attempts=attempts,
            )
        attempts += 1
        tri = placements[int(rand() * n_slots)]
        if tri is None:
            continue
        a, b, c = tri
        if a in blocked or b in blocked or c in blocked:
            continue
        mines.append(
            Mine(
                id=len(mines),
                cells=tuple(cell_coord(i, width) for i in tri),
            )
        )
        for i in tri:
            blocked.add(i)
            blocked.update(nbrs[i])
    return TreasureMap(width=width, height=height, seed=seed, mines=mines)


def validate_map(tmap: TreasureMap) -> list[str]:
    """Check every structural invariant; returns violations, empty if valid.

    Reports rather than raises so callers can inspect hand-built maps.
    """
    violations: list[str] = []
    width, height = tmap.width, tmap.height
    seen: dict[int, int] = {}
    for m in tmap.mines:
        if len(m.cells) != 3:
            violations.append(f"mine {m.id}: has {len(m.cells)} cells, expected 3")
            continue
        for c, r in m.cells:
            if not in_bounds(c, r, width, height):
                violations.append(f"mine {m.id}: cell ({c},{r}) out of bounds")
        if any(not in_bounds(c, r, width, height) for c, r in m.cells):
            continue
        # pairwise adjacency (tight triangle)
        for i in range(3):
            for j in range(i + 1, 3):
                ci, ri = m.cells[i]
                cj, rj = m.cells[j]
                if (cj, rj) not in neighbors(ci, ri, width, height):
                    violations.append(
                        f"mine {m.id}: cells ({ci},{ri}) and ({cj},{rj}) not adjacent"
                    )
        for c, r in m.cells:
            idx = cell_index(c, r, width)
            if idx in seen and seen[idx] != m.id:
                violations.append(
                    f"cell ({c},{r}) belongs to mines {seen[idx]} and {m.id}"
                )
            seen[idx] = m.id
    # inter-mine adjacency
    table = neighbor_table(width, height)
    for idx, mid in seen.items():
        for nb in table[idx]:
            other = seen.get(nb)
            if other is not None and other != mid:
                violations.append(
                    f"mines {mid} and {other} are adjacent at cells {idx} and {nb}"
                )
    return sorted(set(violations))


def serialize_map(tmap: TreasureMap) -> str:
    doc = {
        "version": MAP_SCHEMA_VERSION,
        "width": tmap.width,
        "height": tmap.height,
        "seed": tmap.seed,
        "mines": [
            {"id": m.id, "cells": [[c, r] for c, r in m.cells]} for m in tmap.mines
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_map(text: str) -> TreasureMap:
    """Parse a map document. Parsing is separate from validation: a
    structurally well-formed document for an invalid map parses fine and
    only validate_map flags it."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapParseError(f"not valid JSON: {exc.msg}", location=f"line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise MapParseError("document root must be an object")
    for key in ("version", "width", "height", "seed", "mines"):
        if key not in doc:
            raise MapParseError(f"missing required field '{key}'")
    if doc["version"] != MAP_SCHEMA_VERSION:
        raise MapParseError(f"unsupported version {doc['version']!r}", location="version")
    try:
        width, height, seed = int(doc["width"]), int(doc["height"]), int(doc["seed"])
    except (TypeError, ValueError) as exc:
        raise MapParseError("width/height/seed must be integers") from exc
    if not isinstance(doc["mines"], list):
        raise MapParseError("'mines' must be a list", location="mines")
    mines = []
    for pos, entry in enumerate(doc["mines"]):
        loc = f"mines[{pos}]"
        if not isinstance(entry, dict) or "id" not in entry or "cells" not in entry:
            raise MapParseError("mine entries need 'id' and 'cells'", location=loc)
        cells = entry["cells"]
        if not isinstance(cells, list) or len(cells) != 3:
            raise MapParseError("mine 'cells' must list exactly 3 cells", location=loc)
        parsed_cells = []
        for cell in cells:
            if (
                not isinstance(cell, list)
                or len(cell) != 2
                or not all(isinstance(v, int) for v in cell)
            ):
                raise MapParseError("cells must be [col,row] integer pairs", location=loc)
            parsed_cells.append((cell[0], cell[1]))
        mines.append(Mine(id=int(entry["id"]), cells=tuple(parsed_cells)))
    return TreasureMap(width=width, height=height, seed=seed, mines=mines)
