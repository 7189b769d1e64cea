"""Tile sets, finite tilings, periodic certificates and a small backtracking solver."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from workbench_types import GuardExceeded, InputError, WorkbenchError

DEFAULT_SOLVE_GUARD = 64


class TilingError(WorkbenchError):
    """Base class for tiling errors."""


class TileFormatError(TilingError, InputError):
    pass


class EmptyTileSetError(TilingError, InputError):
    pass


class TileIndexError(TilingError, InputError):
    pass


class SolverGuardExceeded(TilingError, GuardExceeded):
    pass


class TileType(NamedTuple):
    left: int
    right: int
    up: int
    down: int


@dataclass(frozen=True)
class TileSet:
    """Tile types indexed 0..s; tile 0 is the recurrence target."""

    tiles: Tuple[TileType, ...]

    def __post_init__(self):
        if not self.tiles:
            raise EmptyTileSetError("a tile set needs at least one tile")
        object.__setattr__(self, "tiles", tuple(TileType(*t) for t in self.tiles))

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def s(self) -> int:
        return len(self.tiles) - 1

    def horizontal_ok(self) -> np.ndarray:
        """[a, b] is True when b may sit right of a."""
        right = np.array([t.right for t in self.tiles])
        left = np.array([t.left for t in self.tiles])
        return right[:, None] == left[None, :]

    def vertical_ok(self) -> np.ndarray:
        """[a, b] is True when b may sit above a."""
        up = np.array([t.up for t in self.tiles])
        down = np.array([t.down for t in self.tiles])
        return up[:, None] == down[None, :]


@dataclass
class TilingGrid:
    """A window of a tiling; ``cells[row, col]`` holds a tile index."""

    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.cells.ndim != 2 or 0 in self.cells.shape:
            raise TileFormatError(f"grid must be a nonempty 2-D array, got shape {self.cells.shape}")

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def at(self, col: int, row: int) -> int:
        return int(self.cells[row, col])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TilingGrid) and np.array_equal(self.cells, other.cells)


@dataclass
class PeriodicTiling:
    """f(n, m) = block(n mod width, m mod height)."""

    block: TilingGrid

    @property
    def period(self) -> Tuple[int, int]:
        return self.block.width, self.block.height

    def f(self, n: int, m: int) -> int:
        return self.block.at(n % self.block.width, m % self.block.height)


@dataclass
class GridReport:
    t1_ok: bool
    t2_ok: bool
    violations: List[Tuple[str, Tuple[int, int], Tuple[int, int]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.t1_ok and self.t2_ok


def _check_range(tileset: TileSet, grid: TilingGrid) -> None:
    bad = np.argwhere((grid.cells < 0) | (grid.cells >= len(tileset)))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise TileIndexError(f"tile index {grid.at(col, row)} at ({col},{row}) outside 0..{tileset.s}")


def check_grid(tileset: TileSet, grid: TilingGrid, wrap: bool = False) -> GridReport:
    """Check horizontal (T1) and vertical (T2) edge matching, seams included when ``wrap``."""
    _check_range(tileset, grid)
    horizontal = tileset.horizontal_ok()
    vertical = tileset.vertical_ok()
    violations = []
    w, h = grid.width, grid.height
    for row, col in product(range(h), range(w)):
        here = grid.at(col, row)
        if col + 1 < w or wrap:
            nxt = (col + 1) % w
            if not horizontal[here, grid.at(nxt, row)]:
                violations.append(("T1", (col, row), (nxt, row)))
    for row, col in product(range(h), range(w)):
        here = grid.at(col, row)
        if row + 1 < h or wrap:
            above = (row + 1) % h
            if not vertical[here, grid.at(col, above)]:
                violations.append(("T2", (col, row), (col, above)))
    return GridReport(
        t1_ok=not any(v[0] == "T1" for v in violations),
        t2_ok=not any(v[0] == "T2" for v in violations),
        violations=violations,
    )


def solve(tileset: TileSet, width: int, height: int, wrap: bool = False,
          require_t0_col0: bool = False, guard: int = DEFAULT_SOLVE_GUARD) -> Optional[TilingGrid]:
    """Row-major backtracking with ascending tile order; None when no tiling exists."""
    if width < 1 or height < 1:
        raise TilingError(f"grid dimensions must be positive, got {width}x{height}")
    if width * height > guard:
        raise SolverGuardExceeded(f"{width}x{height} grid exceeds the solver guard of {guard} cells")
    horizontal = tileset.horizontal_ok()
    vertical = tileset.vertical_ok()
    cells = np.full((height, width), -1, dtype=np.int64)
    order = list(product(range(height), range(width)))

    def fits(row: int, col: int, tile: int) -> bool:
        if col > 0 and not horizontal[cells[row, col - 1], tile]:
            return False
        if row > 0 and not vertical[cells[row - 1, col], tile]:
            return False
        if wrap and col == width - 1:
            first = tile if col == 0 else cells[row, 0]
            if not horizontal[tile, first]:
                return False
        if wrap and row == height - 1:
            bottom = tile if row == 0 else cells[0, col]
            if not vertical[tile, bottom]:
                return False
        if require_t0_col0 and col == 0 and row == height - 1 and tile != 0:
            if not np.any(cells[:row, 0] == 0):
                return False
        return True

    def place(i: int) -> bool:
        if i == len(order):
            return True
        row, col = order[i]
        for tile in range(len(tileset)):
            if fits(row, col, tile):
                cells[row, col] = tile
                if place(i + 1):
                    return True
        cells[row, col] = -1
        return False

    return TilingGrid(cells.copy()) if place(0) else None


def recurrent_certificate(tileset: TileSet, periodic: PeriodicTiling) -> bool:
    """True when the block tiles the plane and tile 0 recurs in column 0."""
    if not check_grid(tileset, periodic.block, wrap=True).ok:
        return False
    return bool(np.any(periodic.block.cells[:, 0] == 0))


def find_periodic(tileset: TileSet, max_period: int = 4) -> Optional[PeriodicTiling]:
    """Smallest recurrent periodic certificate with both periods <= ``max_period``."""
    sizes = sorted(product(range(1, max_period + 1), repeat=2), key=lambda wh: (wh[0] * wh[1], wh[1], wh[0]))
    for width, height in sizes:
        block = solve(tileset, width, height, wrap=True, require_t0_col0=True,
                      guard=max(DEFAULT_SOLVE_GUARD, width * height))
        if block is not None:
            return PeriodicTiling(block)
    return None


def unfold(periodic: PeriodicTiling, width: int, height: int) -> TilingGrid:
    w, h = periodic.period
    rows = np.arange(height)[:, None] % h
    cols = np.arange(width)[None, :] % w
    return TilingGrid(periodic.block.cells[rows, cols])


def grid_diff(expected: TilingGrid, actual: TilingGrid) -> List[Tuple[int, int, Optional[int], Optional[int]]]:
    """Cells (col, row, expected, actual) that differ; a missing cell shows as None."""
    diffs = []
    for row in range(max(expected.height, actual.height)):
        for col in range(max(expected.width, actual.width)):
            a = expected.at(col, row) if row < expected.height and col < expected.width else None
            b = actual.at(col, row) if row < actual.height and col < actual.width else None
            if a != b:
                diffs.append((col, row, a, b))
    return diffs


def random_tileset(k: int, colors: int = 2, seed: int = 0) -> TileSet:
    if k < 1:
        raise EmptyTileSetError("a tile set needs at least one tile")
    rng = np.random.default_rng(seed)
    edges = rng.integers(0, colors, size=(k, 4))
    return TileSet(tuple(TileType(*(int(c) for c in row)) for row in edges))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def _content_lines(text: str) -> List[str]:
    return [ln.split("#", 1)[0].strip() for ln in text.splitlines() if ln.split("#", 1)[0].strip()]


def parse_tileset(text: str) -> TileSet:
    lines = _content_lines(text)
    if not lines or not lines[0].startswith("tiles"):
        raise TileFormatError("tile set must start with a 'tiles k' header")
    header = lines[0].split()
    if len(header) != 2 or not header[1].isdigit():
        raise TileFormatError(f"bad header {lines[0]!r}")
    k = int(header[1])
    if k == 0:
        raise EmptyTileSetError("a tile set needs at least one tile")
    tiles = {}
    for line in lines[1:]:
        index, _, edges = line.partition(":")
        parts = edges.split()
        if not index.strip().isdigit() or len(parts) != 4 or not all(p.isdigit() for p in parts):
            raise TileFormatError(f"expected 'i: left right up down', got {line!r}")
        i = int(index)
        if i in tiles:
            raise TileFormatError(f"tile {i} listed twice")
        tiles[i] = TileType(*(int(p) for p in parts))
    if sorted(tiles) != list(range(k)):
        raise TileFormatError(f"tile indices must be exactly 0..{k - 1}, got {sorted(tiles)}")
    return TileSet(tuple(tiles[i] for i in range(k)))


def format_tileset(tileset: TileSet) -> str:
    lines = [f"tiles {len(tileset)}"]
    lines += [f"{i}: {t.left} {t.right} {t.up} {t.down}" for i, t in enumerate(tileset.tiles)]
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> TilingGrid:
    lines = _content_lines(text)
    header = lines[0].split() if lines else []
    if len(header) != 3 or header[0] != "grid" or not (header[1].isdigit() and header[2].isdigit()):
        raise TileFormatError("grid must start with a 'grid n m' header")
    n, m = int(header[1]), int(header[2])
    rows = [ln.split() for ln in lines[1:]]
    if len(rows) != m or any(len(r) != n for r in rows):
        raise TileFormatError(f"expected {m} rows of {n} indices")
    try:
        return TilingGrid(np.array([[int(v) for v in r] for r in rows]))
    except ValueError as exc:
        raise TileFormatError(f"bad grid entry: {exc}") from None


def format_grid(grid: TilingGrid) -> str:
    lines = [f"grid {grid.width} {grid.height}"]
    lines += [" ".join(str(int(v)) for v in row) for row in grid.cells]
    return "\n".join(lines) + "\n"


def read_tileset(path) -> TileSet:
    return parse_tileset(Path(path).read_text(encoding="utf-8"))


def write_tileset(tileset: TileSet, path) -> None:
    Path(path).write_text(format_tileset(tileset), encoding="utf-8")


def read_grid(path) -> TilingGrid:
    return parse_grid(Path(path).read_text(encoding="utf-8"))


def write_grid(grid: TilingGrid, path) -> None:
    Path(path).write_text(format_grid(grid), encoding="utf-8")


def load_tiles(spec: str, seed: int = 0) -> TileSet:
    """Resolve a ``--tiles`` value: a file path or ``random:<k>``."""
    if spec.startswith("random:"):
        count = spec.split(":", 1)[1]
        if not count.isdigit():
            raise TileFormatError(f"bad random tile spec {spec!r}")
        return random_tileset(int(count), seed=seed)
    try:
        return read_tileset(spec)
    except OSError as exc:
        raise TileFormatError(f"cannot read tile set {spec}: {exc}") from None
