"""Recover marks, row worlds and the tiling from a model of the reduction formulas."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from checker import r_blackdiamond
from formula_core import PDIA2_LETTER, XBOX_LETTER
from kripke import PredicateModel
from reductions import MARK_LETTER, SUCC_LETTER, tile_letter
from tiling import GridReport, PeriodicTiling, TileSet, TilingGrid, check_grid, grid_diff, unfold
from workbench_types import InputError, WorkbenchError

# Variants sharing a mark encoding
_FAMILY = {"A": "A", "B": "A", "Abullet": "A", "Bplus": "A", "Aprime": "Aprime", "Astar": "Astar", "Aplus": "Astar"}


class ExtractionError(WorkbenchError):
    """Base class for extraction errors."""


class NoMarkError(ExtractionError, InputError):
    pass


class MissingTileError(ExtractionError):
    pass


class AmbiguousTileError(ExtractionError):
    pass


@dataclass
class MarkTrace:
    """Marks a_0, a_1, ... and the least world w_m carrying each."""

    variant: str
    marks: List[int] = field(default_factory=list)
    first_worlds: List[int] = field(default_factory=list)
    truncated: bool = False

    @property
    def certified(self) -> int:
        return len(self.first_worlds)

    def world_marks(self, model: PredicateModel) -> Dict[int, int]:
        """World -> index n of the mark a_n it carries, for marked prefix worlds."""
        out: Dict[int, int] = {}
        for n, a in enumerate(self.marks):
            for w in np.flatnonzero(_mark_codes(model, self.variant, a)):
                out.setdefault(int(w), n)
        return out


@dataclass
class ExtractionResult:
    grid: TilingGrid
    report: GridReport
    provenance: Dict[Tuple[int, int], Tuple[int, str]]
    omitted_rows: int = 0

    def provenance_json(self) -> str:
        payload = {f"{c},{r}": {"world": w, "atom": atom} for (c, r), (w, atom) in sorted(self.provenance.items())}
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _family(variant: str) -> str:
    try:
        return _FAMILY[variant]
    except KeyError:
        raise ExtractionError(f"no mark encoding for variant {variant!r}") from None


def _true(model: PredicateModel, letter: str, args: Tuple[int, ...]) -> np.ndarray:
    return model.atom(letter, args) == 2


def _mark_codes(model: PredicateModel, variant: str, a: int) -> np.ndarray:
    if _family(variant) == "Astar":
        return _true(model, XBOX_LETTER, ()) & _true(model, PDIA2_LETTER, (a,))
    return _true(model, MARK_LETTER, (a,))


def _tiled_at_root(model: PredicateModel, tiles: int, a: int) -> bool:
    return any(_true(model, tile_letter(t), (a,))[0] for t in range(tiles))


def step_tables(model: PredicateModel, s: int, variant: str) -> Dict[int, np.ndarray]:
    """Powers of the ⧈ (A') or ⧈₂ (A*, A⁺) step relation the successor encoding needs."""
    family = _family(variant)
    if family == "Aprime":
        return {1: r_blackdiamond(model, "pdia1").matrix}
    if family == "Astar":
        table = r_blackdiamond(model, "pdia2", plus=variant == "Aplus")
        return {k: table.compose(k) for k in range(1, s + 6)}
    return {}


def extract_marks(model: PredicateModel, variant: str, s: int,
                  tables: Optional[Dict[int, np.ndarray]] = None) -> MarkTrace:
    """Follow the successor encoding of ``variant`` from the root's mark.

    The walk stops at the prefix edge; ``truncated`` records that it did.
    """
    family = _family(variant)
    tables = tables if tables is not None else step_tables(model, s, variant)
    elements = model.elements()
    trace = MarkTrace(variant)
    roots = [a for a in elements if _mark_codes(model, variant, a)[0]
             and (family == "Astar" or _tiled_at_root(model, s + 1, a))]
    if not roots:
        raise NoMarkError(f"world 0 of {model.description} carries no tiled mark")
    current = min(roots)
    seen = set()
    while current not in seen:
        seen.add(current)
        worlds = np.flatnonzero(_mark_codes(model, variant, current))
        if not worlds.size:
            trace.truncated = True
            break
        trace.marks.append(current)
        trace.first_worlds.append(int(worlds[0]))
        nxt = _successor(model, family, s, current, trace.first_worlds[-1], elements, tables)
        if nxt is None:
            trace.truncated = True
            break
        current = nxt
    return trace


def _successor(model: PredicateModel, family: str, s: int, a: int, w: int, elements: List[int],
               tables: Dict[int, np.ndarray]) -> Optional[int]:
    if family == "A":
        hits = [b for b in elements if _true(model, SUCC_LETTER, (a, b))[0]]
    elif family == "Aprime":
        reach = tables[1][0] & _true(model, tile_letter(s + 1), (a,))
        hits = [b for b in elements if np.any(reach & _true(model, tile_letter(s + 2), (b,)))]
    else:
        exact = tables[s + 4][w] & ~tables[s + 5][w]
        hits = [b for b in elements if np.any(exact & _mark_codes(model, "Astar", b))]
    return min(hits) if hits else None


def star_mark_sets(model: PredicateModel) -> Dict[int, np.ndarray]:
    """Element b -> worlds satisfying q ∧ P(b), for every b marking some world."""
    out = {}
    for b in model.elements():
        worlds = _mark_codes(model, "Astar", b)
        if worlds.any():
            out[b] = worlds
    return out


def beta_holds(model: PredicateModel, tables: Dict[int, np.ndarray], s: int, n: int, a: int, w: int,
               mark_sets: Dict[int, np.ndarray]) -> bool:
    """β_n(a) at ``w`` read off the ⧈₂ step tables."""
    p_a = _true(model, PDIA2_LETTER, (a,))
    for marked in mark_sets.values():
        if not np.any(tables[s + 4][w] & marked) or np.any(tables[s + 5][w] & marked):
            continue
        near = (tables[n + 1] & marked[None, :]).any(axis=1)
        far = (tables[n + 2] & marked[None, :]).any(axis=1)
        if np.any(tables[1][w] & near & ~far & p_a):
            return True
    return False


def extract_tiling(model: PredicateModel, trace: MarkTrace, s: int, rows: int, cols: int,
                   tileset: Optional[TileSet] = None,
                   tables: Optional[Dict[int, np.ndarray]] = None) -> ExtractionResult:
    """Read f(n, m) at w_m for every certified row and column.

    Rows past the last certified mark are left out, never padded.
    """
    if not trace.marks:
        raise ExtractionError("empty mark trace")
    family = _family(trace.variant)
    height = min(rows, trace.certified)
    width = min(cols, len(trace.marks))
    if height == 0 or width == 0:
        raise ExtractionError("prefix too short to certify a single cell")
    if family == "Astar" and tables is None:
        tables = step_tables(model, s, trace.variant)
    mark_sets = star_mark_sets(model) if family == "Astar" else {}
    cells = np.zeros((height, width), dtype=np.int64)
    provenance: Dict[Tuple[int, int], Tuple[int, str]] = {}
    for m in range(height):
        w = trace.first_worlds[m]
        for n in range(width):
            a = trace.marks[n]
            if family == "Astar":
                found = [t for t in range(s + 1) if beta_holds(model, tables, s, t, a, w, mark_sets)]
                label = "β_{}({})"
            else:
                found = [t for t in range(s + 1) if _true(model, tile_letter(t), (a,))[w]]
                label = "P{}({})"
            if not found:
                raise MissingTileError(f"element {a} is untiled at world {w} (row {m})")
            if len(found) > 1:
                raise AmbiguousTileError(f"element {a} carries tiles {found} at world {w} (row {m})")
            cells[m, n] = found[0]
            provenance[(n, m)] = (w, label.format(found[0], a))
    grid = TilingGrid(cells)
    report = check_grid(tileset, grid) if tileset is not None else GridReport(True, True)
    return ExtractionResult(grid, report, provenance, omitted_rows=rows - height)


def roundtrip_diff(periodic: PeriodicTiling, grid: TilingGrid):
    """Cells where the extracted window departs from the certificate's unfolding."""
    return grid_diff(unfold(periodic, grid.width, grid.height), grid)
