"""Arithmetic checks of the mark, tile and threshold properties on the witness models.

Each suite restates one property as a decidable assertion over the prefix and
reports every counterexample it meets.  The suites read the models' atoms and
the step-relation tables directly; where the evaluator gives a definite
verdict on the same statement the two routes must agree.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from checker import Evaluator, r_blackdiamond
from extraction import MarkTrace, beta_holds, star_mark_sets, step_tables
from formula_core import PDIA1_LETTER, PDIA2_LETTER, XBOX_LETTER, Atom, Forall
from kripke import F, T, PredicateModel, StarLabeling
from reductions import MARK_LETTER, X, tile_letter
from workbench_types import PropertyReport, Truth


def _is(model: PredicateModel, letter: str, args=()) -> np.ndarray:
    return model.atom(letter, tuple(args)) == T


def _marked(model: PredicateModel, a: int) -> np.ndarray:
    return _is(model, MARK_LETTER, (a,))


def mark_advance(model: PredicateModel, marks: Sequence[int]) -> PropertyReport:
    """w carries a_n iff w refutes p, some ⧈-step reaches a_{n+1} and no two-step path does."""
    report = PropertyReport("mark-advance")
    table = r_blackdiamond(model, "pdia1")
    one, two = table.matrix, table.compose(2)
    not_p = model.atom(PDIA1_LETTER, ()) == F
    for n in range(len(marks) - 1):
        nxt = _marked(model, marks[n + 1])
        rhs = not_p & (one & nxt[None, :]).any(axis=1) & ~(two & nxt[None, :]).any(axis=1)
        lhs = _marked(model, marks[n])
        report.checked += model.size
        for w in np.flatnonzero(lhs != rhs):
            report.violations.append(f"n={n} world {w}: mark {bool(lhs[w])}, step pattern {bool(rhs[w])}")
    return report


def mark_persistence(model: PredicateModel, marks: Sequence[int]) -> PropertyReport:
    """A mark survives between two ¬p worlds with no p world in between."""
    report = PropertyReport("mark-persistence")
    p_true = _is(model, PDIA1_LETTER)
    not_p = model.atom(PDIA1_LETTER, ()) == F
    segment = np.cumsum(p_true)
    linked = (segment[:, None] == segment[None, :]) & not_p[:, None] & not_p[None, :]
    for n, a in enumerate(marks):
        here = _marked(model, a)
        bad = linked & here[:, None] & ~here[None, :]
        report.checked += int(linked.sum())
        for u, v in zip(*np.nonzero(bad)):
            report.violations.append(f"a_{n} marks world {u} but not {v}")
    return report


def mark_uniqueness(model: PredicateModel, marks: Sequence[int], j_max: int = 5) -> PropertyReport:
    report = PropertyReport("mark-uniqueness")
    for n in range(len(marks)):
        for j in range(1, j_max + 1):
            if n + j >= len(marks):
                break
            both = _marked(model, marks[n]) & _marked(model, marks[n + j])
            report.checked += model.size
            for w in np.flatnonzero(both):
                report.violations.append(f"world {w} carries a_{n} and a_{n + j}")
    return report


def _tiles(model: PredicateModel, tiles: int, a: int) -> np.ndarray:
    """tiles x worlds matrix of P_t(a)."""
    return np.stack([_is(model, tile_letter(t), (a,)) for t in range(tiles)])


def row_tiled(model: PredicateModel, marks: Sequence[int], tiles: int, n_max: int = 10) -> PropertyReport:
    """Every a_n is tiled at every marked world."""
    report = PropertyReport("row-tiled")
    marked = np.zeros(model.size, dtype=bool)
    for a in marks:
        marked |= _marked(model, a)
    for n, a in enumerate(marks[: n_max + 1]):
        tiled = _tiles(model, tiles, a).any(axis=0)
        report.checked += int(marked.sum())
        for w in np.flatnonzero(marked & ~tiled):
            report.violations.append(f"a_{n} untiled at marked world {w}")
    return report


def tile_agreement(model: PredicateModel, marks: Sequence[int], tiles: int, n_max: int = 10) -> PropertyReport:
    """Worlds sharing a mark agree on the tile of every a_n."""
    report = PropertyReport("tile-agreement")
    for m, a_m in enumerate(marks):
        worlds = np.flatnonzero(_marked(model, a_m))
        for n, a in enumerate(marks[: n_max + 1]):
            table = _tiles(model, tiles, a)[:, worlds]
            report.checked += len(worlds) * len(worlds)
            for t in range(tiles):
                if table[t].any() and not table[t].all():
                    report.violations.append(f"a_{m}-worlds {list(worlds)} disagree on P{t}(a_{n})")
    return report


def first_marked_world(model: PredicateModel, trace: MarkTrace, expected: Callable[[int], int]) -> PropertyReport:
    """w_m, the least world marked by a_m, sits where the construction puts it."""
    report = PropertyReport("first-marked-world")
    for m, w in enumerate(trace.first_worlds):
        report.checked += 1
        if w != expected(m):
            report.violations.append(f"w_{m} = {w}, expected {expected(m)}")
    return report


def step_relation(model: PredicateModel, which: str = "pdia1") -> PropertyReport:
    """The ⧈ step relation is irreflexive and transitive on the prefix."""
    report = PropertyReport(f"step-relation-{which}")
    table = r_blackdiamond(model, which)
    report.checked = model.size * model.size
    for w in np.flatnonzero(table.matrix.diagonal()):
        report.violations.append(f"world {w} steps to itself")
    for w, v in zip(*np.nonzero(table.compose(2) & ~table.matrix)):
        report.violations.append(f"{w} reaches {v} in two steps but not in one")
    return report


# ---------------------------------------------------------------------------
# Block model
# ---------------------------------------------------------------------------

def star_marks(model: PredicateModel, s: int, m_max: int = 8, a_max: int = 10) -> PropertyReport:
    """q ∧ P(a) holds at w_m exactly for a = m."""
    report = PropertyReport("star-marks")
    labeling = StarLabeling(s)
    q = _is(model, XBOX_LETTER)
    for m in range(min(m_max + 1, model.size // labeling.block)):
        w = labeling.encode("w", m)
        for a in range(-1, a_max + 1):
            report.checked += 1
            if bool(q[w] and _is(model, PDIA2_LETTER, (a,))[w]) != (a == m):
                report.violations.append(f"w_{m}: q ∧ P({a}) wrong")
    return report


def star_all_p(model: PredicateModel, s: int) -> PropertyReport:
    """∀x P(x) holds exactly at the barred worlds."""
    report = PropertyReport("star-all-P")
    labeling = StarLabeling(s)
    evaluator = Evaluator(model)
    values = evaluator.values(evaluator.prepare(Forall(X, Atom(PDIA2_LETTER, (X,)))), {})
    for u in range(model.size):
        report.checked += 1
        barred = labeling.decode(u)[0] in ("wbar", "vbar")
        if Truth(int(values[u])) != Truth.of(barred):
            report.violations.append(f"{labeling.label(u)}: ∀x P(x) is {Truth(int(values[u]))}")
    return report


def star_block_step(model: PredicateModel, s: int, m_max: int = 8, tables: Optional[Dict[int, np.ndarray]] = None) -> PropertyReport:
    """w_{m+1} is reached from w_m in exactly s+4 ⧈₂-steps and not in s+5."""
    report = PropertyReport("star-block-step")
    labeling = StarLabeling(s)
    tables = tables or step_tables(model, s, "Astar")
    for m in range(min(m_max + 1, model.size // labeling.block - 1)):
        w, nxt = labeling.encode("w", m), labeling.encode("w", m + 1)
        report.checked += 1
        if not tables[s + 4][w, nxt] or tables[s + 5][w, nxt]:
            report.violations.append(f"w_{m} -> w_{m + 1} not an exact {s + 4}-step")
    return report


def star_beta(model: PredicateModel, prime: PredicateModel, s: int, m_max: int = 8, a_max: int = 10,
              tables: Optional[Dict[int, np.ndarray]] = None) -> PropertyReport:
    """β_n(a) at w_m matches P_n(a) at world 2m of the primed model."""
    report = PropertyReport("star-beta")
    labeling = StarLabeling(s)
    tables = tables or step_tables(model, s, "Astar")
    mark_sets = star_mark_sets(model)
    blocks = min(m_max + 1, model.size // labeling.block - 1, prime.size // 2)
    for m in range(blocks):
        w = labeling.encode("w", m)
        for n in range(s + 3):
            for a in range(-1, a_max + 1):
                expected = bool(_is(prime, tile_letter(n), (a,))[2 * m])
                got = beta_holds(model, tables, s, n, a, w, mark_sets)
                report.checked += 1
                if got != expected:
                    report.violations.append(f"β_{n}({a}) at w_{m} is {got}, primed model says {expected}")
    return report


def run_mark_suites(model: PredicateModel, trace: MarkTrace, tiles: int, n_max: int = 10,
                    j_max: int = 5, expected_first: Callable[[int], int] = lambda m: 2 * m) -> List[PropertyReport]:
    marks = trace.marks
    return [
        mark_advance(model, marks),
        mark_persistence(model, marks),
        mark_uniqueness(model, marks, j_max),
        row_tiled(model, marks, tiles, n_max),
        tile_agreement(model, marks, tiles, n_max),
        first_marked_world(model, trace, expected_first),
        step_relation(model, "pdia1"),
    ]


def run_star_suites(model: PredicateModel, prime: PredicateModel, s: int, m_max: int = 8,
                    a_max: int = 10) -> List[PropertyReport]:
    tables = step_tables(model, s, "Astar")
    return [
        star_marks(model, s, m_max, a_max),
        star_all_p(model, s),
        star_block_step(model, s, m_max, tables),
        star_beta(model, prime, s, m_max, a_max, tables),
        step_relation(model, "pdia2"),
    ]
