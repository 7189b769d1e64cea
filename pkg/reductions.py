"""Formula families encoding the recurrent tiling problem.

``gen_base`` writes the ten-conjunct formula A over the letters Succ (the
successor relation on marks), M (marks), P0..Ps (tile types) and p (parity of
the world).  The passes below transform it step by step:

* ``prime_pass``   removes the binary letter by encoding ``Succ(x, y)`` as
                   ``⧈(P{s+1}(x) ∧ P{s+2}(y))``;
* ``star_pass``    collapses every monadic letter into one letter P plus the
                   proposition q using the threshold formulas ``gen_beta``;
* ``boxplus_pass`` replaces every box with a box-plus, for frames between
                   the strict and the reflexive order.

``gen_variant`` emits the recurrence-free formula B and the ordinal variant
A•, ``gen_separation`` and ``gen_axioms`` the small propositional formulas
used to tell frame families apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from formula_core import (
    PDIA2_LETTER, SUCC_LETTER, XBOX_LETTER,
    And, Atom, Box, BoxIter, BoxPlus, Dia, DiaIter, Exists, Forall, Formula, Iff, Implies, Not, Or,
    PDia1, PDia1Iter, PDia2, PDia2Iter, Signature, TOP, XBox, XBoxIter, conj, disj, expand, metrics, parse,
    letters, rewrite, substitute_atoms, to_notation, to_sexpr,
)
from tiling import TileSet, TileType
from workbench_types import InputError, WorkbenchError

MARK_LETTER = "M"
PARITY_LETTER = "p"
X, Y = "x", "y"


class ReductionError(WorkbenchError):
    """Base class for reduction errors."""


class VariantMismatchError(ReductionError, InputError):
    pass


class ArtifactFormatError(ReductionError, InputError):
    pass


def tile_letter(t: int) -> str:
    return f"P{t}"


@dataclass
class ReductionArtifact:
    """Named conjuncts of one formula family plus the letter documentation."""

    variant: str
    s: int
    conjuncts: List[Tuple[str, Formula]]
    letter_map: Dict[str, str] = field(default_factory=dict)
    tileset: Optional[TileSet] = None

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.conjuncts]

    @property
    def formula(self) -> Formula:
        return And(tuple(phi for _, phi in self.conjuncts))

    def conjunct(self, name: str) -> Formula:
        for key, phi in self.conjuncts:
            if key == name:
                return phi
        raise KeyError(name)

    def signature(self) -> Signature:
        sig_letters: Dict[str, int] = {}
        for _, phi in self.conjuncts:
            sig_letters.update(letters(phi))
        return Signature(sig_letters)


# ---------------------------------------------------------------------------
# Base formula A
# ---------------------------------------------------------------------------

def _succ(a: str, b: str) -> Atom:
    return Atom(SUCC_LETTER, (a, b))


def _mark(v: str) -> Atom:
    return Atom(MARK_LETTER, (v,))


def _tile(t: int, v: str) -> Atom:
    return Atom(tile_letter(t), (v,))


def untiled(tileset: TileSet, v: str = X) -> Formula:
    """U(v): no tile letter holds of v."""
    return conj(*(Not(_tile(t, v)) for t in range(len(tileset))))


def _base_conjuncts(tileset: TileSet) -> Dict[str, Formula]:
    tiles = range(len(tileset))
    p = Atom(PARITY_LETTER)
    some_mark = Exists(X, _mark(X))
    out: Dict[str, Formula] = {}
    out["A_0"] = Exists(X, Box(untiled(tileset, X)))
    out["A_1"] = Exists(X, And((Not(untiled(tileset, X)), _mark(X))))
    out["A_2"] = Forall(X, Exists(Y, _succ(X, Y)))
    out["A_3"] = Forall(X, Forall(Y, Implies(_succ(X, Y), Box(Implies(some_mark, _succ(X, Y))))))
    out["A_4"] = Forall(X, Forall(Y, Implies(
        _succ(X, Y),
        Box(Iff(_mark(X), And((Not(p), PDia1(_mark(Y)), Not(PDia1Iter(2, _mark(Y))))))),
    )))
    out["A_5"] = Forall(X, Forall(Y, Box(conj(*(
        Implies(And((_mark(X), _tile(t, Y))), Box(Implies(_mark(X), _tile(t, Y))))
        for t in tiles
    )))))
    out["A_6"] = Forall(X, Box(conj(*(
        Implies(_tile(t, X), conj(*(Not(_tile(u, X)) for u in tiles if u != t)))
        for t in tiles
    ))))
    out["A_7"] = Forall(X, Forall(Y, Box(conj(*(
        Implies(And((_succ(X, Y), _tile(t, X))),
                _any_tile(u for u in tiles if tileset.tiles[t].right == tileset.tiles[u].left))
        for t in tiles
    )))))
    out["A_8"] = Forall(X, Forall(Y, Box(conj(*(
        Implies(And((_mark(X), _tile(t, Y))),
                Box(Implies(Exists(Y, And((_succ(X, Y), _mark(Y)))),
                            _any_tile(u for u in tiles if tileset.tiles[t].up == tileset.tiles[u].down))))
        for t in tiles
    )))))
    out["A_9"] = Forall(X, Implies(_mark(X), Box(PDia1(_tile(0, X)))))
    out["A_9•"] = Forall(X, Implies(_mark(X), Box(Implies(
        Exists(Y, _mark(Y)), PDia1(Implies(Exists(Y, _mark(Y)), _tile(0, X)))))))
    return out


def _any_tile(indices) -> Formula:
    return disj(*(_tile(u, Y) for u in indices))


def _letter_map(tileset: TileSet) -> Dict[str, str]:
    out = {
        SUCC_LETTER: "immediate successor on marks",
        MARK_LETTER: "element marking the world",
        PARITY_LETTER: "true at worlds separating consecutive rows",
    }
    for t in range(len(tileset)):
        out[tile_letter(t)] = f"tile type {t}" + (" (recurrence target)" if t == 0 else "")
    return out


def _require_tiles(tileset: TileSet) -> None:
    if tileset is None or len(tileset) == 0:
        raise ReductionError("empty tile set")


def gen_base(tileset: TileSet) -> ReductionArtifact:
    """The ten conjuncts A_0..A_9."""
    _require_tiles(tileset)
    base = _base_conjuncts(tileset)
    names = [f"A_{i}" for i in range(10)]
    return ReductionArtifact("A", tileset.s, [(n, base[n]) for n in names], _letter_map(tileset), tileset)


def gen_variant(tileset: TileSet, which: str) -> ReductionArtifact:
    """B (A_0..A_8) or A• (A_0..A_8 plus A_9•)."""
    _require_tiles(tileset)
    base = _base_conjuncts(tileset)
    names = [f"A_{i}" for i in range(9)]
    if which in ("Abullet", "A•"):
        names.append("A_9•")
        which = "Abullet"
    elif which != "B":
        raise VariantMismatchError(f"unknown variant {which!r}; expected B or Abullet")
    return ReductionArtifact(which, tileset.s, [(n, base[n]) for n in names], _letter_map(tileset), tileset)


# ---------------------------------------------------------------------------
# Passes
# ---------------------------------------------------------------------------

def prime_pass(art: ReductionArtifact) -> ReductionArtifact:
    """Replace each ``Succ(a, b)`` with ``⧈(P{s+1}(a) ∧ P{s+2}(b))``."""
    if art.variant != "A":
        raise VariantMismatchError(f"prime pass expects variant A, got {art.variant}")
    left, right = tile_letter(art.s + 1), tile_letter(art.s + 2)

    def encode(atom: Atom) -> Optional[Formula]:
        if atom.letter == SUCC_LETTER:
            a, b = atom.args
            return PDia1(And((Atom(left, (a,)), Atom(right, (b,)))))
        return None

    conjuncts = [(f"{name}'", substitute_atoms(phi, encode)) for name, phi in art.conjuncts]
    letter_map = {k: v for k, v in art.letter_map.items() if k != SUCC_LETTER}
    letter_map[left] = "left end of a successor pair"
    letter_map[right] = "right end of a successor pair"
    return ReductionArtifact("Aprime", art.s, conjuncts, letter_map, art.tileset)


def _threshold(n: int, v: str) -> Formula:
    """⧈₂ⁿ(q ∧ P(v))."""
    return PDia2Iter(n, And((Atom(XBOX_LETTER), Atom(PDIA2_LETTER, (v,)))))


def gen_beta(n: int, target: str, s: int) -> Formula:
    """β_n(target): ``target`` carries code n relative to the current block's mark."""
    if not 0 <= n <= s + 2:
        raise ReductionError(f"beta index {n} outside 0..{s + 2}")
    if target not in (X, Y):
        raise ReductionError(f"beta target must be x or y, got {target!r}")
    other = Y if target == X else X
    return Exists(other, And((
        _threshold(s + 4, other),
        Not(_threshold(s + 5, other)),
        PDia2(And((_threshold(n + 1, other), Not(_threshold(n + 2, other)),
                   Atom(PDIA2_LETTER, (target,))))),
    )))


def star_pass(art: ReductionArtifact) -> ReductionArtifact:
    """Rewrite A' over the two letters P and q."""
    if art.variant != "Aprime":
        raise VariantMismatchError(f"star pass expects variant Aprime, got {art.variant}")
    s = art.s
    tile_names = {tile_letter(n): n for n in range(s + 3)}

    def collapse(node: Formula) -> Optional[Formula]:
        if isinstance(node, Atom):
            if node.letter in tile_names:
                return gen_beta(tile_names[node.letter], node.args[0], s)
            if node.letter == MARK_LETTER:
                return And((Atom(XBOX_LETTER), Atom(PDIA2_LETTER, node.args)))
            return None
        if isinstance(node, PDia1):
            return PDia2(node.body, node.plus)
        if isinstance(node, PDia1Iter):
            return PDia2Iter(node.n, node.body, node.plus)
        return None

    conjuncts = []
    for name, phi in art.conjuncts:
        index = name.rstrip("'").split("_", 1)[1]
        if index == "4":
            conjuncts.append(("A_4*", _star_a4(s)))
        elif index == "9":
            conjuncts.append(("A_9*", Forall(X, Implies(
                And((Atom(XBOX_LETTER), Atom(PDIA2_LETTER, (X,)))), Box(PDia2(gen_beta(0, X, s)))))))
        else:
            conjuncts.append((f"A_{index}*", rewrite(phi, collapse)))
    letter_map = {
        PDIA2_LETTER: "single monadic letter encoding marks and tile codes",
        XBOX_LETTER: "true exactly at the first world of each block",
    }
    return ReductionArtifact("Astar", s, conjuncts, letter_map, art.tileset)


def _star_a4(s: int) -> Formula:
    qp_x = And((Atom(XBOX_LETTER), Atom(PDIA2_LETTER, (X,))))
    all_p = Forall(X, Atom(PDIA2_LETTER, (X,)))
    return Forall(X, Forall(Y, Implies(
        PDia2(And((gen_beta(s + 1, X, s), gen_beta(s + 2, Y, s)))),
        Box(Iff(qp_x, And((Not(all_p), _threshold(s + 4, Y), Not(_threshold(s + 5, Y)))))),
    )))


def boxplus_formula(phi: Formula, expanded: bool = False) -> Formula:
    """Replace □ with □⁺ throughout.

    Unexpanded mode keeps the macros and flags them reflexive, so the pass is
    idempotent; expanded mode first rewrites to the core syntax.
    """
    if expanded:
        return rewrite(expand(phi), lambda n: BoxPlus(n.body) if isinstance(n, Box) else None)

    def plus(node: Formula) -> Optional[Formula]:
        if isinstance(node, Box):
            return BoxPlus(node.body)
        if isinstance(node, (Dia, PDia1, PDia2, XBox, BoxIter, DiaIter, PDia1Iter, PDia2Iter, XBoxIter)):
            return None if node.plus else replace(node, plus=True)
        return None

    return rewrite(phi, plus)


def boxplus_pass(art: ReductionArtifact, expanded: bool = False) -> ReductionArtifact:
    variant = {"Astar": "Aplus", "B": "Bplus"}.get(art.variant, art.variant + "+")
    conjuncts = [(f"{name}+", boxplus_formula(phi, expanded)) for name, phi in art.conjuncts]
    return ReductionArtifact(variant, art.s, conjuncts, dict(art.letter_map), art.tileset)


def generate(tileset: TileSet, variant: str) -> ReductionArtifact:
    """Build any named variant from a tile set."""
    if variant == "A":
        return gen_base(tileset)
    if variant == "Aprime":
        return prime_pass(gen_base(tileset))
    if variant == "Astar":
        return star_pass(prime_pass(gen_base(tileset)))
    if variant == "Aplus":
        return boxplus_pass(star_pass(prime_pass(gen_base(tileset))))
    if variant in ("B", "Abullet"):
        return gen_variant(tileset, variant)
    if variant == "Bplus":
        return boxplus_pass(gen_variant(tileset, "B"))
    raise VariantMismatchError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# Propositional separation formulas and axioms
# ---------------------------------------------------------------------------

def _p() -> Atom:
    return Atom("p")


def _q() -> Atom:
    return Atom("q")


def gen_separation(kind: str, n: int = 0) -> Formula:
    """``Z``, ``ref``, ``boxnref`` (□ⁿref) or ``xboxnz`` (⊠ⁿZ)."""
    if n < 0:
        raise ReductionError(f"iteration count must be nonnegative, got {n}")
    p = _p()
    z = Implies(Box(Implies(Box(p), p)), Implies(Dia(Box(p)), Box(p)))
    ref = Implies(Box(p), p)
    kind = kind.lower()
    if kind == "z":
        return z
    if kind == "ref":
        return ref
    if kind == "boxnref":
        return BoxIter(n, ref)
    if kind == "xboxnz":
        return XBoxIter(n, z)
    raise ReductionError(f"unknown separation formula {kind!r}")


def parse_separation(spec: str) -> Formula:
    """``Z``, ``ref``, ``boxnref:<n>`` or ``xboxnz:<n>``."""
    kind, _, count = spec.partition(":")
    if count and not count.isdigit():
        raise ReductionError(f"bad iteration count in {spec!r}")
    return gen_separation(kind, int(count) if count else 0)


def gen_axioms(name: str) -> List[Formula]:
    """Axioms added to K by S4.3, K4.3.D.X or K4.3."""
    p, q = _p(), _q()
    four = Implies(Box(p), Box(Box(p)))
    dot3 = Or((Box(Implies(Box(p), q)), Box(Implies(Box(q), p))))
    dot3_plus = Or((Box(Implies(BoxPlus(p), q)), Box(Implies(BoxPlus(q), p))))
    key = name.upper()
    if key == "S4.3":
        return [gen_separation("ref"), four, dot3]
    if key == "K4.3.D.X":
        return [four, dot3_plus, Dia(TOP), Implies(Box(Box(p)), Box(p))]
    if key == "K4.3":
        return [four, dot3_plus]
    raise ReductionError(f"unknown axiom system {name!r}")


# ---------------------------------------------------------------------------
# Artifact files
# ---------------------------------------------------------------------------

def artifact_metrics(art: ReductionArtifact):
    return metrics(art.formula)


def format_artifact(art: ReductionArtifact) -> str:
    sig = art.signature()
    lines = [f"# variant: {art.variant}", f"# s: {art.s}"]
    lines.append("# signature: " + " ".join(f"{k} {v}" for k, v in sorted(sig.letters.items())))
    if art.tileset is not None:
        for i, t in enumerate(art.tileset.tiles):
            lines.append(f"# tile {i}: {t.left} {t.right} {t.up} {t.down}")
    for letter, meaning in sorted(art.letter_map.items()):
        lines.append(f"# letter {letter}: {meaning}")
    for name, phi in art.conjuncts:
        lines.append(f"# {name}")
        lines.append(to_sexpr(phi))
    return "\n".join(lines) + "\n"


def parse_artifact(text: str) -> ReductionArtifact:
    meta: Dict[str, str] = {}
    sig_letters: Dict[str, int] = {}
    tiles: Dict[int, TileType] = {}
    letter_map: Dict[str, str] = {}
    pending: List[Tuple[str, str]] = []
    name: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("tile "):
                index, _, edges = body[5:].partition(":")
                try:
                    tiles[int(index)] = TileType(*(int(c) for c in edges.split()))
                except (TypeError, ValueError):
                    raise ArtifactFormatError(f"line {lineno}: bad tile line {line!r}") from None
            elif body.startswith("letter "):
                letter, _, meaning = body[7:].partition(":")
                letter_map[letter.strip()] = meaning.strip()
            elif body.startswith("signature:"):
                parts = body.split(":", 1)[1].split()
                sig_letters = {parts[i]: int(parts[i + 1]) for i in range(0, len(parts), 2)}
            elif ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            else:
                name = body
            continue
        if name is None:
            raise ArtifactFormatError(f"line {lineno}: formula without a '# A_i' name line")
        pending.append((name, line))
        name = None
    if "variant" not in meta or "s" not in meta:
        raise ArtifactFormatError("artifact header must give variant and s")
    sig = Signature(sig_letters)
    conjuncts = [(n, parse(t, sig)) for n, t in pending]
    tileset = TileSet(tuple(tiles[i] for i in sorted(tiles))) if tiles else None
    return ReductionArtifact(meta["variant"], int(meta["s"]), conjuncts, letter_map, tileset)


def write_artifact(art: ReductionArtifact, path) -> None:
    Path(path).write_text(format_artifact(art), encoding="utf-8")


def read_artifact(path) -> ReductionArtifact:
    try:
        return parse_artifact(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ArtifactFormatError(f"cannot read artifact {path}: {exc}") from None


def notation_lines(art: ReductionArtifact) -> List[str]:
    return [f"{name} = {to_notation(phi)}" for name, phi in art.conjuncts]
