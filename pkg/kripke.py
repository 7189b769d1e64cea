"""Kripke frames, predicate models and the witness-model builders.

Infinite frames are materialised as finite prefixes.  A prefix world whose
successor set continues past the prefix is flagged ``truncated_above``; a
truncated domain carries one generic element standing for every element above
the bound K.  Valuations answer with ``Truth`` codes over all worlds at once so
the evaluator can work on whole vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from tiling import PeriodicTiling, TileSet, TileType, TilingGrid, check_grid, recurrent_certificate
from workbench_types import InputError, Truth, WorkbenchError

F, U, T = int(Truth.FALSE), int(Truth.UNKNOWN), int(Truth.TRUE)

GENERIC = "*"
Element = Union[int, str]


class ModelError(WorkbenchError):
    """Base class for frame and model errors."""


class CertificateError(ModelError, InputError):
    pass


class ModelParameterError(ModelError, InputError):
    pass


class ModelFormatError(ModelError, InputError):
    pass


class MissingLetterError(ModelError, InputError):
    pass


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

@dataclass
class Frame:
    """A finite frame or a prefix of an infinite one.

    Linear frames order their worlds by index (w R v for w < v, plus w R w
    when ``reflexive[w]``); non-linear frames carry an explicit relation.
    """

    kind: str
    params: Dict
    reflexive: np.ndarray
    truncated_above: np.ndarray
    labels: List[str] = field(default_factory=list)
    relation: Optional[np.ndarray] = None

    def __post_init__(self):
        self.reflexive = np.asarray(self.reflexive, dtype=bool)
        self.truncated_above = np.asarray(self.truncated_above, dtype=bool)
        if not self.labels:
            self.labels = [str(w) for w in range(self.size)]

    @property
    def size(self) -> int:
        return int(self.reflexive.shape[0])

    @property
    def linear(self) -> bool:
        return self.relation is None

    @property
    def truncated(self) -> bool:
        return bool(self.truncated_above.any())

    def matrix(self) -> np.ndarray:
        """Accessibility as an n x n boolean matrix."""
        if self.relation is not None:
            return self.relation.copy()
        n = self.size
        out = np.triu(np.ones((n, n), dtype=bool), k=1)
        out[np.arange(n), np.arange(n)] = self.reflexive
        return out

    def sees(self, w: int, v: int) -> bool:
        if self.relation is not None:
            return bool(self.relation[w, v])
        return w < v or (w == v and bool(self.reflexive[w]))

    def successors(self, w: int) -> List[int]:
        return [v for v in range(self.size) if self.sees(w, v)]

    def as_finite(self) -> "Frame":
        """The same worlds read as a complete finite frame."""
        return replace(self, kind=f"{self.kind}-finite", truncated_above=np.zeros(self.size, dtype=bool))


def nat_prefix(horizon: int, reflexive: Optional[Iterable[int]] = None) -> Frame:
    """Prefix 0..H-1 of ⟨ℕ,R⟩ with < ⊆ R ⊆ ≤; ``reflexive=None`` means every world."""
    if horizon < 1:
        raise ModelParameterError(f"horizon must be positive, got {horizon}")
    refl = np.ones(horizon, dtype=bool)
    if reflexive is not None:
        refl[:] = False
        for w in reflexive:
            if 0 <= w < horizon:
                refl[w] = True
    kind = "natle" if refl.all() else "natlt" if not refl.any() else "natrefl"
    return Frame(kind, {"H": horizon, "reflexive": [int(w) for w in np.flatnonzero(refl)]},
                 refl, np.ones(horizon, dtype=bool))


def gn_prefix(n: int, horizon: int) -> Frame:
    """Irreflexive chain 0..n-1 followed by a reflexive chain."""
    frame = nat_prefix(horizon, range(n, horizon))
    frame.kind, frame.params = "gn", {"n": n, "H": horizon}
    return frame


def hn_prefix(n: int, horizon: int) -> Frame:
    """Reflexive chain 0..n-1 followed by an irreflexive chain."""
    frame = nat_prefix(horizon, range(0, min(n, horizon)))
    frame.kind, frame.params = "hn", {"n": n, "H": horizon}
    return frame


def chain(length: int, reflexive: bool) -> Frame:
    """A finite (complete) chain."""
    if length < 1:
        raise ModelParameterError(f"chain length must be positive, got {length}")
    return Frame("refl" if reflexive else "irrefl", {"len": length},
                 np.full(length, reflexive), np.zeros(length, dtype=bool))


def finite_frame(size: int, edges: Iterable[Tuple[int, int]]) -> Frame:
    relation = np.zeros((size, size), dtype=bool)
    for w, v in edges:
        if not (0 <= w < size and 0 <= v < size):
            raise ModelParameterError(f"edge ({w},{v}) outside 0..{size - 1}")
        relation[w, v] = True
    return Frame("finite", {"size": size}, relation.diagonal().copy(), np.zeros(size, dtype=bool),
                 relation=relation)


def ordinal_prefix(m: int, k: int, copy_len: int, reflexive: bool = True) -> Frame:
    """Prefix of ω·m+k: m truncated copies of length L, then the k final points."""
    if m < 1 or k < 0 or copy_len < 1:
        raise ModelParameterError(f"ordinal needs m >= 1, k >= 0, L >= 1; got {m}, {k}, {copy_len}")
    size = m * copy_len + k
    truncated = np.zeros(size, dtype=bool)
    truncated[: m * copy_len] = True
    labels = [f"ω·{c}+{i}" for c in range(m) for i in range(copy_len)] + [f"ω·{m}+{i}" for i in range(k)]
    return Frame("ord", {"m": m, "k": k, "L": copy_len}, np.full(size, reflexive), truncated, labels)


def dense_prefix(labels: Sequence[Fraction], chain_worlds: Sequence[int], reflexive: bool = True) -> Frame:
    """Finite ascending sample of a dense order; every world is truncated."""
    values = [Fraction(v) for v in labels]
    if any(a >= b for a, b in zip(values, values[1:])):
        raise ModelParameterError("dense labels must be strictly ascending")
    if any(not 0 <= c < len(values) for c in chain_worlds) or list(chain_worlds) != sorted(set(chain_worlds)):
        raise ModelParameterError("chain worlds must be ascending indices into the labels")
    frame = Frame("dense", {"labels": [str(v) for v in values], "chain": list(chain_worlds)},
                  np.full(len(values), reflexive), np.ones(len(values), dtype=bool), [str(v) for v in values])
    return frame


def interleaved_dense_prefix(chain_len: int, reflexive: bool = True) -> Frame:
    """Chain worlds at 1..chain_len with one extra world below the first and one between each pair."""
    labels: List[Fraction] = [Fraction(1, 2)]
    chain_worlds: List[int] = []
    for k in range(chain_len):
        if k > 0:
            labels.append(Fraction(2 * k + 1, 2))
        chain_worlds.append(len(labels))
        labels.append(Fraction(k + 1))
    return dense_prefix(labels, chain_worlds, reflexive)


def frame_from_spec(spec: str, horizon: int = 20, length: Optional[int] = None) -> Frame:
    """Resolve ``natle``, ``natlt``, ``natrefl:1,3``, ``gn:<n>``, ``hn:<n>``, ``ord:<m>,<k>``,
    ``dense:<chain>``, ``refl`` or ``irrefl``."""
    kind, _, arg = spec.partition(":")
    size = length if length is not None else horizon
    try:
        if kind == "natle":
            return nat_prefix(size)
        if kind == "natlt":
            return nat_prefix(size, ())
        if kind == "natrefl":
            return nat_prefix(size, [int(w) for w in arg.split(",") if w])
        if kind == "gn":
            return gn_prefix(int(arg), size)
        if kind == "hn":
            return hn_prefix(int(arg), size)
        if kind == "ord":
            m, k = (int(v) for v in arg.split(","))
            return ordinal_prefix(m, k, horizon)
        if kind == "dense":
            return interleaved_dense_prefix(int(arg) if arg else 12)
        if kind in ("refl", "irrefl"):
            return chain(size, kind == "refl")
    except ValueError:
        raise ModelParameterError(f"bad frame parameters in {spec!r}") from None
    raise ModelParameterError(f"unknown frame kind {spec!r}")


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

Valuation = Callable[[str, Tuple[Element, ...]], np.ndarray]


@dataclass
class PredicateModel:
    """Frame, domains, and a valuation returning Truth codes over all worlds."""

    frame: Frame
    domains: List[Tuple[int, ...]]
    letters: Dict[str, int]
    valuation: Valuation
    domain_truncated: bool = False
    bound: Optional[int] = None
    description: str = "model"
    generator: Optional[Dict] = None
    tables: Optional[Dict[str, Set[Tuple[int, Tuple[int, ...]]]]] = None
    _atom_cache: Dict = field(default_factory=dict, repr=False)
    _mask_cache: Dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.frame.size

    @property
    def truncated(self) -> bool:
        return self.frame.truncated or self.domain_truncated

    def elements(self) -> List[int]:
        return sorted(set().union(*self.domains)) if self.domains else []

    def domain(self, w: int) -> Tuple[int, ...]:
        return self.domains[w]

    def exists(self, element: Element) -> np.ndarray:
        """Worlds whose domain contains ``element``."""
        if element == GENERIC:
            return np.full(self.size, self.domain_truncated)
        mask = self._mask_cache.get(element)
        if mask is None:
            mask = np.array([element in d for d in self.domains], dtype=bool)
            self._mask_cache[element] = mask
        return mask

    def atom(self, letter: str, args: Tuple[Element, ...]) -> np.ndarray:
        key = (letter, args)
        hit = self._atom_cache.get(key)
        if hit is not None:
            return hit
        arity = self.letters.get(letter)
        if arity is None:
            raise MissingLetterError(f"{self.description} does not interpret letter {letter!r}")
        if arity != len(args):
            raise ModelError(f"letter {letter!r} has arity {arity}, got {len(args)} arguments")
        codes = np.asarray(self.valuation(letter, args), dtype=np.int8)
        codes.setflags(write=False)
        self._atom_cache[key] = codes
        return codes

    def holds(self, letter: str, args: Tuple[Element, ...], w: int) -> bool:
        return int(self.atom(letter, args)[w]) == T

    def extension(self, letter: str, w: int) -> List[Tuple[int, ...]]:
        """In-bound argument tuples satisfying ``letter`` at ``w``."""
        arity = self.letters[letter]
        return [args for args in product(self.domains[w], repeat=arity) if self.holds(letter, args, w)]


def check_expanding_domains(model: PredicateModel) -> List[Tuple[int, int]]:
    """Pairs w R v with D(w) not a subset of D(v)."""
    violations = []
    matrix = model.frame.matrix()
    for w, v in zip(*np.nonzero(matrix)):
        if not set(model.domains[w]) <= set(model.domains[v]):
            violations.append((int(w), int(v)))
    return violations


def check_constant_domain(model: PredicateModel) -> bool:
    return all(set(d) == set(model.domains[0]) for d in model.domains)


def table_model(frame: Frame, domains: Sequence[Iterable[int]], letters: Dict[str, int],
                tables: Dict[str, Set[Tuple[int, Tuple[int, ...]]]], description: str = "explicit") -> PredicateModel:
    """Model with explicit atom tables ``letter -> {(world, args)}``."""
    doms = [tuple(sorted(set(d))) for d in domains]
    if len(doms) != frame.size:
        raise ModelParameterError(f"expected {frame.size} domains, got {len(doms)}")
    if any(not d for d in doms):
        raise ModelParameterError("every world needs a nonempty domain")
    frozen = {letter: set(tables.get(letter, set())) for letter in letters}
    for letter, rows in frozen.items():
        for w, args in rows:
            if len(args) != letters[letter] or not set(args) <= set(doms[w]):
                raise ModelParameterError(f"{letter}{args} at world {w} is not over D({w})")

    def valuation(letter: str, args: Tuple[Element, ...]) -> np.ndarray:
        out = np.full(frame.size, F, dtype=np.int8)
        for w, row in frozen[letter]:
            if row == args:
                out[w] = T
        return out

    return PredicateModel(frame, doms, dict(letters), valuation, description=description, tables=frozen)


def random_finite_model(rng: np.random.Generator, worlds: int, letters: Dict[str, int],
                        max_domain: int = 3, constant: bool = False, linear: bool = False) -> PredicateModel:
    """Random model with expanding (or constant) domains, for fuzzing."""
    if linear:
        frame = chain(worlds, True)
        frame.reflexive = rng.random(worlds) < 0.5
    else:
        edges = [(w, v) for w in range(worlds) for v in range(worlds) if rng.random() < 0.35]
        frame = finite_frame(worlds, edges)
    if constant:
        base = tuple(range(int(rng.integers(1, max_domain + 1))))
        domains = [set(base) for _ in range(worlds)]
    else:
        domains = [set(int(e) for e in rng.choice(max_domain, size=int(rng.integers(1, max_domain + 1)),
                                                   replace=False)) for _ in range(worlds)]
        matrix = frame.matrix()
        changed = True
        while changed:
            changed = False
            for w, v in zip(*np.nonzero(matrix)):
                if not domains[w] <= domains[v]:
                    domains[v] |= domains[w]
                    changed = True
    tables: Dict[str, Set] = {}
    for letter, arity in letters.items():
        rows = set()
        for w in range(worlds):
            for args in product(sorted(domains[w]), repeat=arity):
                if rng.random() < 0.5:
                    rows.add((w, tuple(args)))
        tables[letter] = rows
    return table_model(frame, domains, letters, tables, description="random")


# ---------------------------------------------------------------------------
# Witness models of the tiling reductions
# ---------------------------------------------------------------------------

def alpha(k: int) -> int:
    """k-th term of 0, 0 1, 0 1 2, 0 1 2 3, ..."""
    if k < 0:
        raise ModelParameterError(f"alpha index must be nonnegative, got {k}")
    j = int((np.sqrt(8 * k + 1) - 1) // 2)
    while j * (j + 1) // 2 > k:
        j -= 1
    while (j + 1) * (j + 2) // 2 <= k:
        j += 1
    return k - j * (j + 1) // 2


def _alpha_array(count: int) -> np.ndarray:
    return np.array([alpha(k) for k in range(count)], dtype=np.int64)


class TilingInterpretation:
    """Atoms of the successor-and-mark model at "row worlds" u = 0, 1, 2, ...

    p holds at odd u; M(a) iff u = 2a; Succ(a, b) iff u is even and
    b = a + 1; P_t(a) iff u = 2m and f(a, m) = t.  With ``prime`` the binary
    letter is replaced by P{s+1}(c) iff u = 2m and c = alpha_m, and
    P{s+2}(c) iff u = 2m and c = alpha_m + 1.
    """

    def __init__(self, tileset: TileSet, periodic: PeriodicTiling, bound: int, prime: bool = False):
        self.tileset = tileset
        self.periodic = periodic
        self.bound = bound
        self.prime = prime
        self.s = tileset.s
        block = periodic.block.cells
        # per block row: TRUE if every column holds t, FALSE if none does
        self.row_codes = np.full((block.shape[0], len(tileset)), U, dtype=np.int8)
        for t in range(len(tileset)):
            self.row_codes[np.all(block == t, axis=1), t] = T
            self.row_codes[~np.any(block == t, axis=1), t] = F

    def letters(self) -> Dict[str, int]:
        out = {"p": 0, "M": 1}
        out.update({f"P{t}": 1 for t in range(len(self.tileset))})
        if self.prime:
            out[f"P{self.s + 1}"] = 1
            out[f"P{self.s + 2}"] = 1
        else:
            out["Succ"] = 2
        return out

    def codes(self, letter: str, args: Tuple[Element, ...], u: np.ndarray) -> np.ndarray:
        even = u % 2 == 0
        m = u // 2
        K = self.bound
        if letter == "p":
            return np.where(even, F, T).astype(np.int8)
        if letter == "M":
            (a,) = args
            if a == GENERIC:
                return np.where(even & (u >= 2 * (K + 1)), U, F).astype(np.int8)
            return np.where(u == 2 * a, T, F).astype(np.int8)
        if letter == "Succ" and not self.prime:
            a, b = args
            if b == GENERIC:
                hit = U if (a == GENERIC or a == K) else F
            elif a == GENERIC:
                hit = F
            else:
                hit = T if b == a + 1 else F
            return np.where(even, hit, F).astype(np.int8)
        index = int(letter[1:]) if letter.startswith("P") and letter[1:].isdigit() else None
        if index is not None and index < len(self.tileset):
            (a,) = args
            rows = m % self.periodic.block.height
            if a == GENERIC:
                out = self.row_codes[rows, index]
            elif a < 0:
                out = np.full(u.shape, F, dtype=np.int8)
            else:
                out = np.where(self.periodic.block.cells[rows, a % self.periodic.block.width] == index, T, F)
            return np.where(even, out, F).astype(np.int8)
        if self.prime and index in (self.s + 1, self.s + 2):
            (c,) = args
            shift = index - (self.s + 1)
            target = _alpha_array(int(m.max()) + 1 if m.size else 1)[m] + shift
            if c == GENERIC:
                out = np.where(target > K, U, F)
            else:
                out = np.where(target == c, T, F)
            return np.where(even, out, F).astype(np.int8)
        raise MissingLetterError(f"letter {letter!r} is not part of this interpretation")


def _tiling_domain(bound: int) -> Tuple[int, ...]:
    return tuple(range(-1, bound + 1))


def _refl_param(frame: Frame) -> str:
    if frame.reflexive.all():
        return "all"
    if not frame.reflexive.any():
        return "none"
    return ",".join(str(int(w)) for w in np.flatnonzero(frame.reflexive))


def _refl_arg(text: str) -> Optional[List[int]]:
    if text == "all":
        return None
    if text == "none":
        return []
    return [int(w) for w in text.split(",")]


def _require_certificate(tileset: TileSet, periodic: PeriodicTiling) -> None:
    if not recurrent_certificate(tileset, periodic):
        raise CertificateError("periodic block is not a recurrent certificate for the tile set")


def _row_world_model(frame: Frame, interp: TilingInterpretation, row_world: np.ndarray, valid: np.ndarray,
                     description: str, generator: Dict) -> PredicateModel:
    def valuation(letter: str, args: Tuple[Element, ...]) -> np.ndarray:
        codes = interp.codes(letter, args, np.where(valid, row_world, 0))
        return np.where(valid, codes, F)

    domain = _tiling_domain(interp.bound)
    return PredicateModel(frame, [domain] * frame.size, interp.letters(), valuation,
                          domain_truncated=True, bound=interp.bound, description=description, generator=generator)


def build_M0(tileset: TileSet, periodic: PeriodicTiling, horizon: int, bound: int,
             reflexive: Optional[Iterable[int]] = None) -> PredicateModel:
    """Witness model for A on ⟨ℕ,≤⟩ (or another reflexivity pattern)."""
    _require_certificate(tileset, periodic)
    if horizon < 1 or bound < 1:
        raise ModelParameterError("horizon and domain bound must be positive")
    frame = nat_prefix(horizon, reflexive)
    interp = TilingInterpretation(tileset, periodic, bound)
    worlds = np.arange(horizon)
    return _row_world_model(frame, interp, worlds, np.ones(horizon, dtype=bool),
                            f"M0(H={horizon},K={bound})",
                            {"kind": "M0", "H": horizon, "K": bound, "refl": _refl_param(frame)})


def build_M0_prime(tileset: TileSet, periodic: PeriodicTiling, horizon: int, bound: int,
                   reflexive: Optional[Iterable[int]] = None) -> PredicateModel:
    _require_certificate(tileset, periodic)
    if horizon < 1 or bound < 1:
        raise ModelParameterError("horizon and domain bound must be positive")
    frame = nat_prefix(horizon, reflexive)
    interp = TilingInterpretation(tileset, periodic, bound, prime=True)
    worlds = np.arange(horizon)
    return _row_world_model(frame, interp, worlds, np.ones(horizon, dtype=bool),
                            f"M0'(H={horizon},K={bound})",
                            {"kind": "M0prime", "H": horizon, "K": bound, "refl": _refl_param(frame)})


@dataclass(frozen=True)
class StarLabeling:
    """World coder for the block model: block length 2s+8.

    Block m lists w_m, w̄_m, then v^n_m, v̄^n_m for n = s+2 down to 0.
    """

    s: int

    @property
    def block(self) -> int:
        return 2 * self.s + 8

    def encode(self, kind: str, m: int, n: Optional[int] = None) -> int:
        base = self.block * m
        if kind == "w":
            return base
        if kind == "wbar":
            return base + 1
        if n is None or not 0 <= n <= self.s + 2:
            raise ModelParameterError(f"code index {n} outside 0..{self.s + 2}")
        offset = 2 + 2 * (self.s + 2 - n)
        if kind == "v":
            return base + offset
        if kind == "vbar":
            return base + offset + 1
        raise ModelParameterError(f"unknown world kind {kind!r}")

    def decode(self, u: int) -> Tuple[str, int, Optional[int]]:
        m, r = divmod(u, self.block)
        if r == 0:
            return "w", m, None
        if r == 1:
            return "wbar", m, None
        n = self.s + 2 - (r - 2) // 2
        return ("v" if r % 2 == 0 else "vbar"), m, n

    def label(self, u: int) -> str:
        kind, m, n = self.decode(u)
        names = {"w": "w", "wbar": "w̄", "v": "v", "vbar": "v̄"}
        return f"{names[kind]}_{m}" if n is None else f"{names[kind]}^{n}_{m}"


def build_M0_star(tileset: TileSet, periodic: PeriodicTiling, blocks: int, bound: int,
                  reflexive: Optional[Iterable[int]] = None) -> PredicateModel:
    """Block model over the letters P and q."""
    _require_certificate(tileset, periodic)
    if blocks < 1 or bound < 1:
        raise ModelParameterError("block count and domain bound must be positive")
    labeling = StarLabeling(tileset.s)
    size = labeling.block * blocks
    frame = nat_prefix(size, reflexive)
    frame.labels = [labeling.label(u) for u in range(size)]
    interp = TilingInterpretation(tileset, periodic, bound, prime=True)
    worlds = np.arange(size)
    m, r = worlds // labeling.block, worlds % labeling.block
    s = tileset.s

    def valuation(letter: str, args: Tuple[Element, ...]) -> np.ndarray:
        if letter == "q":
            return np.where(r == 0, T, F).astype(np.int8)
        (a,) = args
        out = np.full(size, T, dtype=np.int8)  # barred worlds
        out[r == 0] = interp.codes("M", (a,), 2 * m[r == 0])
        for n in range(s + 3):
            at = r == labeling.encode("v", 0, n)
            if at.any():
                out[at] = interp.codes(f"P{n}", (a,), 2 * m[at])
        return out

    domain = _tiling_domain(bound)
    return PredicateModel(frame, [domain] * size, {"P": 1, "q": 0}, valuation, domain_truncated=True,
                          bound=bound, description=f"M0*(blocks={blocks},K={bound})",
                          generator={"kind": "M0star", "blocks": blocks, "K": bound, "refl": _refl_param(frame)})


def build_dense_model(tileset: TileSet, periodic: PeriodicTiling, frame: Frame, bound: int) -> PredicateModel:
    """Chain world w_k carries row world k; others copy the least chain world above them."""
    if not check_grid(tileset, periodic.block, wrap=True).ok:
        raise CertificateError("periodic block does not tile the plane")
    chain_worlds = frame.params.get("chain") if frame.kind == "dense" else None
    if not chain_worlds or len(chain_worlds) < 2:
        raise ModelParameterError("dense model needs a dense frame with at least two chain worlds")
    row_world = np.zeros(frame.size, dtype=np.int64)
    valid = np.zeros(frame.size, dtype=bool)
    for v in range(frame.size):
        above = [k for k, w in enumerate(chain_worlds) if v <= w]
        if above:
            row_world[v] = above[0]
            valid[v] = True
    interp = TilingInterpretation(tileset, periodic, bound)
    return _row_world_model(frame, interp, row_world, valid, f"dense(chain={len(chain_worlds)},K={bound})",
                            {"kind": "dense", "chain": len(chain_worlds), "K": bound,
                             "reflexive": bool(frame.reflexive.all())})


def build_ordinal_model(tileset: TileSet, periodic: PeriodicTiling, m: int, k: int, copy_len: int,
                        bound: int) -> PredicateModel:
    """First ω-copy carries the successor-and-mark interpretation; everything else is empty."""
    _require_certificate(tileset, periodic)
    if bound < 1:
        raise ModelParameterError("domain bound must be positive")
    frame = ordinal_prefix(m, k, copy_len)
    worlds = np.arange(frame.size)
    valid = worlds < copy_len
    interp = TilingInterpretation(tileset, periodic, bound)
    return _row_world_model(frame, interp, np.where(valid, worlds, 0), valid,
                            f"ordinal(ω·{m}+{k},L={copy_len},K={bound})",
                            {"kind": "ordinal", "m": m, "k": k, "L": copy_len, "K": bound})


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def format_model(model: PredicateModel, tileset: Optional[TileSet] = None,
                 periodic: Optional[PeriodicTiling] = None) -> str:
    """Generator form when the model came from a builder, explicit tables otherwise."""
    lines: List[str] = []
    if model.generator is not None:
        if tileset is None or periodic is None:
            raise ModelFormatError("generator models need the tile set and certificate to be saved")
        lines.append("model generator")
        lines.append("gen " + " ".join(f"{k}={v}" for k, v in model.generator.items()))
        for i, t in enumerate(tileset.tiles):
            lines.append(f"tile {i}: {t.left} {t.right} {t.up} {t.down}")
        block = periodic.block
        lines.append(f"block {block.width} {block.height}")
        lines += [" ".join(str(int(c)) for c in row) for row in block.cells]
        return "\n".join(lines) + "\n"
    frame = model.frame
    if frame.truncated or model.domain_truncated:
        raise ModelFormatError("only complete finite models can be written as tables")
    lines.append("model explicit")
    lines.append(f"worlds {frame.size}")
    matrix = frame.matrix()
    lines += [f"edge {w} {v}" for w, v in zip(*np.nonzero(matrix))]
    lines += [f"domain {w}: " + " ".join(str(e) for e in d) for w, d in enumerate(model.domains)]
    lines += [f"letter {name} {arity}" for name, arity in sorted(model.letters.items())]
    for letter in sorted(model.letters):
        for w in range(frame.size):
            for args in model.extension(letter, w):
                lines.append(" ".join(["atom", str(w), letter] + [str(a) for a in args]))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> PredicateModel:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] not in ("model generator", "model explicit"):
        raise ModelFormatError("model file must start with 'model generator' or 'model explicit'")
    try:
        if lines[0] == "model generator":
            return _parse_generator(lines[1:])
        return _parse_explicit(lines[1:])
    except (ValueError, IndexError, KeyError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None


def _parse_generator(lines: List[str]) -> PredicateModel:
    params: Dict[str, str] = {}
    tiles: Dict[int, TileType] = {}
    rows: List[List[int]] = []
    for line in lines:
        head, _, rest = line.partition(" ")
        if head == "gen":
            params = dict(item.split("=", 1) for item in rest.split())
        elif head == "tile":
            index, _, edges = rest.partition(":")
            tiles[int(index)] = TileType(*(int(c) for c in edges.split()))
        elif head == "block":
            continue
        else:
            rows.append([int(v) for v in line.split()])
    tileset = TileSet(tuple(tiles[i] for i in sorted(tiles)))
    periodic = PeriodicTiling(TilingGrid(np.array(rows)))
    kind = params.pop("kind")
    K = int(params["K"])
    refl = _refl_arg(params.get("refl", "all"))
    if kind == "M0":
        return build_M0(tileset, periodic, int(params["H"]), K, refl)
    if kind == "M0prime":
        return build_M0_prime(tileset, periodic, int(params["H"]), K, refl)
    if kind == "M0star":
        return build_M0_star(tileset, periodic, int(params["blocks"]), K, refl)
    if kind == "dense":
        frame = interleaved_dense_prefix(int(params["chain"]), params.get("reflexive", "True") == "True")
        return build_dense_model(tileset, periodic, frame, K)
    if kind == "ordinal":
        return build_ordinal_model(tileset, periodic, int(params["m"]), int(params["k"]), int(params["L"]), K)
    raise ModelFormatError(f"unknown generator {kind!r}")


def _parse_explicit(lines: List[str]) -> PredicateModel:
    size = 0
    edges: List[Tuple[int, int]] = []
    domains: Dict[int, List[int]] = {}
    letters: Dict[str, int] = {}
    tables: Dict[str, Set] = {}
    for line in lines:
        parts = line.split()
        head = parts[0]
        if head == "worlds":
            size = int(parts[1])
        elif head == "edge":
            edges.append((int(parts[1]), int(parts[2])))
        elif head == "domain":
            w = int(parts[1].rstrip(":"))
            domains[w] = [int(e) for e in parts[2:]]
        elif head == "letter":
            letters[parts[1]] = int(parts[2])
        elif head == "atom":
            w, letter = int(parts[1]), parts[2]
            if letter not in letters:
                raise ModelFormatError(f"atom for undeclared letter {letter!r}")
            tables.setdefault(letter, set()).add((w, tuple(int(a) for a in parts[3:])))
        else:
            raise ModelFormatError(f"unknown model line {line!r}")
    frame = finite_frame(size, edges)
    return table_model(frame, [domains[w] for w in range(size)], letters, tables)


def write_model(model: PredicateModel, path, tileset: Optional[TileSet] = None,
                periodic: Optional[PeriodicTiling] = None) -> None:
    Path(path).write_text(format_model(model, tileset, periodic), encoding="utf-8")


def read_model(path) -> PredicateModel:
    try:
        return parse_model(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from None
