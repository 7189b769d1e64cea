"""Two- and three-valued model checking, countermodel search and the ⧈-relation."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from formula_core import (
    And, Atom, Bottom, Box, BoxPlus, Dia, Exists, Forall, Formula, Iff, Implies, Not, Or, Top,
    PDIA1_LETTER, PDIA2_LETTER, PDIA2_VAR, desugar, expand, free_variables, letters,
)
from kripke import F, GENERIC, T, U, Element, Frame, PredicateModel, table_model
from reductions import ReductionArtifact
from workbench_types import CheckReport, ConjunctVerdict, GuardExceeded, InputError, Truth, WorkbenchError

DEFAULT_STEP_LIMIT = 50_000_000
DEFAULT_SEARCH_CAP = 1 << 20
TRACE_LIMIT = 24


class CheckError(WorkbenchError):
    """Base class for model-checking errors."""


class StepLimitExceeded(CheckError, GuardExceeded):
    pass


class SearchGuardExceeded(CheckError, GuardExceeded):
    pass


class AssignmentError(CheckError, InputError):
    """A free variable has no value, or the world is out of range."""


@dataclass
class Verdict:
    value: Truth
    trace: List[str] = field(default_factory=list)
    obligations: int = 0


# ---------------------------------------------------------------------------
# Two-valued evaluation on complete finite models
# ---------------------------------------------------------------------------

def eval2(model: PredicateModel, phi: Formula, world: int, env: Optional[Dict[str, Element]] = None) -> bool:
    """Literal per-world recursion; only for models without truncation."""
    if model.truncated:
        raise CheckError(f"{model.description} is a truncated prefix; use three-valued evaluation")
    _check_world(model, world)
    env = dict(env or {})
    for var, value in env.items():
        if value not in model.domain(world):
            raise AssignmentError(f"{var}={value} is not in the domain of world {world}")
    return _holds(model, desugar(phi), world, env)


def _holds(model: PredicateModel, node: Formula, w: int, env: Dict[str, Element]) -> bool:
    if isinstance(node, Atom):
        return model.holds(node.letter, _bind(node, env), w)
    if isinstance(node, Bottom):
        return False
    if isinstance(node, Top):
        return True
    if isinstance(node, Implies):
        return not _holds(model, node.left, w, env) or _holds(model, node.right, w, env)
    if isinstance(node, Not):
        return not _holds(model, node.body, w, env)
    if isinstance(node, And):
        return all(_holds(model, a, w, env) for a in node.args)
    if isinstance(node, Or):
        return any(_holds(model, a, w, env) for a in node.args)
    if isinstance(node, Iff):
        return _holds(model, node.left, w, env) == _holds(model, node.right, w, env)
    if isinstance(node, Box):
        return all(_holds(model, node.body, v, env) for v in model.frame.successors(w))
    if isinstance(node, BoxPlus):
        return _holds(model, node.body, w, env) and _holds(model, Box(node.body), w, env)
    if isinstance(node, Dia):
        worlds = model.frame.successors(w) + ([w] if node.plus else [])
        return any(_holds(model, node.body, v, env) for v in worlds)
    if isinstance(node, Forall):
        return all(_holds(model, node.body, w, {**env, node.var: e}) for e in model.domain(w))
    if isinstance(node, Exists):
        return any(_holds(model, node.body, w, {**env, node.var: e}) for e in model.domain(w))
    raise CheckError(f"unexpected node {type(node).__name__} after desugaring")


def _bind(node: Atom, env: Dict[str, Element]) -> Tuple[Element, ...]:
    try:
        return tuple(env[a] for a in node.args)
    except KeyError as exc:
        raise AssignmentError(f"free variable {exc.args[0]!r} has no value") from None


def _check_world(model: PredicateModel, world: int) -> None:
    if not 0 <= world < model.size:
        raise AssignmentError(f"world {world} outside 0..{model.size - 1}")


# ---------------------------------------------------------------------------
# Three-valued evaluation on prefixes
# ---------------------------------------------------------------------------

class Evaluator:
    """Vectorised strong-Kleene evaluation over every world of a model.

    A box at a world flagged ``truncated_above`` can be refuted inside the
    prefix but never confirmed, and quantifiers over a truncated domain also
    range over the generic element.  Results are memoised per node and per
    binding of the node's free variables.
    """

    def __init__(self, model: PredicateModel, step_limit: int = DEFAULT_STEP_LIMIT):
        self.model = model
        self.step_limit = step_limit
        self.steps = 0
        frame = model.frame
        self._matrix = None if frame.linear else frame.matrix()
        self._elements: List[Element] = list(model.elements())
        if model.domain_truncated:
            self._elements.append(GENERIC)
        self._trees: Dict[int, Tuple[Formula, Formula]] = {}
        self._free: Dict[int, Tuple[str, ...]] = {}
        self._cache: Dict[Tuple, np.ndarray] = {}

    def prepare(self, phi: Formula) -> Formula:
        hit = self._trees.get(id(phi))
        if hit is None:
            hit = (phi, desugar(phi))
            self._trees[id(phi)] = hit
        return hit[1]

    def _free_of(self, node: Formula) -> Tuple[str, ...]:
        free = self._free.get(id(node))
        if free is None:
            free = tuple(sorted(free_variables(node)))
            self._free[id(node)] = free
        return free

    def values(self, node: Formula, env: Dict[str, Element]) -> np.ndarray:
        try:
            key = (id(node),) + tuple(env[v] for v in self._free_of(node))
        except KeyError as exc:
            raise AssignmentError(f"free variable {exc.args[0]!r} has no value") from None
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.steps += 1
        if self.steps > self.step_limit:
            raise StepLimitExceeded(f"evaluation exceeded {self.step_limit} steps on {self.model.description}")
        out = self._compute(node, env)
        out.setflags(write=False)
        self._cache[key] = out
        return out

    def _compute(self, node: Formula, env: Dict[str, Element]) -> np.ndarray:
        n = self.model.size
        if isinstance(node, Atom):
            return self.model.atom(node.letter, _bind(node, env)).copy()
        if isinstance(node, Bottom):
            return np.full(n, F, dtype=np.int8)
        if isinstance(node, Top):
            return np.full(n, T, dtype=np.int8)
        if isinstance(node, Implies):
            return np.maximum(T - self.values(node.left, env), self.values(node.right, env)).astype(np.int8)
        if isinstance(node, Not):
            return (T - self.values(node.body, env)).astype(np.int8)
        if isinstance(node, And):
            out = np.full(n, T, dtype=np.int8)
            for arg in node.args:
                out = np.minimum(out, self.values(arg, env))
            return out
        if isinstance(node, Or):
            out = np.full(n, F, dtype=np.int8)
            for arg in node.args:
                out = np.maximum(out, self.values(arg, env))
            return out
        if isinstance(node, Iff):
            a, b = self.values(node.left, env), self.values(node.right, env)
            return np.minimum(np.maximum(T - a, b), np.maximum(T - b, a)).astype(np.int8)
        if isinstance(node, Box):
            return self.box(self.values(node.body, env))
        if isinstance(node, BoxPlus):
            return self.box(self.values(node.body, env), plus=True)
        if isinstance(node, Dia):
            return (T - self.box(T - self.values(node.body, env), plus=node.plus)).astype(np.int8)
        if isinstance(node, (Forall, Exists)):
            universal = isinstance(node, Forall)
            neutral = T if universal else F
            combine = np.minimum if universal else np.maximum
            out = np.full(n, neutral, dtype=np.int8)
            for e in self._elements:
                inner = self.values(node.body, {**env, node.var: e})
                out = combine(out, np.where(self.model.exists(e), inner, neutral))
            return out.astype(np.int8)
        raise CheckError(f"unexpected node {type(node).__name__} after desugaring")

    def box(self, body: np.ndarray, plus: bool = False) -> np.ndarray:
        frame = self.model.frame
        body = np.asarray(body, dtype=np.int8)
        if self._matrix is None:
            # strict successors of w are the worlds after it
            suffix = np.minimum.accumulate(body[::-1])[::-1]
            out = np.full(body.shape, T, dtype=np.int8)
            out[:-1] = suffix[1:]
            out = np.where(frame.reflexive | plus, np.minimum(out, body), out)
        else:
            out = np.where(self._matrix, body[None, :], T).min(axis=1)
            if plus:
                out = np.minimum(out, body)
        return np.where(frame.truncated_above, np.minimum(out, U), out).astype(np.int8)

    def successors(self, w: int, plus: bool = False) -> List[int]:
        worlds = self.model.frame.successors(w)
        if plus and w not in worlds:
            worlds = [w] + worlds
        return worlds

    def verdict(self, phi: Formula, world: int = 0) -> Verdict:
        _check_world(self.model, world)
        before = self.steps
        node = self.prepare(phi)
        value = Truth(int(self.values(node, {})[world]))
        return Verdict(value, self.explain(node, {}, world), self.steps - before)

    def explain(self, node: Formula, env: Dict[str, Element], w: int) -> List[str]:
        """Follow a refuting (or witnessing) world or element down the formula."""
        trace: List[str] = []
        labels = self.model.frame.labels
        while len(trace) < TRACE_LIMIT:
            value = int(self.values(node, env)[w])
            if value == U:
                break
            if isinstance(node, Not):
                node = node.body
            elif isinstance(node, Implies) and value == F:
                node = node.right
            elif isinstance(node, (And, Or)) and value == (F if isinstance(node, And) else T):
                node = next(a for a in node.args if int(self.values(a, env)[w]) == value)
            elif (isinstance(node, (Box, BoxPlus)) and value == F) or (isinstance(node, Dia) and value == T):
                plus = isinstance(node, BoxPlus) or (isinstance(node, Dia) and node.plus)
                body = self.values(node.body, env)
                w = next(v for v in self.successors(w, plus) if int(body[v]) == value)
                trace.append(f"world {labels[w]}")
                node = node.body
            elif (isinstance(node, Forall) and value == F) or (isinstance(node, Exists) and value == T):
                for e in self._elements:
                    inner = {**env, node.var: e}
                    if self.model.exists(e)[w] and int(self.values(node.body, inner)[w]) == value:
                        trace.append(f"{node.var}={e}")
                        env, node = inner, node.body
                        break
                else:
                    break
            else:
                break
        return trace


def eval3(model: PredicateModel, phi: Formula, world: int = 0, step_limit: int = DEFAULT_STEP_LIMIT) -> Verdict:
    return Evaluator(model, step_limit).verdict(phi, world)


def check_artifact(model: PredicateModel, artifact: ReductionArtifact, world: int = 0,
                   step_limit: int = DEFAULT_STEP_LIMIT) -> CheckReport:
    """Per-conjunct three-valued verdicts of ``artifact`` at ``world``."""
    evaluator = Evaluator(model, step_limit)
    report = CheckReport(artifact.variant, model.description, world)
    for name, phi in artifact.conjuncts:
        verdict = evaluator.verdict(phi, world)
        report.add(ConjunctVerdict(name, str(verdict.value), verdict.obligations, verdict.trace))
    return report


# ---------------------------------------------------------------------------
# The relation behind ⧈
# ---------------------------------------------------------------------------

@dataclass
class AccessTable:
    """Boolean accessibility table with relational composition."""

    matrix: np.ndarray

    def compose(self, n: int) -> np.ndarray:
        out = np.eye(self.matrix.shape[0], dtype=bool)
        step = self.matrix.astype(np.int64)
        for _ in range(n):
            out = (out.astype(np.int64) @ step) > 0
        return out

    def pairs(self) -> List[Tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(*np.nonzero(self.matrix))]


def r_blackdiamond(model: PredicateModel, which: str = "pdia1", plus: bool = False) -> AccessTable:
    """w sees v iff some u with w R u R v has the marker true at u and definitely false at v.

    The marker is p for ``pdia1`` and ∀x P(x) for ``pdia2``.
    """
    if which == "pdia1":
        marker = model.atom(PDIA1_LETTER, ())
    elif which == "pdia2":
        evaluator = Evaluator(model)
        marker = evaluator.values(evaluator.prepare(Forall(PDIA2_VAR, Atom(PDIA2_LETTER, (PDIA2_VAR,)))), {})
    else:
        raise CheckError(f"unknown relation {which!r}; expected pdia1 or pdia2")
    access = model.frame.matrix()
    if plus:
        access |= np.eye(model.size, dtype=bool)
    first = access & (marker == T)[None, :]
    second = access & (marker == F)[None, :]
    return AccessTable((first.astype(np.int64) @ second.astype(np.int64)) > 0)


# ---------------------------------------------------------------------------
# Countermodel search
# ---------------------------------------------------------------------------

@dataclass
class Countermodel:
    model: PredicateModel
    world: int
    index: int


@dataclass
class SearchResult:
    frame: str
    checked: int = 0
    found: Optional[Countermodel] = None

    @property
    def refuted(self) -> bool:
        return self.found is not None


def countermodel_search(frame: Frame, phi: Formula, max_domain: int = 1,
                        cap: int = DEFAULT_SEARCH_CAP) -> SearchResult:
    """Exhaustive search for a valuation refuting ``phi`` somewhere on ``frame``.

    Propositional letters come first, then monadic ones; valuations are tried
    in ascending bitmask order and constant domains of size 1..max_domain.
    Prefix frames are read as complete finite frames.
    """
    if frame.truncated:
        frame = frame.as_finite()
    if free_variables(phi):
        raise AssignmentError("countermodel search needs a closed formula")
    sig = letters(expand(phi))
    if any(arity > 1 for arity in sig.values()):
        raise CheckError("countermodel search handles propositional and monadic letters only")
    order = sorted(sig, key=lambda name: (sig[name], name))
    sizes = [1] if all(arity == 0 for arity in sig.values()) else list(range(1, max_domain + 1))
    result = SearchResult(frame.kind)
    for d in sizes:
        slots = [(letter, w, args) for letter in order for w in range(frame.size)
                 for args in product(range(d), repeat=sig[letter])]
        if result.checked + (1 << len(slots)) > cap:
            raise SearchGuardExceeded(f"{1 << len(slots)} valuations on {frame.size} worlds exceed the cap of {cap}")
        for mask in range(1 << len(slots)):
            tables: Dict[str, set] = {letter: set() for letter in order}
            for i, (letter, w, args) in enumerate(slots):
                if mask >> (len(slots) - 1 - i) & 1:
                    tables[letter].add((w, args))
            model = table_model(frame, [range(d)] * frame.size, sig, tables, description=f"search#{mask}")
            result.checked += 1
            refuting = np.flatnonzero(_root_values(model, phi) == F)
            if refuting.size:
                world = int(refuting[0])
                if eval2(model, phi, world):
                    raise CheckError("two- and three-valued evaluation disagree on a finite model")
                result.found = Countermodel(model, world, mask)
                return result
    return result


def _root_values(model: PredicateModel, phi: Formula) -> np.ndarray:
    evaluator = Evaluator(model)
    return evaluator.values(evaluator.prepare(phi), {})
