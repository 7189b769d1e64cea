"""First-order monomodal formulas.

Core syntax is Atom, Bottom, Implies, Box and Forall.  Every other node is a
macro with a fixed one-step definition; ``expand`` rewrites a formula down to
the core, ``desugar`` only removes the modal macros and keeps the ordinary
connectives the evaluator understands directly.

The concrete syntax is an S-expression grammar::

    (P x y)  p  bot  T  (-> a b)  (not a)  (and a ...)  (or a ...)  (iff a b)
    (box a)  (dia a)  (boxp a)  (diap a)  (pdia1 a)  (pdia2 a)  (xbox a)
    (boxn k a)  (dian k a)  (pdia1n k a)  (pdia2n k a)  (xboxn k a)
    (forall x a)  (exists x a)  (next a)

Macro keywords accept a ``+`` suffix (``pdia1+``, ``boxn+`` ...) selecting the
reflexive reading where every inner box is a box-plus.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

from pyparsing import Forward, Literal, ParseException, Suppress, Word, ZeroOrMore, printables

from workbench_types import InputError, WorkbenchError

# Letters introduced by the macro layer
PDIA1_LETTER = "p"
PDIA2_LETTER = "P"
PDIA2_VAR = "x"
XBOX_LETTER = "q"


class FormulaError(WorkbenchError):
    """Base class for formula-layer errors."""


class FormulaSyntaxError(FormulaError, InputError):
    def __init__(self, message: str, offset: int = 0, text: str = ""):
        self.offset = offset
        self.line = text.count("\n", 0, offset) + 1
        self.column = offset - (text.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{message} (line {self.line}, column {self.column})")


class ArityError(FormulaSyntaxError):
    pass


class UndeclaredLetterError(FormulaSyntaxError):
    pass


class UndeclaredVariableError(FormulaSyntaxError):
    pass


class NotSupportedError(FormulaError, InputError):
    """Raised when expanding the reserved next-time operator."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class Formula:
    """Immutable formula node with structural equality and a cached hash."""

    def _key(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", cached)
        return cached

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __str__(self) -> str:
        return to_sexpr(self)


@dataclass(frozen=True, eq=False)
class Atom(Formula):
    letter: str
    args: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class Bottom(Formula):
    pass


@dataclass(frozen=True, eq=False)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=False)
class Box(Formula):
    body: Formula


@dataclass(frozen=True, eq=False)
class Forall(Formula):
    var: str
    body: Formula


CORE_NODES = (Atom, Bottom, Implies, Box, Forall)


@dataclass(frozen=True, eq=False)
class Top(Formula):
    pass


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, eq=False)
class And(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=False)
class Or(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True, eq=False)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=False)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, eq=False)
class Dia(Formula):
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class BoxPlus(Formula):
    body: Formula


@dataclass(frozen=True, eq=False)
class PDia1(Formula):
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class PDia2(Formula):
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class XBox(Formula):
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class BoxIter(Formula):
    n: int
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class DiaIter(Formula):
    n: int
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class PDia1Iter(Formula):
    n: int
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class PDia2Iter(Formula):
    n: int
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class XBoxIter(Formula):
    n: int
    body: Formula
    plus: bool = False


@dataclass(frozen=True, eq=False)
class Next(Formula):
    body: Formula


# Nodes the evaluator handles without further rewriting
CONNECTIVE_NODES = CORE_NODES + (Top, Not, And, Or, Iff, Exists, Dia, BoxPlus)
MODAL_MACROS = (PDia1, PDia2, XBox, BoxIter, DiaIter, PDia1Iter, PDia2Iter, XBoxIter)
_ITER_BASE = {BoxIter: Box, DiaIter: Dia, PDia1Iter: PDia1, PDia2Iter: PDia2, XBoxIter: XBox}

BOTTOM = Bottom()
TOP = Top()


def conj(*args: Formula) -> Formula:
    if not args:
        return TOP
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args: Formula) -> Formula:
    if not args:
        return BOTTOM
    return args[0] if len(args) == 1 else Or(tuple(args))


def children(phi: Formula) -> Tuple[Formula, ...]:
    if isinstance(phi, (And, Or)):
        return phi.args
    if isinstance(phi, (Implies, Iff)):
        return (phi.left, phi.right)
    body = getattr(phi, "body", None)
    return (body,) if body is not None else ()


def map_children(phi: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Rebuild ``phi`` with ``fn`` applied to each immediate subformula."""
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(fn(a) for a in phi.args))
    if isinstance(phi, (Implies, Iff)):
        return type(phi)(fn(phi.left), fn(phi.right))
    if isinstance(phi, (Atom, Bottom, Top)):
        return phi
    values = {f.name: getattr(phi, f.name) for f in fields(phi)}
    values["body"] = fn(phi.body)
    return type(phi)(**values)


def rewrite(phi: Formula, fn: Callable[[Formula], Optional[Formula]]) -> Formula:
    """Bottom-up rewrite: children first, then ``fn`` on the rebuilt node.

    Replacements returned by ``fn`` are not traversed again.
    """
    rebuilt = map_children(phi, lambda c: rewrite(c, fn))
    replaced = fn(rebuilt)
    return rebuilt if replaced is None else replaced


def substitute_atoms(phi: Formula, fn: Callable[[Atom], Optional[Formula]]) -> Formula:
    return rewrite(phi, lambda node: fn(node) if isinstance(node, Atom) else None)


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------

def _all_p() -> Formula:
    return Forall(PDIA2_VAR, Atom(PDIA2_LETTER, (PDIA2_VAR,)))


def unfold(phi: Formula) -> Formula:
    """One-step definition of a derived node (core nodes are returned as is)."""
    if isinstance(phi, Top):
        return Implies(BOTTOM, BOTTOM)
    if isinstance(phi, Not):
        return Implies(phi.body, BOTTOM)
    if isinstance(phi, And):
        if not phi.args:
            return TOP
        if len(phi.args) == 1:
            return phi.args[0]
        rest = phi.args[1] if len(phi.args) == 2 else And(phi.args[1:])
        return Not(Implies(phi.args[0], Not(rest)))
    if isinstance(phi, Or):
        if not phi.args:
            return BOTTOM
        if len(phi.args) == 1:
            return phi.args[0]
        rest = phi.args[1] if len(phi.args) == 2 else Or(phi.args[1:])
        return Implies(Not(phi.args[0]), rest)
    if isinstance(phi, Iff):
        return And((Implies(phi.left, phi.right), Implies(phi.right, phi.left)))
    if isinstance(phi, Exists):
        return Not(Forall(phi.var, Not(phi.body)))
    if isinstance(phi, Dia):
        inner = BoxPlus(Not(phi.body)) if phi.plus else Box(Not(phi.body))
        return Not(inner)
    if isinstance(phi, BoxPlus):
        return And((phi.body, Box(phi.body)))
    if isinstance(phi, PDia1):
        p = Atom(PDIA1_LETTER)
        return Dia(And((p, Dia(And((Not(p), phi.body)), phi.plus))), phi.plus)
    if isinstance(phi, PDia2):
        all_p = _all_p()
        return Dia(And((all_p, Dia(And((Not(all_p), phi.body)), phi.plus))), phi.plus)
    if isinstance(phi, XBox):
        q = Atom(XBOX_LETTER)
        box = BoxPlus if phi.plus else Box
        return Or((And((q, box(Implies(Not(q), phi.body)))),
                   And((Not(q), box(Implies(q, phi.body))))))
    if isinstance(phi, tuple(_ITER_BASE)):
        if phi.n == 0:
            return phi.body
        base = _ITER_BASE[type(phi)]
        inner = type(phi)(phi.n - 1, phi.body, phi.plus)
        if base is Box:
            return BoxPlus(inner) if phi.plus else Box(inner)
        return base(inner, phi.plus)
    if isinstance(phi, Next):
        raise NotSupportedError("the next-time operator has no expansion")
    return phi


def _expand_with(phi: Formula, keep: tuple, memo: Dict[int, Tuple[Formula, Formula]]) -> Formula:
    # entries pin the source node so its id stays unique
    hit = memo.get(id(phi))
    if hit is not None:
        return hit[1]
    node = phi
    while not isinstance(node, keep):
        node = unfold(node)
    result = map_children(node, lambda c: _expand_with(c, keep, memo))
    memo[id(phi)] = (phi, result)
    return result


def expand(phi: Formula) -> Formula:
    """Rewrite every derived node down to Atom/Bottom/Implies/Box/Forall."""
    return _expand_with(phi, CORE_NODES, {})


def desugar(phi: Formula) -> Formula:
    """Remove modal macros, keeping the connective layer."""
    return _expand_with(phi, CONNECTIVE_NODES, {})


def is_core(phi: Formula) -> bool:
    return isinstance(phi, CORE_NODES) and all(is_core(c) for c in children(phi))


# ---------------------------------------------------------------------------
# Syntactic measures
# ---------------------------------------------------------------------------

def free_variables(phi: Formula) -> FrozenSet[str]:
    if isinstance(phi, Atom):
        return frozenset(phi.args)
    if isinstance(phi, (Forall, Exists)):
        return free_variables(phi.body) - {phi.var}
    out: FrozenSet[str] = frozenset()
    for child in children(phi):
        out |= free_variables(child)
    return out


def variables(phi: Formula) -> FrozenSet[str]:
    """All individual variables occurring in ``phi``, bound or free."""
    out = set()
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.update(node.args)
        elif isinstance(node, (Forall, Exists)):
            out.add(node.var)
        stack.extend(children(node))
    return frozenset(out)


def modal_depth(phi: Formula) -> int:
    """Box nesting depth of the core expansion."""
    memo: Dict[int, int] = {}

    def depth(node: Formula) -> int:
        if id(node) in memo:
            return memo[id(node)]
        inner = max((depth(c) for c in children(node)), default=0)
        value = inner + 1 if isinstance(node, Box) else inner
        memo[id(node)] = value
        return value

    return depth(expand(phi))


def letter_census(phi: Formula) -> Dict[str, Tuple[int, int]]:
    """Letter -> (arity, occurrences) in the core expansion."""
    census: Dict[str, Tuple[int, int]] = {}
    stack = [expand(phi)]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            arity, count = census.get(node.letter, (len(node.args), 0))
            census[node.letter] = (arity, count + 1)
        stack.extend(children(node))
    return dict(sorted(census.items()))


def letters(phi: Formula) -> Dict[str, int]:
    """Letter -> arity for the letters written in ``phi`` (macros not expanded)."""
    out: Dict[str, int] = {}
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out[node.letter] = len(node.args)
        stack.extend(children(node))
    return dict(sorted(out.items()))


def top_conjuncts(phi: Formula) -> List[Formula]:
    if isinstance(phi, And):
        out: List[Formula] = []
        for arg in phi.args:
            out.extend(top_conjuncts(arg))
        return out
    return [phi]


@dataclass(frozen=True)
class FormulaMetrics:
    variable_count: int
    variables: Tuple[str, ...]
    letter_census: Dict[str, Tuple[int, int]]
    modal_depth: int
    conjunct_count: int

    @property
    def arities(self) -> Dict[str, int]:
        return {name: arity for name, (arity, _) in self.letter_census.items()}

    def to_dict(self) -> Dict:
        return {
            "variable_count": self.variable_count,
            "variables": list(self.variables),
            "letters": {k: {"arity": a, "occurrences": c} for k, (a, c) in self.letter_census.items()},
            "modal_depth": self.modal_depth,
            "conjunct_count": self.conjunct_count,
        }


def metrics(phi: Formula) -> FormulaMetrics:
    core = expand(phi)
    used = variables(core)
    return FormulaMetrics(
        variable_count=len(used),
        variables=tuple(sorted(used)),
        letter_census=letter_census(core),
        modal_depth=modal_depth(core),
        conjunct_count=len(top_conjuncts(phi)),
    )


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

@dataclass
class Signature:
    """Declared predicate letters and individual variables."""

    letters: Dict[str, int]
    variables: FrozenSet[str] = frozenset({"x", "y"})

    def __post_init__(self):
        for name, arity in self.letters.items():
            if arity < 0:
                raise InputError(f"letter {name!r} has negative arity {arity}")
        self.variables = frozenset(self.variables)

    def arity(self, name: str) -> Optional[int]:
        return self.letters.get(name)

    @classmethod
    def of(cls, phi: Formula, extra_variables: Iterable[str] = ()) -> "Signature":
        """Smallest signature under which ``phi`` parses."""
        return cls(letters(phi), frozenset(variables(phi)) | frozenset(extra_variables) | {"x", "y"})


def read_signature(path) -> Signature:
    """Read ``name arity`` lines; an optional ``vars a b ...`` line sets the variables."""
    sig_letters: Dict[str, int] = {}
    sig_vars: FrozenSet[str] = frozenset({"x", "y"})
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "vars":
                sig_vars = frozenset(parts[1:])
                continue
            if len(parts) != 2 or not parts[1].isdigit():
                raise InputError(f"{path}:{lineno}: expected 'name arity', got {line!r}")
            if parts[0] in sig_letters:
                raise InputError(f"{path}:{lineno}: letter {parts[0]!r} declared twice")
            sig_letters[parts[0]] = int(parts[1])
    return Signature(sig_letters, sig_vars)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_UNARY_KEYWORDS = {Not: "not", Box: "box", BoxPlus: "boxp", Next: "next"}
_PLUS_KEYWORDS = {Dia: ("dia", "diap"), PDia1: ("pdia1", "pdia1+"), PDia2: ("pdia2", "pdia2+"),
                  XBox: ("xbox", "xbox+")}
_ITER_KEYWORDS = {BoxIter: "boxn", DiaIter: "dian", PDia1Iter: "pdia1n", PDia2Iter: "pdia2n",
                  XBoxIter: "xboxn"}


def to_sexpr(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return phi.letter if not phi.args else f"({phi.letter} {' '.join(phi.args)})"
    if isinstance(phi, Bottom):
        return "bot"
    if isinstance(phi, Top):
        return "T"
    if isinstance(phi, Implies):
        return f"(-> {to_sexpr(phi.left)} {to_sexpr(phi.right)})"
    if isinstance(phi, Iff):
        return f"(iff {to_sexpr(phi.left)} {to_sexpr(phi.right)})"
    if isinstance(phi, (And, Or)):
        head = "and" if isinstance(phi, And) else "or"
        return "(" + " ".join([head] + [to_sexpr(a) for a in phi.args]) + ")"
    if isinstance(phi, (Forall, Exists)):
        head = "forall" if isinstance(phi, Forall) else "exists"
        return f"({head} {phi.var} {to_sexpr(phi.body)})"
    if type(phi) in _UNARY_KEYWORDS:
        return f"({_UNARY_KEYWORDS[type(phi)]} {to_sexpr(phi.body)})"
    if type(phi) in _PLUS_KEYWORDS:
        return f"({_PLUS_KEYWORDS[type(phi)][phi.plus]} {to_sexpr(phi.body)})"
    if type(phi) in _ITER_KEYWORDS:
        head = _ITER_KEYWORDS[type(phi)] + ("+" if phi.plus else "")
        return f"({head} {phi.n} {to_sexpr(phi.body)})"
    raise FormulaError(f"cannot print node {type(phi).__name__}")


SUCC_LETTER = "Succ"
_SUPERSCRIPT = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")
_NOTATION_OPS = {Box: "□", BoxPlus: "□⁺", Next: "◯", Not: "¬"}
_NOTATION_PLUS = {Dia: "◇", PDia1: "⧈", PDia2: "⧈₂", XBox: "⊠"}
_NOTATION_ITER = {BoxIter: "□", DiaIter: "◇", PDia1Iter: "⧈", PDia2Iter: "⧈₂", XBoxIter: "⊠"}


def to_notation(phi: Formula) -> str:
    """Mathematical rendering, e.g. ``∀x (M(x) → □⧈P0(x))``."""
    if isinstance(phi, Atom):
        if phi.letter == SUCC_LETTER and len(phi.args) == 2:
            return f"{phi.args[0]} ◁ {phi.args[1]}"
        return phi.letter if not phi.args else f"{phi.letter}({', '.join(phi.args)})"
    if isinstance(phi, Bottom):
        return "⊥"
    if isinstance(phi, Top):
        return "⊤"
    if isinstance(phi, Implies):
        return f"({to_notation(phi.left)} → {to_notation(phi.right)})"
    if isinstance(phi, Iff):
        return f"({to_notation(phi.left)} ↔ {to_notation(phi.right)})"
    if isinstance(phi, (And, Or)):
        if not phi.args:
            return "⊤" if isinstance(phi, And) else "⊥"
        sep = " ∧ " if isinstance(phi, And) else " ∨ "
        return "(" + sep.join(to_notation(a) for a in phi.args) + ")"
    if isinstance(phi, (Forall, Exists)):
        q = "∀" if isinstance(phi, Forall) else "∃"
        return f"{q}{phi.var} {to_notation(phi.body)}"
    if type(phi) in _NOTATION_OPS:
        return _NOTATION_OPS[type(phi)] + to_notation(phi.body)
    if type(phi) in _NOTATION_PLUS:
        return _NOTATION_PLUS[type(phi)] + ("⁺" if phi.plus else "") + to_notation(phi.body)
    if type(phi) in _NOTATION_ITER:
        op = _NOTATION_ITER[type(phi)] + ("⁺" if phi.plus else "")
        return op + str(phi.n).translate(_SUPERSCRIPT) + to_notation(phi.body)
    raise FormulaError(f"cannot print node {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class _Token(str):
    """A bare word tagged with its offset in the input."""

    loc: int = 0


class _SExpr(tuple):
    loc: int = 0


_KEYWORDS = {"bot", "T", "->", "not", "and", "or", "iff", "box", "boxp", "forall", "exists", "next"}
_KEYWORDS |= {kw for pair in _PLUS_KEYWORDS.values() for kw in pair}
_KEYWORDS |= {kw + suffix for kw in _ITER_KEYWORDS.values() for suffix in ("", "+")}


class FormulaParser:
    """pyparsing grammar for the S-expression formula syntax."""

    def __init__(self):
        lpar = Literal("(")
        rpar = Literal(")")
        word = Word("".join(c for c in printables if c not in "()"))
        word.set_parse_action(self._word_to_token)

        self.expression = Forward()
        composite = Suppress(lpar) + ZeroOrMore(self.expression) + Suppress(rpar)
        composite.set_parse_action(self._composite_to_tuple)
        self.expression <<= word | composite

    @staticmethod
    def _word_to_token(s, loc, toks):
        token = _Token(toks[0])
        token.loc = loc
        return token

    @staticmethod
    def _composite_to_tuple(s, loc, toks):
        expr = _SExpr(toks)
        expr.loc = loc
        return [expr]

    def parse_tree(self, text: str):
        try:
            return self.expression.parseString(text, parseAll=True)[0]
        except ParseException as exc:
            raise FormulaSyntaxError(f"syntax error: {exc.msg}", exc.loc, text) from None


_parser = FormulaParser()


class _Builder:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig

    def fail(self, cls, message: str, loc: int):
        raise cls(message, loc, self.text)

    def variable(self, token) -> str:
        if not isinstance(token, _Token):
            self.fail(FormulaSyntaxError, "expected a variable", token.loc)
        if token in _KEYWORDS:
            self.fail(FormulaSyntaxError, f"keyword {token!r} used as a variable", token.loc)
        if token not in self.sig.variables:
            self.fail(UndeclaredVariableError, f"undeclared variable {token!r}", token.loc)
        return str(token)

    def count(self, token) -> int:
        if not isinstance(token, _Token) or not token.isdigit():
            self.fail(FormulaSyntaxError, "expected a nonnegative iteration count", token.loc)
        return int(token)

    def atom(self, head: _Token, args) -> Atom:
        arity = self.sig.arity(head)
        if arity is None:
            self.fail(UndeclaredLetterError, f"undeclared letter {head!r}", head.loc)
        if arity != len(args):
            self.fail(ArityError, f"letter {head!r} has arity {arity}, got {len(args)} arguments", head.loc)
        return Atom(str(head), tuple(self.variable(a) for a in args))

    def build(self, node) -> Formula:
        if isinstance(node, _Token):
            if node == "bot":
                return BOTTOM
            if node == "T":
                return TOP
            if node in _KEYWORDS:
                self.fail(FormulaSyntaxError, f"keyword {node!r} needs operands", node.loc)
            if node in self.sig.variables and self.sig.arity(node) is None:
                self.fail(FormulaSyntaxError, f"variable {node!r} used as a formula", node.loc)
            return self.atom(node, ())
        if not node:
            self.fail(FormulaSyntaxError, "empty expression", node.loc)
        head, rest = node[0], list(node[1:])
        if not isinstance(head, _Token):
            self.fail(FormulaSyntaxError, "expression must start with a keyword or letter", node.loc)
        if head not in _KEYWORDS or head in ("bot", "T"):
            if head in ("bot", "T") and not rest:
                return self.build(head)
            return self.atom(head, rest)

        def arity(k: int):
            if len(rest) != k:
                self.fail(FormulaSyntaxError, f"{head!r} takes {k} operands, got {len(rest)}", head.loc)

        if head == "->":
            arity(2)
            return Implies(self.build(rest[0]), self.build(rest[1]))
        if head == "iff":
            arity(2)
            return Iff(self.build(rest[0]), self.build(rest[1]))
        if head in ("and", "or"):
            built = tuple(self.build(r) for r in rest)
            return And(built) if head == "and" else Or(built)
        if head in ("forall", "exists"):
            arity(2)
            var = self.variable(rest[0])
            body = self.build(rest[1])
            return Forall(var, body) if head == "forall" else Exists(var, body)
        for cls, kw in _UNARY_KEYWORDS.items():
            if head == kw:
                arity(1)
                return cls(self.build(rest[0]))
        for cls, pair in _PLUS_KEYWORDS.items():
            if head in pair:
                arity(1)
                return cls(self.build(rest[0]), head == pair[1])
        for cls, kw in _ITER_KEYWORDS.items():
            if head in (kw, kw + "+"):
                arity(2)
                return cls(self.count(rest[0]), self.build(rest[1]), head.endswith("+"))
        self.fail(FormulaSyntaxError, f"unknown keyword {head!r}", head.loc)


def parse(text: str, sig: Signature) -> Formula:
    """Parse formula text under ``sig``; derived operators stay as nodes."""
    return _Builder(text, sig).build(_parser.parse_tree(text))
