import pytest
from hypothesis import given, settings, strategies as st

from formula_core import (
    BOTTOM, MODAL_MACROS, TOP, And, ArityError, Atom, Box, BoxIter, BoxPlus, Dia, Exists, Forall, FormulaSyntaxError,
    Iff, Implies, Next, Not, NotSupportedError, Or, PDia1, PDia1Iter, PDia2, PDia2Iter, Signature, Top,
    UndeclaredLetterError, UndeclaredVariableError, XBox, XBoxIter, children, conj, desugar, disj, expand, free_variables,
    is_core, letters, metrics, modal_depth, parse, read_signature, to_notation, to_sexpr, unfold,
)

SIG = Signature({"r": 0, "R": 1, "S": 2})
FUZZ_SIG = Signature({**SIG.letters, "p": 0, "P": 1})
r = Atom("r")
p = Atom("p")


def Rx(v="x"):
    return Atom("R", (v,))


class TestParse:
    def test_nested_quantifier_and_box(self):
        phi = parse("(forall x (-> (R x) (box (R x))))", SIG)
        assert phi == Forall("x", Implies(Rx(), Box(Rx())))

    @pytest.mark.parametrize("text", [
        "(forall x (-> (R x) (box (R x))))",
        "(exists y (and (S x y) (not r) (dia (R y))))",
        "(iff (boxp r) (diap r))",
        "(pdia1n+ 2 (xbox r))",
        "(or bot T (pdia2 (R x)))",
    ])
    def test_print_parse_roundtrip(self, text):
        assert to_sexpr(parse(text, SIG)) == text

    def test_macro_letters_must_be_declared(self):
        with pytest.raises(UndeclaredLetterError):
            parse("(and p r)", SIG)
        sig = Signature({**SIG.letters, "p": 0, "q": 0, "P": 1})
        assert parse("(and p q (P x))", sig) == And((p, Atom("q"), Atom("P", ("x",))))

    def test_expanded_formula_reparses_under_its_own_signature(self):
        core = expand(PDia2(XBox(r)))
        assert parse(to_sexpr(core), Signature.of(core)) == core

    def test_arity_error_carries_position(self):
        with pytest.raises(ArityError) as exc:
            parse("(and r\n  (R x y))", SIG)
        assert exc.value.offset == 10
        assert exc.value.line == 2
        assert exc.value.column == 4

    def test_undeclared_letter(self):
        with pytest.raises(UndeclaredLetterError):
            parse("(Q x)", SIG)

    def test_undeclared_variable(self):
        with pytest.raises(UndeclaredVariableError):
            parse("(R z)", SIG)

    @pytest.mark.parametrize("text", ["(and r", "()", "(-> r)", "(boxn k r)", "(forall (R x) r)", "x"])
    def test_syntax_errors(self, text):
        with pytest.raises(FormulaSyntaxError):
            parse(text, SIG)

    def test_next_parses_but_does_not_expand(self):
        phi = parse("(next r)", SIG)
        assert phi == Next(r)
        with pytest.raises(NotSupportedError):
            expand(phi)

    def test_read_signature(self, tmp_path):
        path = tmp_path / "sig.txt"
        path.write_text("# letters\nR 1\nS 2\nvars x y z\n", encoding="utf-8")
        sig = read_signature(path)
        assert sig.letters == {"R": 1, "S": 2}
        assert parse("(S x z)", sig) == Atom("S", ("x", "z"))


class TestExpansion:
    def test_connectives(self):
        assert unfold(Not(r)) == Implies(r, BOTTOM)
        assert unfold(TOP) == Implies(BOTTOM, BOTTOM)
        assert unfold(Exists("x", Rx())) == Not(Forall("x", Not(Rx())))
        assert unfold(BoxPlus(r)) == And((r, Box(r)))

    def test_pdia1_uses_parity_letter(self):
        assert unfold(PDia1(r)) == Dia(And((p, Dia(And((Not(p), r))))))

    def test_pdia2_uses_all_p(self):
        all_p = Forall("x", Atom("P", ("x",)))
        assert unfold(PDia2(r, plus=True)) == Dia(And((all_p, Dia(And((Not(all_p), r)), True))), True)

    def test_xbox(self):
        q = Atom("q")
        assert unfold(XBox(r)) == Or((And((q, Box(Implies(Not(q), r)))), And((Not(q), Box(Implies(q, r))))))

    def test_iterates(self):
        assert unfold(BoxIter(0, r)) == r
        assert unfold(BoxIter(2, r)) == Box(BoxIter(1, r))
        assert unfold(BoxIter(1, r, plus=True)) == BoxPlus(BoxIter(0, r, plus=True))
        assert unfold(PDia1Iter(3, r)) == PDia1(PDia1Iter(2, r))

    def test_empty_conjunction_and_disjunction(self):
        assert conj() == TOP
        assert disj() == BOTTOM
        assert conj(r) == r

    def test_desugar_keeps_connectives(self):
        phi = desugar(PDia1(Iff(r, Top())))
        assert phi == Dia(And((p, Dia(And((Not(p), Iff(r, Top())))))))
        assert not is_core(phi)
        assert is_core(expand(phi))

    def test_modal_depth(self):
        assert modal_depth(Box(Box(r))) == 2
        assert modal_depth(PDia1(r)) == 2
        assert modal_depth(PDia2Iter(3, r)) == 6
        assert modal_depth(XBoxIter(2, r)) == 2
        assert modal_depth(BoxPlus(r)) == 1

    def test_free_variables_and_letters(self):
        phi = Forall("x", And((Atom("S", ("x", "y")), PDia2(r))))
        assert free_variables(phi) == {"y"}
        assert letters(phi) == {"S": 2, "r": 0}
        assert metrics(phi).arities == {"P": 1, "S": 2, "r": 0}

    def test_notation(self):
        phi = Forall("x", Implies(Atom("M", ("x",)), Box(PDia1(Atom("P0", ("x",))))))
        assert to_notation(phi) == "∀x (M(x) → □⧈P0(x))"
        assert to_notation(Atom("Succ", ("x", "y"))) == "x ◁ y"
        assert to_notation(PDia2Iter(2, r, plus=True)) == "⧈₂⁺²r"


# ---------------------------------------------------------------------------
# Property-based
# ---------------------------------------------------------------------------

_atoms = st.sampled_from([r, p, BOTTOM, TOP, Rx(), Rx("y"), Atom("S", ("x", "y")), Atom("P", ("y",))])


def _extend(sub):
    unary = st.sampled_from([Not, Box, BoxPlus])
    plus_ops = st.sampled_from([Dia, PDia1, PDia2, XBox])
    iter_ops = st.sampled_from([BoxIter, PDia1Iter, PDia2Iter, XBoxIter])
    return st.one_of(
        st.builds(lambda f, a: f(a), unary, sub),
        st.builds(lambda f, a, plus: f(a, plus), plus_ops, sub, st.booleans()),
        st.builds(lambda f, n, a, plus: f(n, a, plus), iter_ops, st.integers(0, 2), sub, st.booleans()),
        st.builds(Implies, sub, sub),
        st.builds(Iff, sub, sub),
        st.builds(lambda args: And(tuple(args)), st.lists(sub, max_size=3)),
        st.builds(lambda args: Or(tuple(args)), st.lists(sub, max_size=3)),
        st.builds(Forall, st.sampled_from(["x", "y"]), sub),
        st.builds(Exists, st.sampled_from(["x", "y"]), sub),
    )


formulas = st.recursive(_atoms, _extend, max_leaves=6)


@given(formulas)
@settings(max_examples=1000, deadline=None)
def test_parse_inverts_print(phi):
    assert parse(to_sexpr(phi), FUZZ_SIG) == phi


@given(formulas)
@settings(max_examples=1000, deadline=None)
def test_expansion_is_core_and_idempotent(phi):
    core = expand(phi)
    assert is_core(core)
    assert expand(core) == core
    assert free_variables(core) == free_variables(phi)


@given(formulas)
@settings(max_examples=1000, deadline=None)
def test_desugar_then_expand_matches_expand(phi):
    assert expand(desugar(phi)) == expand(phi)
    stack = [desugar(phi)]
    while stack:
        node = stack.pop()
        assert not isinstance(node, MODAL_MACROS)
        stack.extend(children(node))
