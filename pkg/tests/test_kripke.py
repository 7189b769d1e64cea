import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kripke import (
    F, GENERIC, T, U, CertificateError, MissingLetterError, ModelFormatError, ModelParameterError, StarLabeling,
    alpha, build_dense_model, build_M0, build_M0_prime, build_M0_star, build_ordinal_model, chain,
    check_constant_domain, check_expanding_domains, finite_frame, frame_from_spec, gn_prefix, hn_prefix,
    interleaved_dense_prefix, nat_prefix, ordinal_prefix, parse_model, random_finite_model, read_model,
    table_model, write_model,
)
from tiling import PeriodicTiling, TilingGrid, find_periodic


class TestFrames:
    def test_nat_prefix_kinds(self):
        assert nat_prefix(4).kind == "natle"
        assert nat_prefix(4, ()).kind == "natlt"
        frame = nat_prefix(4, [1, 3])
        assert frame.kind == "natrefl"
        assert frame.successors(1) == [1, 2, 3]
        assert frame.successors(2) == [3]
        assert frame.truncated

    def test_matrix(self):
        assert nat_prefix(3, [0]).matrix().tolist() == [
            [True, True, True],
            [False, False, True],
            [False, False, False],
        ]

    def test_gn_and_hn(self):
        assert gn_prefix(2, 5).reflexive.tolist() == [False, False, True, True, True]
        assert hn_prefix(2, 5).reflexive.tolist() == [True, True, False, False, False]

    def test_chain_is_complete(self):
        frame = chain(3, False)
        assert not frame.truncated
        assert frame.successors(2) == []

    def test_as_finite(self):
        frame = nat_prefix(3).as_finite()
        assert not frame.truncated
        assert frame.kind == "natle-finite"

    def test_finite_frame(self):
        frame = finite_frame(3, [(0, 1), (1, 1), (1, 2)])
        assert not frame.linear
        assert frame.successors(1) == [1, 2]
        assert frame.reflexive.tolist() == [False, True, False]
        with pytest.raises(ModelParameterError):
            finite_frame(2, [(0, 2)])

    def test_ordinal(self):
        frame = ordinal_prefix(2, 1, 3)
        assert frame.size == 7
        assert frame.truncated_above.tolist() == [True] * 6 + [False]
        assert frame.labels[3] == "ω·1+0"
        assert frame.labels[6] == "ω·2+0"

    def test_interleaved_dense(self):
        frame = interleaved_dense_prefix(3)
        assert frame.labels == ["1/2", "1", "3/2", "2", "5/2", "3"]
        assert frame.params["chain"] == [1, 3, 5]
        assert frame.truncated_above.all()

    @pytest.mark.parametrize("spec, kind, size", [
        ("natle", "natle", 6), ("natlt", "natlt", 6), ("natrefl:0,2", "natrefl", 6),
        ("gn:2", "gn", 6), ("hn:2", "hn", 6), ("ord:2,1", "ord", 13), ("dense:3", "dense", 6),
        ("refl", "refl", 6), ("irrefl", "irrefl", 6),
    ])
    def test_from_spec(self, spec, kind, size):
        frame = frame_from_spec(spec, horizon=6)
        assert frame.kind == kind
        assert frame.size == size

    @pytest.mark.parametrize("spec", ["ord:2", "gn:x", "square"])
    def test_bad_spec(self, spec):
        with pytest.raises(ModelParameterError):
            frame_from_spec(spec)


class TestTableModels:
    def test_atoms_and_domains(self):
        frame = chain(2, True)
        model = table_model(frame, [[0], [0, 1]], {"R": 1, "r": 0}, {"R": {(1, (1,))}, "r": {(0, ())}})
        assert model.atom("R", (1,)).tolist() == [F, T]
        assert model.atom("r", ()).tolist() == [T, F]
        assert model.exists(1).tolist() == [False, True]
        assert model.extension("R", 1) == [(1,)]
        assert check_expanding_domains(model) == []
        assert not check_constant_domain(model)

    def test_atom_vectors_are_read_only(self):
        model = table_model(chain(1, True), [[0]], {"r": 0}, {})
        with pytest.raises(ValueError):
            model.atom("r", ())[0] = T

    def test_missing_letter(self):
        model = table_model(chain(1, True), [[0]], {"r": 0}, {})
        with pytest.raises(MissingLetterError):
            model.atom("s", ())

    def test_rows_must_lie_in_the_domain(self):
        with pytest.raises(ModelParameterError):
            table_model(chain(1, True), [[0]], {"R": 1}, {"R": {(0, (3,))}})

    def test_shrinking_domain_is_reported(self):
        model = table_model(chain(2, True), [[0, 1], [0]], {"r": 0}, {})
        assert check_expanding_domains(model) == [(0, 1)]

    def test_explicit_file_roundtrip(self, tmp_path):
        model = table_model(finite_frame(2, [(0, 1)]), [[0], [0, 1]], {"S": 2, "r": 0},
                            {"S": {(1, (0, 1))}, "r": {(0, ())}})
        path = tmp_path / "model.txt"
        write_model(model, path)
        assert path.read_text(encoding="utf-8").splitlines()[:4] == [
            "model explicit", "worlds 2", "edge 0 1", "domain 0: 0",
        ]
        back = read_model(path)
        assert back.domains == model.domains
        assert back.atom("S", (0, 1)).tolist() == [F, T]
        assert back.atom("r", ()).tolist() == [T, F]

    @given(st.integers(0, 10_000), st.integers(1, 4), st.booleans())
    @settings(max_examples=40, deadline=None)
    def test_random_models_have_expanding_domains(self, seed, worlds, constant):
        model = random_finite_model(np.random.default_rng(seed), worlds, {"R": 1, "r": 0}, 3, constant)
        assert check_expanding_domains(model) == []
        if constant:
            assert check_constant_domain(model)


def test_alpha():
    assert [alpha(k) for k in range(10)] == [0, 0, 1, 0, 1, 2, 0, 1, 2, 3]
    assert alpha(5) == 2
    with pytest.raises(ModelParameterError):
        alpha(-1)


class TestWitnessModels:
    def test_m0_atoms(self, checker):
        model = build_M0(checker, find_periodic(checker), 8, 4)
        assert model.atom("p", ()).tolist() == [F, T] * 4
        assert model.atom("M", (2,)).tolist() == [F, F, F, F, T, F, F, F]
        assert model.atom("Succ", (1, 2)).tolist() == [T, F] * 4
        assert model.atom("Succ", (1, 3)).tolist() == [F] * 8
        # f(a, m) alternates in both directions
        assert model.atom("P0", (0,)).tolist() == [T, F, F, F, T, F, F, F]
        assert model.atom("P1", (0,)).tolist() == [F, F, T, F, F, F, T, F]
        assert model.atom("P0", (-1,)).tolist() == [F] * 8
        assert model.domain(0) == (-1, 0, 1, 2, 3, 4)

    def test_m0_generic_element(self, mono):
        model = build_M0(mono, find_periodic(mono), 14, 4)
        assert model.exists(GENERIC).all()
        assert model.atom("P0", (GENERIC,))[0] == T
        assert model.atom("Succ", (4, GENERIC))[0] == U
        assert model.atom("Succ", (3, GENERIC))[0] == F
        assert model.atom("M", (GENERIC,)).tolist()[8:] == [F, F, U, F, U, F]

    def test_m0_prime_codes(self, mono):
        model = build_M0_prime(mono, find_periodic(mono), 12, 4)
        # alpha = 0, 0, 1, 0, 1, 2 at rows 0, 2, ..., 10
        assert np.flatnonzero(model.atom("P1", (1,)) == T).tolist() == [4, 8]
        assert np.flatnonzero(model.atom("P2", (1,)) == T).tolist() == [0, 2, 6]
        assert model.atom("P1", (-1,)).tolist() == [F] * 12
        assert "Succ" not in model.letters

    def test_rejects_non_certificate(self, stripes):
        with pytest.raises(CertificateError):
            build_M0(stripes, PeriodicTiling(TilingGrid(np.array([[1, 0]]))), 8, 4)

    def test_nonpositive_bounds(self, mono):
        with pytest.raises(ModelParameterError):
            build_M0(mono, find_periodic(mono), 0, 4)

    def test_star_labeling(self):
        labels = StarLabeling(0)
        assert labels.block == 8
        assert labels.encode("w", 1) == 8
        assert labels.encode("v", 0, 2) == 2
        assert labels.encode("vbar", 0, 0) == 7
        assert labels.label(13) == "v̄^1_1"
        with pytest.raises(ModelParameterError):
            labels.encode("v", 0, 3)

    @given(st.integers(0, 4), st.integers(0, 400))
    @settings(max_examples=100, deadline=None)
    def test_star_labeling_is_a_bijection(self, s, u):
        labels = StarLabeling(s)
        kind, m, n = labels.decode(u)
        assert labels.encode(kind, m, n) == u

    def test_star_model(self, mono_star):
        labels = StarLabeling(0)
        q = mono_star.atom("q", ())
        assert np.flatnonzero(q == T).tolist() == [0, 8, 16, 24, 32]
        assert mono_star.letters == {"P": 1, "q": 0}
        # P(a) at w_m is the mark; barred worlds satisfy every P(a)
        assert mono_star.atom("P", (2,))[labels.encode("w", 2)] == T
        assert mono_star.atom("P", (2,))[labels.encode("w", 1)] == F
        assert mono_star.atom("P", (-1,))[labels.encode("wbar", 3)] == T
        assert mono_star.atom("P", (0,))[labels.encode("v", 1, 0)] == T
        assert mono_star.frame.labels[1] == "w̄_0"

    def test_star_model_strict(self, mono):
        model = build_M0_star(mono, find_periodic(mono), 2, 3, reflexive=())
        assert model.frame.kind == "natlt"

    def test_dense_model(self, checker):
        frame = interleaved_dense_prefix(4)
        model = build_dense_model(checker, find_periodic(checker), frame, 3)
        # worlds 1/2, 1, 3/2, 2, ... carry rows 0, 0, 1, 1, 2, 2, 3, 3
        assert model.atom("p", ()).tolist() == [F, F, T, T, F, F, T, T]
        assert model.atom("M", (1,)).tolist() == [F, F, F, F, T, T, F, F]
        with pytest.raises(ModelParameterError):
            build_dense_model(checker, find_periodic(checker), nat_prefix(4), 3)

    def test_ordinal_model(self, mono):
        model = build_ordinal_model(mono, find_periodic(mono), 2, 1, 4, 3)
        assert model.size == 9
        assert model.atom("M", (1,)).tolist() == [F, F, T, F, F, F, F, F, F]
        assert model.atom("P0", (0,)).tolist() == [T, F, T, F, F, F, F, F, F]

    @pytest.mark.parametrize("builder", ["M0", "M0prime", "M0star", "dense", "ordinal"])
    def test_generator_file_roundtrip(self, builder, checker, tmp_path):
        periodic = find_periodic(checker)
        model = {
            "M0": lambda: build_M0(checker, periodic, 10, 3, reflexive=[0, 2]),
            "M0prime": lambda: build_M0_prime(checker, periodic, 10, 3),
            "M0star": lambda: build_M0_star(checker, periodic, 2, 3, reflexive=()),
            "dense": lambda: build_dense_model(checker, periodic, interleaved_dense_prefix(3, False), 3),
            "ordinal": lambda: build_ordinal_model(checker, periodic, 2, 1, 4, 3),
        }[builder]()
        path = tmp_path / "model.txt"
        write_model(model, path, checker, periodic)
        back = read_model(path)
        assert back.description == model.description
        assert back.frame.reflexive.tolist() == model.frame.reflexive.tolist()
        for letter, arity in model.letters.items():
            args = (1,) * arity
            assert back.atom(letter, args).tolist() == model.atom(letter, args).tolist()

    def test_generator_needs_tiles(self, checker):
        with pytest.raises(ModelFormatError):
            write_model(build_M0(checker, find_periodic(checker), 4, 2), "unused.txt")

    @pytest.mark.parametrize("text", ["", "model other\n", "model explicit\nworlds x\n",
                                      "model explicit\nworlds 1\ndomain 0: 0\natom 0 r\n"])
    def test_malformed_files(self, text):
        with pytest.raises(ModelFormatError):
            parse_model(text)
