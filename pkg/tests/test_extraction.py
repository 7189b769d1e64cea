import numpy as np
import pytest

from extraction import (
    ExtractionError, MissingTileError, NoMarkError, extract_marks, extract_tiling, roundtrip_diff,
)
from kripke import build_M0, build_M0_prime, build_M0_star, chain, table_model
from tiling import TilingGrid, find_periodic

CHECKERBOARD = TilingGrid(np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]]))


class TestMarks:
    def test_successor_letter(self, checker_m0):
        trace = extract_marks(checker_m0, "A", 1)
        assert trace.marks == list(range(7))
        assert trace.first_worlds == [0, 2, 4, 6, 8, 10, 12]
        assert trace.truncated
        assert trace.world_marks(checker_m0) == {2 * n: n for n in range(7)}

    def test_step_pairs(self, checker_m0_prime):
        trace = extract_marks(checker_m0_prime, "Aprime", 1)
        assert trace.marks == list(range(7))
        assert trace.first_worlds == [2 * n for n in range(7)]

    def test_block_model(self, mono_star):
        trace = extract_marks(mono_star, "Astar", 0)
        assert trace.marks == [0, 1, 2, 3, 4]
        assert trace.first_worlds == [0, 8, 16, 24, 32]
        assert trace.truncated

    def test_no_mark_at_the_root(self):
        model = table_model(chain(1, True), [[0]], {"M": 1, "P0": 1, "Succ": 2, "p": 0}, {})
        with pytest.raises(NoMarkError):
            extract_marks(model, "A", 0)

    def test_unknown_variant(self, checker_m0):
        with pytest.raises(ExtractionError):
            extract_marks(checker_m0, "C", 1)


class TestTiling:
    @pytest.mark.parametrize("variant, fixture", [("A", "checker_m0"), ("Aprime", "checker_m0_prime")])
    def test_window_matches_the_certificate(self, variant, fixture, checker, request):
        model = request.getfixturevalue(fixture)
        trace = extract_marks(model, variant, checker.s)
        result = extract_tiling(model, trace, checker.s, 4, 4, checker)
        assert result.grid == CHECKERBOARD
        assert result.report.ok
        assert result.omitted_rows == 0
        assert result.provenance[(1, 0)] == (0, "P1(1)")
        assert roundtrip_diff(find_periodic(checker), result.grid) == []

    def test_block_model_reads_beta(self, mono, mono_star):
        trace = extract_marks(mono_star, "Astar", 0)
        result = extract_tiling(mono_star, trace, 0, 4, 4, mono)
        assert result.grid == TilingGrid(np.zeros((4, 4), dtype=int))
        assert result.provenance[(2, 1)] == (8, "β_0(2)")
        assert roundtrip_diff(find_periodic(mono), result.grid) == []

    def test_rows_past_the_prefix_are_omitted(self, checker, checker_m0):
        trace = extract_marks(checker_m0, "A", 1)
        result = extract_tiling(checker_m0, trace, 1, 10, 2, checker)
        assert result.grid.height == 7
        assert result.omitted_rows == 3

    def test_untiled_element(self, checker, checker_m0):
        # with s = 0 only P0 is read, and element 1 carries P1 at world 0
        trace = extract_marks(checker_m0, "A", 1)
        with pytest.raises(MissingTileError):
            extract_tiling(checker_m0, trace, 0, 2, 2, checker)

    def test_provenance_json(self, checker, checker_m0):
        trace = extract_marks(checker_m0, "A", 1)
        text = extract_tiling(checker_m0, trace, 1, 1, 1, checker).provenance_json()
        assert '"0,0"' in text
        assert '"atom": "P0(0)"' in text

    @pytest.mark.parametrize("name", ["checker", "stripes", "rows3"])
    @pytest.mark.parametrize("variant, build", [
        ("A", lambda ts, f: build_M0(ts, f, 40, 10)),
        ("Aprime", lambda ts, f: build_M0_prime(ts, f, 100, 10)),
        ("Astar", lambda ts, f: build_M0_star(ts, f, 10, 10)),
    ])
    def test_eight_by_eight_roundtrip(self, name, variant, build, request):
        tileset = request.getfixturevalue(name)
        periodic = find_periodic(tileset)
        model = build(tileset, periodic)
        trace = extract_marks(model, variant, tileset.s)
        result = extract_tiling(model, trace, tileset.s, 8, 8, tileset)
        assert (result.grid.width, result.grid.height) == (8, 8)
        assert result.report.ok
        assert roundtrip_diff(periodic, result.grid) == []
