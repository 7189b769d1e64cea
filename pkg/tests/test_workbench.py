import json

import pytest

from conftest import TILESETS_DIR
from run_workbench import main
from workbench import run
from workbench_types import EXIT_FALSE, EXIT_GUARD, EXIT_INPUT, EXIT_OK, ConfigError, RunConfig

CHECKER_TILES = str(TILESETS_DIR / "checker.tiles")
MONO_TILES = str(TILESETS_DIR / "mono.tiles")


def _config(subcommand, tmp_path, **kwargs):
    kwargs.setdefault("rows", 4)
    kwargs.setdefault("cols", 4)
    return RunConfig(subcommand, out=tmp_path, verbosity=0, **kwargs)


class TestSubcommands:
    def test_gen_writes_artifact_and_metrics(self, tmp_path):
        assert run(_config("gen", tmp_path, tiles=CHECKER_TILES, variant="Aprime")) == EXIT_OK
        assert (tmp_path / "artifact_Aprime.txt").read_text(encoding="utf-8").startswith("# variant: Aprime\n")
        metrics = (tmp_path / "metrics_Aprime.txt").read_text(encoding="utf-8")
        assert "variables: 2 (x y)" in metrics
        assert "conjuncts: 10" in metrics

    def test_check_saved_model_and_artifact(self, tmp_path):
        assert run(_config("gen", tmp_path, tiles=CHECKER_TILES)) == EXIT_OK
        assert run(_config("build", tmp_path, tiles=CHECKER_TILES)) == EXIT_OK
        status = run(_config("check", tmp_path, tiles=CHECKER_TILES, report="structured",
                             model_path=str(tmp_path / "model_A.txt"),
                             artifact_path=str(tmp_path / "artifact_A.txt")))
        assert status == EXIT_OK
        report = json.loads((tmp_path / "check_A.json").read_text(encoding="utf-8"))
        assert report["variant"] == "A"
        assert [r["name"] for r in report["results"]] == [f"A_{i}" for i in range(10)]
        assert "FALSE" not in {r["verdict"] for r in report["results"]}

    def test_extract_from_saved_model(self, tmp_path):
        assert run(_config("build", tmp_path, tiles=CHECKER_TILES)) == EXIT_OK
        status = run(_config("extract", tmp_path, tiles=CHECKER_TILES, model_path=str(tmp_path / "model_A.txt")))
        assert status == EXIT_OK
        assert (tmp_path / "grid.txt").read_text(encoding="utf-8") == (
            "grid 4 4\n0 1 0 1\n1 0 1 0\n0 1 0 1\n1 0 1 0\n"
        )
        assert "roundtrip differences: 0" in (tmp_path / "extract.txt").read_text(encoding="utf-8")

    def test_pipeline(self, tmp_path):
        assert run(_config("pipeline", tmp_path, tiles=CHECKER_TILES)) == EXIT_OK
        for name in ("artifact_A.txt", "metrics_A.txt", "model_A.txt", "check_A.txt", "grid.txt",
                     "grid_provenance.json", "extract.txt"):
            assert (tmp_path / name).exists(), name

    def test_props(self, tmp_path):
        assert run(_config("props", tmp_path, tiles=CHECKER_TILES)) == EXIT_OK
        lines = (tmp_path / "props.txt").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("mark-advance: OK")
        assert all(": OK (" in line for line in lines)

    def test_solve(self, tmp_path):
        assert run(_config("solve", tmp_path, tiles=CHECKER_TILES, width=2, height=2, wrap=True)) == EXIT_OK
        assert (tmp_path / "solution.txt").read_text(encoding="utf-8") == "grid 2 2\n0 1\n1 0\n"

    def test_solve_without_solution(self, tmp_path):
        assert run(_config("solve", tmp_path, tiles=CHECKER_TILES, width=3, height=2, wrap=True)) == EXIT_OK
        assert not (tmp_path / "solution.txt").exists()
        assert (tmp_path / "solve.txt").read_text(encoding="utf-8") == "no tiling\n"

    def test_sep_finds_a_countermodel(self, tmp_path):
        assert run(_config("sep", tmp_path, formula="Z", frame="refl", length=3)) == EXIT_OK
        assert (tmp_path / "countermodel.txt").read_text(encoding="utf-8").startswith("model explicit\nworlds 3\n")

    def test_sep_without_countermodel(self, tmp_path):
        assert run(_config("sep", tmp_path, formula="Z", frame="irrefl", length=3)) == EXIT_OK
        assert not (tmp_path / "countermodel.txt").exists()
        assert "countermodel: none within bounds" in (tmp_path / "sep.txt").read_text(encoding="utf-8")

    def test_sep_expectation(self, tmp_path):
        assert run(_config("sep", tmp_path, formula="Z", frame="refl", length=3, expect="refuted")) == EXIT_OK
        assert run(_config("sep", tmp_path, formula="Z", frame="irrefl", length=3, expect="refuted")) == EXIT_FALSE
        assert run(_config("sep", tmp_path, formula="boxnref:2", frame="gn:2", length=5, expect="none")) == EXIT_OK
        assert run(_config("sep", tmp_path, formula="boxnref:2", frame="gn:3", length=5, expect="none")) == EXIT_FALSE

    def test_invalid_config(self, tmp_path):
        with pytest.raises(ConfigError):
            run(_config("gen", tmp_path, variant="C", tiles=CHECKER_TILES))
        with pytest.raises(ConfigError):
            run(_config("sep", tmp_path, expect="maybe"))
        with pytest.raises(ConfigError):
            run(_config("gen", tmp_path))


class TestCommandLine:
    def test_input_error(self, tmp_path):
        argv = ["build", "--tiles", str(TILESETS_DIR / "nonrec.tiles"), "--quiet", "--out", str(tmp_path)]
        assert main(argv) == EXIT_INPUT

    def test_guard(self, tmp_path):
        argv = ["solve", "--tiles", MONO_TILES, "--width", "9", "--height", "8", "--quiet", "--out", str(tmp_path)]
        assert main(argv) == EXIT_GUARD

    def test_wrong_frame_for_variant(self, tmp_path):
        argv = ["build", "--tiles", MONO_TILES, "--variant", "B", "--frame", "natle", "--quiet",
                "--out", str(tmp_path)]
        assert main(argv) == EXIT_INPUT

    def test_untiled_window_is_a_false_verdict(self, tmp_path):
        # the checker model read with the one-tile set: element 1 has no P0 at world 0
        assert main(["build", "--tiles", CHECKER_TILES, "--quiet", "--out", str(tmp_path)]) == EXIT_OK
        argv = ["extract", "--tiles", str(TILESETS_DIR / "mono.tiles"), "--model", str(tmp_path / "model_A.txt"),
                "--rows", "2", "--cols", "2", "--quiet", "--out", str(tmp_path)]
        assert main(argv) == EXIT_FALSE

    def test_banner(self, tmp_path, capsys):
        assert main(["sep", "--formula", "ref", "--frame", "irrefl", "--len", "1", "--out", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("🧩 Tiling Reduction Workbench\n" + "=" * 50)
        assert "✓ Countermodel saved to" in out

    def test_sep_expectation_flag(self, tmp_path):
        argv = ["sep", "--formula", "Z", "--frame", "irrefl", "--len", "2", "--expect", "refuted", "--quiet",
                "--out", str(tmp_path)]
        assert main(argv) == EXIT_FALSE
