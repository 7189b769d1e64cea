"""Pipeline orchestrator: tile set → formula artifact → witness model → verdicts → extracted tiling."""
from __future__ import annotations

import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from checker import check_artifact, countermodel_search
from extraction import AmbiguousTileError, MissingTileError, extract_marks, extract_tiling, roundtrip_diff
from kripke import (
    CertificateError, ModelParameterError, PredicateModel, build_dense_model, build_M0, build_M0_prime,
    build_M0_star, build_ordinal_model, format_model, frame_from_spec, interleaved_dense_prefix, read_model,
    write_model,
)
from property_suites import run_mark_suites, run_star_suites
from formula_core import to_sexpr
from reductions import (
    ReductionArtifact, artifact_metrics, format_artifact, generate, parse_separation, read_artifact,
)
from tiling import PeriodicTiling, TileSet, find_periodic, format_grid, load_tiles, solve
from workbench_types import (
    EXIT_FALSE, EXIT_OK, CheckReport, ConfigError, PropertyReport, RunConfig, render_report, save_text,
)

DEFAULT_DENSE_CHAIN = 12
DEFAULT_ORDINAL = "ord:2,1"


class TilingWorkbench:
    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.out = Path(config.out)
        self._tileset: Optional[TileSet] = None
        self._periodic: Optional[PeriodicTiling] = None

    # ------------------------------------------------------------------
    # Status output
    # ------------------------------------------------------------------

    def say(self, message: str) -> None:
        if self.config.verbosity >= 1:
            print(message)

    def detail(self, message: str) -> None:
        if self.config.verbosity >= 2:
            print(message)

    def emit(self, payload: Dict, text: str, filename: str) -> Path:
        """Print a report and save it under the output directory."""
        suffix = ".json" if self.config.report == "structured" else ".txt"
        rendered = render_report(payload, text, self.config.report)
        print(rendered, end="")
        return save_text(rendered, filename + suffix, self.out)

    # ------------------------------------------------------------------
    # Inputs and bounds
    # ------------------------------------------------------------------

    @property
    def tileset(self) -> TileSet:
        if self._tileset is None:
            if not self.config.tiles:
                raise ConfigError(f"--tiles is required for '{self.config.subcommand}'")
            self._tileset = load_tiles(self.config.tiles, self.config.seed)
            self.say(f"✓ Loaded {len(self._tileset)} tile types from {self.config.tiles}")
        return self._tileset

    @property
    def periodic(self) -> PeriodicTiling:
        if self._periodic is None:
            self._periodic = find_periodic(self.tileset)
            if self._periodic is None:
                raise CertificateError("no recurrent periodic certificate with periods up to 4")
            width, height = self._periodic.period
            self.say(f"✓ Recurrent certificate found: {width}x{height} block")
        return self._periodic

    @property
    def s(self) -> int:
        return self.tileset.s

    def horizon(self) -> int:
        return self.config.horizon or (2 * self.s + 8) * (self.config.rows + 2)

    def domain_bound(self) -> int:
        return self.config.domain_bound or max(self.config.rows, self.config.cols) + 2

    def blocks(self) -> int:
        return self.config.blocks or self.config.rows + 2

    def _reflexive(self, default: str, size: int) -> List[int]:
        spec = self.config.frame or default
        if spec.split(":")[0] not in ("natle", "natlt", "natrefl"):
            raise ModelParameterError(f"frame {spec!r} does not fit variant {self.config.variant}")
        frame = frame_from_spec(spec, size)
        return [int(w) for w in np.flatnonzero(frame.reflexive)]

    def _dense_chain(self) -> int:
        spec = self.config.frame or f"dense:{DEFAULT_DENSE_CHAIN}"
        kind, _, arg = spec.partition(":")
        if kind != "dense" or (arg and not arg.isdigit()):
            raise ModelParameterError(f"frame {spec!r} does not fit variant {self.config.variant}")
        return int(arg) if arg else DEFAULT_DENSE_CHAIN

    def _ordinal(self) -> Tuple[int, int]:
        spec = self.config.frame or DEFAULT_ORDINAL
        kind, _, arg = spec.partition(":")
        try:
            m, k = (int(v) for v in arg.split(","))
        except ValueError:
            raise ModelParameterError(f"frame {spec!r} does not fit variant {self.config.variant}") from None
        if kind != "ord":
            raise ModelParameterError(f"frame {spec!r} does not fit variant {self.config.variant}")
        return m, k

    def build_model(self, variant: Optional[str] = None) -> PredicateModel:
        """The witness model matching ``variant`` under the configured bounds."""
        variant = variant or self.config.variant
        tiles, periodic, K = self.tileset, self.periodic, self.domain_bound()
        if variant in ("A", "Aprime"):
            H = self.horizon()
            builder = build_M0 if variant == "A" else build_M0_prime
            return builder(tiles, periodic, H, K, self._reflexive("natle", H))
        if variant in ("Astar", "Aplus"):
            blocks = self.blocks()
            size = (2 * self.s + 8) * blocks
            default = "natle" if variant == "Astar" else "natlt"
            return build_M0_star(tiles, periodic, blocks, K, self._reflexive(default, size))
        if variant in ("B", "Bplus"):
            frame = interleaved_dense_prefix(self._dense_chain(), reflexive=variant == "B")
            return build_dense_model(tiles, periodic, frame, K)
        if variant == "Abullet":
            m, k = self._ordinal()
            return build_ordinal_model(tiles, periodic, m, k, self.horizon(), K)
        raise ConfigError(f"no witness model for variant {variant!r}")

    def load_model(self) -> PredicateModel:
        if self.config.model_path:
            model = read_model(self.config.model_path)
            self.say(f"✓ Loaded model {model.description} from {self.config.model_path}")
            return model
        model = self.build_model()
        self.say(f"✓ Built {model.description} with {model.size} worlds")
        return model

    def load_artifact(self) -> ReductionArtifact:
        if self.config.artifact_path:
            art = read_artifact(self.config.artifact_path)
            self.say(f"✓ Loaded artifact {art.variant} ({len(art.conjuncts)} conjuncts)")
            return art
        return generate(self.tileset, self.config.variant)

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def gen(self) -> int:
        variant = self.config.variant
        self.say(f"🔄 Generating variant {variant}...")
        art = generate(self.tileset, variant)
        path = save_text(format_artifact(art), f"artifact_{variant}.txt", self.out)
        self.say(f"✓ Artifact saved to {path}")
        m = artifact_metrics(art)
        letters = ", ".join(f"{k}:{a}" for k, a in m.arities.items())
        text = "\n".join([
            f"# metrics {variant}",
            f"variables: {m.variable_count} ({' '.join(m.variables)})",
            f"letters: {{{letters}}}",
            f"modal_depth: {m.modal_depth}",
            f"conjuncts: {m.conjunct_count}",
        ]) + "\n"
        self.emit({"variant": variant, **m.to_dict()}, text, f"metrics_{variant}")
        return EXIT_OK

    def build(self) -> int:
        model = self.build_model()
        path = self.out / f"model_{self.config.variant}.txt"
        self.out.mkdir(parents=True, exist_ok=True)
        write_model(model, path, self.tileset, self.periodic)
        self.say(f"✓ Model {model.description} saved to {path}")
        return EXIT_OK

    def check(self) -> int:
        model = self.load_model()
        art = self.load_artifact()
        started = time.perf_counter()
        report = check_artifact(model, art, world=0, step_limit=self.config.step_limit)
        for result in report.results:
            self.detail(f"   {result.name}: {result.verdict} after {result.obligations} obligations")
        self.detail(f"   evaluated in {time.perf_counter() - started:.2f}s")
        self.emit(report.to_dict(), report.to_text(), f"check_{art.variant}")
        return self._verdict_status(report)

    def _verdict_status(self, report: CheckReport) -> int:
        if report.has_false:
            refuted = [r.name for r in report.results if r.verdict == "FALSE"]
            self.say(f"✗ False verdict on {', '.join(refuted)}")
            return EXIT_FALSE
        self.say("✓ No False verdict")
        return EXIT_OK

    def props(self) -> int:
        tiles, periodic, K = self.tileset, self.periodic, self.domain_bound()
        H, blocks, s = self.horizon(), self.blocks(), self.s
        reports: List[PropertyReport] = []
        for variant, builder in (("A", build_M0), ("Aprime", build_M0_prime)):
            model = builder(tiles, periodic, H, K)
            trace = extract_marks(model, variant, s)
            self.say(f"🔄 Mark suites on {model.description}: {trace.certified} marks certified")
            reports += run_mark_suites(model, trace, len(tiles), n_max=min(10, K))
        star = build_M0_star(tiles, periodic, blocks, K)
        prime = build_M0_prime(tiles, periodic, 2 * blocks, K)
        self.say(f"🔄 Block suites on {star.description}")
        reports += run_star_suites(star, prime, s, m_max=blocks - 2, a_max=K)
        text = "\n".join(r.to_line() for r in reports) + "\n"
        payload = {"suites": [{"name": r.name, "checked": r.checked, "violations": r.violations} for r in reports]}
        self.emit(payload, text, "props")
        failed = [r.name for r in reports if not r.ok]
        if failed:
            self.say(f"✗ Violations in {', '.join(failed)}")
            return EXIT_FALSE
        self.say(f"📊 {len(reports)} suites, {sum(r.checked for r in reports)} instances, no violations")
        return EXIT_OK

    def extract(self, model: Optional[PredicateModel] = None) -> int:
        model = model or self.load_model()
        variant, s = self.config.variant, self.s
        trace = extract_marks(model, variant, s)
        self.say(f"✓ {trace.certified} marks certified" + (" (prefix edge reached)" if trace.truncated else ""))
        try:
            result = extract_tiling(model, trace, s, self.config.rows, self.config.cols, self.tileset)
        except (MissingTileError, AmbiguousTileError) as e:
            self.say(f"✗ Extraction failed: {e}")
            return EXIT_FALSE
        grid_path = save_text(format_grid(result.grid), "grid.txt", self.out)
        save_text(result.provenance_json(), "grid_provenance.json", self.out)
        self.say(f"✓ Extracted {result.grid.width}x{result.grid.height} window saved to {grid_path}")
        if result.omitted_rows:
            self.say(f"⚠️  {result.omitted_rows} rows left out beyond the certified marks")
        diff = roundtrip_diff(self.periodic, result.grid)
        text_lines = [f"# extract {variant} from {model.description}",
                      f"window: {result.grid.width}x{result.grid.height}",
                      f"edge check: {'OK' if result.report.ok else 'FAILED'}",
                      f"roundtrip differences: {len(diff)}"]
        text_lines += [f"  cell ({c},{r}): expected {e}, got {a}" for c, r, e, a in diff]
        payload = {"variant": variant, "model": model.description, "width": result.grid.width,
                   "height": result.grid.height, "edges_ok": result.report.ok,
                   "diff": [list(d) for d in diff]}
        self.emit(payload, "\n".join(text_lines) + "\n", "extract")
        if diff or not result.report.ok:
            self.say("✗ Extracted window does not match the certificate")
            return EXIT_FALSE
        self.say("✓ Roundtrip reproduces the tiling window")
        return EXIT_OK

    def solve(self) -> int:
        cfg = self.config
        grid = solve(self.tileset, cfg.width, cfg.height, wrap=cfg.wrap, require_t0_col0=cfg.t0_col0)
        if grid is None:
            self.say(f"⚠️  No {cfg.width}x{cfg.height} tiling exists under the requested constraints")
            self.emit({"found": False, "width": cfg.width, "height": cfg.height}, "no tiling\n", "solve")
            return EXIT_OK
        path = save_text(format_grid(grid), "solution.txt", self.out)
        self.emit({"found": True, "cells": grid.cells.tolist()}, format_grid(grid), "solve")
        self.say(f"✓ Tiling saved to {path}")
        return EXIT_OK

    def sep(self) -> int:
        cfg = self.config
        phi = parse_separation(cfg.formula)
        frame = frame_from_spec(cfg.frame or "refl", horizon=cfg.length, length=cfg.length)
        self.say(f"🔄 Searching {frame.kind} frame of {frame.size} worlds for a countermodel to {to_sexpr(phi)}")
        result = countermodel_search(frame, phi, max_domain=cfg.max_domain, cap=cfg.search_cap)
        lines = [f"# sep {cfg.formula} on {cfg.frame or 'refl'} (len {cfg.length})",
                 f"valuations checked: {result.checked}"]
        payload = {"formula": cfg.formula, "frame": cfg.frame or "refl", "length": cfg.length,
                   "checked": result.checked, "refuted": result.refuted}
        if result.found is not None:
            path = save_text(format_model(result.found.model), "countermodel.txt", self.out)
            lines.append(f"countermodel: valuation #{result.found.index}, refuted at world {result.found.world}")
            payload["world"] = result.found.world
            self.say(f"✓ Countermodel saved to {path}")
        else:
            lines.append("countermodel: none within bounds")
            self.say("📊 No countermodel within bounds")
        self.emit(payload, "\n".join(lines) + "\n", "sep")
        outcome = "refuted" if result.refuted else "none"
        if cfg.expect is not None and outcome != cfg.expect:
            self.say(f"✗ Expected {cfg.expect}, search gave {outcome}")
            return EXIT_FALSE
        return EXIT_OK

    def pipeline(self) -> int:
        variant = self.config.variant
        self.say(f"🚀 Running the {variant} pipeline...\n")
        self.gen()
        self.build()
        model = self.build_model()
        report = check_artifact(model, generate(self.tileset, variant), world=0, step_limit=self.config.step_limit)
        self.emit(report.to_dict(), report.to_text(), f"check_{variant}")
        status = self._verdict_status(report)
        extracted = self.extract(model)
        if status == EXIT_OK and extracted == EXIT_OK:
            self.say(f"\n🎉 Pipeline for {variant} complete")
            return EXIT_OK
        return EXIT_FALSE


def run(config: RunConfig) -> int:
    """Execute one subcommand and return its exit status."""
    workbench = TilingWorkbench(config)
    return getattr(workbench, config.subcommand)()
