"""Data classes and error roots shared by the workbench components."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Dict, List, Optional

OUTPUT_DIR = Path(os.getenv("TILING_WORKBENCH_OUTPUT", Path(__file__).parent / "output"))

# Exit codes surfaced by run_workbench.py
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FALSE = 3
EXIT_GUARD = 4


class WorkbenchError(Exception):
    """Root of every error raised by the workbench."""


class InputError(WorkbenchError):
    """Malformed or out-of-range input (exit code 2)."""


class GuardExceeded(WorkbenchError):
    """A size guard, step limit or search cap was hit (exit code 4)."""


class ConfigError(InputError):
    """Inconsistent run configuration."""


class Truth(IntEnum):
    """Strong-Kleene truth value; the integer codes make and/or a min/max."""

    FALSE = 0
    UNKNOWN = 1
    TRUE = 2

    def __str__(self) -> str:
        return self.name

    def __invert__(self) -> "Truth":
        return Truth(2 - int(self))

    def __and__(self, other) -> "Truth":
        if not isinstance(other, Truth):
            return NotImplemented
        return Truth(min(int(self), int(other)))

    def __or__(self, other) -> "Truth":
        if not isinstance(other, Truth):
            return NotImplemented
        return Truth(max(int(self), int(other)))

    @classmethod
    def of(cls, value: bool) -> "Truth":
        return cls.TRUE if value else cls.FALSE


VARIANTS = ("A", "Aprime", "Astar", "Aplus", "B", "Bplus", "Abullet")
SUBCOMMANDS = ("gen", "build", "check", "props", "extract", "solve", "sep", "pipeline")


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    subcommand: str
    tiles: Optional[str] = None
    variant: str = "A"
    frame: Optional[str] = None
    horizon: Optional[int] = None
    domain_bound: Optional[int] = None
    blocks: Optional[int] = None
    rows: int = 8
    cols: int = 8
    out: Path = OUTPUT_DIR
    report: str = "text"
    seed: int = 0
    verbosity: int = 1
    model_path: Optional[str] = None
    artifact_path: Optional[str] = None
    width: int = 4
    height: int = 4
    wrap: bool = False
    t0_col0: bool = False
    formula: str = "Z"
    length: int = 5
    max_domain: int = 1
    expect: Optional[str] = None
    search_cap: int = int(os.getenv("TILING_WORKBENCH_SEARCH_CAP", str(1 << 20)))
    step_limit: int = int(os.getenv("TILING_WORKBENCH_STEP_LIMIT", "50000000"))

    def validate(self) -> None:
        """Reject non-positive bounds, unknown names and clashing paths."""
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        if self.expect not in (None, "refuted", "none"):
            raise ConfigError(f"--expect must be refuted or none, got {self.expect!r}")
        if self.report not in ("text", "structured"):
            raise ConfigError(f"unknown report format {self.report!r}")
        for name in ("horizon", "domain_bound", "blocks"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive, got {value}")
        for name in ("rows", "cols", "width", "height", "length", "max_domain", "search_cap", "step_limit"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        inputs = [p for p in (self.tiles, self.model_path, self.artifact_path) if p]
        if len(set(inputs)) != len(inputs):
            raise ConfigError("input paths must be distinct")


@dataclass
class ConjunctVerdict:
    """Verdict of one named conjunct at the evaluation world."""

    name: str
    verdict: str
    obligations: int = 0
    trace: List[str] = field(default_factory=list)

    def to_line(self) -> str:
        if self.verdict == "UNKNOWN":
            detail = "no False subverdict"
        elif self.verdict == "TRUE":
            detail = "holds on the prefix"
        else:
            detail = "refuted"
        line = f"{self.name}: {self.verdict} ({detail}; {self.obligations} obligations checked)"
        if self.trace:
            line += " via " + " -> ".join(self.trace)
        return line


@dataclass
class CheckReport:
    """Per-conjunct verdicts of one artifact against one model."""

    variant: str
    model: str
    world: int
    results: List[ConjunctVerdict] = field(default_factory=list)

    def add(self, result: ConjunctVerdict) -> None:
        self.results.append(result)

    @property
    def has_false(self) -> bool:
        return any(r.verdict == "FALSE" for r in self.results)

    def get(self, name: str) -> Optional[ConjunctVerdict]:
        for result in self.results:
            if result.name == name:
                return result
        return None

    def to_text(self) -> str:
        header = f"# check {self.variant} on {self.model} at world {self.world}"
        return "\n".join([header] + [r.to_line() for r in self.results]) + "\n"

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class PropertyReport:
    """Outcome of one property suite."""

    name: str
    checked: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_line(self) -> str:
        status = "OK" if self.ok else f"{len(self.violations)} VIOLATIONS"
        line = f"{self.name}: {status} ({self.checked} instances)"
        if self.violations:
            line += "\n    " + "\n    ".join(self.violations[:10])
        return line


def render_report(payload: Dict, text: str, fmt: str) -> str:
    """Pick the text or the structured (JSON) rendering of a report."""
    if fmt == "structured":
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return text


def save_text(text: str, filename: str, output_dir: Path = OUTPUT_DIR) -> Path:
    """Write a report or artifact under the output directory."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    filepath = output_dir / filename
    with open(filepath, "w", encoding="utf-8") as f:
        f.write(text)
    return filepath
