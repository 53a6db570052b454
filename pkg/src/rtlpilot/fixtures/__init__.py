"""Bundled desk-scale problem corpus, hand-written VCD files and their checks."""
from __future__ import annotations

import json
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..problem import ProblemSpec, discover, load_problem
from ..sim_tools import SimulatorConfig, simulate
from ..waveform import load_vcd

PACKAGE_DIR = Path(__file__).resolve().parent
PROBLEMS_DIR = PACKAGE_DIR / "problems"
VCD_DIR = PACKAGE_DIR / "vcd"


@dataclass(frozen=True)
class BuggyVariant:
    name: str
    source: str
    description: str
    mismatched_outputs: tuple[str, ...]
    first_mismatch_ns: int


@dataclass(frozen=True)
class Fixture:
    problem: ProblemSpec
    golden: str
    bugs: tuple[BuggyVariant, ...]
    transcript: dict
    path: Path


def problem_ids() -> list[str]:
    return [p.name for p in discover(PROBLEMS_DIR)]


def vcd_files() -> list[Path]:
    return sorted(VCD_DIR.glob("*.vcd"))


def load_fixture(problem_id: str, root: Path = PROBLEMS_DIR) -> Fixture:
    path = Path(root) / problem_id
    problem = load_problem(path)
    if problem.ref is None:
        raise ValueError(f"fixture {problem_id} lacks ref.v")
    golden = problem.ref.replace("module RefModule", "module TopModule", 1)
    bugs = tuple(
        BuggyVariant(b["name"], (path / b["file"]).read_text(), b["description"],
                     tuple(b["mismatched_outputs"]), int(b["first_mismatch_ns"]))
        for b in (problem.meta or {}).get("bugs", []))
    transcript = json.loads((path / "transcript.json").read_text())
    return Fixture(problem, golden, bugs, transcript, path)


@dataclass
class FixtureReport:
    checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _first_mismatch_ns(report) -> Optional[float]:
    if report.first_mismatch_time is None or report.vcd_path is None:
        return None
    return report.first_mismatch_time * load_vcd(report.vcd_path).tick_seconds / 1e-9


def _check(fx: Fixture, workdir: Path, config: Optional[SimulatorConfig]) -> tuple[int, list[str]]:
    problems: list[str] = []
    pid = fx.problem.id
    rep = simulate(fx.golden, fx.problem.testbench, workdir / "golden", config=config)
    if not rep.passed:
        problems.append(f"{pid}: golden design does not pass ({rep.summary().splitlines()[0]})")
    for bug in fx.bugs:
        rep = simulate(bug.source, fx.problem.testbench, workdir / bug.name, config=config)
        tag = f"{pid}/{bug.name}"
        if not rep.compiled:
            problems.append(f"{tag}: does not compile")
            continue
        if not rep.mismatch_count:
            problems.append(f"{tag}: no mismatches")
            continue
        seen = sorted(s for s, n in rep.mismatched_signals.items() if n)
        if seen != sorted(bug.mismatched_outputs):
            problems.append(f"{tag}: mismatching outputs {seen}, documented {sorted(bug.mismatched_outputs)}")
        first = _first_mismatch_ns(rep)
        if first is None or abs(first - bug.first_mismatch_ns) > 1e-6:
            problems.append(f"{tag}: first mismatch at {first} ns, documented {bug.first_mismatch_ns} ns")
    return 1 + len(fx.bugs), problems


def validate_fixtures(root: Path = PROBLEMS_DIR, config: Optional[SimulatorConfig] = None,
                      jobs: int = 1) -> FixtureReport:
    """Every golden design passes its testbench and every buggy variant
    compiles, mismatches on the documented outputs and first diverges at the
    documented time. Violations are reported, never raised."""
    report = FixtureReport()
    ids = [p.name for p in discover(root)]
    with tempfile.TemporaryDirectory(prefix="rtlpilot-fixtures-") as tmp:
        def run(pid: str) -> tuple[int, list[str]]:
            try:
                return _check(load_fixture(pid, root), Path(tmp) / pid, config)
            except Exception as exc:  # report-only
                return 0, [f"{pid}: {type(exc).__name__}: {exc}"]

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            for n, problems in pool.map(run, ids):
                report.checked += n
                report.violations.extend(problems)
    return report


__all__ = ["PROBLEMS_DIR", "VCD_DIR", "BuggyVariant", "Fixture", "FixtureReport", "load_fixture", "problem_ids",
           "validate_fixtures", "vcd_files"]
