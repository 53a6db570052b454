"""Problem directory layout shared by the CLI and the fixture corpus.

    <id>/spec.txt    module description (required)
    <id>/tb.v        self-checking testbench (required)
    <id>/ref.v       reference implementation (optional)
    <id>/meta.json   {"category": ..., "clock": ...} (optional)
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import RtlPilotError

CATEGORIES = ("Application-Descr", "CombSeqFSM-Descr", "CombSeqFSM-Waveform", "Comb-Kmap", "FSM-TransTable",
              "other")


class ProblemConfigError(RtlPilotError):
    """A problem directory is incomplete or malformed."""


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    spec_text: str
    testbench: str
    category: str = "other"
    ref: Optional[str] = None
    clock: Optional[str] = None
    meta: Optional[dict] = None

    def __post_init__(self) -> None:
        if not self.spec_text.strip():
            raise ProblemConfigError(f"problem {self.id}: empty specification")
        if not self.testbench.strip():
            raise ProblemConfigError(f"problem {self.id}: empty testbench")
        if self.category not in CATEGORIES:
            raise ProblemConfigError(f"problem {self.id}: unknown category {self.category!r}")


def load_problem(path: Path) -> ProblemSpec:
    path = Path(path)
    if not path.is_dir():
        raise ProblemConfigError(f"{path} is not a problem directory")
    for required in ("spec.txt", "tb.v"):
        if not (path / required).is_file():
            raise ProblemConfigError(f"problem {path.name}: missing {required}")
    meta: dict = {}
    if (path / "meta.json").is_file():
        try:
            meta = json.loads((path / "meta.json").read_text())
        except json.JSONDecodeError as exc:
            raise ProblemConfigError(f"problem {path.name}: bad meta.json: {exc}") from None
    ref = (path / "ref.v").read_text() if (path / "ref.v").is_file() else None
    return ProblemSpec(path.name, (path / "spec.txt").read_text(), (path / "tb.v").read_text(),
                       meta.get("category", "other"), ref, meta.get("clock"), meta)


def discover(root: Path) -> list[Path]:
    """Problem directories under `root`, sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise ProblemConfigError(f"{root} is not a directory")
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / "spec.txt").exists())
