"""Append-only JSONL trace log, flushed and fsynced per record."""
from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path
from typing import Any, Optional


class TraceLog:
    def __init__(self, path: Optional[Path], problem_id: str = "", verbose: bool = False):
        self.path = Path(path) if path is not None else None
        self.problem_id = problem_id
        self.verbose = verbose
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, kind: str, **data: Any) -> None:
        if self.path is None:
            return
        record = {"ts": time.time(), "problem": self.problem_id, "kind": kind, **data}
        line = json.dumps(record, default=str) + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def hook(self, agent: str, **extra: Any):
        """Callback for react_loop turn events."""
        def on_turn(kind: str, data: dict) -> None:
            self.write(kind, agent=agent, **extra, **data)
        return on_turn

    def read(self) -> list[dict]:
        if self.path is None or not self.path.exists():
            return []
        return [json.loads(line) for line in self.path.read_text().splitlines() if line.strip()]
