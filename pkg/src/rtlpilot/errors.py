from __future__ import annotations

import difflib
from collections.abc import Iterable


class RtlPilotError(Exception):
    pass


class UnknownSignal(RtlPilotError, LookupError):
    """One or more signal names could not be resolved."""

    def __init__(self, names: Iterable[str], candidates: Iterable[str] = (), detail: str = ""):
        self.names = sorted(set(names))
        pool = sorted(set(candidates))
        self.near_matches = {
            n: difflib.get_close_matches(n.split(".")[-1], pool, n=3, cutoff=0.5) for n in self.names
        }
        parts = []
        for n in self.names:
            near = self.near_matches[n]
            parts.append(f"{n!r}" + (f" (did you mean {', '.join(near)}?)" if near else ""))
        msg = "unknown signal(s): " + "; ".join(parts)
        if detail:
            msg += f" [{detail}]"
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


class FatalToolError(RtlPilotError):
    """Raised by a tool when the environment itself is broken; ends an agent loop."""
