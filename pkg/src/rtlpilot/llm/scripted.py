"""Deterministic offline backend driven by an ordered rule list.

A transcript is JSON: either a list of rules or {"rules": [...]}. Each rule
has `match` (regex searched in the last non-system message), `reply`,
optional `role` (agent role tag; absent matches any role) and optional
`times` (uses before the rule is spent; null means unlimited, default 1).

Replies may contain `{{last}}` (the matched message verbatim) or
`{{last_json}}` (the same, escaped for embedding in a JSON string).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .core import BackendError, ChatMessage


class ScriptExhausted(BackendError):
    """No rule matched the prompt."""


@dataclass
class Rule:
    match: str
    reply: str
    role: Optional[str] = None
    times: Optional[int] = 1
    used: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self._rx = re.compile(self.match, re.S)

    def available(self) -> bool:
        return self.times is None or self.used < self.times

    def applies(self, role: Optional[str], text: str) -> bool:
        return self.available() and (self.role is None or self.role == role) and bool(self._rx.search(text))


def _fill(template: str, last: str) -> str:
    return template.replace("{{last_json}}", json.dumps(last)[1:-1]).replace("{{last}}", last)


class ScriptedBackend:
    def __init__(self, rules: Sequence[Rule]):
        self.rules = list(rules)
        self.calls: list[tuple[Optional[str], str]] = []

    @classmethod
    def from_json(cls, data: Union[str, list, dict]) -> "ScriptedBackend":
        obj = json.loads(data) if isinstance(data, str) else data
        if isinstance(obj, dict):
            obj = obj["rules"]
        return cls([Rule(r["match"], r["reply"], r.get("role"), r.get("times", 1)) for r in obj])

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScriptedBackend":
        return cls.from_json(Path(path).read_text())

    def complete(self, messages: Sequence[ChatMessage], role: Optional[str] = None) -> ChatMessage:
        last = next((m.content for m in reversed(messages) if m.role != "system"), "")
        self.calls.append((role, last))
        for rule in self.rules:
            if rule.applies(role, last):
                rule.used += 1
                return ChatMessage("assistant", _fill(rule.reply, last))
        raise ScriptExhausted(f"no scripted reply for role {role!r} and prompt:\n{last[:800]}")

    def unused(self) -> list[Rule]:
        return [r for r in self.rules if r.times is not None and r.used < r.times]
