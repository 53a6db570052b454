from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

from ..errors import RtlPilotError
from ..llm import Backend, ChatMessage, ReactLimits, ReactTrace, chat
from ..sim_tools import SimulatorConfig
from .tracelog import TraceLog

ROLES = ("planner", "plan_critic", "extractor", "retriever", "engineer", "code_verifier", "debugger",
         "simple_planner", "simple_engineer")


class ExtractionInvalid(RtlPilotError):
    pass


def load_prompts(path: Optional[Path] = None) -> dict[str, str]:
    if path is None:
        text = resources.files(__package__).joinpath("prompts.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    prompts = json.loads(text)
    missing = [r for r in ROLES if r not in prompts]
    if missing:
        raise RtlPilotError(f"prompt file lacks roles: {', '.join(missing)}")
    return prompts


@dataclass
class AgentOutcome:
    ok: bool
    artifact: str
    trace: Any
    rounds: int = 0
    stop_reason: str = "final"
    tool_calls: Counter = field(default_factory=Counter)

    def trace_json(self) -> Any:
        return _jsonable(self.trace)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, ReactTrace):
        return obj.to_json()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


@dataclass
class AgentContext:
    backend: Backend
    workdir: Path
    prompts: dict[str, str] = field(default_factory=load_prompts)
    log: TraceLog = field(default_factory=lambda: TraceLog(None))
    sim: SimulatorConfig = field(default_factory=SimulatorConfig)
    round_budget: int = 8
    limits: ReactLimits = field(default_factory=ReactLimits)

    def ask(self, role: str, messages: Sequence[ChatMessage]) -> ChatMessage:
        reply = chat(self.backend, messages, role)
        record = {"agent": role, "reply": reply.content}
        if self.log.verbose:
            record["messages"] = [m.to_json() for m in messages]
        self.log.write("chat", **record)
        return reply

    def finish(self, agent: str, outcome: AgentOutcome) -> AgentOutcome:
        self.log.write("outcome", agent=agent, ok=outcome.ok, rounds=outcome.rounds,
                       stop_reason=outcome.stop_reason, tool_calls=dict(outcome.tool_calls),
                       trace=outcome.trace_json())
        return outcome


_VERILOG_FENCE = re.compile(r"```[ \t]*(?:verilog|systemverilog|sv|v)?[ \t]*\n(.*?)```", re.S | re.I)
_MODULE = re.compile(r"\bmodule\b.*?\bendmodule\b", re.S)


def extract_verilog(text: str) -> Optional[str]:
    """The module source in a reply: a fenced block holding a module, else a
    bare module...endmodule span."""
    for block in _VERILOG_FENCE.findall(text):
        if _MODULE.search(block):
            return block.strip() + "\n"
    m = _MODULE.search(text)
    return m.group(0).strip() + "\n" if m else None


_JSON_FENCE = re.compile(r"```[ \t]*(?:json)?[ \t]*\n?(.*?)```", re.S | re.I)


def extract_json(text: str) -> Any:
    for cand in [*_JSON_FENCE.findall(text), text]:
        try:
            return json.loads(cand.strip())
        except json.JSONDecodeError:
            continue
    raise ValueError("no parseable JSON found in reply")


def count_tools(*traces: ReactTrace) -> Counter:
    c: Counter = Counter()
    for t in traces:
        c.update(t.tool_calls)
    return c
