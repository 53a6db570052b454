"""Thought/Action/Observation loop over a chat backend and a tool registry."""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Optional

from ..errors import FatalToolError, RtlPilotError
from .core import Backend, ChatMessage, chat, satisfies_trim, trim_memory

FINAL = "FINAL"
MAX_FORMAT_REMINDERS = 3
STOP_REASONS = ("final", "step_budget", "reply_budget", "tool_fatal")

ACTION_FORMAT = """Every reply must contain exactly one fenced JSON block of the form
```json
{"thought": "<your reasoning>", "action": "<tool name or FINAL>", "action_input": <text or JSON>}
```
Use action FINAL with the final answer as action_input when you are done."""


class ActionParseError(RtlPilotError):
    pass


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    invoke: Callable[[str], str]


@dataclass(frozen=True)
class ReactLimits:
    max_steps: int = 40
    max_consecutive_replies: int = 100

    def __post_init__(self) -> None:
        if self.max_steps < 1 or self.max_consecutive_replies < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class Step:
    thought: str
    action: str
    action_input: str
    observation: str
    known: bool = True  # False when the action named a tool outside the registry


@dataclass
class ReactTrace:
    steps: list[Step] = field(default_factory=list)
    final_answer: Optional[str] = None
    stop_reason: str = "final"
    format_errors: int = 0
    replies: int = 0

    @property
    def tool_calls(self) -> list[str]:
        """Invoked registry tools, in order (FINAL and unknown names excluded)."""
        return [s.action for s in self.steps if s.action != FINAL and s.known]

    def to_json(self) -> dict:
        return {"steps": [asdict(s) for s in self.steps], "final_answer": self.final_answer,
                "stop_reason": self.stop_reason, "format_errors": self.format_errors, "replies": self.replies}

    @classmethod
    def from_json(cls, obj: dict) -> "ReactTrace":
        return cls([Step(**s) for s in obj["steps"]], obj["final_answer"], obj["stop_reason"],
                   obj.get("format_errors", 0), obj.get("replies", 0))


_FENCE = re.compile(r"```(?:json|JSON)?[ \t]*\n?(.*?)```", re.S)


def parse_action(text: str) -> tuple[str, str, str]:
    """Extract (thought, action, action_input) from an assistant reply."""
    blocks = [b.strip() for b in _FENCE.findall(text)]
    if not blocks:
        stripped = text.strip()
        if stripped.startswith("{") and stripped.endswith("}"):
            blocks = [stripped]
    parsed = []
    for b in blocks:
        try:
            obj = json.loads(b)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and "action" in obj:
            parsed.append(obj)
    if len(parsed) != 1:
        raise ActionParseError("expected exactly one JSON action block" if parsed else "no JSON action block found")
    obj = parsed[0]
    action = obj.get("action")
    if not isinstance(action, str) or not action.strip():
        raise ActionParseError("`action` must be a nonempty string")
    raw = obj.get("action_input", "")
    if raw is None:
        raw = ""
    action_input = raw if isinstance(raw, str) else json.dumps(raw, sort_keys=True)
    return str(obj.get("thought", "")), action.strip(), action_input


def format_system_prompt(system_prompt: str, tools: Mapping[str, Tool]) -> str:
    lines = [system_prompt.rstrip(), "", "Available tools:"]
    lines += [f"- {t.name}: {t.description}" for t in tools.values()] or ["- (none)"]
    lines += ["", ACTION_FORMAT]
    return "\n".join(lines)


def react_loop(system_prompt: str, query: str, tools: Mapping[str, Tool], backend: Backend,
               limits: ReactLimits = ReactLimits(), role: Optional[str] = None,
               on_turn: Optional[Callable[[str, dict], None]] = None) -> ReactTrace:
    if len({t.name for t in tools.values()}) != len(tools) or any(k != t.name for k, t in tools.items()):
        raise ValueError("tool registry keys must equal unique tool names")
    system = ChatMessage("system", format_system_prompt(system_prompt, tools))
    original = ChatMessage("user", query)
    history: list[ChatMessage] = [system, original]
    trace = ReactTrace()
    reminders = 0

    def emit(kind: str, **data) -> None:
        if on_turn:
            on_turn(kind, data)

    while True:
        if len(trace.steps) >= limits.max_steps:
            trace.stop_reason = "step_budget"
            return trace
        if trace.replies >= limits.max_consecutive_replies:
            trace.stop_reason = "reply_budget"
            return trace
        sent = trim_memory(history, original)
        assert satisfies_trim(sent, history, original), "memory window violated"
        reply = chat(backend, sent, role)
        trace.replies += 1
        history.append(reply)
        emit("assistant", content=reply.content)
        try:
            thought, action, action_input = parse_action(reply.content)
        except ActionParseError as exc:
            trace.format_errors += 1
            reminders += 1
            if reminders > MAX_FORMAT_REMINDERS:
                trace.stop_reason = "reply_budget"
                return trace
            note = f"Your reply could not be parsed ({exc}).\n{ACTION_FORMAT}"
            history.append(ChatMessage("user", note))
            emit("format_reminder", content=note)
            continue
        reminders = 0
        if action == FINAL:
            trace.steps.append(Step(thought, FINAL, action_input, ""))
            trace.final_answer = action_input
            trace.stop_reason = "final"
            return trace
        tool = tools.get(action)
        fatal = False
        if tool is None:
            observation = f"unknown tool '{action}', available: {', '.join(sorted(tools)) or '(none)'}"
        else:
            try:
                observation = tool.invoke(action_input)
            except FatalToolError as exc:
                observation = f"fatal tool error: {exc}"
                fatal = True
            except (RtlPilotError, ValueError) as exc:
                observation = f"tool error: {exc}"
        observation = observation or "(no output)"
        trace.steps.append(Step(thought, action, action_input, observation, tool is not None))
        emit("tool", tool=action, input=action_input, observation=observation)
        if fatal:
            trace.stop_reason = "tool_fatal"
            return trace
        history.append(ChatMessage("tool", observation, tool_name=action))


def final_action(answer: str, thought: str = "") -> str:
    """Render a FINAL action block (used by scripted transcripts and tests)."""
    return tool_action(FINAL, answer, thought)


def tool_action(action: str, action_input, thought: str = "") -> str:
    return "```json\n" + json.dumps({"thought": thought, "action": action, "action_input": action_input}) + "\n```"
