"""Chat message types, backend configuration and sliding-window memory."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from ..errors import RtlPilotError

ROLES = ("system", "user", "assistant", "tool")
MEMORY_WINDOW = 4


class BackendError(RtlPilotError):
    pass


class BackendUnavailable(BackendError):
    """Transport failure or retry budget exhausted."""


class BackendRejected(BackendError):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"backend rejected the request with status {status}: {body[:500]}")


class ReplyBudgetExceeded(BackendError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    tool_name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "tool" and not self.tool_name:
            raise ValueError("tool messages need a tool_name")

    def to_json(self) -> dict:
        out = {"role": self.role, "content": self.content}
        if self.tool_name:
            out["tool_name"] = self.tool_name
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ChatMessage":
        return cls(obj["role"], obj["content"], obj.get("tool_name"))


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "http://localhost:8000/v1"
    model: str = "gpt-4-turbo"
    temperature: float = 0.1
    top_p: float = 1.0
    timeout: float = 120.0
    max_retries: int = 3
    backoff: float = 1.0
    path: str = "/chat/completions"

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @property
    def url(self) -> str:
        base = self.endpoint.rstrip("/")
        return base if base.endswith(self.path) else base + self.path


class Backend(Protocol):
    def complete(self, messages: Sequence[ChatMessage], role: Optional[str] = None) -> ChatMessage: ...


def chat(backend: Backend, messages: Sequence[ChatMessage], role: Optional[str] = None) -> ChatMessage:
    if not messages:
        raise ValueError("messages must be nonempty")
    if messages[0].role != "system":
        raise ValueError("the first message must be the system prompt")
    reply = backend.complete(list(messages), role)
    if reply.role != "assistant":
        reply = ChatMessage("assistant", reply.content)
    return reply


class CountingBackend:
    """Wraps a backend and enforces a global reply cap shared by every agent."""

    def __init__(self, inner: Backend, cap: Optional[int] = None):
        self.inner = inner
        self.cap = cap
        self.replies = 0

    def complete(self, messages: Sequence[ChatMessage], role: Optional[str] = None) -> ChatMessage:
        if self.cap is not None and self.replies >= self.cap:
            raise ReplyBudgetExceeded(f"reply cap of {self.cap} reached")
        self.replies += 1
        return self.inner.complete(messages, role)


def trim_memory(history: Sequence[ChatMessage], original_query: ChatMessage) -> list[ChatMessage]:
    """System prompt, the original query, then the last four non-system chats.

    The query is identified by position, so it is never repeated when it is
    already one of the last four."""
    system = next((m for m in history if m.role == "system"), None)
    chats = [(i, m) for i, m in enumerate(history) if m.role != "system"]
    recent = chats[-MEMORY_WINDOW:]
    q_index = next((i for i, m in enumerate(history) if m is original_query), None)
    out: list[ChatMessage] = [system] if system is not None else []
    if q_index is None or q_index not in {i for i, _ in recent}:
        out.append(original_query)
    out.extend(m for _, m in recent)
    return out


def satisfies_trim(sent: Sequence[ChatMessage], history: Sequence[ChatMessage], original_query: ChatMessage) -> bool:
    expected = trim_memory(history, original_query)
    return len(sent) == len(expected) and all(a is b for a, b in zip(sent, expected))
