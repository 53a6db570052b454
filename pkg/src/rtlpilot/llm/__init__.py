from .core import (
    Backend,
    BackendConfig,
    BackendError,
    BackendRejected,
    BackendUnavailable,
    ChatMessage,
    CountingBackend,
    ReplyBudgetExceeded,
    chat,
    satisfies_trim,
    trim_memory,
)
from .http import HttpBackend, api_key_from_env
from .react import (
    FINAL,
    ActionParseError,
    ReactLimits,
    ReactTrace,
    Step,
    Tool,
    final_action,
    parse_action,
    react_loop,
    tool_action,
)
from .scripted import Rule, ScriptedBackend, ScriptExhausted

__all__ = [
    "Backend", "BackendConfig", "BackendError", "BackendRejected", "BackendUnavailable", "ChatMessage",
    "CountingBackend", "ReplyBudgetExceeded", "chat", "satisfies_trim", "trim_memory", "HttpBackend",
    "api_key_from_env", "FINAL", "ActionParseError", "ReactLimits", "ReactTrace", "Step", "Tool",
    "final_action", "parse_action", "react_loop", "tool_action", "Rule", "ScriptedBackend", "ScriptExhausted",
]
