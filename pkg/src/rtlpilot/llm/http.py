"""Client for chat-completions style HTTP endpoints."""
from __future__ import annotations

import logging
import os
import time
from typing import Callable, Optional, Sequence

import httpx

from .core import BackendConfig, BackendRejected, BackendUnavailable, ChatMessage

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})
API_KEY_VARS = ("RTLPILOT_API_KEY", "OPENAI_API_KEY")


def api_key_from_env() -> Optional[str]:
    for var in API_KEY_VARS:
        if os.environ.get(var):
            return os.environ[var]
    return None


def wire_messages(messages: Sequence[ChatMessage]) -> list[dict]:
    out = []
    for m in messages:
        if m.role == "tool":
            # plain chat APIs have no free-form tool role
            out.append({"role": "user", "content": f"Observation from {m.tool_name}:\n{m.content}"})
        else:
            out.append({"role": m.role, "content": m.content})
    return out


class HttpBackend:
    def __init__(self, config: BackendConfig, api_key: Optional[str] = None,
                 transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 on_exchange: Optional[Callable[[dict, dict], None]] = None):
        self.config = config
        self.api_key = api_key if api_key is not None else api_key_from_env()
        self._client = httpx.Client(transport=transport, timeout=config.timeout)
        self._sleep = sleep
        self.on_exchange = on_exchange
        self.last_attempts = 0

    def close(self) -> None:
        self._client.close()

    def complete(self, messages: Sequence[ChatMessage], role: Optional[str] = None) -> ChatMessage:
        cfg = self.config
        payload = {"model": cfg.model, "messages": wire_messages(messages),
                   "temperature": cfg.temperature, "top_p": cfg.top_p}
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_error = "no attempt made"
        for attempt in range(cfg.max_retries + 1):
            self.last_attempts = attempt + 1
            if attempt:
                self._sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(cfg.url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("backend attempt %d failed: %s", attempt + 1, last_error)
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = f"status {resp.status_code}"
                log.warning("backend attempt %d returned %s", attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise BackendRejected(resp.status_code, resp.text)
            try:
                body = resp.json()
                content = body["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError):
                raise BackendRejected(resp.status_code, resp.text) from None
            if self.on_exchange:
                self.on_exchange(payload, body)
            return ChatMessage("assistant", content)
        raise BackendUnavailable(f"{cfg.url} unreachable after {self.last_attempts} attempt(s): {last_error}")

