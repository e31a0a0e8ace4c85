"""Chat-completions endpoint access, transcript replay and reply parsing helpers."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Protocol

import httpx

from sentmap.errors import ConfigError, ReplayMiss, TransportError

log = logging.getLogger(__name__)

Message = dict[str, Any]


@dataclass(frozen=True)
class EndpointConfig:
    """Connection settings for a chat-completions-compatible API.

    The API key itself is never stored here, only the name of the
    environment variable holding it.
    """

    base_url: str
    model: str
    api_key_env: str | None = None
    temperature: float = 0.0
    timeout_s: float = 60.0
    retries: int = 2

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EndpointConfig:
        unknown = set(data) - {"base_url", "model", "api_key_env", "temperature", "timeout_s", "retries"}
        if unknown:
            raise ConfigError(f"unknown endpoint config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad endpoint config: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> EndpointConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read endpoint config {path}: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def request_hash(request: dict[str, Any]) -> str:
    blob = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def make_request(model: str, messages: list[Message], temperature: float = 0.0) -> dict[str, Any]:
    return {"model": model, "messages": messages, "temperature": temperature}


class ChatClient(Protocol):
    model: str
    temperature: float

    def complete(self, messages: list[Message]) -> str: ...


class HttpChatClient:
    """Blocking client for ``POST {base_url}/chat/completions``.

    Retries connection failures, 429 and 5xx responses with exponential
    backoff, up to ``config.retries`` extra attempts.
    """

    def __init__(self, config: EndpointConfig, transport: httpx.BaseTransport | None = None, backoff_s: float = 0.5):
        self.config = config
        self.model = config.model
        self.temperature = config.temperature
        self.backoff_s = backoff_s
        headers = {"Content-Type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if not key:
                raise ConfigError(f"environment variable {config.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout_s,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def complete(self, messages: list[Message]) -> str:
        body = make_request(self.model, messages, self.temperature)
        last: Exception | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self._client.post("/chat/completions", json=body)
            except httpx.HTTPError as exc:
                last = exc
                log.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                log.warning("chat request got HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _reply_text(resp)
        raise TransportError(f"endpoint unavailable after {self.config.retries + 1} attempt(s): {last}")


def _reply_text(resp: httpx.Response) -> str:
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"unexpected response shape: {exc}") from None
    if isinstance(content, list):
        content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
    if not isinstance(content, str):
        raise TransportError("response content is not text")
    return content


class ReplayChatClient:
    """Serves recorded responses keyed by request hash."""

    def __init__(self, entries: Iterable[dict[str, Any]], model: str, temperature: float = 0.0):
        self.model = model
        self.temperature = temperature
        self._responses = {e["request_hash"]: e["response"] for e in entries}

    @classmethod
    def load(cls, path: str | Path, model: str, temperature: float = 0.0) -> ReplayChatClient:
        try:
            entries = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read transcript fixture {path}: {exc}") from None
        return cls(entries, model, temperature)

    def complete(self, messages: list[Message]) -> str:
        key = request_hash(make_request(self.model, messages, self.temperature))
        try:
            return self._responses[key]
        except KeyError:
            raise ReplayMiss(key) from None


class ScriptedChatClient:
    """Returns canned replies in order; for tests and demos."""

    def __init__(self, replies: Iterable[str], model: str = "scripted", temperature: float = 0.0):
        self.model = model
        self.temperature = temperature
        self._replies = list(replies)
        self._lock = threading.Lock()
        self.requests: list[list[Message]] = []

    def complete(self, messages: list[Message]) -> str:
        with self._lock:
            self.requests.append(messages)
            if not self._replies:
                raise TransportError("scripted client has no replies left")
            return self._replies.pop(0)


def transcript_entry(client: ChatClient, messages: list[Message], response: str) -> dict[str, Any]:
    request = make_request(client.model, messages, client.temperature)
    return {"request_hash": request_hash(request), "request": request, "response": response}


# --- pulling JSON out of free-form replies ---------------------------------

_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z0-9_-]*)[ \t]*\r?\n(.*?)```", re.DOTALL)
_DECODER = json.JSONDecoder()


def fenced_blocks(text: str) -> list[str]:
    return [m.group(2) for m in _FENCE_RE.finditer(text)]


def _scan(text: str, opener: str, accept) -> tuple[Any, int, int] | None:
    pos = text.find(opener)
    while pos != -1:
        try:
            value, end = _DECODER.raw_decode(text, pos)
        except json.JSONDecodeError:
            pass
        else:
            if accept(value):
                return value, pos, end
        pos = text.find(opener, pos + 1)
    return None


def find_json(text: str, opener: str, accept=lambda v: True) -> tuple[Any, int, int] | None:
    """First decodable JSON value starting with ``opener`` that ``accept`` likes.

    Fenced code blocks are searched first, then the whole reply. Returns
    ``(value, start, end)`` offsets into ``text``.
    """
    for m in _FENCE_RE.finditer(text):
        found = _scan(m.group(2), opener, accept)
        if found is not None:
            return found[0], m.start(), m.end()
    return _scan(text, opener, accept)


def extract_json_object(text: str) -> dict[str, Any] | None:
    found = find_json(text, "{", lambda v: isinstance(v, dict))
    return found[0] if found else None
