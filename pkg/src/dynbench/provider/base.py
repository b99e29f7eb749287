"""Chat-backend request/response types and the provider interface.

A provider turns a ChatRequest into a ChatResponse.  Requests carry a
fingerprint: the digest of (model, messages, temperature, want_search).
want_logprobs is deliberately outside the fingerprint, so a logprob-less
replay can serve a logprob-requesting caller and vice versa; whether
logprobs come back is a property of the recorded exchange, not the key.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Protocol, runtime_checkable

from ..core import canonical_dumps, digest_text
from ..errors import InvalidArg, InvariantViolation

_ROLES = ("system", "user", "assistant")

EPOCH_TIMESTAMP = "1970-01-01T00:00:00+00:00"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise InvalidArg(f"role must be one of {_ROLES}, got {self.role!r}")
        if not isinstance(self.content, str):
            raise InvalidArg("message content must be a string")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: Optional[float] = None  # None = backend default
    want_logprobs: bool = False
    want_search: bool = False

    def __post_init__(self):
        if not self.model or not self.model.strip():
            raise InvalidArg("model must be non-empty")
        msgs = tuple(self.messages)
        if not msgs:
            raise InvalidArg("messages must be non-empty")
        object.__setattr__(self, "messages", msgs)
        if self.temperature is not None and self.temperature < 0:
            raise InvalidArg(f"temperature must be >= 0, got {self.temperature}")

    def fingerprint(self) -> str:
        """Stable hex digest of the capability-relevant request fields."""
        key = canonical_dumps(
            {
                "model": self.model,
                "messages": [
                    {"role": m.role, "content": m.content} for m in self.messages
                ],
                "temperature": self.temperature,
                "want_search": self.want_search,
            }
        )
        return digest_text(key)

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in self.messages
            ],
            "temperature": self.temperature,
            "want_logprobs": self.want_logprobs,
            "want_search": self.want_search,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ChatRequest":
        return cls(
            model=rec["model"],
            messages=tuple(
                ChatMessage(m["role"], m["content"]) for m in rec["messages"]
            ),
            temperature=rec.get("temperature"),
            want_logprobs=bool(rec.get("want_logprobs", False)),
            want_search=bool(rec.get("want_search", False)),
        )


def user_request(
    model: str,
    prompt: str,
    *,
    system: Optional[str] = None,
    temperature: Optional[float] = None,
    want_logprobs: bool = False,
    want_search: bool = False,
) -> ChatRequest:
    msgs = []
    if system:
        msgs.append(ChatMessage("system", system))
    msgs.append(ChatMessage("user", prompt))
    return ChatRequest(
        model=model,
        messages=tuple(msgs),
        temperature=temperature,
        want_logprobs=want_logprobs,
        want_search=want_search,
    )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    token_log2_probs: Optional[tuple[float, ...]] = None
    finish_reason: str = "stop"
    timestamp: str = EPOCH_TIMESTAMP  # ISO 8601, recorded into provenance

    def __post_init__(self):
        if self.token_log2_probs is not None:
            probs = tuple(float(p) for p in self.token_log2_probs)
            for p in probs:
                if p > 0.0 or math.isnan(p):
                    raise InvariantViolation(f"log2 probability out of range: {p}")
            object.__setattr__(self, "token_log2_probs", probs)

    def to_record(self) -> dict:
        return {
            "text": self.text,
            "token_log2_probs": list(self.token_log2_probs)
            if self.token_log2_probs is not None
            else None,
            "finish_reason": self.finish_reason,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ChatResponse":
        probs = rec.get("token_log2_probs")
        return cls(
            text=rec["text"],
            token_log2_probs=tuple(probs) if probs is not None else None,
            finish_reason=rec.get("finish_reason", "stop"),
            timestamp=rec.get("timestamp", EPOCH_TIMESTAMP),
        )


@dataclass(frozen=True)
class ProviderExchange:
    """One request/response pair; the unit a cassette stores."""

    request: ChatRequest
    response: ChatResponse

    def fingerprint(self) -> str:
        return self.request.fingerprint()

    def to_record(self) -> dict:
        return {
            "record_type": "exchange",
            "fingerprint": self.fingerprint(),
            "request": self.request.to_record(),
            "response": self.response.to_record(),
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ProviderExchange":
        return cls(
            request=ChatRequest.from_record(rec["request"]),
            response=ChatResponse.from_record(rec["response"]),
        )


@runtime_checkable
class Provider(Protocol):
    def chat(self, request: ChatRequest) -> ChatResponse: ...


_UNSET: Any = object()


@dataclass
class ChatClient:
    """A provider bound to one model role with its default call options.

    ``temperature=None`` means "backend default"; callers that must pin a
    temperature (evaluation runs) pass it explicitly per call.
    """

    provider: Provider
    model: str
    name: str = ""
    temperature: Optional[float] = None
    want_search: bool = False
    want_logprobs: bool = False

    def __post_init__(self):
        if not self.name:
            self.name = self.model

    def build_request(
        self,
        prompt: str,
        *,
        temperature: Optional[float] = _UNSET,
        want_search: Optional[bool] = None,
        want_logprobs: Optional[bool] = None,
    ) -> ChatRequest:
        return user_request(
            self.model,
            prompt,
            temperature=self.temperature if temperature is _UNSET else temperature,
            want_search=self.want_search if want_search is None else want_search,
            want_logprobs=self.want_logprobs if want_logprobs is None else want_logprobs,
        )

    def complete(
        self,
        prompt: str,
        *,
        temperature: Optional[float] = _UNSET,
        want_search: Optional[bool] = None,
        want_logprobs: Optional[bool] = None,
    ) -> ChatResponse:
        req = self.build_request(
            prompt,
            temperature=temperature,
            want_search=want_search,
            want_logprobs=want_logprobs,
        )
        return self.provider.chat(req)


class KeyedLocks:
    """Per-key mutexes: concurrent identical requests collapse to one call."""

    def __init__(self):
        self._master = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def get(self, key: str) -> threading.Lock:
        with self._master:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock


class RoutingProvider:
    """Dispatches requests to per-model providers (live multi-backend runs)."""

    def __init__(self, providers_by_model: Mapping[str, Provider]):
        if not providers_by_model:
            raise InvalidArg("providers_by_model must be non-empty")
        self._providers = dict(providers_by_model)

    def chat(self, request: ChatRequest) -> ChatResponse:
        try:
            target = self._providers[request.model]
        except KeyError:
            raise InvalidArg(f"no provider routes model {request.model!r}") from None
        return target.chat(request)
