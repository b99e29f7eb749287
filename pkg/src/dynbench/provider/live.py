"""HTTP client for chat-completions-compatible backends.

Speaks the common /chat/completions wire shape: POST a JSON body with
model, messages, and optional temperature/logprobs fields; read
choices[0].message.content back.  Token log-probabilities arrive in
natural log and are converted to base 2 here, so everything downstream
works in log2 space.

Credentials come exclusively from an environment variable named in the
model configuration; the key never appears in config files or logs.
"""

from __future__ import annotations

import datetime as _dt
import math
import os
import threading
import time
from typing import Callable, Optional

import requests

from ..errors import (
    AuthFailure,
    ConfigError,
    RateLimited,
    TransportError,
    UnsupportedCapability,
)
from .base import ChatRequest, ChatResponse, Provider

_LN2 = math.log(2.0)


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class LiveProvider(Provider):
    """One remote backend endpoint serving one or more model ids."""

    def __init__(
        self,
        endpoint: str,
        *,
        api_key_env: str,
        supports_search: bool = False,
        supports_logprobs: bool = False,
        timeout: float = 120.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        max_concurrency: int = 4,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], str] = _now_iso,
    ):
        if not endpoint:
            raise ConfigError("endpoint must be non-empty")
        key = os.environ.get(api_key_env, "")
        if not key:
            raise ConfigError(
                f"environment variable {api_key_env!r} is unset; "
                "credentials are only read from the environment"
            )
        self._endpoint = endpoint.rstrip("/")
        self._key = key
        self._supports_search = supports_search
        self._supports_logprobs = supports_logprobs
        self._timeout = timeout
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._session = session or requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._gate = threading.BoundedSemaphore(max_concurrency)

    def _payload(self, request: ChatRequest) -> dict:
        body = {
            "model": request.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
        }
        if request.temperature is not None:
            body["temperature"] = request.temperature
        if request.want_logprobs:
            body["logprobs"] = True
        if request.want_search:
            body["web_search_options"] = {}
        return body

    def chat(self, request: ChatRequest) -> ChatResponse:
        if request.want_search and not self._supports_search:
            raise UnsupportedCapability(
                f"backend at {self._endpoint} cannot serve search-grounded requests"
            )
        if request.want_logprobs and not self._supports_logprobs:
            raise UnsupportedCapability(
                f"backend at {self._endpoint} does not expose token logprobs"
            )
        with self._gate:
            return self._chat_with_retries(request)

    def _chat_with_retries(self, request: ChatRequest) -> ChatResponse:
        last_error: Exception = TransportError("no attempt made")
        for attempt in range(self._max_retries + 1):
            if attempt:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(
                    self._endpoint + "/chat/completions",
                    json=self._payload(request),
                    headers={"Authorization": f"Bearer {self._key}"},
                    timeout=self._timeout,
                )
            except requests.RequestException as exc:
                last_error = TransportError(f"request failed: {exc}")
                continue
            if resp.status_code in (401, 403):
                raise AuthFailure(f"backend rejected credentials ({resp.status_code})")
            if resp.status_code == 429:
                last_error = RateLimited("backend returned 429")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"backend returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"backend returned {resp.status_code}: {resp.text[:200]}"
                )
            return self._parse(resp.json())
        raise last_error

    def _parse(self, data: dict) -> ChatResponse:
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc!r}") from exc
        probs = None
        logprobs = choice.get("logprobs")
        if logprobs and logprobs.get("content"):
            # Wire format carries natural-log values; store base 2.
            probs = tuple(
                min(0.0, float(t["logprob"]) / _LN2) for t in logprobs["content"]
            )
        return ChatResponse(
            text=text,
            token_log2_probs=probs,
            finish_reason=choice.get("finish_reason") or "stop",
            timestamp=self._clock(),
        )
