"""Deterministic in-process provider for tests, demos, and dry runs.

A responder callable maps each request to response text (or a full
ChatResponse).  Timestamps default to the epoch constant so scripted
runs are byte-stable without a cassette.
"""

from __future__ import annotations

from typing import Callable, Union

from .base import ChatRequest, ChatResponse, Provider

Responder = Callable[[ChatRequest], Union[str, ChatResponse]]


class ScriptedProvider(Provider):
    def __init__(self, responder: Responder):
        self._responder = responder
        self.requests: list[ChatRequest] = []  # inspection hook for tests

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        out = self._responder(request)
        if isinstance(out, ChatResponse):
            return out
        return ChatResponse(text=out)


def sequence_responder(texts: list[str]) -> Responder:
    """Responder that walks a fixed list of replies, repeating the last."""
    state = {"i": 0}

    def respond(request: ChatRequest) -> str:
        i = min(state["i"], len(texts) - 1)
        state["i"] += 1
        return texts[i]

    return respond
