"""Chat-model access: live HTTP, record/replay cassettes, caching, scripts."""

from .base import (
    EPOCH_TIMESTAMP,
    ChatClient,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    KeyedLocks,
    Provider,
    ProviderExchange,
    RoutingProvider,
    user_request,
)
from .cache import CachingProvider
from .cassette import RecordingProvider, ReplayProvider, load_cassette
from .live import LiveProvider
from .scripted import ScriptedProvider, sequence_responder

__all__ = [
    "EPOCH_TIMESTAMP",
    "ChatClient",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "KeyedLocks",
    "Provider",
    "ProviderExchange",
    "RoutingProvider",
    "user_request",
    "CachingProvider",
    "RecordingProvider",
    "ReplayProvider",
    "load_cassette",
    "LiveProvider",
    "ScriptedProvider",
    "sequence_responder",
]
