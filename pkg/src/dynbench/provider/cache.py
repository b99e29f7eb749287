"""Content-addressed on-disk cache of provider responses.

Each exchange lives in <cache_dir>/<fingerprint>.json.  Re-running a
pipeline with the same prompts then costs nothing upstream.  Per-key
locks collapse concurrent identical requests into a single inner call.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Union

from ..core import canonical_dumps
from ..errors import IoFailure, MalformedCassette
from .base import ChatRequest, ChatResponse, KeyedLocks, Provider, ProviderExchange

PathLike = Union[str, Path]


class CachingProvider(Provider):
    def __init__(self, inner: Provider, cache_dir: PathLike):
        self._inner = inner
        self._dir = Path(cache_dir)
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create cache dir {cache_dir}: {exc}") from exc
        self._flight = KeyedLocks()

    def _path(self, fingerprint: str) -> Path:
        return self._dir / f"{fingerprint}.json"

    def _load(self, fingerprint: str) -> ChatResponse | None:
        path = self._path(fingerprint)
        if not path.exists():
            return None
        try:
            rec = json.loads(path.read_text("utf-8"))
            exchange = ProviderExchange.from_record(rec)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MalformedCassette(f"corrupt cache entry {path}: {exc}") from exc
        return exchange.response

    def chat(self, request: ChatRequest) -> ChatResponse:
        fp = request.fingerprint()
        with self._flight.get(fp):
            cached = self._load(fp)
            if cached is not None:
                return cached
            response = self._inner.chat(request)
            exchange = ProviderExchange(request=request, response=response)
            path = self._path(fp)
            tmp = path.with_name(path.name + ".tmp")
            try:
                tmp.write_text(
                    canonical_dumps(exchange.to_record()), encoding="utf-8"
                )
                os.replace(tmp, path)
            except OSError as exc:
                raise IoFailure(f"cannot write cache entry {path}: {exc}") from exc
            return response
