"""Record/replay of provider exchanges for deterministic offline runs.

A cassette is a JSONL file of exchange records keyed by request
fingerprint.  Recording wraps a real provider and appends every new
exchange; replay serves responses purely from the file and raises
CassetteMiss for anything unknown, making full pipeline runs a pure
function of their inputs.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional, Union

from ..core import canonical_dumps
from ..errors import CassetteMiss, FingerprintCollision, IoFailure, MalformedCassette
from .base import ChatRequest, ChatResponse, KeyedLocks, Provider, ProviderExchange

PathLike = Union[str, Path]


def load_cassette(path: PathLike) -> dict[str, ProviderExchange]:
    """Read a cassette into {fingerprint: exchange}.

    Verifies each stored fingerprint against one recomputed from the
    request, so a hand-edited or corrupted file fails loudly.  Identical
    duplicate lines are tolerated; conflicting ones are collisions.
    """
    try:
        raw = Path(path).read_text("utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read cassette {path}: {exc}") from exc
    exchanges: dict[str, ProviderExchange] = {}
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedCassette(f"line {line_no}: invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict) or rec.get("record_type") != "exchange":
            raise MalformedCassette(f"line {line_no}: not an exchange record")
        try:
            exchange = ProviderExchange.from_record(rec)
        except Exception as exc:
            raise MalformedCassette(f"line {line_no}: {exc}") from exc
        fp = exchange.fingerprint()
        stored = rec.get("fingerprint")
        if stored is not None and stored != fp:
            raise MalformedCassette(
                f"line {line_no}: stored fingerprint {stored} does not match "
                f"request content ({fp})"
            )
        prior = exchanges.get(fp)
        if prior is not None and prior.response != exchange.response:
            raise FingerprintCollision(
                f"line {line_no}: fingerprint {fp} already recorded with a "
                "different response"
            )
        exchanges[fp] = exchange
    return exchanges


class ReplayProvider(Provider):
    """Serves chat responses from a cassette; never touches the network."""

    def __init__(self, cassette: Union[PathLike, dict[str, ProviderExchange]]):
        if isinstance(cassette, (str, Path)):
            self._exchanges = load_cassette(cassette)
        else:
            self._exchanges = dict(cassette)

    def __len__(self) -> int:
        return len(self._exchanges)

    def chat(self, request: ChatRequest) -> ChatResponse:
        fp = request.fingerprint()
        try:
            return self._exchanges[fp].response
        except KeyError:
            raise CassetteMiss(fp) from None


class RecordingProvider(Provider):
    """Passes new requests through and appends each exchange to a file.

    A fingerprint already recorded is served from the cassette without
    touching the inner provider, so a recording run sees exactly the
    responses its replay will see.  Concurrent identical requests are
    collapsed to one upstream call via per-fingerprint locks.
    """

    def __init__(self, inner: Provider, path: PathLike, *, append: bool = True):
        self._inner = inner
        self._path = Path(path)
        self._write_lock = threading.Lock()
        self._flight = KeyedLocks()
        self._seen: dict[str, ProviderExchange] = {}
        if append and self._path.exists():
            self._seen = load_cassette(self._path)
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._path.write_text("", encoding="utf-8")

    def chat(self, request: ChatRequest) -> ChatResponse:
        fp = request.fingerprint()
        with self._flight.get(fp):
            prior = self._seen.get(fp)
            if prior is not None:
                return prior.response
            response = self._inner.chat(request)
            exchange = ProviderExchange(request=request, response=response)
            with self._write_lock:
                self._seen[fp] = exchange
                try:
                    with self._path.open("a", encoding="utf-8") as fh:
                        fh.write(canonical_dumps(exchange.to_record()) + "\n")
                except OSError as exc:
                    raise IoFailure(f"cannot append to cassette: {exc}") from exc
            return response
