"""Search-grounded single-paragraph explanations per (item, knowledge point).

The explaining model is asked with the search capability turned on; a
backend without native search degrades to a plain completion with a
logged notice.  Accepted bodies must be one paragraph, lexically related
to the knowledge point, and within the configured length budget.
"""

from __future__ import annotations

import logging
import re
from typing import Optional

from .core import Explanation, StaticItem
from .errors import UnparseableResponse, UnsupportedCapability
from .prompts import (
    PromptLibrary,
    content_words,
    default_library,
    load_stopwords,
    render_item,
)
from .provider.base import ChatClient

log = logging.getLogger(__name__)

DEFAULT_RETRIES = 3
DEFAULT_MAX_CHARS = 1600
MIN_OVERLAP = 1

_stopwords_cache: Optional[frozenset[str]] = None


def _stopwords() -> frozenset[str]:
    global _stopwords_cache
    if _stopwords_cache is None:
        _stopwords_cache = load_stopwords()
    return _stopwords_cache


def collapse_paragraphs(text: str) -> str:
    """Join paragraph breaks into one paragraph, squeezing blank lines."""
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text.strip()) if p.strip()]
    return " ".join(paragraphs)


def relevance_overlap(knowledge_point: str, body: str) -> int:
    """Count of shared case-folded content words (the acceptance gate)."""
    stop = _stopwords()
    return len(content_words(knowledge_point, stop) & content_words(body, stop))


def explain_knowledge_point(
    item: StaticItem,
    knowledge_point: str,
    main_idea: str,
    client: ChatClient,
    *,
    want_search: Optional[bool] = None,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
    max_chars: int = DEFAULT_MAX_CHARS,
    min_overlap: int = MIN_OVERLAP,
) -> Explanation:
    """Grounding text for one knowledge point, web-search backed when possible.

    ``want_search=None`` tries search and falls back on an unsupported
    backend; passing an explicit bool pins the request shape, which keeps
    record and replay runs byte-identical.
    """
    library = library or default_library()
    prompt = library.render(
        "explanation",
        choiceQ=render_item(item, with_answer=True),
        kn=knowledge_point,
        purport=main_idea,
    )
    may_fall_back = want_search is None
    search = True if want_search is None else want_search
    last = "no attempt made"
    for attempt in range(retries + 1):
        try:
            response = client.complete(prompt, want_search=search)
        except UnsupportedCapability as exc:
            if not (search and may_fall_back):
                raise
            log.warning(
                "search-grounded explanation unavailable (%s); "
                "falling back to plain completion for %s / %r",
                exc, item.id, knowledge_point,
            )
            search = False
            response = client.complete(prompt, want_search=False)
        raw = response.text.strip()
        if re.search(r"\n\s*\n", raw):
            log.warning(
                "multi-paragraph explanation for %s / %r collapsed to one",
                item.id, knowledge_point,
            )
        body = collapse_paragraphs(raw)
        if not body:
            last = "blank response"
        elif relevance_overlap(knowledge_point, body) < min_overlap:
            last = "no lexical overlap with the knowledge point"
        elif len(body) > max_chars:
            last = f"body exceeds {max_chars} characters"
        else:
            return Explanation(
                item_id=item.id, knowledge_point=knowledge_point, body=body
            )
        log.warning(
            "explanation rejected for %s / %r (attempt %d/%d): %s",
            item.id, knowledge_point, attempt + 1, retries + 1, last,
        )
    raise UnparseableResponse(
        f"explanation for {item.id} / {knowledge_point!r}: {last}"
    )
