"""Knowledge-point and main-idea extraction for sampled items.

Models answer the extraction prompts in loose prose more often than the
format demands, so parsing scans for the outermost bracketed list before
giving up, and every call retries with the identical prompt up to the
retry cap.
"""

from __future__ import annotations

import json
import logging
import random
import re
from typing import Optional

from .core import KnowledgeAnnotation, StaticItem
from .errors import InvalidArg, UnparseableResponse
from .prompts import PromptLibrary, default_library, render_item
from .provider.base import ChatClient

log = logging.getLogger(__name__)

DEFAULT_RETRIES = 3

_QUOTE_TRANSLATION = str.maketrans({"“": '"', "”": '"', "‘": "'", "’": "'"})


def parse_bracketed_list(text: str) -> list[str]:
    """Recover a JSON-ish list of strings from a model response.

    Accepts smart quotes and surrounding prose; takes the outermost
    [ ... ] span.  Entries are trimmed, empties dropped, duplicates
    removed keeping first occurrence.  An empty result is an error.
    """
    cleaned = text.translate(_QUOTE_TRANSLATION)
    start = cleaned.find("[")
    end = cleaned.rfind("]")
    if start == -1 or end == -1 or end < start:
        raise UnparseableResponse("no bracketed list found")
    try:
        parsed = json.loads(cleaned[start : end + 1])
    except json.JSONDecodeError as exc:
        raise UnparseableResponse(f"bracketed span is not valid JSON: {exc.msg}") from exc
    if not isinstance(parsed, list) or not all(isinstance(e, str) for e in parsed):
        raise UnparseableResponse("bracketed span is not a list of strings")
    out: list[str] = []
    for entry in parsed:
        entry = entry.strip()
        if entry and entry not in out:
            out.append(entry)
    if not out:
        raise UnparseableResponse("list holds no usable entries")
    return out


def extract_knowledge_points(
    item: StaticItem,
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
) -> list[str]:
    """Ask for the broad knowledge concepts behind one item."""
    library = library or default_library()
    prompt = library.render(
        "knowledge_points", choiceQ=render_item(item, with_answer=True)
    )
    last: Exception = UnparseableResponse("no attempt made")
    for attempt in range(retries + 1):
        response = client.complete(prompt)
        try:
            return parse_bracketed_list(response.text)
        except UnparseableResponse as exc:
            last = exc
            log.warning(
                "knowledge-point parse failed for %s (attempt %d/%d): %s",
                item.id, attempt + 1, retries + 1, exc,
            )
    raise UnparseableResponse(
        f"knowledge points for {item.id}: {last}"
    ) from last


def extract_main_idea(
    item: StaticItem,
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
) -> str:
    """Ask for the one-line summary of an item's background and answer core."""
    library = library or default_library()
    prompt = library.render("main_idea", choiceQ=render_item(item, with_answer=True))
    for attempt in range(retries + 1):
        text = client.complete(prompt).text.strip()
        if not text:
            log.warning(
                "blank main idea for %s (attempt %d/%d)",
                item.id, attempt + 1, retries + 1,
            )
            continue
        paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
        if len(paragraphs) > 1:
            log.warning(
                "multi-paragraph main idea for %s; keeping the first paragraph",
                item.id,
            )
        return paragraphs[0]
    raise UnparseableResponse(f"main idea for {item.id}: model kept returning blanks")


def select_knowledge_points(
    points: list[str], k_num: int, rng: random.Random
) -> list[str]:
    """Uniform without-replacement pick of k_num points, in original order.

    Returns all points when there are k_num or fewer.  Deterministic for
    a given rng state.
    """
    if k_num < 1:
        raise InvalidArg(f"k_num must be >= 1, got {k_num}")
    if not points:
        raise InvalidArg("points must be non-empty")
    if len(points) <= k_num:
        return list(points)
    chosen = sorted(rng.sample(range(len(points)), k_num))
    return [points[i] for i in chosen]


def annotate_item(
    item: StaticItem,
    client: ChatClient,
    *,
    k_num: int = 2,
    rng: Optional[random.Random] = None,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
) -> KnowledgeAnnotation:
    """Full annotation of one item: extract points + idea, select K_num."""
    rng = rng or random.Random(0)
    points = extract_knowledge_points(item, client, library=library, retries=retries)
    idea = extract_main_idea(item, client, library=library, retries=retries)
    selected = select_knowledge_points(points, k_num, rng)
    return KnowledgeAnnotation(
        item_id=item.id,
        knowledge_points=tuple(points),
        selected_points=tuple(selected),
        main_idea=idea,
    )
