"""Question design: regular questions, six-level cognitive sets, rewrites.

Model output for all three operations is a JSON array of records with
keys Question, A, B, C, D, Answer (plus Layer for the six-level sets).
The prompts forbid code fences, yet models emit them anyway, so a single
surrounding fence pair is stripped defensively before parsing.  Every
accepted question passes the structural invariants and a similarity
screen against its source item; violations burn a retry.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core import BloomLayer, GeneratedQuestion, StaticItem, digest_text
from .errors import (
    DuplicateLayer,
    InvalidArg,
    InvariantViolation,
    MissingLayer,
    NoChange,
    UnparseableResponse,
)
from .metrics import lcs_similarity
from .prompts import PromptLibrary, default_library, render_item
from .provider.base import ChatClient, ChatResponse

log = logging.getLogger(__name__)

DEFAULT_RETRIES = 3
SIMILARITY_THRESHOLD = 0.85

_OPTION_KEYS = ("A", "B", "C", "D")


class RestructureDirection(Enum):
    SIMPLIFY = "simplify"
    COMPLICATE = "complicate"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class GenerationContext:
    """Everything a design or rewrite prompt needs about the source item."""

    item: StaticItem
    knowledge_point: str
    main_idea: str
    explanation: str


def strip_code_fence(text: str) -> str:
    """Remove one surrounding ``` pair (with optional language tag).

    Idempotent: a second application returns its input unchanged.
    """
    stripped = text.strip()
    if not stripped.startswith("```"):
        return stripped
    first_break = stripped.find("\n")
    if first_break == -1 or not stripped.endswith("```"):
        return stripped
    head = stripped[3:first_break].strip()
    if head and not head.isalnum():
        return stripped  # not a language tag; leave it alone
    inner = stripped[first_break + 1 : -3]
    log.warning("model wrapped its output in a %s code fence", head or "plain")
    return inner.strip()


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise UnparseableResponse(f"duplicate key {key!r} in question record")
        seen[key] = value
    return seen


def parse_question_records(text: str, *, require_layer: bool = False) -> list[dict]:
    """Parse the JSON-array-of-question-records wire shape.

    Returns records with validated shape: string values, non-empty after
    trimming, Answer normalized to one upper-case option letter, Layer
    (when required) left as raw text for the caller to normalize.
    """
    cleaned = strip_code_fence(text)
    start = cleaned.find("[")
    end = cleaned.rfind("]")
    if start == -1 or end == -1 or end < start:
        raise UnparseableResponse("no JSON array found in response")
    try:
        parsed = json.loads(
            cleaned[start : end + 1], object_pairs_hook=_reject_duplicate_keys
        )
    except json.JSONDecodeError as exc:
        raise UnparseableResponse(f"response is not valid JSON: {exc.msg}") from exc
    if not isinstance(parsed, list) or not parsed:
        raise UnparseableResponse("response is not a non-empty JSON array")

    records = []
    for i, rec in enumerate(parsed):
        if not isinstance(rec, dict):
            raise UnparseableResponse(f"record {i} is not an object")
        required = ("Question", *_OPTION_KEYS, "Answer")
        if require_layer:
            required = ("Layer",) + required
        for key in required:
            if key not in rec:
                raise UnparseableResponse(f"record {i} is missing key {key!r}")
            if not isinstance(rec[key], str) or not rec[key].strip():
                raise UnparseableResponse(f"record {i} key {key!r} is not usable text")
        answer = rec["Answer"].strip().upper()
        if answer not in _OPTION_KEYS:
            raise UnparseableResponse(
                f"record {i} Answer {rec['Answer']!r} is not one of A/B/C/D"
            )
        out = {key: rec[key].strip() for key in required}
        out["Answer"] = answer
        records.append(out)
    return records


def _provenance(client: ChatClient, prompt: str, response: ChatResponse) -> dict:
    return {
        "model": client.model,
        "prompt_digest": digest_text(prompt),
        "timestamp": response.timestamp,
    }


def _question_from_record(
    rec: dict,
    *,
    question_id: str,
    parent_id: str,
    knowledge_point: str,
    bloom_layer: Optional[BloomLayer],
    round_no: int,
    provenance: dict,
) -> GeneratedQuestion:
    return GeneratedQuestion(
        id=question_id,
        parent_id=parent_id,
        knowledge_point=knowledge_point,
        question=rec["Question"],
        options={k: rec[k] for k in _OPTION_KEYS},
        answer=rec["Answer"],
        bloom_layer=bloom_layer,
        round=round_no,
        provenance=provenance,
    )


def _too_similar(candidate: str, source: str, threshold: float) -> bool:
    return lcs_similarity(candidate, source) > threshold


def design_question(
    context: GenerationContext,
    client: ChatClient,
    *,
    question_id: str,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
    similarity_threshold: float = SIMILARITY_THRESHOLD,
) -> GeneratedQuestion:
    """One fresh four-option question grounded in the explanation text."""
    library = library or default_library()
    item = context.item
    prompt = library.render(
        "question_design",
        choiceQ=render_item(item, with_answer=True),
        kn=context.knowledge_point,
        purport=context.main_idea,
        KNexplain=context.explanation,
    )
    last = "no attempt made"
    for attempt in range(retries + 1):
        response = client.complete(prompt)
        try:
            records = parse_question_records(response.text)
            if len(records) != 1:
                raise InvariantViolation(f"expected 1 record, got {len(records)}")
            if _too_similar(records[0]["Question"], item.question, similarity_threshold):
                raise InvariantViolation("question too similar to its source item")
            return _question_from_record(
                records[0],
                question_id=question_id,
                parent_id=item.id,
                knowledge_point=context.knowledge_point,
                bloom_layer=None,
                round_no=0,
                provenance=_provenance(client, prompt, response),
            )
        except (UnparseableResponse, InvariantViolation) as exc:
            last = str(exc)
            log.warning(
                "question design rejected for %s (attempt %d/%d): %s",
                question_id, attempt + 1, retries + 1, last,
            )
    raise UnparseableResponse(f"question design for {question_id}: {last}")


def design_bloom_questions(
    context: GenerationContext,
    client: ChatClient,
    *,
    id_prefix: str,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
    similarity_threshold: float = SIMILARITY_THRESHOLD,
) -> list[GeneratedQuestion]:
    """Six questions covering each cognitive layer exactly once.

    Question ids are ``{id_prefix}/{layer}`` in canonical layer order.
    """
    library = library or default_library()
    item = context.item
    prompt = library.render(
        "bloom_design",
        choiceQ=render_item(item, with_answer=True),
        kn=context.knowledge_point,
        purport=context.main_idea,
        KNexplain=context.explanation,
    )
    last = "no attempt made"
    for attempt in range(retries + 1):
        response = client.complete(prompt)
        try:
            records = parse_question_records(response.text, require_layer=True)
            by_layer: dict[BloomLayer, dict] = {}
            for rec in records:
                try:
                    layer = BloomLayer.from_text(rec["Layer"])
                except InvalidArg as exc:
                    raise UnparseableResponse(str(exc)) from exc
                if layer in by_layer:
                    raise DuplicateLayer(layer.value)
                by_layer[layer] = rec
            for layer in BloomLayer.ordered():
                if layer not in by_layer:
                    raise MissingLayer(layer.value)
            questions = []
            provenance = _provenance(client, prompt, response)
            for layer in BloomLayer.ordered():
                rec = by_layer[layer]
                if _too_similar(rec["Question"], item.question, similarity_threshold):
                    raise InvariantViolation(
                        f"{layer.value} question too similar to its source item"
                    )
                questions.append(
                    _question_from_record(
                        rec,
                        question_id=f"{id_prefix}/{layer.value.lower()}",
                        parent_id=item.id,
                        knowledge_point=context.knowledge_point,
                        bloom_layer=layer,
                        round_no=0,
                        provenance=provenance,
                    )
                )
            return questions
        except (UnparseableResponse, InvariantViolation) as exc:
            last = str(exc)
            log.warning(
                "six-level design rejected for %s (attempt %d/%d): %s",
                id_prefix, attempt + 1, retries + 1, last,
            )
    raise UnparseableResponse(f"six-level design for {id_prefix}: {last}")


_DIRECTION_TEMPLATES = {
    RestructureDirection.SIMPLIFY: "restructure_simplify",
    RestructureDirection.COMPLICATE: "restructure_complicate",
    RestructureDirection.NEUTRAL: "restructure_neutral",
}


def restructure(
    question: GeneratedQuestion,
    direction: RestructureDirection,
    context: GenerationContext,
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
    retries: int = DEFAULT_RETRIES,
    similarity_threshold: float = SIMILARITY_THRESHOLD,
) -> GeneratedQuestion:
    """Rewrite a question easier/harder/neutrally; round increments.

    Identity fields (id, parent, knowledge point, layer) are preserved so
    the rewrite replaces the question in place within its dataset.
    """
    library = library or default_library()
    prompt = library.render(
        _DIRECTION_TEMPLATES[direction],
        choiceQ=render_item(context.item, with_answer=True),
        choiceQCurrent=render_item(question, with_answer=True),
        kn=context.knowledge_point,
        purport=context.main_idea,
        KNexplain=context.explanation,
    )
    last: Exception = UnparseableResponse("no attempt made")
    for attempt in range(retries + 1):
        response = client.complete(prompt)
        try:
            records = parse_question_records(response.text)
            if len(records) != 1:
                raise InvariantViolation(f"expected 1 record, got {len(records)}")
            rec = records[0]
            if rec["Question"] == question.question:
                raise NoChange("rewrite returned the input question text")
            if _too_similar(rec["Question"], context.item.question, similarity_threshold):
                raise InvariantViolation("rewrite too similar to the source item")
            return question.with_content(
                question=rec["Question"],
                options={k: rec[k] for k in _OPTION_KEYS},
                answer=rec["Answer"],
                provenance=_provenance(client, prompt, response),
            )
        except (UnparseableResponse, InvariantViolation, NoChange) as exc:
            last = exc
            log.warning(
                "%s rewrite rejected for %s (attempt %d/%d): %s",
                direction.value, question.id, attempt + 1, retries + 1, exc,
            )
    if isinstance(last, NoChange):
        raise NoChange(f"rewrite of {question.id}: {last}")
    raise UnparseableResponse(f"rewrite of {question.id}: {last}")
