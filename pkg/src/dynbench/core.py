"""Core data model: source items, annotations, generated questions, datasets.

All types validate their invariants at construction time and are treated
as immutable afterwards, so instances can be shared freely across worker
threads.  Serialization lives in dataset_io; these classes only expose
``to_record``/``from_record`` dict views with stable key sets.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Optional, Sequence

from .errors import DuplicateId, InvalidArg, InvariantViolation

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

PIPELINE_VERSION = "0.1.0"


class ItemKind(str, Enum):
    CHOICE = "choice"
    QA = "qa"


class BloomLayer(str, Enum):
    """The six cognitive levels, ordered lowest to highest."""

    REMEMBERING = "Remembering"
    UNDERSTANDING = "Understanding"
    APPLYING = "Applying"
    ANALYZING = "Analyzing"
    EVALUATING = "Evaluating"
    CREATING = "Creating"

    @classmethod
    def ordered(cls) -> tuple["BloomLayer", ...]:
        return (
            cls.REMEMBERING,
            cls.UNDERSTANDING,
            cls.APPLYING,
            cls.ANALYZING,
            cls.EVALUATING,
            cls.CREATING,
        )

    @classmethod
    def from_text(cls, text: str) -> "BloomLayer":
        """Normalize a model-emitted layer name (case-insensitive)."""
        want = text.strip().casefold()
        for layer in cls:
            if layer.value.casefold() == want:
                return layer
        raise InvalidArg(f"unknown cognitive layer: {text!r}")


def canonical_dumps(obj: Any) -> str:
    """One JSON byte representation per logical record.

    Sorted keys, no whitespace, raw unicode.  Every artifact this package
    writes goes through here so replays compare byte-for-byte.
    """
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _require_text(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise InvariantViolation(f"{what} must be non-empty text")
    return value


def is_single_paragraph(text: str) -> bool:
    """True when *text* is non-blank and holds no blank-line break."""
    if not text.strip():
        return False
    return re.search(r"\n\s*\n", text) is None


def _validate_options(options: Mapping[str, str], *, exact: Optional[int] = None) -> dict:
    if not isinstance(options, Mapping):
        raise InvariantViolation("options must be a mapping of letter to text")
    letters = list(options.keys())
    if exact is not None and len(letters) != exact:
        raise InvariantViolation(f"expected exactly {exact} options, got {len(letters)}")
    if len(letters) < 2:
        raise InvariantViolation("choice items need at least two options")
    expected = list(_LETTERS[: len(letters)])
    if letters != expected:
        raise InvariantViolation(
            f"option letters must be contiguous from A, got {letters!r}"
        )
    out = {}
    for letter, text in options.items():
        out[letter] = _require_text(text, f"option {letter}")
    return out


@dataclass(frozen=True)
class StaticItem:
    """One record of the source benchmark.

    ``options`` is None for free-answer items; for choice items the keys run
    contiguously from "A" and ``answer`` is one of them.
    """

    id: str
    kind: ItemKind
    question: str
    answer: str
    options: Optional[Mapping[str, str]] = None
    source: str = ""
    subject: Optional[str] = None

    def __post_init__(self):
        _require_text(self.id, "item id")
        _require_text(self.question, "question")
        kind = ItemKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ItemKind.CHOICE:
            if self.options is None:
                raise InvariantViolation("choice item needs options")
            opts = _validate_options(self.options)
            object.__setattr__(self, "options", opts)
            if self.answer not in opts:
                raise InvariantViolation(
                    f"answer {self.answer!r} is not an option letter"
                )
        else:
            if self.options:
                raise InvariantViolation("free-answer item must not carry options")
            object.__setattr__(self, "options", None)
            _require_text(self.answer, "answer")

    def to_record(self) -> dict:
        return {
            "record_type": "static_item",
            "id": self.id,
            "kind": self.kind.value,
            "question": self.question,
            "options": dict(self.options) if self.options else None,
            "answer": self.answer,
            "source": self.source,
            "subject": self.subject,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "StaticItem":
        try:
            return cls(
                id=rec["id"],
                kind=ItemKind(rec["kind"]),
                question=rec["question"],
                answer=rec["answer"],
                options=rec.get("options"),
                source=rec.get("source", ""),
                subject=rec.get("subject"),
            )
        except KeyError as exc:
            raise InvariantViolation(f"missing field {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc


@dataclass(frozen=True)
class KnowledgeAnnotation:
    """Knowledge points and the one-line main idea extracted for an item."""

    item_id: str
    knowledge_points: tuple[str, ...]
    selected_points: tuple[str, ...]
    main_idea: str

    def __post_init__(self):
        _require_text(self.item_id, "item_id")
        points = tuple(p.strip() for p in self.knowledge_points)
        if not points:
            raise InvariantViolation("knowledge_points must be non-empty")
        if any(not p for p in points):
            raise InvariantViolation("knowledge point entries must be non-empty")
        if len(set(points)) != len(points):
            raise InvariantViolation("knowledge points must be unique")
        object.__setattr__(self, "knowledge_points", points)
        selected = tuple(p.strip() for p in self.selected_points)
        if not selected:
            raise InvariantViolation("selected_points must be non-empty")
        if len(set(selected)) != len(selected):
            raise InvariantViolation("selected points must be unique")
        missing = [p for p in selected if p not in points]
        if missing:
            raise InvariantViolation(
                f"selected points not among extracted points: {missing!r}"
            )
        object.__setattr__(self, "selected_points", selected)
        _require_text(self.main_idea, "main_idea")

    def to_record(self) -> dict:
        return {
            "record_type": "annotation",
            "item_id": self.item_id,
            "knowledge_points": list(self.knowledge_points),
            "selected_points": list(self.selected_points),
            "main_idea": self.main_idea,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "KnowledgeAnnotation":
        try:
            return cls(
                item_id=rec["item_id"],
                knowledge_points=tuple(rec["knowledge_points"]),
                selected_points=tuple(rec["selected_points"]),
                main_idea=rec["main_idea"],
            )
        except KeyError as exc:
            raise InvariantViolation(f"missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class Explanation:
    """A single-paragraph grounding text for one (item, knowledge point)."""

    item_id: str
    knowledge_point: str
    body: str

    def __post_init__(self):
        _require_text(self.item_id, "item_id")
        _require_text(self.knowledge_point, "knowledge_point")
        _require_text(self.body, "body")
        if not is_single_paragraph(self.body):
            raise InvariantViolation("explanation body must be a single paragraph")

    def to_record(self) -> dict:
        return {
            "record_type": "explanation",
            "item_id": self.item_id,
            "knowledge_point": self.knowledge_point,
            "body": self.body,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Explanation":
        try:
            return cls(
                item_id=rec["item_id"],
                knowledge_point=rec["knowledge_point"],
                body=rec["body"],
            )
        except KeyError as exc:
            raise InvariantViolation(f"missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class GeneratedQuestion:
    """A synthesized four-option question traceable to its source item.

    ``round`` counts restructure passes applied since first generation.
    ``provenance`` records which model produced the current text, the
    digest of the prompt that elicited it, and the response timestamp.
    """

    id: str
    parent_id: str
    knowledge_point: str
    question: str
    options: Mapping[str, str]
    answer: str
    bloom_layer: Optional[BloomLayer] = None
    round: int = 0
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _require_text(self.id, "question id")
        _require_text(self.parent_id, "parent_id")
        _require_text(self.knowledge_point, "knowledge_point")
        _require_text(self.question, "question")
        opts = _validate_options(self.options, exact=4)
        object.__setattr__(self, "options", opts)
        if self.answer not in opts:
            raise InvariantViolation(f"answer {self.answer!r} is not an option letter")
        if self.bloom_layer is not None:
            object.__setattr__(self, "bloom_layer", BloomLayer(self.bloom_layer))
        if not isinstance(self.round, int) or self.round < 0:
            raise InvariantViolation("round must be a non-negative integer")
        object.__setattr__(self, "provenance", dict(self.provenance))

    def with_content(
        self,
        *,
        question: str,
        options: Mapping[str, str],
        answer: str,
        provenance: Mapping[str, str],
    ) -> "GeneratedQuestion":
        """Next-round copy: same identity, fresh text, round + 1."""
        return GeneratedQuestion(
            id=self.id,
            parent_id=self.parent_id,
            knowledge_point=self.knowledge_point,
            question=question,
            options=options,
            answer=answer,
            bloom_layer=self.bloom_layer,
            round=self.round + 1,
            provenance=provenance,
        )

    def to_record(self) -> dict:
        return {
            "record_type": "question",
            "id": self.id,
            "parent_id": self.parent_id,
            "knowledge_point": self.knowledge_point,
            "question": self.question,
            "options": dict(self.options),
            "answer": self.answer,
            "bloom_layer": self.bloom_layer.value if self.bloom_layer else None,
            "round": self.round,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "GeneratedQuestion":
        try:
            layer = rec.get("bloom_layer")
            return cls(
                id=rec["id"],
                parent_id=rec["parent_id"],
                knowledge_point=rec["knowledge_point"],
                question=rec["question"],
                options=rec["options"],
                answer=rec["answer"],
                bloom_layer=BloomLayer(layer) if layer else None,
                round=rec.get("round", 0),
                provenance=rec.get("provenance", {}),
            )
        except KeyError as exc:
            raise InvariantViolation(f"missing field {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc


@dataclass(frozen=True)
class Manifest:
    """Run header written as the first line of every artifact file.

    Ties an artifact to the exact configuration, seed, and inputs that
    produced it; downstream stages verify ``input_digest`` chains.
    """

    config: Mapping[str, Any]
    seed: int
    source_digest: str
    sampled_ids: tuple[str, ...]
    pipeline_version: str = PIPELINE_VERSION
    stage: Optional[str] = None
    input_digest: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "config", dict(self.config))
        object.__setattr__(self, "sampled_ids", tuple(self.sampled_ids))
        if not isinstance(self.seed, int):
            raise InvariantViolation("seed must be an integer")

    def to_record(self) -> dict:
        rec = {
            "record_type": "manifest",
            "config": dict(self.config),
            "seed": self.seed,
            "source_digest": self.source_digest,
            "sampled_ids": list(self.sampled_ids),
            "pipeline_version": self.pipeline_version,
        }
        if self.stage is not None:
            rec["stage"] = self.stage
        if self.input_digest is not None:
            rec["input_digest"] = self.input_digest
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Manifest":
        try:
            return cls(
                config=rec["config"],
                seed=rec["seed"],
                source_digest=rec["source_digest"],
                sampled_ids=tuple(rec["sampled_ids"]),
                pipeline_version=rec.get("pipeline_version", PIPELINE_VERSION),
                stage=rec.get("stage"),
                input_digest=rec.get("input_digest"),
            )
        except KeyError as exc:
            raise InvariantViolation(f"missing field {exc.args[0]!r}") from exc


def check_unique_ids(ids: Iterable[str]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise DuplicateId(f"duplicate id: {i!r}")
        seen.add(i)


@dataclass(frozen=True)
class DynamicDataset:
    """The synthesized questions plus the manifest that reproduces them."""

    questions: tuple[GeneratedQuestion, ...]
    manifest: Manifest

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        check_unique_ids(q.id for q in self.questions)
        sampled = set(self.manifest.sampled_ids)
        for q in self.questions:
            if q.parent_id not in sampled:
                raise InvariantViolation(
                    f"question {q.id!r} traces to unknown source item {q.parent_id!r}"
                )

    def __len__(self) -> int:
        return len(self.questions)

    def replace_questions(self, questions: Sequence[GeneratedQuestion]) -> "DynamicDataset":
        return DynamicDataset(questions=tuple(questions), manifest=self.manifest)
