"""Prompt template loading and rendering.

Templates are plain text files shipped as package data, with literal
`{{name}}` placeholders filled by string replacement (the placeholder
values frequently contain braces, regex syntax, and JSON, so anything
smarter than literal replacement would mangle them).  Few-shot example
blocks live in sibling data files and fill the `{{few-shot}}` slot.
"""

from __future__ import annotations

import re
from importlib import resources
from typing import Mapping, Optional, Sequence

from .core import GeneratedQuestion, StaticItem
from .errors import InvalidArg

# template name -> (template file, few-shot file or None)
_TEMPLATES = {
    "knowledge_points": ("knowledge_points.txt", "knowledge_points.txt"),
    "main_idea": ("main_idea.txt", "main_idea.txt"),
    "explanation": ("explanation.txt", "explanation.txt"),
    "question_design": ("question_design.txt", "question_design.txt"),
    "bloom_design": ("bloom_design.txt", "bloom_design.txt"),
    "restructure_complicate": ("restructure_complicate.txt", "restructure.txt"),
    "restructure_simplify": ("restructure_simplify.txt", "restructure.txt"),
    "restructure_neutral": ("restructure_neutral.txt", "restructure.txt"),
    "judge_answer": ("judge_answer.txt", None),
    "judge_quality": ("judge_quality.txt", None),
    "eval_answer": ("eval_answer.txt", None),
    "eval_answer_qa": ("eval_answer_qa.txt", None),
}

_PLACEHOLDER = re.compile(r"\{\{([a-zA-Z-]+)\}\}")


def _read_data(subdir: str, filename: str) -> str:
    return (
        resources.files(__package__).joinpath(subdir).joinpath(filename).read_text("utf-8")
    )


class PromptLibrary:
    """Loads templates once and renders prompts by name."""

    def __init__(self):
        self._cache: dict[str, str] = {}

    def template(self, name: str) -> str:
        """The template text with its few-shot block already spliced in."""
        if name not in _TEMPLATES:
            raise InvalidArg(f"unknown prompt template: {name!r}")
        if name not in self._cache:
            tpl_file, shot_file = _TEMPLATES[name]
            text = _read_data("templates", tpl_file)
            if shot_file is not None:
                shots = _read_data("fewshot", shot_file).strip()
                text = text.replace("{{few-shot}}", shots)
            self._cache[name] = text
        return self._cache[name]

    def render(self, name: str, **values: str) -> str:
        """Fill every placeholder in one pass; extra or missing slots fail.

        Keyword names map to placeholders with '_' read as '-', so
        ``few_shot=`` would target ``{{few-shot}}``.  Substituted values
        are never rescanned, so braces inside question text are safe.
        """
        text = self.template(name)
        provided = {k.replace("_", "-"): v for k, v in values.items()}
        slots = set(_PLACEHOLDER.findall(text))
        missing = slots - provided.keys()
        if missing:
            raise InvalidArg(
                f"template {name!r}: placeholders {sorted(missing)} left unfilled"
            )
        unknown = provided.keys() - slots
        if unknown:
            raise InvalidArg(
                f"template {name!r} has no placeholders {sorted(unknown)}"
            )
        return _PLACEHOLDER.sub(lambda m: provided[m.group(1)], text)


_DEFAULT_LIBRARY: Optional[PromptLibrary] = None


def default_library() -> PromptLibrary:
    global _DEFAULT_LIBRARY
    if _DEFAULT_LIBRARY is None:
        _DEFAULT_LIBRARY = PromptLibrary()
    return _DEFAULT_LIBRARY


def render_options(options: Mapping[str, str]) -> str:
    return "\n".join(f"{letter}. {text}" for letter, text in options.items())


def render_item(item: StaticItem | GeneratedQuestion, *, with_answer: bool) -> str:
    """Flatten an item into prompt text: stem, options, optionally the key.

    Free-answer source items carry no options block; their reference
    answer renders as plain text after "Answer:".
    """
    parts = [item.question.strip()]
    if item.options:
        parts.append(render_options(item.options))
    if with_answer:
        parts.append(f"Answer: {item.answer}")
    return "\n\n".join(parts)


def load_stopwords() -> frozenset[str]:
    words = []
    for line in _read_data("data", "stopwords.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line.casefold())
    return frozenset(words)


def content_words(text: str, stopwords: frozenset[str]) -> set[str]:
    """Case-folded alphanumeric tokens minus stopwords."""
    tokens = re.findall(r"[^\W_]+", text.casefold(), flags=re.UNICODE)
    return {t for t in tokens if t not in stopwords}
