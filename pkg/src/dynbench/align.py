"""Difficulty calibration: evaluate, compare to target, rewrite, repeat.

The controller measures the test model's precision s_gen on the current
questions, computes delta = s_target - s_gen, and while |delta| >= epsilon
rewrites one partition: questions the model got wrong are simplified when
the set is too hard (delta >= epsilon), questions it got right are made
harder when the set is too easy (delta <= -epsilon).  The loop stops the
moment |delta| < epsilon or after max_iterations rewrite rounds, whichever
comes first; hitting the cap raises NotConverged with the latest dataset
attached so no work is lost.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from .core import DynamicDataset, GeneratedQuestion, StaticItem
from .errors import EmptyDataset, InvalidArg, InvariantViolation, NotConverged
from .metrics import extract_answer_letter, lcs_similarity
from .prompts import PromptLibrary, default_library, render_item
from .provider.base import ChatClient
from .qgen import GenerationContext, RestructureDirection, restructure

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.05
DEFAULT_MAX_ITERATIONS = 8

EVAL_TEMPERATURE = 0.0  # measurement calls are always greedy


class Alignment(Enum):
    ALIGNED = "aligned"
    TOO_HARD = "too_hard"
    TOO_EASY = "too_easy"


def compute_delta(s_target: float, s_gen: float) -> float:
    for name, v in (("s_target", s_target), ("s_gen", s_gen)):
        if not 0.0 <= v <= 1.0:
            raise InvalidArg(f"{name} must lie in [0, 1], got {v}")
    return s_target - s_gen


def classify(delta: float, epsilon: float) -> Alignment:
    """Strict boundary: |delta| == epsilon is NOT aligned."""
    if epsilon <= 0:
        raise InvalidArg(f"epsilon must be > 0, got {epsilon}")
    if delta >= epsilon:
        return Alignment.TOO_HARD
    if delta <= -epsilon:
        return Alignment.TOO_EASY
    return Alignment.ALIGNED


@dataclass(frozen=True)
class EvalVerdict:
    """One question's outcome under the test model."""

    question_id: str
    extracted: Optional[str]
    expected: str
    correct: bool
    unparsed: bool  # no letter extractable; counted incorrect

    def to_record(self) -> dict:
        return {
            "record_type": "verdict",
            "question_id": self.question_id,
            "extracted": self.extracted,
            "expected": self.expected,
            "correct": self.correct,
            "unparsed": self.unparsed,
        }


@dataclass(frozen=True)
class EvalResult:
    verdicts: tuple[EvalVerdict, ...]
    precision: float

    @property
    def correct_ids(self) -> list[str]:
        return [v.question_id for v in self.verdicts if v.correct]

    @property
    def incorrect_ids(self) -> list[str]:
        return [v.question_id for v in self.verdicts if not v.correct]


@dataclass
class AlignmentState:
    """Controller bookkeeping across calibration rounds."""

    s_target: float
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    s_gen_history: list[float] = field(default_factory=list)
    delta: float = 0.0
    iteration: int = 0  # rewrite rounds performed so far
    correct_ids: frozenset[str] = frozenset()
    incorrect_ids: frozenset[str] = frozenset()

    def observe(self, result: EvalResult) -> None:
        self.s_gen_history.append(result.precision)
        self.delta = compute_delta(self.s_target, result.precision)
        self.correct_ids = frozenset(result.correct_ids)
        self.incorrect_ids = frozenset(result.incorrect_ids)
        if self.correct_ids & self.incorrect_ids:
            raise InvariantViolation("a question is both correct and incorrect")

    def to_record(self) -> dict:
        return {
            "record_type": "alignment_state",
            "s_target": self.s_target,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "s_gen_history": list(self.s_gen_history),
            "delta": self.delta,
            "iteration": self.iteration,
            "correct_ids": sorted(self.correct_ids),
            "incorrect_ids": sorted(self.incorrect_ids),
        }


Evaluable = Union[GeneratedQuestion, StaticItem]


def _eval_one(
    q: Evaluable, client: ChatClient, library: PromptLibrary
) -> EvalVerdict:
    if not q.options:
        raise InvalidArg(
            f"item {q.id!r} has no options; precision needs choice-style items"
        )
    prompt = library.render("eval_answer", choiceQ=render_item(q, with_answer=False))
    response = client.complete(prompt, temperature=EVAL_TEMPERATURE)
    letter = extract_answer_letter(response.text, tuple(q.options.keys()))
    return EvalVerdict(
        question_id=q.id,
        extracted=letter,
        expected=q.answer,
        correct=letter == q.answer,
        unparsed=letter is None,
    )


def evaluate_dataset(
    questions: Sequence[Evaluable],
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
    max_workers: int = 1,
) -> EvalResult:
    """Test-model precision over choice-style items, greedy decoding.

    Responses with no extractable letter count incorrect and carry the
    unparsed flag.  Verdict order follows input order regardless of the
    worker pool.
    """
    if not questions:
        raise EmptyDataset("no questions to evaluate")
    library = library or default_library()
    if max_workers <= 1 or len(questions) == 1:
        verdicts = [_eval_one(q, client, library) for q in questions]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            verdicts = list(
                pool.map(lambda q: _eval_one(q, client, library), questions)
            )
    precision = sum(1 for v in verdicts if v.correct) / len(verdicts)
    return EvalResult(verdicts=tuple(verdicts), precision=precision)


@dataclass(frozen=True)
class FreeAnswerVerdict:
    """Response-vs-reference overlap for one free-answer item."""

    question_id: str
    response: str
    reference: str
    similarity: float

    def to_record(self) -> dict:
        return {
            "record_type": "verdict",
            "question_id": self.question_id,
            "response": self.response,
            "reference": self.reference,
            "similarity": self.similarity,
        }


def evaluate_free_answers(
    items: Sequence[StaticItem],
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
    max_workers: int = 1,
) -> list[FreeAnswerVerdict]:
    """Collect free-text answers and score each against its reference."""
    if not items:
        raise EmptyDataset("no items to evaluate")
    library = library or default_library()

    def one(item: StaticItem) -> FreeAnswerVerdict:
        if item.options:
            raise InvalidArg(f"item {item.id!r} is choice-style, not free-answer")
        prompt = library.render(
            "eval_answer_qa", choiceQ=render_item(item, with_answer=False)
        )
        response = client.complete(prompt, temperature=EVAL_TEMPERATURE).text.strip()
        return FreeAnswerVerdict(
            question_id=item.id,
            response=response,
            reference=item.answer,
            similarity=lcs_similarity(response, item.answer),
        )

    if max_workers <= 1 or len(items) == 1:
        return [one(it) for it in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, items))


@dataclass(frozen=True)
class AlignmentResult:
    dataset: DynamicDataset
    state: AlignmentState
    log: tuple[dict, ...]


_ACTION_BY_CLASS = {
    Alignment.TOO_HARD: RestructureDirection.SIMPLIFY,
    Alignment.TOO_EASY: RestructureDirection.COMPLICATE,
}


def align(
    dataset: DynamicDataset,
    baseline: Union[float, Sequence[StaticItem]],
    test_client: ChatClient,
    gen_client: ChatClient,
    *,
    contexts: Mapping[str, GenerationContext],
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    library: Optional[PromptLibrary] = None,
    max_workers: int = 1,
    retries: int = 3,
    similarity_threshold: float = 0.85,
) -> AlignmentResult:
    """Run the calibration loop to completion.

    ``baseline`` is either the target precision itself or the static
    items whose measured precision becomes the target.  ``contexts``
    maps question id -> generation context for the rewrite prompts.

    Raises NotConverged (carrying state, dataset, and log) if the cap is
    reached while still off target.
    """
    library = library or default_library()
    if isinstance(baseline, (int, float)) and not isinstance(baseline, bool):
        s_target = float(baseline)
        if not 0.0 <= s_target <= 1.0:
            raise InvalidArg(f"target precision must lie in [0, 1], got {s_target}")
    else:
        log.info("measuring target precision on %d baseline items", len(baseline))
        s_target = evaluate_dataset(
            baseline, test_client, library=library, max_workers=max_workers
        ).precision

    missing = [q.id for q in dataset.questions if q.id not in contexts]
    if missing:
        raise InvalidArg(f"no generation context for questions: {missing[:5]!r}")

    state = AlignmentState(
        s_target=s_target, epsilon=epsilon, max_iterations=max_iterations
    )
    questions = list(dataset.questions)
    loop_log: list[dict] = []

    while True:
        result = evaluate_dataset(
            questions, test_client, library=library, max_workers=max_workers
        )
        state.observe(result)
        verdict = classify(state.delta, epsilon)
        row = {
            "record_type": "alignment_round",
            "iteration": state.iteration,
            "s_gen": result.precision,
            "s_target": s_target,
            "delta": state.delta,
        }
        if verdict is Alignment.ALIGNED:
            row["action"] = "aligned"
            row["restructured_ids"] = []
            loop_log.append(row)
            log.info(
                "aligned after %d rewrite rounds (delta=%+.4f)",
                state.iteration, state.delta,
            )
            return AlignmentResult(
                dataset=dataset.replace_questions(questions),
                state=state,
                log=tuple(loop_log),
            )
        if state.iteration >= max_iterations:
            row["action"] = "stop"
            row["restructured_ids"] = []
            loop_log.append(row)
            raise NotConverged(
                state=state,
                dataset=dataset.replace_questions(questions),
                log=tuple(loop_log),
            )

        direction = _ACTION_BY_CLASS[verdict]
        target_ids = (
            state.incorrect_ids
            if verdict is Alignment.TOO_HARD
            else state.correct_ids
        )
        row["action"] = direction.value
        row["restructured_ids"] = sorted(target_ids)
        loop_log.append(row)
        log.info(
            "round %d: s_gen=%.4f delta=%+.4f -> %s %d questions",
            state.iteration, result.precision, state.delta,
            direction.value, len(target_ids),
        )
        for i, q in enumerate(questions):
            if q.id in target_ids:
                questions[i] = restructure(
                    q,
                    direction,
                    contexts[q.id],
                    gen_client,
                    library=library,
                    retries=retries,
                    similarity_threshold=similarity_threshold,
                )
        state.iteration += 1
