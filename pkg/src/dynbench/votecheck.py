"""Judge-panel quality gate over generated questions.

Each judge answers the 0/1 proofreading prompt; a question passes when
strictly more than half the panel says 1.  A judge that twice fails to
answer in protocol counts as 0 - a judge unable to follow the format
must not grant a pass.  Failed questions are rewritten neutrally and
re-voted a bounded number of times, then dropped.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import DynamicDataset, GeneratedQuestion
from .errors import InvalidArg
from .prompts import PromptLibrary, default_library, render_item
from .provider.base import ChatClient
from .qgen import GenerationContext, RestructureDirection, restructure

log = logging.getLogger(__name__)

DEFAULT_MAX_REGEN = 3


@dataclass(frozen=True)
class VoteRecord:
    """Panel verdicts for one question at one attempt."""

    question_id: str
    verdicts: tuple[tuple[str, int], ...]  # (judge name, 0|1) in panel order
    outcome: str  # "pass" | "fail"
    attempt: int

    def __post_init__(self):
        if not self.verdicts:
            raise InvalidArg("verdicts must be non-empty")
        for name, v in self.verdicts:
            if v not in (0, 1):
                raise InvalidArg(f"verdict for {name!r} must be 0 or 1, got {v!r}")
        ones = sum(v for _, v in self.verdicts)
        expected = "pass" if ones > len(self.verdicts) / 2 else "fail"
        if self.outcome != expected:
            raise InvalidArg(
                f"outcome {self.outcome!r} contradicts verdicts {self.verdicts!r}"
            )

    @property
    def passed(self) -> bool:
        return self.outcome == "pass"

    def to_record(self) -> dict:
        return {
            "record_type": "vote",
            "question_id": self.question_id,
            "verdicts": [
                {"judge": name, "verdict": v} for name, v in self.verdicts
            ],
            "outcome": self.outcome,
            "attempt": self.attempt,
        }


def majority(verdicts: Sequence[int]) -> bool:
    """Strict majority of ones; ties fail (even panels are rejected upstream)."""
    return sum(verdicts) > len(verdicts) / 2


def judge(
    question: GeneratedQuestion,
    client: ChatClient,
    *,
    library: Optional[PromptLibrary] = None,
) -> int:
    """One judge's 0/1 verdict; one retry on protocol violation, then 0."""
    library = library or default_library()
    prompt = library.render(
        "judge_answer", choiceQ=render_item(question, with_answer=True)
    )
    for attempt in range(2):
        text = client.complete(prompt).text.strip()
        if text in ("0", "1"):
            return int(text)
        log.warning(
            "judge %s broke the 0/1 protocol on %s (attempt %d): %r",
            client.name, question.id, attempt + 1, text[:80],
        )
    log.warning(
        "judge %s unparseable twice on %s; counting as 0",
        client.name, question.id,
    )
    return 0


def vote(
    question: GeneratedQuestion,
    judges: Sequence[ChatClient],
    *,
    library: Optional[PromptLibrary] = None,
    attempt: int = 0,
    max_workers: int = 1,
) -> VoteRecord:
    """Collect the full panel (every judge is asked, even after a decision)."""
    if not judges:
        raise InvalidArg("judge panel must be non-empty")
    library = library or default_library()
    if max_workers <= 1 or len(judges) == 1:
        results = [judge(question, j, library=library) for j in judges]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(
                pool.map(lambda j: judge(question, j, library=library), judges)
            )
    verdicts = tuple((j.name, v) for j, v in zip(judges, results))
    outcome = "pass" if majority(results) else "fail"
    return VoteRecord(
        question_id=question.id, verdicts=verdicts, outcome=outcome, attempt=attempt
    )


@dataclass(frozen=True)
class CheckResult:
    dataset: DynamicDataset
    report: tuple[VoteRecord, ...]
    error_rate: float  # fraction of questions failing their first vote
    dropped_ids: tuple[str, ...]


def check_dataset(
    dataset: DynamicDataset,
    judges: Sequence[ChatClient],
    gen_client: ChatClient,
    *,
    contexts: Mapping[str, GenerationContext],
    max_regen: int = DEFAULT_MAX_REGEN,
    library: Optional[PromptLibrary] = None,
    max_workers: int = 1,
    retries: int = 3,
    similarity_threshold: float = 0.85,
) -> CheckResult:
    """Vote every question; rewrite failures neutrally up to max_regen.

    Questions still failing after the cap are dropped from the returned
    dataset and listed.  error_rate counts only first-vote failures, so
    regeneration success does not mask how often generation misfires.
    """
    library = library or default_library()
    missing = [q.id for q in dataset.questions if q.id not in contexts]
    if missing:
        raise InvalidArg(f"no generation context for questions: {missing[:5]!r}")

    report: list[VoteRecord] = []
    kept: list[GeneratedQuestion] = []
    dropped: list[str] = []
    first_failures = 0

    for q in dataset.questions:
        record = vote(
            q, judges, library=library, attempt=0, max_workers=max_workers
        )
        report.append(record)
        if record.passed:
            kept.append(q)
            continue
        first_failures += 1
        survived = False
        for attempt in range(1, max_regen + 1):
            q = restructure(
                q,
                RestructureDirection.NEUTRAL,
                contexts[q.id],
                gen_client,
                library=library,
                retries=retries,
                similarity_threshold=similarity_threshold,
            )
            record = vote(
                q, judges, library=library, attempt=attempt, max_workers=max_workers
            )
            report.append(record)
            if record.passed:
                kept.append(q)
                survived = True
                break
        if not survived:
            dropped.append(q.id)
            log.warning(
                "question %s failed the panel %d times; dropped",
                q.id, max_regen + 1,
            )

    error_rate = first_failures / len(dataset.questions) if dataset.questions else 0.0
    return CheckResult(
        dataset=dataset.replace_questions(kept),
        report=tuple(report),
        error_rate=error_rate,
        dropped_ids=tuple(dropped),
    )
