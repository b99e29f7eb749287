"""Text-overlap similarity, dataset perplexity, answer extraction, reports.

Similarity between two texts is the longest-common-subsequence length
divided by the longer normalized length:

    sim(X, Y) = LCS(X', Y') / max(|X'|, |Y'|)

where X', Y' drop all whitespace and Unicode punctuation but keep case.
Two empty normalizations count as identical (1.0); exactly one empty
counts as disjoint (0.0).

Dataset perplexity averages per-sample perplexities, each computed from
base-2 token log-probabilities:

    ppl(dataset) = mean_j( 2 ** ( -mean_i( log2 p_ij ) ) )

Samples may have different lengths; each sample is normalized by its own
token count before the outer mean.
"""

from __future__ import annotations

import math
import re
import sys
import unicodedata
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import EmptyDataset, EmptySample, IdMismatch, InvalidArg

# ---------------------------------------------------------------------------
# text normalization and LCS similarity


def normalize_text(text: str) -> str:
    """Strip whitespace and punctuation (Unicode P* categories), keep case."""
    out = []
    for ch in text:
        if ch.isspace():
            continue
        if unicodedata.category(ch).startswith("P"):
            continue
        out.append(ch)
    return "".join(out)


def lcs_length(x: str, y: str) -> int:
    """Length of the longest common subsequence of two strings.

    Classic DP collapsed to one rolling row (O(min overhead) memory,
    O(len(x)*len(y)) time), with the inner loop vectorized over numpy:
    for row i the recurrence

        dp[i][j] = max(prev[j], prev[j-1] + eq(i,j), dp[i][j-1])

    is evaluated as an elementwise max of the first two candidates
    followed by a running cumulative max that carries dp[i][j-1] forward.
    """
    if not x or not y:
        return 0
    if len(y) < len(x):
        x, y = y, x  # keep the vectorized axis long
    xa = np.frombuffer(x.encode("utf-32-le"), dtype=np.uint32)
    ya = np.frombuffer(y.encode("utf-32-le"), dtype=np.uint32)
    prev = np.zeros(ya.size + 1, dtype=np.int64)
    for cx in xa:
        cand = np.where(ya == cx, prev[:-1] + 1, 0)
        np.maximum(cand, prev[1:], out=cand)
        np.maximum.accumulate(cand, out=cand)
        prev[1:] = cand
    return int(prev[-1])


def lcs_similarity(x: str, y: str) -> float:
    """Normalized-text LCS ratio in [0, 1]; see module docstring."""
    nx = normalize_text(x)
    ny = normalize_text(y)
    if not nx and not ny:
        return 1.0
    if not nx or not ny:
        return 0.0
    return lcs_length(nx, ny) / max(len(nx), len(ny))


# ---------------------------------------------------------------------------
# dataset perplexity


@dataclass(frozen=True)
class LogProbSample:
    """Base-2 token log-probabilities for one generated sample."""

    token_log2_probs: tuple[float, ...]
    sample_id: Optional[str] = None

    def __post_init__(self):
        probs = tuple(float(p) for p in self.token_log2_probs)
        if not probs:
            raise EmptySample(f"sample {self.sample_id!r} has no tokens")
        for p in probs:
            if p > 0.0 or math.isnan(p):
                raise InvalidArg(f"log2 probability out of range: {p}")
        object.__setattr__(self, "token_log2_probs", probs)


def sample_perplexity(token_log2_probs: Sequence[float]) -> float:
    """2 ** (negative mean of the base-2 token log-probabilities)."""
    if len(token_log2_probs) == 0:
        raise EmptySample("sample has no tokens")
    mean = math.fsum(token_log2_probs) / len(token_log2_probs)
    return 2.0 ** (-mean)


def dataset_perplexity(
    samples: Iterable[Union[LogProbSample, Sequence[float]]],
) -> float:
    """Mean of per-sample perplexities; samples may differ in length."""
    terms = []
    for s in samples:
        probs = s.token_log2_probs if isinstance(s, LogProbSample) else s
        terms.append(sample_perplexity(probs))
    if not terms:
        raise EmptyDataset("no samples to aggregate")
    return math.fsum(terms) / len(terms)


# ---------------------------------------------------------------------------
# answer-letter extraction

_ANSWER_STMT = re.compile(
    r"\banswer\s*(?:is|:)\s*\**\s*\(?([A-Za-z])\)?", re.IGNORECASE
)
_LEADING = re.compile(r"^[\s*#]*\(?([A-Z])\)?(?=[\s.,:;!)\]]|$)")


def extract_answer_letter(
    response: str, valid_letters: Sequence[str] = ("A", "B", "C", "D")
) -> Optional[str]:
    """Pull the chosen option letter out of a free-form model response.

    Highest-precedence match wins:
      1. an explicit "Answer: X" / "answer is X" statement (case-insensitive);
      2. a standalone uppercase letter (optionally parenthesized) at the
         start of the response;
      3. the first standalone uppercase valid letter anywhere.

    Returns None when nothing matches; callers decide how to score that.
    """
    valid = {v.upper() for v in valid_letters}
    if not valid:
        raise InvalidArg("valid_letters must be non-empty")

    m = _ANSWER_STMT.search(response)
    if m and m.group(1).upper() in valid:
        return m.group(1).upper()

    m = _LEADING.match(response)
    if m and m.group(1) in valid:
        return m.group(1)

    standalone = re.compile(r"\b(" + "|".join(sorted(valid)) + r")\b")
    m = standalone.search(response)
    if m:
        return m.group(1)
    return None


# ---------------------------------------------------------------------------
# contamination report

FLAG_THRESHOLD = 0.20


@dataclass(frozen=True)
class ReportRow:
    """Clean (cln) vs contaminated (ctm) scores for one report group."""

    group: str
    cln: float
    ctm: float
    flagged: bool = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        for name, v in (("cln", self.cln), ("ctm", self.ctm)):
            if not 0.0 <= v <= 1.0:
                raise InvalidArg(f"{name} must lie in [0, 1], got {v}")
        object.__setattr__(self, "delta", self.ctm - self.cln)
        object.__setattr__(self, "flagged", self.delta > FLAG_THRESHOLD)

    def to_record(self) -> dict:
        return {
            "record_type": "report_row",
            "group": self.group,
            "cln": self.cln,
            "ctm": self.ctm,
            "delta": self.delta,
            "flagged": self.flagged,
        }


def _score(verdicts: Mapping[str, bool]) -> float:
    if not verdicts:
        raise EmptyDataset("no verdicts to score")
    return sum(1 for v in verdicts.values() if v) / len(verdicts)


def contamination_rows(
    clean: Mapping[str, Mapping[str, bool]],
    contaminated: Mapping[str, Mapping[str, bool]],
) -> list[ReportRow]:
    """Build report rows from per-group {question_id: correct} verdict maps.

    A group typically names one evaluated model on one dataset condition.
    Both runs must cover the same groups, and within each group the same
    question ids.
    """
    if set(clean) != set(contaminated):
        raise IdMismatch(
            f"group sets differ: {sorted(set(clean) ^ set(contaminated))!r}"
        )
    rows = []
    for group in sorted(clean):
        c, t = clean[group], contaminated[group]
        if set(c) != set(t):
            raise IdMismatch(
                f"group {group!r}: question ids differ "
                f"({sorted(set(c) ^ set(t))[:5]!r} ...)"
            )
        rows.append(ReportRow(group=group, cln=_score(c), ctm=_score(t)))
    return rows


def similarity_rows(
    clean: Mapping[str, Mapping[str, float]],
    contaminated: Mapping[str, Mapping[str, float]],
) -> list[ReportRow]:
    """Report rows from per-group {id: similarity} maps (free-answer runs)."""
    if set(clean) != set(contaminated):
        raise IdMismatch(
            f"group sets differ: {sorted(set(clean) ^ set(contaminated))!r}"
        )
    rows = []
    for group in sorted(clean):
        c, t = clean[group], contaminated[group]
        if set(c) != set(t):
            raise IdMismatch(f"group {group!r}: question ids differ")
        if not c:
            raise EmptyDataset(f"group {group!r} has no results")
        rows.append(
            ReportRow(
                group=group,
                cln=math.fsum(c.values()) / len(c),
                ctm=math.fsum(t.values()) / len(t),
            )
        )
    return rows


def contamination_report(
    clean: Mapping[str, Mapping[str, Any]],
    contaminated: Mapping[str, Mapping[str, Any]],
) -> list[ReportRow]:
    """Per-group CLN/CTM/delta rows from paired evaluation outputs.

    Each argument maps group -> {question_id: result} where results are
    booleans (precision groups) or floats (similarity groups); a group
    must be homogeneous and typed the same on both sides.
    """
    if set(clean) != set(contaminated):
        raise IdMismatch(
            f"group sets differ: {sorted(set(clean) ^ set(contaminated))!r}"
        )
    verdict_clean, verdict_ctm = {}, {}
    sim_clean, sim_ctm = {}, {}
    for group in clean:
        values = list(clean[group].values()) + list(contaminated[group].values())
        if not values:
            raise EmptyDataset(f"group {group!r} has no results")
        if all(isinstance(v, bool) for v in values):
            verdict_clean[group] = clean[group]
            verdict_ctm[group] = contaminated[group]
        elif any(isinstance(v, bool) for v in values):
            raise InvalidArg(f"group {group!r} mixes verdicts and similarities")
        else:
            sim_clean[group] = clean[group]
            sim_ctm[group] = contaminated[group]
    rows = []
    if verdict_clean:
        rows.extend(contamination_rows(verdict_clean, verdict_ctm))
    if sim_clean:
        rows.extend(similarity_rows(sim_clean, sim_ctm))
    return sorted(rows, key=lambda r: r.group)


def render_report(rows: Sequence[ReportRow], out=None) -> str:
    """Aligned plain-text table; flagged rows carry a trailing marker."""
    if out is None:
        out = sys.stdout
    header = f"{'group':<24} {'CLN':>8} {'CTM':>8} {'delta':>8}  flag"
    lines = [header, "-" * len(header)]
    for r in rows:
        mark = "CONTAMINATED" if r.flagged else ""
        lines.append(
            f"{r.group:<24} {r.cln:>8.4f} {r.ctm:>8.4f} {r.delta:>+8.4f}  {mark}"
        )
    text = "\n".join(lines) + "\n"
    out.write(text)
    return text
