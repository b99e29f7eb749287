"""
Even-stride sampling and the evaluation metrics
===============================================

A tour of the numeric building blocks: deterministic dataset sampling,
normalized subsequence similarity, perplexity from token log-probs, and
answer-letter extraction from free-form model responses.

Run with:  python3 demos/01_sampling_and_metrics.py
"""

import math
import warnings

# sample_indices(N, S) picks floor(k * (N - 1) / S): an even stride over
# the whole index range, reproducible with no RNG involved.
from dynbench import sample_indices

picks = sample_indices(1000, 10)
print("10 of 1000:", picks)
gaps = [b - a for a, b in zip(picks, picks[1:])]
print("gaps between picks:", gaps)

# When S approaches N the floor formula collides; duplicates are dropped
# (order preserved) and a warning reports how many were lost.
from dynbench import SampleCollisionWarning

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    collapsed = sample_indices(5, 5)
print("5 of 5 collapses to:", collapsed)
print("warning said:", caught[0].message)
assert caught[0].category is SampleCollisionWarning

# ---------------------------------------------------------------------------
# Similarity: share of the longest common subsequence after normalization.
# Case is kept; whitespace and punctuation are not, so rephrasings that
# only shuffle punctuation still score high.
from dynbench import lcs_similarity, normalize_text

print()
print("normalized:", repr(normalize_text("Hello, world — again!")))
pairs = [
    ("the capital of France is Paris", "Paris is the capital of France"),
    ("the capital of France is Paris", "entropy never shrinks on its own"),
    ("kettle", "kettle"),
    ("kettle", "quasar"),
]
for a, b in pairs:
    print(f"similarity {lcs_similarity(a, b):.3f}  {a!r} vs {b!r}")

# ---------------------------------------------------------------------------
# Perplexity: 2 ** (negative mean base-2 log-probability) per sample,
# averaged over the dataset.  A model that is always certain scores 1;
# one that always hesitates between two tokens scores 2.
from dynbench import dataset_perplexity, sample_perplexity

print()
certain = [0.0, 0.0, 0.0]  # log2(1) per token
coin = [-1.0, -1.0, -1.0]  # log2(1/2) per token
print("certain sample:", sample_perplexity(certain))
print("coin-flip sample:", sample_perplexity(coin))
print("dataset mean:", dataset_perplexity([certain, coin]))
three_way = [-math.log2(3.0)] * 4
print("three-way sample:", round(sample_perplexity(three_way), 12))

# ---------------------------------------------------------------------------
# Answer extraction: an explicit "Answer: X" statement wins; then a
# standalone letter at the start; then the first standalone letter
# anywhere.  No match returns None so callers can decide how to score.
from dynbench import extract_answer_letter

print()
for response in [
    "Answer: C",
    "I believe the answer is d.",
    "(B) fits the evidence best.",
    "Too close to call, but D edges it out.",
    "None of these candidates convince me.",
]:
    print(f"{extract_answer_letter(response)!r:6} <- {response!r}")
