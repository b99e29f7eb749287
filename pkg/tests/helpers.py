"""Shared fixtures: a deterministic scripted model driving offline runs.

The oracle responder is a pure function of the request, so recording it
once and replaying the cassette reproduces every byte.  Conventions:

- fixture items carry a ``Qn`` tag in their stem; every derived artifact
  (knowledge points, stems) embeds the tag, letting the responder stay
  stateless;
- generated stems carry a ``[rN]`` rewrite-round marker; a restructure
  reply bumps N by one;
- the correct option's text always contains the word "correct"; the
  scripted test model answers correctly on static items and on rewritten
  (round >= 1) questions, and misses round-0 questions, so one alignment
  rewrite round always converges.
"""

from __future__ import annotations

import json
import re

from dynbench.dataset_io import write_jsonl

from dynbench import (
    ChatClient,
    ChatRequest,
    DynamicDataset,
    GeneratedQuestion,
    GenerationContext,
    Manifest,
    ModelConfig,
    PipelineConfig,
    RolesConfig,
    ScriptedProvider,
    StaticItem,
    sequence_responder,
)

LAYERS = (
    "Remembering",
    "Understanding",
    "Applying",
    "Analyzing",
    "Evaluating",
    "Creating",
)

_TAG = re.compile(r"\bQ(\d+)\b")
_KP = re.compile(r"Q\d+ focus area \d+")
_OPTION_LINE = re.compile(r"^([A-D])\. (.*)$", re.MULTILINE)

ROUND_RE = re.compile(r"\[r(\d+)\]")  # rewrite-round marker in generated stems
QTAG_RE = re.compile(r"\[q(\d+)\]")  # per-question tag used by scripted evaluators


def make_items(n: int) -> list[StaticItem]:
    return [
        StaticItem(
            id=f"item-{i:03d}",
            kind="choice",
            question=f"Q{i}: Which statement about subject {i} is accurate?",
            options={
                "A": f"claim {i}-a, a distractor",
                "B": f"claim {i}-b, the correct account",
                "C": f"claim {i}-c, a distractor",
                "D": f"claim {i}-d, a distractor",
            },
            answer="B",
            source="fixture",
            subject="history",
        )
        for i in range(1, n + 1)
    ]


def _tag(prompt: str) -> str:
    m = _TAG.search(prompt)
    return f"Q{m.group(1)}" if m else "Q0"


def _kp(prompt: str) -> str:
    m = _KP.search(prompt)
    return m.group(0) if m else f"{_tag(prompt)} focus area 0"


def _record(stem: str, kp: str, *, layer: str | None = None) -> dict:
    rec = {
        "Question": stem,
        "A": f"an incidental detail unrelated to {kp}",
        "B": f"the correct implication of {kp}",
        "C": f"a plausible but mistaken reading of {kp}",
        "D": f"an overstated version of {kp}",
        "Answer": "B",
    }
    if layer is not None:
        rec["Layer"] = layer
    return rec


def _answer_eval(prompt: str) -> str:
    letter = None
    for m in _OPTION_LINE.finditer(prompt):
        if "correct" in m.group(2):
            letter = m.group(1)
    if letter is None:
        return "I cannot tell."
    rounds = [int(x) for x in ROUND_RE.findall(prompt)]
    if rounds and max(rounds) == 0:  # first-draft questions are missed
        return f"Answer: {'C' if letter != 'C' else 'D'}"
    return f"Answer: {letter}"


def _restructure(prompt: str) -> str:
    stems = [line for line in prompt.splitlines() if ROUND_RE.search(line)]
    current = stems[-1]
    n = max(int(x) for x in ROUND_RE.findall(current))
    bumped = ROUND_RE.sub(f"[r{n + 1}]", current)
    return json.dumps([_record(bumped, _kp(prompt))])


def oracle_responder(request: ChatRequest) -> str:
    """Scripted stand-in for every model role, keyed on prompt markers."""
    prompt = request.messages[0].content
    tag = _tag(prompt)
    kp = _kp(prompt)
    if "summarizing knowledge points" in prompt:
        return json.dumps([f"{tag} focus area {j}" for j in (1, 2, 3)])
    if "summarizing the main idea" in prompt:
        return f"The item {tag} checks one verifiable claim about its subject."
    if "expert in explaining knowledge points" in prompt:
        return (
            f"The notion called {kp} names a settled regularity within the "
            f"material behind {tag}; treatments of {kp} agree on its scope "
            "and its standard counterexamples."
        )
    if "Bloom's six levels" in prompt:
        return json.dumps(
            [
                _record(
                    f"{layer} probe: how is {kp} used in scenario "
                    f"{i + 1}? [{layer.lower()}] [r0]",
                    kp,
                    layer=layer,
                )
                for i, layer in enumerate(LAYERS)
            ]
        )
    if "generate one multiple-choice question" in prompt:
        return json.dumps([_record(f"Which consequence follows from {kp}? [std] [r0]", kp)])
    if (
        "reducing question complexity" in prompt
        or "enhancing question complexity" in prompt
        or "without changing how hard they are" in prompt
    ):
        return _restructure(prompt)
    if "proofreading expert" in prompt:
        return "1"
    if "reviewer of multiple-choice questions" in prompt:
        return "1"
    if "Reply with only the letter" in prompt:
        return _answer_eval(prompt)
    if "directly and concisely" in prompt:
        return f"the reference answer for {tag}"
    raise AssertionError(f"oracle got an unrecognized prompt: {prompt[:120]!r}")


def scripted_client(responder, *, model: str = "scripted", **kw) -> ChatClient:
    """A ChatClient over a pure-function provider."""
    return ChatClient(provider=ScriptedProvider(responder), model=model, **kw)


def seq_client(texts, **kw) -> ChatClient:
    """A ChatClient that plays the given responses in order."""
    return scripted_client(sequence_responder(list(texts)), **kw)


def make_question(
    i: int = 1,
    *,
    qid: str | None = None,
    parent: str = "item-001",
    kp: str = "Q1 focus area 1",
    stem: str | None = None,
    answer: str = "B",
    layer=None,
    round: int = 0,
) -> GeneratedQuestion:
    """One well-formed generated question with distinguishable text."""
    return GeneratedQuestion(
        id=qid or f"{parent}/kp{i}/std",
        parent_id=parent,
        knowledge_point=kp,
        question=stem or f"Which consequence follows from {kp}? [q{i}] [r{round}]",
        options={
            "A": f"an incidental detail unrelated to {kp}",
            "B": f"the correct implication of {kp}",
            "C": f"a plausible but mistaken reading of {kp}",
            "D": f"an overstated version of {kp}",
        },
        answer=answer,
        bloom_layer=layer,
        round=round,
    )


def make_context(item: StaticItem | None = None, kp: str = "Q1 focus area 1") -> GenerationContext:
    item = item or make_items(1)[0]
    return GenerationContext(
        item=item,
        knowledge_point=kp,
        main_idea=f"The item checks one verifiable claim about {kp}.",
        explanation=(
            f"The notion called {kp} names a settled regularity; treatments "
            f"of {kp} agree on its scope and standard counterexamples."
        ),
    )


def eval_responder_correct_iff_round_at_least(thresholds):
    """Test model: question [qi] is answered correctly iff round >= thresholds[i]."""

    def respond(request: ChatRequest) -> str:
        prompt = request.messages[0].content
        qi = int(QTAG_RE.search(prompt).group(1))
        rounds = [int(m) for m in ROUND_RE.findall(prompt)]
        return "Answer: B" if max(rounds) >= thresholds[qi] else "Answer: C"

    return respond


def bump_round_responder(request: ChatRequest) -> str:
    """Generator model: rewrite a question by bumping its [rN] marker."""
    return _restructure(request.messages[0].content)


def make_generated_dataset(n: int) -> DynamicDataset:
    """n standard questions under one parent item, stems tagged [q0]..[qn-1]."""
    questions = tuple(
        make_question(i, qid=f"item-001/kp{i}/std") for i in range(n)
    )
    return DynamicDataset(questions=questions, manifest=make_manifest(["item-001"]))


def contexts_for(dataset: DynamicDataset) -> dict[str, GenerationContext]:
    """One generation context per question, keyed by question id."""
    return {q.id: make_context(kp=q.knowledge_point) for q in dataset.questions}


def make_manifest(sampled_ids, **kw) -> Manifest:
    fields = dict(
        config={"fixture": True},
        seed=42,
        source_digest="0" * 64,
        sampled_ids=tuple(sampled_ids),
    )
    fields.update(kw)
    return Manifest(**fields)


def write_eval_file(path, group: str, results: dict) -> None:
    """A stored evaluation output: one verdict row per id plus the summary."""
    rows = [
        {"record_type": "verdict", "question_id": qid, "correct": correct}
        for qid, correct in results.items()
    ]
    rows.append({"record_type": "eval_summary", "group": group, "total": len(results)})
    write_jsonl(path, rows)


def make_config(dataset_path, **overrides) -> PipelineConfig:
    """Three-judge offline run configuration used across the suite."""
    models = {
        "gen": ModelConfig(alias="gen", model="scripted-gen"),
        "search": ModelConfig(
            alias="search", model="scripted-search", supports_search=True
        ),
        "test": ModelConfig(alias="test", model="scripted-test"),
        "judge-a": ModelConfig(alias="judge-a", model="scripted-judge-a"),
        "judge-b": ModelConfig(alias="judge-b", model="scripted-judge-b"),
        "judge-c": ModelConfig(alias="judge-c", model="scripted-judge-c"),
    }
    roles = RolesConfig(
        generator="gen",
        searcher="search",
        test_model="test",
        judges=("judge-a", "judge-b", "judge-c"),
    )
    fields = dict(
        models=models,
        roles=roles,
        static_dataset=str(dataset_path),
        sample_count=3,
        knowledge_points_per_item=2,
        epsilon=0.05,
        max_iterations=8,
        bloom_mode=True,
        seed=42,
        retries=1,
        max_regen=2,
        similarity_threshold=0.85,
        max_workers=1,
    )
    fields.update(overrides)
    config = PipelineConfig(**fields)
    config.validate()
    return config
