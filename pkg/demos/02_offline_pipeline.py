"""
A full pipeline run, recorded and replayed offline
==================================================

Runs every stage — sample, annotate, explain, generate, align, check —
against a canned stand-in model, recording each exchange to a cassette.
A second run replays the cassette with no model at all and must produce
byte-identical artifacts.

Run with:  python3 demos/02_offline_pipeline.py
"""

import hashlib
import json
import re
import tempfile
from pathlib import Path

from dynbench import (
    ModelConfig,
    PipelineConfig,
    RecordingProvider,
    ReplayProvider,
    RolesConfig,
    ScriptedProvider,
    StaticItem,
    run_pipeline,
    write_static,
)
from dynbench.pipeline import ARTIFACTS, STAGES

workdir = Path(tempfile.mkdtemp(prefix="dynbench-demo-"))
print("working under", workdir)

# ---------------------------------------------------------------------------
# A tiny static benchmark.  Every answer key is B so the canned test
# model below ("always pick B") scores a perfect baseline.
items = [
    StaticItem(
        id=f"demo-{i:02d}",
        kind="choice",
        question=f"D{i}: which of the following statements about topic {i} holds?",
        options={
            "A": f"statement {i}-a, close but off the mark",
            "B": f"statement {i}-b, the accurate one",
            "C": f"statement {i}-c, a common misconception",
            "D": f"statement {i}-d, an exaggeration",
        },
        answer="B",
        source="demo",
        subject="general",
    )
    for i in range(1, 5)
]
static_path = workdir / "static.jsonl"
write_static(static_path, items)

# ---------------------------------------------------------------------------
# The canned model: a pure function keyed on prompt markers.  Knowledge
# points are minted as "D<i> core idea <j>" so later prompts can be
# answered by reading the point straight back out of the prompt text.
_TAG = re.compile(r"\bD(\d+)\b")
_KP = re.compile(r"D\d+ core idea \d+")
_LAYERS = (
    "Remembering", "Understanding", "Applying",
    "Analyzing", "Evaluating", "Creating",
)


def _question_record(stem, kp, layer=None):
    record = {
        "Question": stem,
        "A": f"a side issue near {kp}",
        "B": f"what {kp} actually entails",
        "C": f"a misreading of {kp}",
        "D": f"an overstatement of {kp}",
        "Answer": "B",
    }
    if layer is not None:
        record["Layer"] = layer
    return record


def canned_model(request):
    prompt = request.messages[0].content
    tag = f"D{_TAG.search(prompt).group(1)}" if _TAG.search(prompt) else "D0"
    kp_match = _KP.search(prompt)
    kp = kp_match.group(0) if kp_match else f"{tag} core idea 0"
    if "summarizing knowledge points" in prompt:
        return json.dumps([f"{tag} core idea 1", f"{tag} core idea 2"])
    if "summarizing the main idea" in prompt:
        return f"The item {tag} checks a single verifiable claim."
    if "expert in explaining knowledge points" in prompt:
        return (
            f"The notion called {kp} names one settled regularity; standard "
            f"treatments of {kp} agree on where it applies and where it fails."
        )
    if "Bloom's six levels" in prompt:
        return json.dumps(
            [
                _question_record(f"{layer} check: apply {kp} to case {n}.", kp, layer)
                for n, layer in enumerate(_LAYERS, start=1)
            ]
        )
    if "generate one multiple-choice question" in prompt:
        return json.dumps([_question_record(f"Which conclusion does {kp} support?", kp)])
    if "Reply with only the letter" in prompt:
        return "Answer: B"  # the test model; right on every demo item
    if "proofreading expert" in prompt or "reviewer of multiple-choice questions" in prompt:
        return "1"  # judges approve everything
    raise AssertionError(f"canned model got an unexpected prompt: {prompt[:80]!r}")


# ---------------------------------------------------------------------------
# Configuration: three judges, two knowledge points per item, and a fixed
# target precision so alignment converges without any rewrites here.
config = PipelineConfig(
    models={
        "gen": ModelConfig(alias="gen", model="canned-gen"),
        "search": ModelConfig(alias="search", model="canned-search", supports_search=True),
        "test": ModelConfig(alias="test", model="canned-test"),
        "judge-a": ModelConfig(alias="judge-a", model="canned-judge-a"),
        "judge-b": ModelConfig(alias="judge-b", model="canned-judge-b"),
        "judge-c": ModelConfig(alias="judge-c", model="canned-judge-c"),
    },
    roles=RolesConfig(
        generator="gen",
        searcher="search",
        test_model="test",
        judges=("judge-a", "judge-b", "judge-c"),
    ),
    static_dataset=str(static_path),
    sample_count=3,
    knowledge_points_per_item=2,
    target_precision=1.0,
    seed=7,
)
config.validate()

# ---------------------------------------------------------------------------
# First run: live against the canned model, recording every exchange.
cassette = workdir / "cassette.jsonl"
recorded = run_pipeline(
    config,
    workdir / "recorded",
    provider=RecordingProvider(ScriptedProvider(canned_model), cassette),
)
print()
print(f"recorded run: {len(recorded.dataset.questions)} questions "
      f"across {len(items)} source items (3 sampled)")
print(f"cassette holds {sum(1 for _ in cassette.open())} exchanges")

# Second run: nothing but the cassette.  No scripted model, no network.
replayed = run_pipeline(
    config,
    workdir / "replayed",
    provider=ReplayProvider(cassette),
)

# Byte-for-byte comparison of every artifact the two runs produced.
print()
print("artifact                digest (recorded)  identical")
artifact_names = [name for stage in STAGES for name in ARTIFACTS[stage]]
for name in artifact_names:
    a = (workdir / "recorded" / name).read_bytes()
    b = (workdir / "replayed" / name).read_bytes()
    digest = hashlib.sha256(a).hexdigest()[:16]
    print(f"{name:<22}  {digest}   {a == b}")
    assert a == b

print()
print("sample of the dynamic set:")
for q in recorded.dataset.questions[:3]:
    layer = q.bloom_layer.value if q.bloom_layer else "standard"
    print(f"  [{layer:>13}] {q.id}: {q.question}")
