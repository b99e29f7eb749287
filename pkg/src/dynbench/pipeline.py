"""Stage orchestration over an artifact directory.

A run is a fixed sequence of stages, each reading the previous stage's
JSONL artifact and writing its own with a manifest line on top:

    sample    sampled.jsonl       evenly spaced slice of the source set
    annotate  annotations.jsonl   knowledge points + main idea per item
    explain   explanations.jsonl  grounding text per (item, point)
    generate  generated.jsonl     fresh questions (one regular + the six
                                  cognitive levels per point when enabled)
    align     aligned.jsonl       difficulty-calibrated questions
              alignment_log.jsonl one row per calibration round
    check     dynamic.jsonl       panel-approved final dataset
              vote_report.jsonl   every vote cast, plus a summary row

Manifests chain by content digest: each artifact records the digest of
its immediate input, and stages refuse inputs whose recorded chain no
longer matches what is on disk.  A state file in the output directory
marks completed stages so interrupted runs resume without repeating
work; artifacts are written canonically, so a resumed run's outputs are
byte-identical to an uninterrupted one.

All fan-out across items happens here (bounded thread pools); the stage
boundaries are barriers.  Worker order never affects artifact bytes
because results are collected in input order.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, TypeVar, Union

from .align import align, evaluate_dataset, evaluate_free_answers
from .annotate import annotate_item
from .config import PipelineConfig
from .core import (
    DynamicDataset,
    Explanation,
    GeneratedQuestion,
    KnowledgeAnnotation,
    Manifest,
    StaticItem,
    canonical_dumps,
)
from .dataset_io import (
    file_digest,
    load_static,
    read_dynamic,
    read_records,
    write_jsonl,
    write_records,
    write_static,
)
from .errors import (
    ConfigError,
    EmptyDataset,
    InvalidArg,
    IoFailure,
    MalformedRecord,
    MissingInput,
    NotConverged,
)
from .explain import explain_knowledge_point
from .metrics import ReportRow, contamination_report, render_report
from .prompts import PromptLibrary, default_library
from .provider import (
    CachingProvider,
    ChatClient,
    LiveProvider,
    Provider,
    RecordingProvider,
    ReplayProvider,
    RoutingProvider,
)
from .qgen import GenerationContext, design_bloom_questions, design_question
from .sampling import sample_indices
from .votecheck import check_dataset

log = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")
R = TypeVar("R")

STAGES = ("sample", "annotate", "explain", "generate", "align", "check")

ARTIFACTS = {
    "sample": ("sampled.jsonl",),
    "annotate": ("annotations.jsonl",),
    "explain": ("explanations.jsonl",),
    "generate": ("generated.jsonl",),
    "align": ("aligned.jsonl", "alignment_log.jsonl"),
    "check": ("dynamic.jsonl", "vote_report.jsonl"),
}

STATE_NAME = "pipeline_state.json"


class RunPaths:
    """Locations of every artifact inside one output directory."""

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)
        self.sampled = self.out_dir / "sampled.jsonl"
        self.annotations = self.out_dir / "annotations.jsonl"
        self.explanations = self.out_dir / "explanations.jsonl"
        self.generated = self.out_dir / "generated.jsonl"
        self.aligned = self.out_dir / "aligned.jsonl"
        self.alignment_log = self.out_dir / "alignment_log.jsonl"
        self.dynamic = self.out_dir / "dynamic.jsonl"
        self.vote_report = self.out_dir / "vote_report.jsonl"
        self.state = self.out_dir / STATE_NAME


@dataclass
class RunState:
    """Resume marker: which stages completed, over which input digests."""

    # stage -> {"input_digest": str, "outputs": {name: digest}}
    completed: dict = field(default_factory=dict)
    not_converged: bool = False

    @classmethod
    def load(cls, path: Path) -> "RunState":
        if not path.exists():
            return cls()
        try:
            doc = json.loads(path.read_text("utf-8"))
            return cls(
                completed=dict(doc.get("completed", {})),
                not_converged=bool(doc.get("not_converged", False)),
            )
        except (OSError, ValueError) as exc:
            log.warning("unreadable state file %s (%s); starting fresh", path, exc)
            return cls()

    def save(self, path: Path) -> None:
        doc = {"completed": self.completed, "not_converged": self.not_converged}
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(canonical_dumps(doc) + "\n", encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write state file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# provider and client wiring


def build_provider(
    config: PipelineConfig,
    *,
    record: Optional[PathLike] = None,
    replay: Optional[PathLike] = None,
) -> Provider:
    """Assemble the backend stack for a run.

    Replay mode serves everything from the cassette.  Live mode routes by
    model id, optionally through a response cache, and record mode wraps
    the stack so every exchange lands in a new cassette.
    """
    if record and replay:
        raise ConfigError("record and replay modes are mutually exclusive")
    if replay:
        return ReplayProvider(replay)
    backends = {}
    for alias, m in sorted(config.models.items()):
        backends[m.model] = LiveProvider(
            m.endpoint,
            api_key_env=m.api_key_env,
            supports_search=m.supports_search,
            supports_logprobs=m.supports_logprobs,
            max_concurrency=config.max_workers,
        )
    provider: Provider = RoutingProvider(backends)
    if config.cache_dir:
        provider = CachingProvider(provider, config.cache_dir)
    if record:
        provider = RecordingProvider(provider, record)
    return provider


@dataclass(frozen=True)
class ClientSet:
    """The four model roles bound to one provider stack."""

    generator: ChatClient
    searcher: ChatClient
    test_model: ChatClient
    judges: tuple[ChatClient, ...]


def build_clients(config: PipelineConfig, provider: Provider) -> ClientSet:
    def mk(alias: str, **kw) -> ChatClient:
        m = config.models[alias]
        return ChatClient(provider=provider, model=m.model, name=alias, **kw)

    searcher_model = config.models[config.roles.searcher]
    if not searcher_model.supports_search:
        log.warning(
            "searcher model %r has no web-search capability; explanations "
            "will rely on parametric knowledge only",
            config.roles.searcher,
        )
    return ClientSet(
        generator=mk(
            config.roles.generator, temperature=config.generation_temperature
        ),
        searcher=mk(
            config.roles.searcher,
            temperature=config.generation_temperature,
            want_search=searcher_model.supports_search,
        ),
        test_model=mk(config.roles.test_model),
        judges=tuple(mk(a) for a in config.roles.judges),
    )


# ---------------------------------------------------------------------------
# the pipeline


class Pipeline:
    """Executes stages against one output directory."""

    def __init__(
        self,
        config: PipelineConfig,
        out_dir: PathLike,
        provider: Provider,
        *,
        resume: bool = False,
        library: Optional[PromptLibrary] = None,
    ):
        config.validate()
        self.config = config
        self.paths = RunPaths(out_dir)
        self.clients = build_clients(config, provider)
        self.library = library or default_library()
        self.resume = resume
        self.state = RunState.load(self.paths.state) if resume else RunState()
        self.source_digest = file_digest(config.static_dataset)
        self.config_digest = config.digest()

    # -- plumbing ----------------------------------------------------------

    def _pmap(self, fn: Callable[[T], R], xs: Sequence[T]) -> list[R]:
        """Map preserving input order; pooled when the config allows."""
        if self.config.max_workers <= 1 or len(xs) <= 1:
            return [fn(x) for x in xs]
        with ThreadPoolExecutor(max_workers=self.config.max_workers) as pool:
            return list(pool.map(fn, xs))

    def _manifest(
        self, stage: str, sampled_ids: Sequence[str], input_digest: Optional[str]
    ) -> Manifest:
        return Manifest(
            config=self.config.snapshot(),
            seed=self.config.seed,
            source_digest=self.source_digest,
            sampled_ids=tuple(sampled_ids),
            stage=stage,
            input_digest=input_digest,
        )

    def _require(self, path: Path, producer: str) -> str:
        """Digest of a required input artifact, or MissingInput."""
        if not path.exists():
            raise MissingInput(
                f"{path.name} not found in {self.paths.out_dir}; "
                f"run the {producer!r} stage first"
            )
        return file_digest(path)

    def _verify_link(self, manifest: Manifest, upstream: Path) -> None:
        """One hop of the traceability chain: recorded vs current digest."""
        actual = file_digest(upstream)
        if manifest.input_digest != actual:
            raise MissingInput(
                f"{upstream.name} changed after its downstream artifact was "
                f"built (recorded {str(manifest.input_digest)[:12]}..., found "
                f"{actual[:12]}...); re-run the earlier stages"
            )

    def _fresh(self, stage: str, input_digest: str) -> bool:
        if not self.resume:
            return False
        entry = self.state.completed.get(stage)
        if not entry or entry.get("input_digest") != input_digest:
            return False
        if entry.get("config_digest") != self.config_digest:
            # any knob change voids completed work; resume only continues
            # the exact run that was interrupted
            return False
        outputs = entry.get("outputs", {})
        if set(outputs) != set(ARTIFACTS[stage]):
            return False
        for name, digest in outputs.items():
            path = self.paths.out_dir / name
            if not path.exists() or file_digest(path) != digest:
                return False
        log.info("stage %s is up to date; skipping", stage)
        return True

    def _mark(self, stage: str, input_digest: str, outputs: Mapping[str, str]) -> None:
        self.state.completed[stage] = {
            "input_digest": input_digest,
            "config_digest": self.config_digest,
            "outputs": dict(outputs),
        }
        self.state.save(self.paths.state)

    # -- artifact loaders --------------------------------------------------

    def _load_sampled(self) -> tuple[Manifest, list[StaticItem]]:
        self._require(self.paths.sampled, "sample")
        manifest, records = read_records(self.paths.sampled)
        if manifest is None:
            raise MissingInput("sampled.jsonl lacks a manifest; re-run 'sample'")
        if manifest.source_digest != self.source_digest:
            raise MissingInput(
                "sampled.jsonl was drawn from a different source dataset; "
                "re-run 'sample'"
            )
        return manifest, [StaticItem.from_record(r) for r in records]

    def _load_annotations(self) -> tuple[Manifest, list[KnowledgeAnnotation]]:
        self._require(self.paths.annotations, "annotate")
        manifest, records = read_records(self.paths.annotations)
        if manifest is None:
            raise MissingInput("annotations.jsonl lacks a manifest; re-run 'annotate'")
        self._verify_link(manifest, self.paths.sampled)
        return manifest, [KnowledgeAnnotation.from_record(r) for r in records]

    def _load_explanations(self) -> tuple[Manifest, list[Explanation]]:
        self._require(self.paths.explanations, "explain")
        manifest, records = read_records(self.paths.explanations)
        if manifest is None:
            raise MissingInput("explanations.jsonl lacks a manifest; re-run 'explain'")
        self._verify_link(manifest, self.paths.annotations)
        return manifest, [Explanation.from_record(r) for r in records]

    def _contexts(
        self, questions: Sequence[GeneratedQuestion]
    ) -> dict[str, GenerationContext]:
        """Rebuild per-question rewrite contexts from stored artifacts."""
        _, items = self._load_sampled()
        _, annotations = self._load_annotations()
        _, explanations = self._load_explanations()
        items_by_id = {it.id: it for it in items}
        ann_by_id = {a.item_id: a for a in annotations}
        expl_by_key = {(e.item_id, e.knowledge_point): e for e in explanations}
        contexts = {}
        for q in questions:
            item = items_by_id.get(q.parent_id)
            ann = ann_by_id.get(q.parent_id)
            expl = expl_by_key.get((q.parent_id, q.knowledge_point))
            if item is None or ann is None or expl is None:
                raise MissingInput(
                    f"stored artifacts hold no context for question {q.id!r} "
                    f"(item {q.parent_id!r} / point {q.knowledge_point!r})"
                )
            contexts[q.id] = GenerationContext(
                item=item,
                knowledge_point=q.knowledge_point,
                main_idea=ann.main_idea,
                explanation=expl.body,
            )
        return contexts

    def _item_rng(self, item_id: str) -> random.Random:
        # seeded by run seed + item id: stable under resume and re-ordering
        return random.Random(f"{self.config.seed}/{item_id}")

    # -- stages ------------------------------------------------------------

    def run_stage(self, stage: str) -> None:
        if stage not in STAGES:
            raise InvalidArg(f"unknown stage {stage!r}; expected one of {STAGES}")
        getattr(self, f"_stage_{stage}")()

    def run(self) -> DynamicDataset:
        for stage in STAGES:
            self.run_stage(stage)
        return read_dynamic(self.paths.dynamic)

    def _stage_sample(self) -> None:
        if self._fresh("sample", self.source_digest):
            return
        items = load_static(self.config.static_dataset, self.config.static_format)
        picks = sample_indices(len(items), self.config.sample_count)
        sampled = [items[i] for i in picks]
        log.info(
            "sampled %d of %d items from %s",
            len(sampled), len(items), self.config.static_dataset,
        )
        manifest = self._manifest(
            "sample", [it.id for it in sampled], input_digest=None
        )
        digest = write_static(self.paths.sampled, sampled, manifest)
        self._mark("sample", self.source_digest, {"sampled.jsonl": digest})

    def _stage_annotate(self) -> None:
        in_digest = self._require(self.paths.sampled, "sample")
        if self._fresh("annotate", in_digest):
            return
        manifest_in, items = self._load_sampled()

        def one(item: StaticItem) -> KnowledgeAnnotation:
            return annotate_item(
                item,
                self.clients.generator,
                k_num=self.config.knowledge_points_per_item,
                rng=self._item_rng(item.id),
                library=self.library,
                retries=self.config.retries,
            )

        annotations = self._pmap(one, items)
        log.info("annotated %d items", len(annotations))
        manifest = self._manifest(
            "annotate", manifest_in.sampled_ids, input_digest=in_digest
        )
        digest = write_records(
            self.paths.annotations,
            (a.to_record() for a in annotations),
            manifest,
        )
        self._mark("annotate", in_digest, {"annotations.jsonl": digest})

    def _stage_explain(self) -> None:
        in_digest = self._require(self.paths.annotations, "annotate")
        if self._fresh("explain", in_digest):
            return
        _, items = self._load_sampled()
        manifest_in, annotations = self._load_annotations()
        items_by_id = {it.id: it for it in items}

        pairs = []
        for ann in annotations:
            item = items_by_id.get(ann.item_id)
            if item is None:
                raise MissingInput(
                    f"annotations reference item {ann.item_id!r} missing "
                    "from sampled.jsonl"
                )
            for kp in ann.selected_points:
                pairs.append((item, kp, ann.main_idea))

        def one(pair: tuple[StaticItem, str, str]) -> Explanation:
            item, kp, idea = pair
            return explain_knowledge_point(
                item,
                kp,
                idea,
                self.clients.searcher,
                want_search=self.clients.searcher.want_search,
                library=self.library,
                retries=self.config.retries,
                max_chars=self.config.max_explanation_chars,
            )

        explanations = self._pmap(one, pairs)
        log.info("explained %d knowledge points", len(explanations))
        manifest = self._manifest(
            "explain", manifest_in.sampled_ids, input_digest=in_digest
        )
        digest = write_records(
            self.paths.explanations,
            (e.to_record() for e in explanations),
            manifest,
        )
        self._mark("explain", in_digest, {"explanations.jsonl": digest})

    def _stage_generate(self) -> None:
        in_digest = self._require(self.paths.explanations, "explain")
        if self._fresh("generate", in_digest):
            return
        _, items = self._load_sampled()
        _, annotations = self._load_annotations()
        manifest_in, explanations = self._load_explanations()
        items_by_id = {it.id: it for it in items}
        expl_by_key = {(e.item_id, e.knowledge_point): e for e in explanations}

        tasks = []  # (context, id prefix), one per (item, selected point)
        for ann in annotations:
            item = items_by_id[ann.item_id]
            for j, kp in enumerate(ann.selected_points):
                expl = expl_by_key.get((ann.item_id, kp))
                if expl is None:
                    raise MissingInput(
                        f"no explanation stored for item {ann.item_id!r} "
                        f"point {kp!r}; re-run 'explain'"
                    )
                context = GenerationContext(
                    item=item,
                    knowledge_point=kp,
                    main_idea=ann.main_idea,
                    explanation=expl.body,
                )
                tasks.append((context, f"{item.id}/kp{j}"))

        def one(task: tuple[GenerationContext, str]) -> list[GeneratedQuestion]:
            context, prefix = task
            batch = [
                design_question(
                    context,
                    self.clients.generator,
                    question_id=f"{prefix}/std",
                    library=self.library,
                    retries=self.config.retries,
                    similarity_threshold=self.config.similarity_threshold,
                )
            ]
            if self.config.bloom_mode:
                batch.extend(
                    design_bloom_questions(
                        context,
                        self.clients.generator,
                        id_prefix=prefix,
                        library=self.library,
                        retries=self.config.retries,
                        similarity_threshold=self.config.similarity_threshold,
                    )
                )
            return batch

        questions = [q for batch in self._pmap(one, tasks) for q in batch]
        log.info(
            "generated %d questions from %d knowledge points",
            len(questions), len(tasks),
        )
        manifest = self._manifest(
            "generate", manifest_in.sampled_ids, input_digest=in_digest
        )
        dataset = DynamicDataset(questions=tuple(questions), manifest=manifest)
        digest = write_records(
            self.paths.generated,
            (q.to_record() for q in dataset.questions),
            manifest,
        )
        self._mark("generate", in_digest, {"generated.jsonl": digest})

    def _baseline(self, items: Sequence[StaticItem]):
        """Alignment target: configured precision, or the choice items."""
        if self.config.target_precision is not None:
            return self.config.target_precision
        choice = [it for it in items if it.options]
        if not choice:
            raise ConfigError(
                "source items are free-answer, so no baseline precision can "
                "be measured; set target_precision in the config"
            )
        return choice

    def _stage_align(self) -> None:
        in_digest = self._require(self.paths.generated, "generate")
        if self._fresh("align", in_digest):
            return
        dataset = read_dynamic(self.paths.generated)
        self._verify_link(dataset.manifest, self.paths.explanations)
        _, items = self._load_sampled()
        contexts = self._contexts(dataset.questions)

        not_converged = False
        try:
            outcome = align(
                dataset,
                self._baseline(items),
                self.clients.test_model,
                self.clients.generator,
                contexts=contexts,
                epsilon=self.config.epsilon,
                max_iterations=self.config.max_iterations,
                library=self.library,
                max_workers=self.config.max_workers,
                retries=self.config.retries,
                similarity_threshold=self.config.similarity_threshold,
            )
            final, state, rows = outcome.dataset, outcome.state, outcome.log
        except NotConverged as exc:
            log.warning("alignment did not converge: %s", exc)
            final, state, rows = exc.dataset, exc.state, tuple(exc.log)
            not_converged = True

        manifest = self._manifest(
            "align", final.manifest.sampled_ids, input_digest=in_digest
        )
        digest_ds = write_records(
            self.paths.aligned,
            (q.to_record() for q in final.questions),
            manifest,
        )
        digest_log = write_jsonl(
            self.paths.alignment_log, [*rows, state.to_record()]
        )
        self.state.not_converged = not_converged
        self._mark(
            "align",
            in_digest,
            {"aligned.jsonl": digest_ds, "alignment_log.jsonl": digest_log},
        )

    def _stage_check(self) -> None:
        in_digest = self._require(self.paths.aligned, "align")
        if self._fresh("check", in_digest):
            return
        dataset = read_dynamic(self.paths.aligned)
        self._verify_link(dataset.manifest, self.paths.generated)
        contexts = self._contexts(dataset.questions)

        result = check_dataset(
            dataset,
            list(self.clients.judges),
            self.clients.generator,
            contexts=contexts,
            max_regen=self.config.max_regen,
            library=self.library,
            max_workers=self.config.max_workers,
            retries=self.config.retries,
            similarity_threshold=self.config.similarity_threshold,
        )
        log.info(
            "panel kept %d of %d questions (first-vote error rate %.3f)",
            len(result.dataset.questions), len(dataset.questions),
            result.error_rate,
        )
        manifest = self._manifest(
            "check", dataset.manifest.sampled_ids, input_digest=in_digest
        )
        digest_ds = write_records(
            self.paths.dynamic,
            (q.to_record() for q in result.dataset.questions),
            manifest,
        )
        summary = {
            "record_type": "check_summary",
            "error_rate": result.error_rate,
            "dropped_ids": list(result.dropped_ids),
            "kept": len(result.dataset.questions),
            "total": len(dataset.questions),
        }
        digest_report = write_jsonl(
            self.paths.vote_report,
            [*(r.to_record() for r in result.report), summary],
        )
        self._mark(
            "check",
            in_digest,
            {"dynamic.jsonl": digest_ds, "vote_report.jsonl": digest_report},
        )


@dataclass(frozen=True)
class PipelineResult:
    dataset: DynamicDataset
    not_converged: bool
    paths: RunPaths


def run_pipeline(
    config: PipelineConfig,
    out_dir: PathLike,
    *,
    provider: Optional[Provider] = None,
    record: Optional[PathLike] = None,
    replay: Optional[PathLike] = None,
    resume: bool = False,
    library: Optional[PromptLibrary] = None,
) -> PipelineResult:
    """Full run: every stage in order, returning the final dataset.

    Equivalent to invoking the stage commands in sequence on the same
    output directory, seed, and cassette.
    """
    if provider is None:
        provider = build_provider(config, record=record, replay=replay)
    pipe = Pipeline(config, out_dir, provider, resume=resume, library=library)
    dataset = pipe.run()
    return PipelineResult(
        dataset=dataset, not_converged=pipe.state.not_converged, paths=pipe.paths
    )


# ---------------------------------------------------------------------------
# evaluation and reporting over stored artifacts


def _load_evaluable(path: PathLike) -> list:
    """Items from a dataset file: generated questions or source items."""
    _, records = read_records(path)
    if not records:
        raise EmptyDataset(f"{path} holds no records")
    kinds = {r.get("record_type") for r in records}
    if kinds == {"question"}:
        return [GeneratedQuestion.from_record(r) for r in records]
    return [StaticItem.from_record(r) for r in records]


def evaluate_artifact(
    dataset_path: PathLike,
    client: ChatClient,
    *,
    group: str,
    out_path: Optional[PathLike] = None,
    library: Optional[PromptLibrary] = None,
    max_workers: int = 1,
) -> list[dict]:
    """Test-model pass over one dataset file, producing verdict rows.

    Choice-style entries are scored by extracted letter; free-answer
    items by text overlap with the reference.  The returned rows end
    with one summary row carrying the group label used by reports.
    """
    objs = _load_evaluable(dataset_path)
    choice = [o for o in objs if o.options]
    free = [o for o in objs if not o.options]
    rows: list[dict] = []
    summary: dict = {
        "record_type": "eval_summary",
        "group": group,
        "total": len(objs),
    }
    if choice:
        result = evaluate_dataset(
            choice, client, library=library, max_workers=max_workers
        )
        rows.extend(v.to_record() for v in result.verdicts)
        summary["choice_count"] = len(choice)
        summary["precision"] = result.precision
    if free:
        verdicts = evaluate_free_answers(
            free, client, library=library, max_workers=max_workers
        )
        rows.extend(v.to_record() for v in verdicts)
        summary["free_count"] = len(free)
        summary["mean_similarity"] = (
            math.fsum(v.similarity for v in verdicts) / len(verdicts)
        )
    rows.append(summary)
    if out_path is not None:
        write_jsonl(out_path, rows)
    return rows


def load_eval_results(path: PathLike) -> tuple[str, dict]:
    """Read one stored evaluation file -> (group, {question_id: result}).

    Results are booleans for choice verdicts, floats for free-answer
    similarities.
    """
    _, records = read_records(path)
    group = None
    results: dict = {}
    for idx, rec in enumerate(records):
        kind = rec.get("record_type")
        if kind == "eval_summary":
            group = rec.get("group")
        elif kind == "verdict":
            qid = rec.get("question_id")
            if qid is None:
                raise MalformedRecord(idx + 1, "verdict row lacks question_id")
            if "correct" in rec:
                results[qid] = bool(rec["correct"])
            elif "similarity" in rec:
                results[qid] = float(rec["similarity"])
            else:
                raise MalformedRecord(
                    idx + 1, "verdict row has neither correct nor similarity"
                )
    if group is None:
        raise MalformedRecord(0, f"{path} has no eval_summary row")
    if not results:
        raise EmptyDataset(f"{path} holds no verdict rows")
    return group, results


def report_from_files(
    clean_paths: Sequence[PathLike],
    contaminated_paths: Sequence[PathLike],
    *,
    out_path: Optional[PathLike] = None,
    stream=None,
) -> list[ReportRow]:
    """Contamination report over stored evaluation outputs.

    Groups are taken from each file's summary row; both sides must cover
    the same groups and ids.  Renders the table and optionally persists
    the rows as JSONL.
    """

    def collect(paths: Sequence[PathLike]) -> dict:
        groups: dict = {}
        for p in paths:
            group, results = load_eval_results(p)
            if group in groups:
                raise InvalidArg(f"group {group!r} appears in two files")
            groups[group] = results
        return groups

    rows = contamination_report(collect(clean_paths), collect(contaminated_paths))
    render_report(rows, out=stream)
    if out_path is not None:
        write_jsonl(out_path, (r.to_record() for r in rows))
    return rows


def safe_name(label: str) -> str:
    """Filesystem-safe version of a group label."""
    return re.sub(r"[^\w.-]+", "_", label).strip("_") or "group"
