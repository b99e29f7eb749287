"""Stage orchestration: artifact chaining, resume, evaluation, reports."""

import dataclasses
import io
import json

import pytest

from dynbench import (
    ConfigError,
    EmptyDataset,
    IdMismatch,
    MalformedRecord,
    MissingInput,
    ModelConfig,
    RolesConfig,
    ScriptedProvider,
    StaticItem,
)
from dynbench.dataset_io import file_digest, read_records, write_jsonl, write_static
from dynbench.pipeline import (
    ARTIFACTS,
    STAGES,
    Pipeline,
    RunPaths,
    build_provider,
    evaluate_artifact,
    load_eval_results,
    report_from_files,
    run_pipeline,
    safe_name,
)
from dynbench.provider import (
    CachingProvider,
    RecordingProvider,
    ReplayProvider,
    RoutingProvider,
)

from helpers import (
    LAYERS,
    make_config,
    make_items,
    oracle_responder,
    scripted_client,
    write_eval_file,
)

ARTIFACT_NAMES = [name for stage in STAGES for name in ARTIFACTS[stage]]


def artifact_bytes(out_dir):
    return {name: (out_dir / name).read_bytes() for name in ARTIFACT_NAMES}


def fresh_provider():
    return ScriptedProvider(oracle_responder)


class TestFullRun:
    def test_produces_all_artifacts(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        result = run_pipeline(config, out, provider=fresh_provider())
        for name in ARTIFACT_NAMES:
            assert (out / name).exists(), name
        assert result.not_converged is False
        assert result.paths.out_dir == out
        # 3 sampled items x 2 points x (1 standard + 6 levels)
        assert len(result.dataset.questions) == 42

    def test_question_families_complete(self, tmp_path, static_file):
        config = make_config(static_file)
        result = run_pipeline(config, tmp_path / "run", provider=fresh_provider())
        by_prefix = {}
        for q in result.dataset.questions:
            prefix, kind = q.id.rsplit("/", 1)
            by_prefix.setdefault(prefix, set()).add(kind)
        assert len(by_prefix) == 6  # 3 items x 2 selected points
        expected = {"std"} | {layer.lower() for layer in LAYERS}
        for prefix, kinds in by_prefix.items():
            assert kinds == expected, prefix

    def test_stage_sequence_matches_single_run(self, tmp_path, static_file):
        config = make_config(static_file)
        out_a = tmp_path / "whole"
        out_b = tmp_path / "steps"
        run_pipeline(config, out_a, provider=fresh_provider())
        pipe = Pipeline(config, out_b, fresh_provider())
        for stage in STAGES:
            pipe.run_stage(stage)
        assert artifact_bytes(out_a) == artifact_bytes(out_b)

    def test_rerun_is_byte_stable(self, tmp_path, static_file):
        config = make_config(static_file)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run_pipeline(config, out_a, provider=fresh_provider())
        run_pipeline(config, out_b, provider=fresh_provider())
        assert artifact_bytes(out_a) == artifact_bytes(out_b)

    def test_unknown_stage_rejected(self, tmp_path, static_file):
        from dynbench import InvalidArg

        pipe = Pipeline(make_config(static_file), tmp_path / "x", fresh_provider())
        with pytest.raises(InvalidArg, match="deploy"):
            pipe.run_stage("deploy")


class TestResume:
    def test_interrupted_run_resumes_to_identical_bytes(self, tmp_path, static_file):
        config = make_config(static_file)
        reference = tmp_path / "reference"
        run_pipeline(config, reference, provider=fresh_provider())

        out = tmp_path / "interrupted"
        pipe = Pipeline(config, out, fresh_provider())
        for stage in ("sample", "annotate", "explain"):
            pipe.run_stage(stage)
        # the process "dies" here; a new one picks the directory back up
        result = run_pipeline(config, out, provider=fresh_provider(), resume=True)
        assert artifact_bytes(reference) == artifact_bytes(out)
        assert len(result.dataset.questions) == 42

    def test_resume_skips_completed_stages(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        replayer = fresh_provider()
        run_pipeline(config, out, provider=replayer, resume=True)
        assert replayer.requests == []  # everything was up to date

    def test_resume_reruns_when_input_digest_moved(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        # a different sample invalidates every downstream stage
        reconfigured = dataclasses.replace(config, sample_count=2)
        provider = fresh_provider()
        result = run_pipeline(reconfigured, out, provider=provider, resume=True)
        assert len(result.dataset.questions) == 28  # 2 items x 2 points x 7
        assert provider.requests != []

    def test_resume_survives_cache_relocation(self, tmp_path, static_file):
        """Moving the response cache is not a behavioral change."""
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        relocated = dataclasses.replace(config, cache_dir=str(tmp_path / "cache"))
        provider = fresh_provider()
        run_pipeline(relocated, out, provider=provider, resume=True)
        assert provider.requests == []

    def test_without_resume_stages_recompute(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        provider = fresh_provider()
        run_pipeline(config, out, provider=provider, resume=False)
        assert provider.requests != []  # recomputed, even if bytes match


class TestChainIntegrity:
    def test_manifest_chain_links_every_artifact(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        paths = RunPaths(out)

        chain = [
            (paths.sampled, None, "sample"),
            (paths.annotations, paths.sampled, "annotate"),
            (paths.explanations, paths.annotations, "explain"),
            (paths.generated, paths.explanations, "generate"),
            (paths.aligned, paths.generated, "align"),
            (paths.dynamic, paths.aligned, "check"),
        ]
        for artifact, upstream, stage in chain:
            manifest, _ = read_records(artifact)
            assert manifest.stage == stage
            assert manifest.seed == config.seed
            assert manifest.source_digest == file_digest(static_file)
            if upstream is None:
                assert manifest.input_digest is None
            else:
                assert manifest.input_digest == file_digest(upstream)

    def test_side_logs_carry_terminal_summaries(self, tmp_path, static_file):
        out = tmp_path / "run"
        run_pipeline(make_config(static_file), out, provider=fresh_provider())
        log_rows = [
            json.loads(line)
            for line in (out / "alignment_log.jsonl").read_text().splitlines()
        ]
        assert log_rows[-1]["record_type"] == "alignment_state"
        vote_rows = [
            json.loads(line)
            for line in (out / "vote_report.jsonl").read_text().splitlines()
        ]
        assert vote_rows[-1]["record_type"] == "check_summary"
        assert vote_rows[-1]["kept"] == 42

    def test_missing_upstream_names_the_stage_to_run(self, tmp_path, static_file):
        pipe = Pipeline(make_config(static_file), tmp_path / "x", fresh_provider())
        with pytest.raises(MissingInput, match="'sample'"):
            pipe.run_stage("annotate")

    def test_edited_upstream_is_detected(self, tmp_path, static_file):
        config = make_config(static_file)
        out = tmp_path / "run"
        run_pipeline(config, out, provider=fresh_provider())
        paths = RunPaths(out)
        manifest, records = read_records(paths.sampled)
        items = [StaticItem.from_record(r) for r in records]
        items[0] = dataclasses.replace(
            items[0], question=items[0].question + " (edited)"
        )
        write_static(paths.sampled, items, manifest)
        pipe = Pipeline(config, out, fresh_provider())
        with pytest.raises(MissingInput, match="changed after"):
            pipe.run_stage("explain")

    def test_sample_from_other_source_is_rejected(self, tmp_path, static_file):
        out = tmp_path / "run"
        pipe = Pipeline(make_config(static_file), out, fresh_provider())
        pipe.run_stage("sample")
        other = tmp_path / "other.jsonl"
        write_static(other, make_items(9))
        with pytest.raises(MissingInput, match="different source"):
            Pipeline(make_config(other), out, fresh_provider()).run_stage("annotate")


class TestNotConvergedRun:
    def test_artifacts_persist_and_check_still_runs(self, tmp_path, static_file):
        # zero adjustment rounds: the round-0 questions cannot reach the
        # measured baseline, so alignment stops without converging
        config = make_config(static_file, max_iterations=0)
        out = tmp_path / "run"
        result = run_pipeline(config, out, provider=fresh_provider())
        assert result.not_converged is True
        assert (out / "aligned.jsonl").exists()
        assert (out / "dynamic.jsonl").exists()
        log_rows = [
            json.loads(line)
            for line in (out / "alignment_log.jsonl").read_text().splitlines()
        ]
        assert [r["action"] for r in log_rows[:-1]] == ["stop"]
        state_doc = json.loads((out / "pipeline_state.json").read_text())
        assert state_doc["not_converged"] is True
        # the panel still reviewed the unconverged dataset
        assert len(result.dataset.questions) == 42


class TestBuildProvider:
    def live_config(self, static_file, **overrides):
        aliases = ("gen", "search", "test", "j1", "j2", "j3")
        models = {
            a: ModelConfig(
                alias=a,
                model=f"m-{a}",
                endpoint="https://api.invalid/v1",
                api_key_env="DYNBENCH_TEST_KEY",
                supports_search=(a == "search"),
            )
            for a in aliases
        }
        roles = RolesConfig(
            generator="gen", searcher="search", test_model="test",
            judges=("j1", "j2", "j3"),
        )
        return make_config(static_file, models=models, roles=roles, **overrides)

    def test_record_and_replay_conflict(self, tmp_path, static_file):
        config = make_config(static_file)
        with pytest.raises(ConfigError, match="mutually exclusive"):
            build_provider(
                config, record=tmp_path / "a.jsonl", replay=tmp_path / "b.jsonl"
            )

    def test_replay_short_circuits_everything(self, tmp_path, static_file):
        cassette = tmp_path / "cassette.jsonl"
        cassette.write_text("", encoding="utf-8")
        provider = build_provider(make_config(static_file), replay=cassette)
        assert isinstance(provider, ReplayProvider)

    def test_live_stack_routes_by_model_id(self, tmp_path, static_file, monkeypatch):
        monkeypatch.setenv("DYNBENCH_TEST_KEY", "k-fixture")
        provider = build_provider(self.live_config(static_file))
        assert isinstance(provider, RoutingProvider)

    def test_cache_and_recorder_wrap_the_stack(self, tmp_path, static_file, monkeypatch):
        monkeypatch.setenv("DYNBENCH_TEST_KEY", "k-fixture")
        config = self.live_config(static_file, cache_dir=str(tmp_path / "cache"))
        provider = build_provider(config, record=tmp_path / "cassette.jsonl")
        assert isinstance(provider, RecordingProvider)

    def test_cache_dir_alone_wraps_router(self, tmp_path, static_file, monkeypatch):
        monkeypatch.setenv("DYNBENCH_TEST_KEY", "k-fixture")
        config = self.live_config(static_file, cache_dir=str(tmp_path / "cache"))
        assert isinstance(build_provider(config), CachingProvider)

    def test_missing_credentials_fail_at_wiring_time(self, tmp_path, static_file, monkeypatch):
        monkeypatch.delenv("DYNBENCH_TEST_KEY", raising=False)
        with pytest.raises(ConfigError, match="DYNBENCH_TEST_KEY"):
            build_provider(self.live_config(static_file))


class TestEvaluateArtifact:
    def test_choice_dataset_scores_by_letter(self, tmp_path):
        data = tmp_path / "static.jsonl"
        write_static(data, make_items(4))
        out = tmp_path / "eval.jsonl"
        rows = evaluate_artifact(
            data,
            scripted_client(lambda r: "Answer: B"),
            group="static",
            out_path=out,
        )
        summary = rows[-1]
        assert summary["record_type"] == "eval_summary"
        assert summary["group"] == "static"
        assert summary["choice_count"] == 4
        assert summary["precision"] == 1.0
        assert out.exists()

    def test_generated_questions_load_as_questions(self, tmp_path, static_file):
        config = make_config(static_file)
        run_dir = tmp_path / "run"
        run_pipeline(config, run_dir, provider=fresh_provider())
        rows = evaluate_artifact(
            run_dir / "dynamic.jsonl",
            scripted_client(oracle_responder),
            group="dynamic",
        )
        assert rows[-1]["choice_count"] == 42
        assert rows[-1]["precision"] == 1.0  # rewritten questions are solvable

    def test_mixed_kinds_report_both_scores(self, tmp_path):
        data = tmp_path / "mixed.jsonl"
        items = make_items(2) + [
            StaticItem(id="f1", kind="qa", question="why?", answer="because of rain")
        ]
        write_static(data, items)

        def respond(request):
            prompt = request.messages[0].content
            return "because of rain" if "why?" in prompt else "Answer: B"

        rows = evaluate_artifact(data, scripted_client(respond), group="mixed")
        summary = rows[-1]
        assert summary["choice_count"] == 2
        assert summary["free_count"] == 1
        assert summary["precision"] == 1.0
        assert summary["mean_similarity"] == 1.0

    def test_empty_artifact_rejected(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        write_jsonl(empty, [])
        with pytest.raises(EmptyDataset):
            evaluate_artifact(empty, scripted_client(lambda r: "B"), group="g")


class TestEvalResults:
    def test_round_trip_through_file(self, tmp_path):
        data = tmp_path / "static.jsonl"
        write_static(data, make_items(4))
        out = tmp_path / "eval.jsonl"
        evaluate_artifact(
            data, scripted_client(lambda r: "Answer: B"), group="static", out_path=out
        )
        group, results = load_eval_results(out)
        assert group == "static"
        assert results == {f"item-{i:03d}": True for i in range(1, 5)}

    def test_missing_summary_row(self, tmp_path):
        path = tmp_path / "eval.jsonl"
        write_jsonl(
            path, [{"record_type": "verdict", "question_id": "q", "correct": True}]
        )
        with pytest.raises(MalformedRecord, match="eval_summary"):
            load_eval_results(path)

    def test_no_verdicts(self, tmp_path):
        path = tmp_path / "eval.jsonl"
        write_jsonl(path, [{"record_type": "eval_summary", "group": "g", "total": 0}])
        with pytest.raises(EmptyDataset):
            load_eval_results(path)

    def test_verdict_without_id(self, tmp_path):
        path = tmp_path / "eval.jsonl"
        write_jsonl(
            path,
            [
                {"record_type": "verdict", "correct": True},
                {"record_type": "eval_summary", "group": "g", "total": 1},
            ],
        )
        with pytest.raises(MalformedRecord, match="question_id"):
            load_eval_results(path)


class TestReportFromFiles:
    def eval_files(self, tmp_path):
        ids = [f"s{i}" for i in range(4)]
        half = {q: i < 2 for i, q in enumerate(ids)}
        full = {q: True for q in ids}
        paths = {}
        for name, group, results in [
            ("clean_static", "static", half),
            ("clean_dynamic", "dynamic", half),
            ("cont_static", "static", full),
            ("cont_dynamic", "dynamic", half),
        ]:
            paths[name] = tmp_path / f"{name}.jsonl"
            write_eval_file(paths[name], group, results)
        return paths

    def test_flags_only_the_leaking_group(self, tmp_path):
        paths = self.eval_files(tmp_path)
        stream = io.StringIO()
        out = tmp_path / "report.jsonl"
        rows = report_from_files(
            [paths["clean_static"], paths["clean_dynamic"]],
            [paths["cont_static"], paths["cont_dynamic"]],
            out_path=out,
            stream=stream,
        )
        by_group = {r.group: r for r in rows}
        assert by_group["static"].delta == pytest.approx(0.5)
        assert by_group["static"].flagged is True
        assert by_group["dynamic"].delta == pytest.approx(0.0)
        assert by_group["dynamic"].flagged is False
        table = stream.getvalue()
        assert table.count("CONTAMINATED") == 1
        persisted = [json.loads(line) for line in out.read_text().splitlines()]
        assert {r["group"] for r in persisted} == {"static", "dynamic"}

    def test_duplicate_group_across_files(self, tmp_path):
        from dynbench import InvalidArg

        paths = self.eval_files(tmp_path)
        with pytest.raises(InvalidArg, match="two files"):
            report_from_files(
                [paths["clean_static"], paths["cont_static"]],
                [paths["cont_dynamic"]],
            )

    def test_id_mismatch_between_sides(self, tmp_path):
        paths = self.eval_files(tmp_path)
        write_eval_file(
            tmp_path / "cont_static.jsonl", "static", {"s0": True, "s1": True}
        )
        with pytest.raises(IdMismatch):
            report_from_files(
                [paths["clean_static"], paths["clean_dynamic"]],
                [paths["cont_static"], paths["cont_dynamic"]],
                stream=io.StringIO(),
            )

    def test_group_sets_must_match(self, tmp_path):
        paths = self.eval_files(tmp_path)
        with pytest.raises(IdMismatch, match="group sets"):
            report_from_files(
                [paths["clean_static"], paths["clean_dynamic"]],
                [paths["cont_static"]],
                stream=io.StringIO(),
            )


class TestSafeName:
    def test_replaces_awkward_characters(self):
        assert safe_name("dynamic set!") == "dynamic_set"
        assert safe_name("v1.2-final") == "v1.2-final"
        assert safe_name("///") == "group"
