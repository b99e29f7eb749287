"""Reading and writing the JSONL artifact files.

Every artifact is UTF-8 JSONL with one record per line, serialized
canonically (sorted keys, compact separators) so identical logical
content is identical on disk.  Files produced by pipeline stages start
with one manifest record tagged "record_type": "manifest"; plain source
datasets may omit it.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from .core import (
    DynamicDataset,
    GeneratedQuestion,
    Manifest,
    StaticItem,
    canonical_dumps,
    check_unique_ids,
    digest_bytes,
)
from .errors import (
    DuplicateId,
    EmptyDataset,
    EmptySample,
    InvalidArg,
    InvariantViolation,
    IoFailure,
    MalformedRecord,
)
from .metrics import LogProbSample

PathLike = Union[str, Path]


def read_records(path: PathLike) -> tuple[Optional[Manifest], list[dict]]:
    """Parse a JSONL file into (manifest or None, data records).

    The manifest, when present, must be the first line.  Raises
    MalformedRecord with a 1-based line number on any bad line.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    manifest = None
    records = []
    for line_no, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict):
            raise MalformedRecord(line_no, "record is not an object")
        if rec.get("record_type") == "manifest":
            if line_no != 1:
                raise MalformedRecord(line_no, "manifest must be the first line")
            try:
                manifest = Manifest.from_record(rec)
            except InvariantViolation as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            continue
        records.append(rec)
    return manifest, records


def write_records(
    path: PathLike,
    records: Iterable[dict],
    manifest: Optional[Manifest] = None,
) -> str:
    """Write records canonically, manifest first; returns the file digest."""
    lines = []
    if manifest is not None:
        lines.append(canonical_dumps(manifest.to_record()))
    lines.extend(canonical_dumps(r) for r in records)
    data = ("\n".join(lines) + "\n").encode("utf-8")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return digest_bytes(data)


def file_digest(path: PathLike) -> str:
    try:
        return digest_bytes(Path(path).read_bytes())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def load_static(path: PathLike, fmt: str = "jsonl") -> list[StaticItem]:
    """Load a source benchmark file.

    fmt "jsonl": one item object per line (a leading manifest line from a
    sampling stage is tolerated and skipped).  fmt "json": a single JSON
    array of item objects.
    """
    if fmt == "jsonl":
        _, records = read_records(path)
        offset = 1  # line numbers in errors; manifest may shift them by one
    elif fmt == "json":
        try:
            raw = Path(path).read_text("utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        try:
            records = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(exc.lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(records, list):
            raise MalformedRecord(1, "top-level JSON value must be an array")
        offset = 1
    else:
        raise InvalidArg(f"unknown dataset format: {fmt!r}")

    items = []
    for idx, rec in enumerate(records):
        try:
            items.append(StaticItem.from_record(rec))
        except InvariantViolation as exc:
            raise MalformedRecord(idx + offset, str(exc)) from exc
    if not items:
        raise EmptyDataset(f"{path} holds no items")
    try:
        check_unique_ids(it.id for it in items)
    except DuplicateId:
        raise
    return items


def write_static(
    path: PathLike, items: Sequence[StaticItem], manifest: Optional[Manifest] = None
) -> str:
    return write_records(path, (it.to_record() for it in items), manifest)


def write_dynamic(path: PathLike, dataset: DynamicDataset) -> str:
    """Persist a synthesized dataset: manifest line, then question lines."""
    return write_records(
        path, (q.to_record() for q in dataset.questions), dataset.manifest
    )


def read_dynamic(path: PathLike) -> DynamicDataset:
    manifest, records = read_records(path)
    if manifest is None:
        raise MalformedRecord(1, "dynamic dataset must start with a manifest line")
    questions = []
    for idx, rec in enumerate(records):
        try:
            questions.append(GeneratedQuestion.from_record(rec))
        except InvariantViolation as exc:
            raise MalformedRecord(idx + 2, str(exc)) from exc
    try:
        return DynamicDataset(questions=tuple(questions), manifest=manifest)
    except (DuplicateId, InvariantViolation) as exc:
        raise MalformedRecord(0, str(exc)) from exc


def dataset_digest(path: PathLike) -> str:
    """Digest of the raw dataset bytes, for manifests and resume checks."""
    return file_digest(path)


def write_jsonl(path: PathLike, objs: Iterable[Any]) -> str:
    """Canonical JSONL without a manifest (logs, reports, verdicts)."""
    return write_records(path, objs, manifest=None)


def load_logprob_samples(path: PathLike) -> list[LogProbSample]:
    """Read token log-probability rows: {sample_id, token_log2_probs}."""
    _, records = read_records(path)
    samples = []
    for idx, rec in enumerate(records):
        line_no = idx + 1
        if "sample_id" not in rec or "token_log2_probs" not in rec:
            raise MalformedRecord(
                line_no, "row needs sample_id and token_log2_probs"
            )
        probs = rec["token_log2_probs"]
        if not isinstance(probs, list):
            raise MalformedRecord(line_no, "token_log2_probs must be a list")
        try:
            samples.append(
                LogProbSample(
                    sample_id=str(rec["sample_id"]),
                    token_log2_probs=tuple(float(p) for p in probs),
                )
            )
        except (TypeError, ValueError, EmptySample, InvalidArg) as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
    if not samples:
        raise EmptyDataset(f"{path} holds no log-probability rows")
    return samples
