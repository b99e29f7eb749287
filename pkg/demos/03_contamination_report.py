"""
Reading a contamination signal out of two evaluations
=====================================================

The report compares one model's accuracy on a benchmark under two
conditions: a clean reference run and a suspect run.  A model that
memorized the static benchmark jumps on it but not on the regenerated
dynamic set — that asymmetric jump is the signal.

Run with:  python3 demos/03_contamination_report.py
"""

import tempfile
from pathlib import Path

from dynbench import report_from_files, write_jsonl

workdir = Path(tempfile.mkdtemp(prefix="dynbench-demo-"))


# Stored evaluation files carry one verdict row per question plus a
# summary row naming the group; this is exactly what `dynbench eval`
# writes, fabricated here for a self-contained demo.
def write_eval(path, group, hits, total=20):
    rows = [
        {"record_type": "verdict", "question_id": f"{group}-{i:02d}", "correct": i < hits}
        for i in range(total)
    ]
    rows.append({"record_type": "eval_summary", "group": group, "total": total})
    write_jsonl(path, rows)


# The clean reference model lands 11/20 on both datasets.  The suspect
# model is suspiciously strong on the static set (19/20) yet no better
# than the reference on the regenerated dynamic set (12/20): it has seen
# the static questions before, not learned the material.
write_eval(workdir / "cln_static.jsonl", "static_set", hits=11)
write_eval(workdir / "cln_dynamic.jsonl", "dynamic_set", hits=11)
write_eval(workdir / "ctm_static.jsonl", "static_set", hits=19)
write_eval(workdir / "ctm_dynamic.jsonl", "dynamic_set", hits=12)

rows = report_from_files(
    clean_paths=[workdir / "cln_static.jsonl", workdir / "cln_dynamic.jsonl"],
    contaminated_paths=[workdir / "ctm_static.jsonl", workdir / "ctm_dynamic.jsonl"],
    out_path=workdir / "report.jsonl",
)

print()
for row in rows:
    verdict = "flagged" if row.flagged else "clean"
    print(f"{row.group}: CLN {row.cln:.2f} -> CTM {row.ctm:.2f} "
          f"(delta {row.delta:+.2f}) => {verdict}")

print()
print("rows persisted to", workdir / "report.jsonl")
