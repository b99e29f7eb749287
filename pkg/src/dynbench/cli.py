"""Command-line entry point.

One subcommand per pipeline stage plus `run` (all stages), `eval`
(score a dataset file with the test model), and `report` (contamination
table over stored evaluation outputs).

Exit codes: 0 success; 2 configuration or usage error; 3 stage failure;
4 alignment hit its iteration cap (outputs are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_config
from .core import canonical_dumps
from .errors import ConfigError, DynbenchError
from .pipeline import (
    STAGES,
    Pipeline,
    build_clients,
    build_provider,
    evaluate_artifact,
    report_from_files,
    safe_name,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_NOT_CONVERGED = 4


def _seed(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {value!r}")
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit int")
    return n


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", required=True, metavar="PATH",
                    help="YAML run configuration")
    sp.add_argument("--seed", type=_seed, default=None, metavar="U64",
                    help="override the configured seed")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--replay", metavar="CASSETTE",
                      help="serve all model calls from a recorded cassette")
    mode.add_argument("--record", metavar="CASSETTE",
                      help="pass calls through and record them to a cassette")
    sp.add_argument("--out", default="out", metavar="DIR",
                    help="artifact directory (default: ./out)")
    sp.add_argument("--resume", action="store_true",
                    help="skip stages whose outputs are already up to date")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynbench",
        description="Synthesize and audit dynamic evaluation datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute every stage in order")
    _add_common(run_p)
    run_p.add_argument("--stage", choices=STAGES, default=None,
                       help="run a single stage instead of the full sequence")

    stage_help = {
        "sample": "draw the evenly spaced slice of the source dataset",
        "annotate": "extract knowledge points and main ideas",
        "explain": "write grounding text for each selected point",
        "generate": "design the new questions",
        "align": "calibrate question difficulty against the baseline",
        "check": "run the judge panel and drop rejected questions",
    }
    for name in STAGES:
        sp = sub.add_parser(name, help=stage_help[name])
        _add_common(sp)

    eval_p = sub.add_parser("eval", help="score one dataset with the test model")
    _add_common(eval_p)
    eval_p.add_argument("--dataset", required=True, metavar="PATH",
                        help="dataset file to score (source or synthesized)")
    eval_p.add_argument("--group", required=True,
                        help="label stored with the results, used by report")

    rep_p = sub.add_parser(
        "report", help="clean-vs-contaminated delta table from stored evals"
    )
    rep_p.add_argument("--clean", nargs="+", required=True, metavar="FILE",
                       help="evaluation outputs from the clean model")
    rep_p.add_argument("--contaminated", nargs="+", required=True, metavar="FILE",
                       help="evaluation outputs from the suspect model")
    rep_p.add_argument("--out", default=None, metavar="DIR",
                       help="also write report.jsonl into this directory")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "report":
        out_path = Path(args.out) / "report.jsonl" if args.out else None
        report_from_files(args.clean, args.contaminated, out_path=out_path)
        return EXIT_OK

    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    provider = build_provider(config, record=args.record, replay=args.replay)

    if args.command == "eval":
        clients = build_clients(config, provider)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / f"eval_{safe_name(args.group)}.jsonl"
        rows = evaluate_artifact(
            args.dataset,
            clients.test_model,
            group=args.group,
            out_path=out_path,
            max_workers=config.max_workers,
        )
        print(canonical_dumps(rows[-1]))
        log.info("wrote %d rows to %s", len(rows), out_path)
        return EXIT_OK

    pipe = Pipeline(config, args.out, provider, resume=args.resume)
    stage = args.command if args.command in STAGES else args.stage
    if stage is None:
        pipe.run()
        ran_align = True
    else:
        pipe.run_stage(stage)
        ran_align = stage == "align"
    if ran_align and pipe.state.not_converged:
        print(
            "alignment stopped at its iteration cap; "
            "outputs were written but the dataset is off target",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DynbenchError as exc:
        where = getattr(args, "stage", None) or args.command
        print(f"{where} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
