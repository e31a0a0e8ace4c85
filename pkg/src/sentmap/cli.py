"""Command-line entry point: ``sentmap <subcommand> ...``.

Exit codes: 0 on success, 1 when validation, planning or simulation fails,
2 for usage and configuration errors, 3 for transport failures. Data goes
to stdout (or the ``--out`` file), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from sentmap.builder import FixtureDescriber, RemoteDescriber, WalkthroughTrace, build_map, review_and_patch
from sentmap.core import strip_semantics
from sentmap.errors import ConfigError, SentMapError, TransportError
from sentmap.evaluation import load_conditions, load_tasks, render_report, run_suite
from sentmap.goals import GoalSpec
from sentmap.llm import EndpointConfig, ReplayChatClient
from sentmap.map_io import EditCommand, apply_edits, canonical_json, parse_map, serialize_map, validate_map
from sentmap.planning import assemble_prompt, make_verifier, oracle_plan, parse_plan, plan_with_endpoint
from sentmap.skills import default_skill_api
from sentmap.world import Simulator, outcomes_to_jsonl

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3

log = logging.getLogger("sentmap")


class _UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _read_json(path: str) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def _load_map(path: str):
    return parse_map(_read_text(path))


def _load_endpoint(path: str) -> EndpointConfig:
    try:
        return EndpointConfig.from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad endpoint config {path}: {exc}") from exc


# --- map ------------------------------------------------------------------


def cmd_map_validate(args: argparse.Namespace) -> int:
    report = validate_map(_read_text(args.file).encode("utf-8"))
    if args.json:
        sys.stdout.write(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n")
    else:
        sys.stdout.write(report.render().rstrip("\n") + "\n")
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_map_build(args: argparse.Namespace) -> int:
    trace = WalkthroughTrace.from_list(_read_json(args.trace))
    if args.fixtures:
        describer: Any = FixtureDescriber(args.fixtures)
    else:
        image_root = args.image_root or str(Path(args.trace).parent)
        describer = RemoteDescriber(_load_endpoint(args.endpoint), image_root=image_root)
    m, results = build_map(trace, describer)
    if args.edits:
        m = review_and_patch(m, [EditCommand.from_dict(d) for d in _read_json(args.edits)])
    _emit(serialize_map(m), args.out)
    if args.audit:
        Path(args.audit).write_text(canonical_json([r.raw for r in results]), encoding="utf-8")
    return EXIT_OK


def cmd_map_edit(args: argparse.Namespace) -> int:
    m = _load_map(args.file)
    ops = _read_json(args.ops)
    if isinstance(ops, dict):
        ops = [ops]
    m = apply_edits(m, [EditCommand.from_dict(d) for d in ops])
    _emit(serialize_map(m), args.out)
    return EXIT_OK


def cmd_map_strip(args: argparse.Namespace) -> int:
    _emit(serialize_map(strip_semantics(_load_map(args.file))), args.out)
    return EXIT_OK


# --- plan / simulate --------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    m = _load_map(args.map)
    api = default_skill_api()
    if args.oracle:
        if not args.goal:
            raise _UsageError("--oracle needs --goal")
        plan = oracle_plan(m, GoalSpec.from_dict(_read_json(args.goal)), args.start, api)
        transcript: list[dict[str, Any]] = []
    else:
        if not args.query:
            raise _UsageError("--endpoint needs --query")
        config = _load_endpoint(args.endpoint)
        client: Any = config
        if args.replay:
            client = ReplayChatClient.load(args.replay, config.model, config.temperature)
        prompt = assemble_prompt(m, api, args.query)
        verifier = make_verifier(m, args.start, api)
        plan, transcript = plan_with_endpoint(prompt, client, verifier, args.repair_budget, api)
    _emit(canonical_json(plan.to_list()), args.out)
    if args.transcript_out:
        Path(args.transcript_out).write_text(canonical_json(transcript), encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    m = _load_map(args.map)
    api = default_skill_api()
    plan = parse_plan(_read_text(args.plan), api)
    verdict = Simulator(m, api).verify(args.start, plan)
    summary: dict[str, Any] = {"ok": verdict.ok, "steps": len(plan.steps), "final": verdict.final.to_json()}
    if not verdict.ok:
        summary["failed_index"] = verdict.failed_index
        summary["error"] = {"kind": verdict.error.kind, "detail": verdict.error.detail}  # type: ignore[union-attr]
        print(verdict.describe(), file=sys.stderr)
    sys.stdout.write(canonical_json(summary))
    if args.trace_out:
        Path(args.trace_out).write_text(outcomes_to_jsonl(verdict.trace), encoding="utf-8")
    return EXIT_OK if verdict.ok else EXIT_FAILED


# --- eval -------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    m = _load_map(args.map)
    try:
        tasks = load_tasks(args.tasks)
        conditions = load_conditions(args.conditions)
    except OSError as exc:
        raise _UsageError(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad task or condition file: {exc}") from exc
    report = run_suite(tasks, conditions, m, base_dir=Path(args.conditions).parent, workers=args.workers)
    _emit(render_report(report, args.format, args.layout), args.report)
    return EXIT_OK


# --- wiring -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sentmap", description="Semantic topological maps for language-driven robot planning.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mp = sub.add_parser("map", help="validate, build, edit or strip a map")
    msub = mp.add_subparsers(dest="map_command", required=True, parser_class=_Parser)

    p = msub.add_parser("validate", help="check a Scene JSON file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_map_validate)

    p = msub.add_parser("build", help="build a map from a walkthrough trace")
    p.add_argument("--trace", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixtures", help="directory of recorded payloads keyed by image stem")
    src.add_argument("--endpoint", help="endpoint config JSON for a remote describer")
    p.add_argument("--image-root", help="directory holding snapshot images (default: trace directory)")
    p.add_argument("--edits", help="operator edits to apply after building")
    p.add_argument("--audit", help="write raw describer outputs here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_map_build)

    p = msub.add_parser("edit", help="apply edit commands to a map")
    p.add_argument("file")
    p.add_argument("--ops", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_map_edit)

    p = msub.add_parser("strip", help="remove semantic payloads (baseline map)")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_map_strip)

    p = sub.add_parser("plan", help="produce a skill sequence for a task")
    p.add_argument("--map", required=True)
    p.add_argument("--query")
    p.add_argument("--start", required=True)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--oracle", action="store_true", help="deterministic planner; needs --goal")
    how.add_argument("--endpoint", help="endpoint config JSON")
    p.add_argument("--goal", help="goal JSON for the oracle")
    p.add_argument("--replay", help="answer from a recorded transcript file instead of the network")
    p.add_argument("--repair-budget", type=int, default=2)
    p.add_argument("--out")
    p.add_argument("--transcript-out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="check a plan in the discrete world simulator")
    p.add_argument("--map", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--trace-out", help="write one JSON line per executed step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="run a task suite under several conditions")
    p.add_argument("--map", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--conditions", required=True)
    p.add_argument("--report")
    p.add_argument("--format", choices=("markdown", "json"), default="markdown")
    p.add_argument("--layout", choices=("planner-rows", "task-rows"), default="planner-rows")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"sentmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"sentmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"sentmap: transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ConfigError as exc:
        print(f"sentmap: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SentMapError as exc:
        print(f"sentmap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
