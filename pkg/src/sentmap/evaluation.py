"""Baseline vs semantic-enhancement experiments over the bundled environment.

A suite is the cross product of tasks and conditions. Each condition picks
a map variant (what the planner is shown), a planner (oracle, recorded
transcript replay, or a live endpoint) and a query form. Whatever the
planner produces is executed against the full reference map, which plays
the role of the real world, and scored with the task's goal predicate.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from sentmap.core import SentMap, strip_ownership, strip_semantics
from sentmap.errors import (
    AmbiguousTarget,
    ConfigError,
    ModelRefusal,
    PlanRejected,
    ReplayMiss,
    TargetNotFound,
    Unreachable,
)
from sentmap.goals import GoalSpec
from sentmap.llm import ChatClient, EndpointConfig, HttpChatClient, ReplayChatClient
from sentmap.map_io import parse_map
from sentmap.planning import PlannerPrompt, assemble_prompt, make_verifier, oracle_plan, plan_with_endpoint
from sentmap.skills import Plan, SkillApi, default_skill_api
from sentmap.world import check_goal, verify_plan

BASELINE = "baseline"
ENHANCED = "enhanced"
ENHANCED_OWNERSHIP = "enhanced+ownership"
MAP_VARIANTS = (BASELINE, ENHANCED, ENHANCED_OWNERSHIP)

DIRECT = "direct"
INDIRECT = "indirect"

SUCCESS = "success"
FAILURE = "failure"
REFUSAL = "refusal"
NOT_APPLICABLE = "n/a"
OUTCOMES = (SUCCESS, FAILURE, REFUSAL, NOT_APPLICABLE)
SYMBOLS = {SUCCESS: "✓", FAILURE: "✗", REFUSAL: "∅", NOT_APPLICABLE: "n/a"}

DATA_DIR = resources.files("sentmap") / "data"


def data_path(name: str) -> Path:
    return Path(str(DATA_DIR / name))


def reference_environment() -> SentMap:
    """The bundled office/lounge/kitchen map used by every experiment."""
    return parse_map(data_path("reference.json").read_bytes())


@dataclass(frozen=True)
class TaskSpec:
    name: str
    query_direct: str
    goal: GoalSpec
    start: str
    query_indirect: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TaskSpec:
        return cls(
            name=data["name"],
            query_direct=data["query_direct"],
            goal=GoalSpec.from_dict(data["goal"]),
            start=data["start"],
            query_indirect=data.get("query_indirect"),
        )

    def to_dict(self) -> dict[str, Any]:
        out = {"name": self.name, "query_direct": self.query_direct, "goal": self.goal.to_dict(), "start": self.start}
        if self.query_indirect is not None:
            out["query_indirect"] = self.query_indirect
        return out

    def query(self, form: str) -> str | None:
        return self.query_direct if form == DIRECT else self.query_indirect


@dataclass(frozen=True)
class PlannerSpec:
    kind: str  # oracle | fixture | live
    label: str = "oracle"
    transcripts: str | None = None
    endpoint: EndpointConfig | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any] | str) -> PlannerSpec:
        if data == "oracle" or data == {"kind": "oracle"}:
            return cls("oracle")
        assert isinstance(data, dict)
        kind = data.get("kind")
        if kind == "fixture":
            if "label" not in data or "transcripts" not in data:
                raise ConfigError("fixture planner needs 'label' and 'transcripts'")
            return cls("fixture", data["label"], data["transcripts"])
        if kind == "live":
            cfg = data.get("endpoint")
            if cfg is None:
                raise ConfigError("live planner needs an 'endpoint' config")
            endpoint = EndpointConfig.load(cfg) if isinstance(cfg, str) else EndpointConfig.from_dict(cfg)
            return cls("live", data.get("label", endpoint.model), endpoint=endpoint)
        raise ConfigError(f"unknown planner kind {kind!r}")

    def to_dict(self) -> dict[str, Any] | str:
        if self.kind == "oracle":
            return "oracle"
        if self.kind == "fixture":
            return {"kind": "fixture", "label": self.label, "transcripts": self.transcripts}
        return {"kind": "live", "label": self.label, "endpoint": self.endpoint.to_dict() if self.endpoint else None}


@dataclass(frozen=True)
class Condition:
    map_variant: str
    planner: PlannerSpec
    query_form: str = DIRECT
    repair_budget: int = 0

    def __post_init__(self) -> None:
        if self.map_variant not in MAP_VARIANTS:
            raise ConfigError(f"unknown map variant {self.map_variant!r}")
        if self.query_form not in (DIRECT, INDIRECT):
            raise ConfigError(f"unknown query form {self.query_form!r}")

    @property
    def label(self) -> str:
        return f"{self.map_variant}/{self.query_form}"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Condition:
        return cls(
            map_variant=data["map_variant"],
            planner=PlannerSpec.from_dict(data.get("planner", "oracle")),
            query_form=data.get("query_form", DIRECT),
            repair_budget=int(data.get("repair_budget", 0)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "map_variant": self.map_variant,
            "planner": self.planner.to_dict(),
            "query_form": self.query_form,
            "repair_budget": self.repair_budget,
        }


def load_tasks(path: str | Path) -> list[TaskSpec]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data["tasks"]
    return [TaskSpec.from_dict(t) for t in data]


def load_conditions(path: str | Path) -> list[Condition]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data["conditions"]
    return [Condition.from_dict(c) for c in data]


def map_variant(m: SentMap, variant: str) -> SentMap:
    if variant == BASELINE:
        return strip_semantics(m)
    if variant == ENHANCED:
        return strip_ownership(m)
    return m


def cell_prompt(m: SentMap, task: TaskSpec, cond: Condition, api: SkillApi) -> PlannerPrompt | None:
    query = task.query(cond.query_form)
    if query is None:
        return None
    return assemble_prompt(map_variant(m, cond.map_variant), api, query)


# --- report ----------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    planner: str
    condition: str
    task: str
    outcome: str
    detail: str = ""

    def to_dict(self) -> dict[str, str]:
        return {
            "planner": self.planner,
            "condition": self.condition,
            "task": self.task,
            "outcome": self.outcome,
            "detail": self.detail,
        }


def compute_averages(cells: Iterable[Cell]) -> dict[str, dict[str, Fraction | None]]:
    """Success rate per condition, overall and per planner; n/a cells are skipped."""
    buckets: dict[str, dict[str, list[int]]] = {}
    for c in cells:
        if c.outcome == NOT_APPLICABLE:
            buckets.setdefault(c.condition, {})
            continue
        score = 1 if c.outcome == SUCCESS else 0
        per = buckets.setdefault(c.condition, {})
        per.setdefault("", []).append(score)
        per.setdefault(c.planner, []).append(score)
    out: dict[str, dict[str, Fraction | None]] = {}
    for cond, per in buckets.items():
        out[cond] = {k: Fraction(sum(v), len(v)) for k, v in per.items()}
        out[cond].setdefault("", None)
    return out


@dataclass
class EvalReport:
    tasks: list[str]
    conditions: list[str]
    planners: list[str]
    cells: list[Cell]
    artifacts: dict[str, Any] = field(default_factory=dict)

    @property
    def averages(self) -> dict[str, dict[str, Fraction | None]]:
        return compute_averages(self.cells)

    def outcome(self, planner: str, condition: str, task: str) -> str:
        for c in self.cells:
            if (c.planner, c.condition, c.task) == (planner, condition, task):
                return c.outcome
        raise KeyError((planner, condition, task))

    def to_dict(self) -> dict[str, Any]:
        def frac(v: Fraction | None) -> str | None:
            return None if v is None else f"{v.numerator}/{v.denominator}"

        return {
            "tasks": self.tasks,
            "conditions": self.conditions,
            "planners": self.planners,
            "cells": [c.to_dict() for c in self.cells],
            "averages": {
                cond: {(k or "overall"): frac(v) for k, v in sorted(per.items())}
                for cond, per in sorted(self.averages.items())
            },
            "artifacts": self.artifacts,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EvalReport:
        report = cls(
            tasks=list(data["tasks"]),
            conditions=list(data["conditions"]),
            planners=list(data["planners"]),
            cells=[Cell(**c) for c in data["cells"]],
            artifacts=data.get("artifacts", {}),
        )
        stored = data.get("averages")
        if stored is not None and stored != report.to_dict()["averages"]:
            raise ValueError("stored averages do not match the cells")
        return report


def format_percent(value: Fraction | None) -> str:
    if value is None:
        return "n/a"
    pct = value * 100
    if pct.denominator == 1 and pct.numerator == 100:
        return "100%"
    return f"{float(pct):.1f}%"


def render_report(report: EvalReport, fmt: str = "markdown", layout: str = "planner-rows") -> str:
    """Render as a markdown table (✓ success, ✗ failure, ∅ refusal) or JSON."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown format {fmt!r}")
    if not report.cells:
        raise ValueError("cannot render an empty report")
    lookup = {(c.planner, c.condition, c.task): c.outcome for c in report.cells}
    avgs = report.averages

    def row(cells: Sequence[str]) -> str:
        return "| " + " | ".join(cells) + " |"

    lines: list[str] = []
    if layout == "planner-rows":
        header = ["Planner"]
        for cond in report.conditions:
            header += [f"{cond}: {t}" for t in report.tasks] + [f"{cond}: Average"]
        lines += [row(header), row(["---"] + [":---:"] * (len(header) - 1))]
        for p in report.planners:
            cells = [p]
            for cond in report.conditions:
                cells += [SYMBOLS[lookup.get((p, cond, t), NOT_APPLICABLE)] for t in report.tasks]
                cells.append(format_percent(avgs.get(cond, {}).get(p)))
            lines.append(row(cells))
        footer = ["*Average*"]
        for cond in report.conditions:
            footer += [""] * len(report.tasks) + [format_percent(avgs.get(cond, {}).get(""))]
        lines.append(row(footer))
    elif layout == "task-rows":
        columns = [(p, cond) for p in report.planners for cond in report.conditions]
        multi = len(report.planners) > 1
        header = ["Task"] + [f"{p}: {cond}" if multi else cond for p, cond in columns]
        lines += [row(header), row(["---"] + [":---:"] * len(columns))]
        for t in report.tasks:
            lines.append(row([t] + [SYMBOLS[lookup.get((p, cond, t), NOT_APPLICABLE)] for p, cond in columns]))
        lines.append(row(["*Average*"] + [format_percent(avgs.get(cond, {}).get(p)) for p, cond in columns]))
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return "\n".join(lines) + "\n"


# --- running ---------------------------------------------------------------


def _client_for(spec: PlannerSpec, api_temperature: float, base_dir: Path | None) -> ChatClient:
    if spec.kind == "fixture":
        path = Path(spec.transcripts)  # type: ignore[arg-type]
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"transcript fixture {path} not found")
        return ReplayChatClient.load(path, spec.label, api_temperature)
    if spec.kind == "live":
        return HttpChatClient(spec.endpoint)  # type: ignore[arg-type]
    raise ConfigError(f"planner {spec.kind!r} has no chat client")


def _run_cell(
    m: SentMap, task: TaskSpec, cond: Condition, api: SkillApi, client: ChatClient | None
) -> tuple[Cell, dict[str, Any]]:
    label = cond.planner.label
    artifact: dict[str, Any] = {}

    def cell(outcome: str, detail: str = "") -> tuple[Cell, dict[str, Any]]:
        return Cell(label, cond.label, task.name, outcome, detail), artifact

    query = task.query(cond.query_form)
    if query is None or (cond.planner.kind == "oracle" and cond.query_form == INDIRECT):
        return cell(NOT_APPLICABLE, "indirect queries need a language-model planner")

    plan: Plan
    if cond.planner.kind == "oracle":
        try:
            plan = oracle_plan(map_variant(m, cond.map_variant), task.goal, task.start, api)
        except (AmbiguousTarget, TargetNotFound, Unreachable) as exc:
            return cell(FAILURE, f"{type(exc).__name__}: {exc}")
    else:
        assert client is not None
        prompt = cell_prompt(m, task, cond, api)
        verifier = make_verifier(m, task.start, api)
        try:
            plan, transcript = plan_with_endpoint(prompt, client, verifier, cond.repair_budget, api)  # type: ignore[arg-type]
        except ModelRefusal as exc:
            artifact["transcript"] = exc.transcript
            return cell(REFUSAL, exc.raw.strip()[:200])
        except PlanRejected as exc:
            artifact["transcript"] = exc.transcript
            return cell(FAILURE, f"PlanRejected: {exc.last_error}")
        except ReplayMiss as exc:
            raise ConfigError(f"{label}: no recorded response for {task.name} under {cond.label} ({exc})") from None
        artifact["transcript"] = transcript

    artifact["plan"] = plan.to_list()
    verdict = verify_plan(m, task.start, plan, api)
    if not verdict.ok:
        return cell(FAILURE, verdict.describe())
    if not check_goal(verdict.final, task.goal, m):
        return cell(FAILURE, "plan executed but the goal does not hold")
    return cell(SUCCESS)


def run_suite(
    tasks: Sequence[TaskSpec],
    conditions: Sequence[Condition],
    m: SentMap,
    *,
    api: SkillApi | None = None,
    base_dir: str | Path | None = None,
    workers: int = 1,
) -> EvalReport:
    """Run every (task, condition) cell and collect outcomes.

    Fixture transcript paths are resolved against ``base_dir``. Cells are
    independent; with ``workers > 1`` they run on a thread pool and are
    merged back in input order.
    """
    if not tasks:
        raise ConfigError("no tasks given")
    if not conditions:
        raise ConfigError("no conditions given")
    api = api or default_skill_api()
    root = Path(base_dir) if base_dir is not None else None
    clients: dict[PlannerSpec, ChatClient] = {}
    for cond in conditions:
        if cond.planner.kind != "oracle" and cond.planner not in clients:
            clients[cond.planner] = _client_for(cond.planner, 0.0, root)
    for task in tasks:
        if task.start not in m.nodes:
            raise ConfigError(f"task {task.name}: start node {task.start!r} not in map")

    jobs = [(ci, ti) for ci in range(len(conditions)) for ti in range(len(tasks))]

    def run(job: tuple[int, int]) -> tuple[Cell, dict[str, Any]]:
        cond, task = conditions[job[0]], tasks[job[1]]
        return _run_cell(m, task, cond, api, clients.get(cond.planner))  # type: ignore[arg-type]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    planners: list[str] = []
    cond_labels: list[str] = []
    for cond in conditions:
        if cond.planner.label not in planners:
            planners.append(cond.planner.label)
        if cond.label not in cond_labels:
            cond_labels.append(cond.label)
    p_index = {p: i for i, p in enumerate(planners)}
    c_index = {c: i for i, c in enumerate(cond_labels)}
    t_index = {t.name: i for i, t in enumerate(tasks)}
    ordered = sorted(results, key=lambda r: (p_index[r[0].planner], c_index[r[0].condition], t_index[r[0].task]))
    artifacts = {f"{c.planner}|{c.condition}|{c.task}": a for c, a in ordered if a}
    return EvalReport([t.name for t in tasks], cond_labels, planners, [c for c, _ in ordered], artifacts)
