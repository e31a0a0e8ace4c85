"""Planning over a SENT-Map: prompts, reply parsing, the model loop and an oracle.

The model path sends (scene, skill API, constraints, query) to a chat
endpoint, parses the returned skill sequence and checks it in the
simulator, re-prompting with the simulator's complaint when it fails. The
oracle path is a deterministic planner for explicit goals that serves as
ground truth when no model is available.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable

from sentmap.core import CLOSED, ObjectItem, ObjectQuery, SentMap, find_object, shortest_path
from sentmap.errors import (
    AmbiguousTarget,
    ArityMismatch,
    EmptyQuery,
    ModelRefusal,
    NoPlanFound,
    PlanRejected,
    TargetNotFound,
    UnknownNode,
    UnknownSkill,
)
from sentmap.goals import ALL_OF, ENTITY_STATE, OBJECT_AT_NODE, OBJECT_GIVEN, OBJECT_HELD, GoalSpec
from sentmap.llm import ChatClient, EndpointConfig, HttpChatClient, find_json, transcript_entry
from sentmap.map_io import serialize_map
from sentmap.skills import Plan, SkillApi, SkillCall, default_skill_api, entity_ref
from sentmap.world import AT, HELD, Simulator, Verdict, WorldState

SYSTEM_PROMPT = (
    "You are the task planner of a mobile manipulator robot. You can only use the skills listed "
    "in the skill API and only refer to nodes, entities, items and people that appear in the scene."
)

OUTPUT_INSTRUCTIONS = """\
Reply with the skill sequence most likely to solve the task as a JSON array inside a ```json
fenced block. Each step is {"skill": "<skill name>", "args": ["<argument>", ...]}. Use node ids,
entity@node references, item names and person names exactly as written in the scene."""

_REFUSAL_RE = re.compile(
    r"\b(?:need|require)s?\s+(?:more|additional|further)\s+(?:context|information|details)"
    r"|\b(?:cannot|can't|can not|unable to)\s+(?:determine|complete|plan|solve|find|locate|help)"
    r"|\bnot enough (?:context|information)"
    r"|\bplease (?:clarify|provide)",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class PlannerPrompt:
    scene: str
    skill_api_text: str
    constraints_text: str
    query: str

    def __post_init__(self) -> None:
        for name in ("scene", "skill_api_text", "constraints_text", "query"):
            if not getattr(self, name).strip():
                raise ValueError(f"prompt part {name!r} is empty")

    def render(self) -> str:
        return (
            "## Scene\n"
            f"{self.scene}"
            "\n## Skill API\n"
            f"{self.skill_api_text}\n"
            "\n## Robot constraints\n"
            f"{self.constraints_text}\n"
            "\n## Task\n"
            f"{self.query}\n"
            "\n## Output format\n"
            f"{OUTPUT_INSTRUCTIONS}\n"
        )

    def messages(self) -> list[dict[str, Any]]:
        return [{"role": "system", "content": SYSTEM_PROMPT}, {"role": "user", "content": self.render()}]


def assemble_prompt(m: SentMap, api: SkillApi, query: str) -> PlannerPrompt:
    if not query or not query.strip():
        raise EmptyQuery()
    return PlannerPrompt(serialize_map(m), api.render(), api.constraints.render(), query.strip())


# --- reply parsing ---------------------------------------------------------


def _looks_like_steps(value: Any) -> bool:
    return isinstance(value, list) and all(isinstance(v, dict) and "skill" in v for v in value)


def _unwrap(value: Any) -> Any:
    if isinstance(value, dict):
        for key in ("plan", "steps"):
            if _looks_like_steps(value.get(key)):
                return value[key]
    return value


def looks_like_refusal(text: str) -> bool:
    return bool(_REFUSAL_RE.search(text))


def parse_plan(reply: str, api: SkillApi) -> Plan:
    """Extract and validate the skill sequence in a model reply.

    The first non-empty JSON array of ``{"skill", "args"}`` objects wins,
    looking in fenced blocks before bare text; ``{"plan": [...]}`` wrappers
    are accepted. An empty array is only used when nothing else is found.
    Text around the block becomes the plan's rationale.
    """
    nonempty = lambda v: bool(v) and _looks_like_steps(v)  # noqa: E731
    found = (
        find_json(reply, "[", nonempty)
        or find_json(reply, "{", lambda v: nonempty(_unwrap(v)))
        or find_json(reply, "[", _looks_like_steps)
        or find_json(reply, "{", lambda v: _looks_like_steps(_unwrap(v)))
    )
    if found is None:
        raise NoPlanFound(raw=reply)
    value, start, end = found
    steps = []
    for i, raw in enumerate(_unwrap(value)):
        name = raw["skill"]
        if not isinstance(name, str):
            raise UnknownSkill(str(name), i)
        args = raw.get("args", [])
        if isinstance(args, str):
            args = [args]
        if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
            raise ArityMismatch(i, name, api.get(name).arity if api.get(name) else 0, len(args) if isinstance(args, list) else 0)
        steps.append(SkillCall(name, tuple(args)))
    plan = Plan(steps, (reply[:start] + reply[end:]).strip() or None)
    api.check_plan(plan)
    return plan


# --- model-backed planning -------------------------------------------------

Verifier = Callable[[Plan], Verdict]


def make_verifier(m: SentMap, start: str, api: SkillApi) -> Verifier:
    sim = Simulator(m, api)
    if start not in m.nodes:
        raise UnknownNode(start)
    return lambda plan: sim.verify(start, plan)


def plan_with_endpoint(
    prompt: PlannerPrompt,
    endpoint: EndpointConfig | ChatClient,
    verifier: Verifier,
    repair_budget: int = 2,
    api: SkillApi | None = None,
) -> tuple[Plan, list[dict[str, Any]]]:
    """Ask the model for a plan until one passes the verifier.

    Every failed round (unparseable reply, unknown skill, simulator
    rejection) is fed back verbatim, at most ``repair_budget`` times.
    Returns the verified plan and the request/response transcript.
    """
    api = api or default_skill_api()
    client: ChatClient = HttpChatClient(endpoint) if isinstance(endpoint, EndpointConfig) else endpoint
    messages = prompt.messages()
    transcript: list[dict[str, Any]] = []
    last_error = ""
    for _ in range(repair_budget + 1):
        reply = client.complete(messages)
        transcript.append(transcript_entry(client, messages, reply))
        try:
            plan = parse_plan(reply, api)
        except NoPlanFound:
            if looks_like_refusal(reply):
                raise ModelRefusal(reply, transcript) from None
            last_error = "no skill sequence found; reply with a ```json fenced array of steps"
        except (UnknownSkill, ArityMismatch) as exc:
            last_error = str(exc)
        else:
            if not plan.steps:
                raise ModelRefusal(reply, transcript)
            verdict = verifier(plan)
            if verdict.ok:
                return plan, transcript
            last_error = verdict.describe()
        messages = messages + [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": f"The plan was rejected: {last_error}\nReply with a corrected plan."},
        ]
    raise PlanRejected(last_error, transcript)


# --- oracle ----------------------------------------------------------------


def resolve_object(m: SentMap, query: ObjectQuery) -> tuple[str, str, ObjectItem]:
    """Find the single object a query denotes, or explain why it cannot.

    Owner tags act as a disambiguator: when the map carries no matching
    owner tag but the rest of the query matches, the target is ambiguous
    (picking one would be a guess), not absent.
    """
    hits = find_object(m, query)
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        raise AmbiguousTarget(hits)
    if query.owner is not None:
        loose = query.without_owner()
        unowned = find_object(m, loose) if loose is not None else []
        if unowned:
            raise AmbiguousTarget(unowned, f"no item is tagged as {query.owner}'s")
    raise TargetNotFound(f"no object in the map matches {query.to_dict()}")


class _OraclePlanner:
    def __init__(self, m: SentMap, api: SkillApi, start: str):
        self.map = m
        self.sim = Simulator(m, api)
        self.state: WorldState = self.sim.initial_state(start)
        self.steps: list[SkillCall] = []

    def emit(self, skill: str, *args: str) -> None:
        call = SkillCall(skill, args)
        outcome = self.sim.step(self.state, call)
        if not outcome.ok:
            raise RuntimeError(f"oracle produced an invalid step {call}: {outcome.error}")
        self.state = outcome.state_after
        self.steps.append(call)

    def goto(self, node: str) -> None:
        if self.state.robot_at != node:
            shortest_path(self.map, self.state.robot_at, node)
            self.emit("goto", node)

    def fetch(self, query: ObjectQuery) -> str:
        node, entity, obj = resolve_object(self.map, query)
        where = self.state.placements[(node, entity, obj.name)]
        if where.kind != AT:
            if where.kind == HELD:
                return obj.name
            raise TargetNotFound(f"{obj.name} was already handed over")
        self.goto(where.node)  # type: ignore[arg-type]
        ref = entity_ref(where.entity, where.node)  # type: ignore[arg-type]
        reopened = self.state.entity_states.get((where.node, where.entity)) == CLOSED  # type: ignore[arg-type]
        if reopened:
            self.emit("open", ref)
        self.emit("pick", obj.name)
        if reopened:
            self.emit("close", ref)
        return obj.name

    def deliver_to_node(self, name: str, node: str) -> None:
        sem = self.map.node(node).semantic
        targets = [e for e in (sem.entities if sem else []) if "supports-place" in e.affordances]
        if not targets:
            raise TargetNotFound(f"nothing at {node!r} supports placing")
        ent = targets[0]
        self.goto(node)
        ref = entity_ref(ent.name, node)
        reopened = self.state.entity_states.get((node, ent.name)) == CLOSED
        if reopened:
            self.emit("open", ref)
        self.emit("place", name, ref)
        if reopened:
            self.emit("close", ref)

    def achieve(self, goal: GoalSpec) -> None:
        if goal.kind == ALL_OF:
            for g in goal.goals:
                self.achieve(g)
            return
        if goal.kind == ENTITY_STATE:
            if self.state.entity_states.get((goal.node, goal.entity)) != goal.state:  # type: ignore[arg-type]
                self.goto(goal.node)  # type: ignore[arg-type]
                self.emit("open" if goal.state == "open" else "close", entity_ref(goal.entity, goal.node))  # type: ignore[arg-type]
            return
        assert goal.object is not None
        if goal.kind == OBJECT_AT_NODE:
            node, entity, obj = resolve_object(self.map, goal.object)
            where = self.state.placements[(node, entity, obj.name)]
            if where.kind == AT and where.node == goal.node:
                return
            self.deliver_to_node(self.fetch(goal.object), goal.node)  # type: ignore[arg-type]
        elif goal.kind == OBJECT_HELD:
            self.fetch(goal.object)
        elif goal.kind == OBJECT_GIVEN:
            person = self.map.person(goal.person)  # type: ignore[arg-type]
            if person is None:
                raise TargetNotFound(f"no person named {goal.person!r}")
            if person.location is None:
                raise TargetNotFound(f"location of {person.name} is unknown")
            name = self.fetch(goal.object)
            self.goto(person.location)
            self.emit("give", name, person.name)
        else:
            raise ValueError(f"unknown goal kind {goal.kind!r}")


def oracle_plan(m: SentMap, goal: GoalSpec, start: str, api: SkillApi | None = None) -> Plan:
    """Deterministic plan for an explicit goal.

    Navigates along shortest paths, opens closed containers before picking
    or placing and closes them again afterwards. Raises
    :class:`AmbiguousTarget` rather than guessing between candidates.
    """
    api = api or default_skill_api()
    if start not in m.nodes:
        raise UnknownNode(start)
    planner = _OraclePlanner(m, api, start)
    planner.achieve(goal)
    plan = Plan(planner.steps, "oracle")
    verdict = planner.sim.verify(start, plan)
    if not verdict.ok:
        raise RuntimeError(f"oracle plan failed verification: {verdict.describe()}")
    return plan

