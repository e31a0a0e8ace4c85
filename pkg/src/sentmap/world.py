"""Discrete world simulator: executes skill calls against a map-derived world.

Every object keeps exactly one placement for the whole episode: resting on
an entity, held in the gripper, or handed to a person. A step whose
preconditions fail returns the unchanged input state, so a rejected plan
never leaves side effects behind.

When several preconditions fail at once, the reported error is the first
one in ``ERROR_KINDS`` order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

from sentmap.core import CLOSABLE, CLOSED, OPEN, OPENABLE, SUPPORTS_PICK, SUPPORTS_PLACE, Entity, SentMap, find_object, shortest_path
from sentmap.errors import UnknownNode, UnresolvableGoal, Unreachable
from sentmap.goals import ALL_OF, ENTITY_STATE, OBJECT_AT_NODE, OBJECT_GIVEN, OBJECT_HELD, GoalSpec
from sentmap.skills import Plan, SkillApi, SkillCall, split_entity_ref

ERROR_KINDS = (
    "unknown-node",
    "unknown-object",
    "unknown-entity",
    "unknown-person",
    "not-adjacent-path",
    "object-not-here",
    "container-closed",
    "gripper-occupied",
    "gripper-empty",
    "no-affordance",
    "person-not-here",
)

AT = "at"
HELD = "held"
GIVEN = "given"

# (origin node, origin entity, object name): stable identity of an object
ObjectKey = tuple[str, str, str]


@dataclass(frozen=True)
class Placement:
    kind: str
    node: str | None = None
    entity: str | None = None
    person: str | None = None

    def to_json(self) -> Any:
        if self.kind == AT:
            return {"at": [self.node, self.entity]}
        if self.kind == HELD:
            return "held"
        return {"given_to": self.person}


@dataclass(frozen=True)
class WorldState:
    robot_at: str
    entity_states: dict[tuple[str, str], str] = field(default_factory=dict)
    placements: dict[ObjectKey, Placement] = field(default_factory=dict)

    @property
    def held(self) -> list[ObjectKey]:
        return sorted(k for k, p in self.placements.items() if p.kind == HELD)

    @property
    def holding(self) -> str | None:
        held = self.held
        return held[0][2] if held else None

    def to_json(self) -> dict[str, Any]:
        return {
            "robot_at": self.robot_at,
            "holding": [k[2] for k in self.held],
            "entity_states": {f"{e}@{n}": s for (n, e), s in sorted(self.entity_states.items())},
            "placements": [
                {"object": k[2], "origin": [k[0], k[1]], "placement": p.to_json()}
                for k, p in sorted(self.placements.items())
            ],
        }


@dataclass(frozen=True)
class StepError:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class StepOutcome:
    call: SkillCall
    ok: bool
    state_after: WorldState
    error: StepError | None = None
    route: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"call": self.call.to_dict(), "ok": self.ok}
        if self.error is not None:
            out["error"] = {"kind": self.error.kind, "detail": self.error.detail}
        if self.route:
            out["route"] = list(self.route)
        out["state"] = self.state_after.to_json()
        return out


@dataclass
class Verdict:
    ok: bool
    final: WorldState
    trace: list[StepOutcome]
    failed_index: int | None = None
    error: StepError | None = None

    def describe(self) -> str:
        if self.ok:
            return "plan verified"
        call = self.trace[-1].call if self.trace else None
        return f"step {self.failed_index} {call}: {self.error}"


class _Fail(Exception):
    def __init__(self, kind: str, detail: str):
        self.error = StepError(kind, detail)


class Simulator:
    """Skill semantics bound to one read-only map."""

    def __init__(self, m: SentMap, api: SkillApi):
        self.map = m
        self.api = api
        self._entities: dict[tuple[str, str], Entity] = {(n, e.name): e for n, e in m.iter_entities()}
        self._entity_names = {name for _, name in self._entities}
        self._object_names = {obj.name for _, _, obj in m.iter_objects()}
        self._people = {p.name: p.location for p in m.people}

    def initial_state(self, start: str) -> WorldState:
        if start not in self.map.nodes:
            raise UnknownNode(start)
        states = {key: e.state for key, e in self._entities.items() if e.state is not None}
        placements = {(n, e, o.name): Placement(AT, n, e) for n, e, o in self.map.iter_objects()}
        return WorldState(start, states, placements)

    # -- argument resolution --

    def _need_object(self, name: str) -> None:
        if name not in self._object_names:
            raise _Fail("unknown-object", f"no object named {name!r} in the map")

    def _need_entity(self, arg: str, robot_at: str) -> tuple[str, str]:
        name, node = split_entity_ref(arg)
        if node is not None:
            if node not in self.map.nodes:
                raise _Fail("unknown-node", f"no node {node!r}")
            if (node, name) not in self._entities:
                raise _Fail("unknown-entity", f"no entity {name!r} at {node!r}")
            if node != robot_at:
                raise _Fail("not-adjacent-path", f"{name}@{node} is not at the robot's node {robot_at!r}")
            return node, name
        if (robot_at, name) in self._entities:
            return robot_at, name
        if name in self._entity_names:
            raise _Fail("not-adjacent-path", f"entity {name!r} is not at the robot's node {robot_at!r}")
        raise _Fail("unknown-entity", f"no entity named {name!r} in the map")

    def _held_named(self, state: WorldState, name: str) -> ObjectKey:
        held = state.held
        match = [k for k in held if k[2] == name]
        if held and not match:
            raise _Fail("object-not-here", f"{name!r} is not in the gripper")
        if not held:
            return ()  # type: ignore[return-value]
        return match[0]

    def _closed(self, state: WorldState, key: tuple[str, str]) -> bool:
        return state.entity_states.get(key) == CLOSED

    # -- skills --

    def _goto(self, state: WorldState, node: str) -> tuple[WorldState, tuple[str, ...]]:
        if node not in self.map.nodes:
            raise _Fail("unknown-node", f"no node {node!r}")
        try:
            route = shortest_path(self.map, state.robot_at, node)
        except Unreachable:
            raise _Fail("not-adjacent-path", f"no route from {state.robot_at!r} to {node!r}") from None
        return replace(state, robot_at=node), tuple(route)

    def _pick(self, state: WorldState, name: str) -> WorldState:
        self._need_object(name)
        here = [
            k for k, p in sorted(state.placements.items())
            if k[2] == name and p.kind == AT and p.node == state.robot_at
        ]
        if not here:
            raise _Fail("object-not-here", f"{name!r} is not at {state.robot_at!r}")
        key = here[0]
        where = state.placements[key]
        ent_key = (where.node, where.entity)
        if self._closed(state, ent_key):
            raise _Fail("container-closed", f"{where.entity}@{where.node} is closed")
        if len(state.held) >= self.api.constraints.gripper_capacity:
            raise _Fail("gripper-occupied", f"already holding {', '.join(k[2] for k in state.held)}")
        if SUPPORTS_PICK not in self._entities[ent_key].affordances:
            raise _Fail("no-affordance", f"{where.entity}@{where.node} does not support picking")
        return replace(state, placements={**state.placements, key: Placement(HELD)})

    def _place(self, state: WorldState, name: str, target: str) -> WorldState:
        _, node = split_entity_ref(target)
        if node is not None and node not in self.map.nodes:
            raise _Fail("unknown-node", f"no node {node!r}")
        self._need_object(name)
        ent_key = self._need_entity(target, state.robot_at)
        key = self._held_named(state, name)
        if self._closed(state, ent_key):
            raise _Fail("container-closed", f"{ent_key[1]}@{ent_key[0]} is closed")
        if not key:
            raise _Fail("gripper-empty", f"cannot place {name!r}: gripper is empty")
        if SUPPORTS_PLACE not in self._entities[ent_key].affordances:
            raise _Fail("no-affordance", f"{ent_key[1]}@{ent_key[0]} does not support placing")
        return replace(state, placements={**state.placements, key: Placement(AT, ent_key[0], ent_key[1])})

    def _toggle(self, state: WorldState, target: str, opening: bool) -> WorldState:
        ent_key = self._need_entity(target, state.robot_at)
        needed = OPENABLE if opening else CLOSABLE
        if needed not in self._entities[ent_key].affordances:
            raise _Fail("no-affordance", f"{ent_key[1]}@{ent_key[0]} is not {needed}")
        return replace(state, entity_states={**state.entity_states, ent_key: OPEN if opening else CLOSED})

    def _give(self, state: WorldState, name: str, person: str) -> WorldState:
        self._need_object(name)
        if person not in self._people:
            raise _Fail("unknown-person", f"no person named {person!r}")
        key = self._held_named(state, name)
        if not key:
            raise _Fail("gripper-empty", f"cannot give {name!r}: gripper is empty")
        if self._people[person] != state.robot_at:
            raise _Fail("person-not-here", f"{person} is not at {state.robot_at!r}")
        return replace(state, placements={**state.placements, key: Placement(GIVEN, person=person)})

    def step(self, state: WorldState, call: SkillCall) -> StepOutcome:
        self.api.check_call(call, 0)
        route: tuple[str, ...] = ()
        try:
            a = call.args
            if call.skill == "goto":
                after, route = self._goto(state, a[0])
            elif call.skill == "pick":
                after = self._pick(state, a[0])
            elif call.skill == "place":
                after = self._place(state, a[0], a[1])
            elif call.skill in ("open", "close"):
                after = self._toggle(state, a[0], call.skill == "open")
            elif call.skill == "give":
                after = self._give(state, a[0], a[1])
            else:
                raise NotImplementedError(f"no semantics for skill {call.skill!r}")
        except _Fail as f:
            return StepOutcome(call, False, state, f.error)
        return StepOutcome(call, True, after, None, route)

    def verify(self, start: str, plan: Plan) -> Verdict:
        self.api.check_plan(plan)
        state = self.initial_state(start)
        trace: list[StepOutcome] = []
        for i, call in enumerate(plan.steps):
            outcome = self.step(state, call)
            trace.append(outcome)
            if not outcome.ok:
                return Verdict(False, state, trace, i, outcome.error)
            state = outcome.state_after
        return Verdict(True, state, trace)


def initial_state(m: SentMap, start: str, api: SkillApi | None = None) -> WorldState:
    from sentmap.skills import default_skill_api

    return Simulator(m, api or default_skill_api()).initial_state(start)


def step(m: SentMap, state: WorldState, call: SkillCall, api: SkillApi) -> StepOutcome:
    return Simulator(m, api).step(state, call)


def verify_plan(m: SentMap, start: str, plan: Plan, api: SkillApi) -> Verdict:
    return Simulator(m, api).verify(start, plan)


def check_goal(state: WorldState, goal: GoalSpec, m: SentMap) -> bool:
    """True iff ``goal`` holds in ``state``; any object matching the query counts."""
    if goal.kind == ALL_OF:
        return all(check_goal(state, g, m) for g in goal.goals)
    if goal.kind == ENTITY_STATE:
        node = m.nodes.get(goal.node)  # type: ignore[arg-type]
        if node is None or node.semantic is None or node.semantic.entity_named(goal.entity) is None:  # type: ignore[arg-type]
            raise UnresolvableGoal(f"no entity {goal.entity!r} at {goal.node!r}")
        return state.entity_states.get((goal.node, goal.entity)) == goal.state  # type: ignore[arg-type]

    hits = find_object(m, goal.object)  # type: ignore[arg-type]
    if not hits:
        raise UnresolvableGoal(f"no object in the map matches {goal.object}")
    placements = [state.placements.get((n, e, o.name)) for n, e, o in hits]
    if goal.kind == OBJECT_HELD:
        return any(p is not None and p.kind == HELD for p in placements)
    if goal.kind == OBJECT_AT_NODE:
        return any(p is not None and p.kind == AT and p.node == goal.node for p in placements)
    if goal.kind == OBJECT_GIVEN:
        return any(p is not None and p.kind == GIVEN and p.person == goal.person for p in placements)
    raise ValueError(f"unknown goal kind {goal.kind!r}")


def outcomes_to_jsonl(trace: Iterable[StepOutcome]) -> str:
    return "".join(json.dumps(o.to_json(), sort_keys=True, ensure_ascii=False) + "\n" for o in trace)
