"""Skill API, skill calls and plans.

Plans travel as a fenced JSON array of ``{"skill": ..., "args": [...]}``
objects. Entity arguments are written ``entity@node``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from sentmap.errors import ArityMismatch, UnknownSkill

PARAM_KINDS = ("node", "object", "entity", "person")
REQUIRED_SKILLS = ("goto", "pick", "place", "open", "close", "give")


@dataclass(frozen=True)
class RobotConstraints:
    arm_count: int = 1
    gripper_capacity: int = 1

    def __post_init__(self) -> None:
        if self.arm_count < 1 or self.gripper_capacity < 1:
            raise ValueError("arm count and gripper capacity must be positive")

    def render(self) -> str:
        arms = "arm" if self.arm_count == 1 else "arms"
        items = "item" if self.gripper_capacity == 1 else "items"
        return (
            f"The robot has {self.arm_count} {arms} and can hold at most "
            f"{self.gripper_capacity} {items} at a time. Free the gripper "
            "(place or give) before picking up something else."
        )


_SKILL_LINE_RE = re.compile(r"^- (?P<name>[A-Za-z_]\w*)\((?P<params>[^)]*)\): (?P<desc>.*?) Requires: (?P<pre>.*)$")


@dataclass(frozen=True)
class SkillSpec:
    name: str
    params: tuple[tuple[str, str], ...]
    description: str
    preconditions: str

    def __post_init__(self) -> None:
        for _, kind in self.params:
            if kind not in PARAM_KINDS:
                raise ValueError(f"unknown parameter kind {kind!r}")

    @property
    def arity(self) -> int:
        return len(self.params)

    def render(self) -> str:
        params = ", ".join(f"{p}: {k}" for p, k in self.params)
        return f"- {self.name}({params}): {self.description} Requires: {self.preconditions}"

    @classmethod
    def parse(cls, line: str) -> SkillSpec:
        m = _SKILL_LINE_RE.match(line.strip())
        if m is None:
            raise ValueError(f"not a skill line: {line!r}")
        params = []
        for chunk in filter(None, (c.strip() for c in m["params"].split(","))):
            pname, _, kind = chunk.partition(":")
            params.append((pname.strip(), kind.strip()))
        return cls(m["name"], tuple(params), m["desc"], m["pre"])


@dataclass(frozen=True)
class SkillCall:
    skill: str
    args: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.args, list):
            object.__setattr__(self, "args", tuple(self.args))

    def to_dict(self) -> dict[str, Any]:
        return {"skill": self.skill, "args": list(self.args)}

    def __str__(self) -> str:
        return f"{self.skill}({', '.join(self.args)})"


@dataclass
class Plan:
    steps: list[SkillCall] = field(default_factory=list)
    rationale: str | None = None

    def to_list(self) -> list[dict[str, Any]]:
        return [s.to_dict() for s in self.steps]

    @classmethod
    def from_list(cls, data: Iterable[dict[str, Any]], rationale: str | None = None) -> Plan:
        return cls([SkillCall(d["skill"], tuple(d.get("args", ()))) for d in data], rationale)

    def render(self) -> str:
        """Canonical wire form: a fenced JSON block, one step per line."""
        body = ",\n".join("  " + json.dumps(s.to_dict(), ensure_ascii=False) for s in self.steps)
        inner = f"[\n{body}\n]" if self.steps else "[]"
        return f"```json\n{inner}\n```"


@dataclass(frozen=True)
class SkillApi:
    skills: tuple[SkillSpec, ...]
    constraints: RobotConstraints = RobotConstraints()

    def __post_init__(self) -> None:
        names = [s.name for s in self.skills]
        if len(set(names)) != len(names):
            raise ValueError("skill names must be unique")
        missing = set(REQUIRED_SKILLS) - set(names)
        if missing:
            raise ValueError(f"skill API lacks {sorted(missing)}")

    def get(self, name: str) -> SkillSpec | None:
        for s in self.skills:
            if s.name == name:
                return s
        return None

    def render(self) -> str:
        return "\n".join(s.render() for s in self.skills)

    def check_call(self, call: SkillCall, index: int) -> SkillSpec:
        spec = self.get(call.skill)
        if spec is None:
            raise UnknownSkill(call.skill, index)
        if len(call.args) != spec.arity:
            raise ArityMismatch(index, call.skill, spec.arity, len(call.args))
        return spec

    def check_plan(self, plan: Plan) -> None:
        for i, call in enumerate(plan.steps):
            self.check_call(call, i)


def default_skill_api() -> SkillApi:
    skills = (
        SkillSpec(
            "goto",
            (("node", "node"),),
            "Drive to a navigation node; multi-hop routes are planned automatically.",
            "a directed route from the current node exists.",
        ),
        SkillSpec(
            "pick",
            (("object", "object"),),
            "Grasp a movable item located at the current node.",
            "the item rests on an entity here that supports picking and is not closed; the gripper has room.",
        ),
        SkillSpec(
            "place",
            (("object", "object"), ("target", "entity")),
            "Put the held item on or into an entity, written entity@node.",
            "holding the item; the entity is at the current node, supports placing and is not closed.",
        ),
        SkillSpec(
            "open",
            (("target", "entity"),),
            "Open an entity, written entity@node.",
            "the entity is at the current node and is openable.",
        ),
        SkillSpec(
            "close",
            (("target", "entity"),),
            "Close an entity, written entity@node.",
            "the entity is at the current node and is closable.",
        ),
        SkillSpec(
            "give",
            (("object", "object"), ("person", "person")),
            "Hand the held item to a person.",
            "holding the item; the person is at the current node.",
        ),
    )
    return SkillApi(skills, RobotConstraints(arm_count=1, gripper_capacity=1))


def entity_ref(entity: str, node: str) -> str:
    return f"{entity}@{node}"


def split_entity_ref(arg: str) -> tuple[str, str | None]:
    """``"fridge@kitchen_fridge"`` -> ``("fridge", "kitchen_fridge")``; bare names get ``None``."""
    if "@" in arg:
        entity, node = arg.rsplit("@", 1)
        return entity, node
    return arg, None
