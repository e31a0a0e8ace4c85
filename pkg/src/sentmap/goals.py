"""Machine-checkable task goals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from sentmap.core import ObjectQuery

OBJECT_AT_NODE = "object-at-node"
OBJECT_HELD = "object-held"
OBJECT_GIVEN = "object-given"
ENTITY_STATE = "entity-state"
ALL_OF = "all-of"
GOAL_KINDS = (OBJECT_AT_NODE, OBJECT_HELD, OBJECT_GIVEN, ENTITY_STATE, ALL_OF)


@dataclass(frozen=True)
class GoalSpec:
    kind: str
    object: ObjectQuery | None = None
    node: str | None = None
    person: str | None = None
    entity: str | None = None
    state: str | None = None
    goals: tuple[GoalSpec, ...] = ()

    def __post_init__(self) -> None:
        need = {
            OBJECT_AT_NODE: ("object", "node"),
            OBJECT_HELD: ("object",),
            OBJECT_GIVEN: ("object", "person"),
            ENTITY_STATE: ("node", "entity", "state"),
            ALL_OF: (),
        }
        if self.kind not in need:
            raise ValueError(f"unknown goal kind {self.kind!r}")
        for attr in need[self.kind]:
            if getattr(self, attr) is None:
                raise ValueError(f"{self.kind} goal needs {attr!r}")
        if self.kind == ALL_OF and not self.goals:
            raise ValueError("all-of goal needs at least one sub-goal")

    @classmethod
    def object_held(cls, **query: Any) -> GoalSpec:
        return cls(OBJECT_HELD, object=ObjectQuery(**query))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> GoalSpec:
        obj = data.get("object")
        return cls(
            kind=data["kind"],
            object=ObjectQuery.from_dict(obj) if obj is not None else None,
            node=data.get("node"),
            person=data.get("person"),
            entity=data.get("entity"),
            state=data.get("state"),
            goals=tuple(cls.from_dict(g) for g in data.get("goals", ())),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.object is not None:
            out["object"] = self.object.to_dict()
        for key in ("node", "person", "entity", "state"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.goals:
            out["goals"] = [g.to_dict() for g in self.goals]
        return out
