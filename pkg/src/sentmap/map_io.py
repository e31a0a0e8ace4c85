"""Scene JSON wire format: parsing, canonical serialization, validation, edits.

The canonical form is ``json.dumps(..., sort_keys=True, indent=2)`` with a
trailing newline, so two serializations of equal maps are byte-identical and
diffs between operator revisions stay readable. Fields this module does not
know about are kept on the ``extra`` dict of the owning record and written
back unchanged.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from jsonschema import Draft202012Validator

from sentmap.core import (
    AFFORDANCES,
    CLOSABLE,
    ENTITY_STATES,
    FORMAT_VERSION,
    OPENABLE,
    Entity,
    NavNode,
    ObjectItem,
    Person,
    SemanticPayload,
    SentMap,
)
from sentmap.errors import InvalidEditValue, InvariantBroken, MalformedJson, SchemaViolation, UnknownTarget

ERROR = "error"
WARNING = "warning"

_OBJECT_SCHEMA = {
    "type": "object",
    "required": ["name", "category"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "category": {"type": "string", "minLength": 1},
        "owner": {"type": "string", "minLength": 1},
        "attributes": {"type": "object", "additionalProperties": {"type": "string"}},
    },
}

_ENTITY_SCHEMA = {
    "type": "object",
    "required": ["name", "kind", "affordances", "objects"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "kind": {"type": "string", "minLength": 1},
        "state": {"enum": list(ENTITY_STATES)},
        "affordances": {"type": "array", "items": {"enum": list(AFFORDANCES)}, "uniqueItems": True},
        "objects": {"type": "array", "items": _OBJECT_SCHEMA},
    },
}

SEMANTIC_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["label", "entities"],
    "properties": {
        "label": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "entities": {"type": "array", "items": _ENTITY_SCHEMA},
    },
}

SCENE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "nodes", "people"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "people": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "location": {"type": "string"},
                },
            },
        },
        "nodes": {
            "type": "object",
            "propertyNames": {"pattern": r"^\S+$"},
            "additionalProperties": {
                "type": "object",
                "required": ["zone", "neighbors"],
                "properties": {
                    "zone": {"type": "string", "minLength": 1},
                    "neighbors": {"type": "array", "items": {"type": "string"}},
                    "semantic": SEMANTIC_SCHEMA,
                },
            },
        },
    },
}

_SCENE_VALIDATOR = Draft202012Validator(SCENE_SCHEMA)
_SEMANTIC_VALIDATOR = Draft202012Validator(SEMANTIC_SCHEMA)


# --- JSON pointers ---------------------------------------------------------


def pointer(*parts: Any) -> str:
    """Build an RFC 6901 JSON pointer from raw path segments."""
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def pointer_parts(ptr: str) -> list[str]:
    if ptr == "":
        return []
    if not ptr.startswith("/"):
        raise ValueError(f"JSON pointer must start with '/': {ptr!r}")
    return [p.replace("~1", "/").replace("~0", "~") for p in ptr[1:].split("/")]


def resolve_pointer(doc: Any, ptr: str) -> Any:
    cur = doc
    for part in pointer_parts(ptr):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict):
            cur = cur[part]
        else:
            raise KeyError(ptr)
    return cur


# --- reports ---------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    severity: str
    path: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"severity": self.severity, "path": self.path, "message": self.message}


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == ERROR]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, path: str, message: str) -> None:
        self.issues.append(Issue(ERROR, path, message))

    def warn(self, path: str, message: str) -> None:
        self.issues.append(Issue(WARNING, path, message))

    def to_dict(self) -> dict[str, Any]:
        return {
            "errors": len(self.errors),
            "warnings": len(self.warnings),
            "issues": [i.to_dict() for i in self.issues],
        }

    def render(self) -> str:
        lines = [f"{i.severity}: {i.path or '/'}: {i.message}" for i in self.issues]
        lines.append(f"{len(self.errors)} errors, {len(self.warnings)} warnings")
        return "\n".join(lines) + "\n"


# --- document <-> model ----------------------------------------------------

_TOP_KEYS = {"version", "nodes", "people"}
_NODE_KEYS = {"zone", "neighbors", "semantic"}
_SEMANTIC_KEYS = {"label", "description", "entities"}
_ENTITY_KEYS = {"name", "kind", "state", "affordances", "objects"}
_OBJECT_KEYS = {"name", "category", "owner", "attributes"}
_PERSON_KEYS = {"name", "location"}


def _extra(data: dict[str, Any], known: set[str]) -> dict[str, Any]:
    return {k: copy.deepcopy(v) for k, v in data.items() if k not in known}


def object_from_dict(data: dict[str, Any]) -> ObjectItem:
    return ObjectItem(
        name=data["name"],
        category=data["category"],
        owner=data.get("owner"),
        attributes=dict(data.get("attributes") or {}),
        extra=_extra(data, _OBJECT_KEYS),
    )


def payload_from_dict(data: dict[str, Any]) -> SemanticPayload:
    entities = [
        Entity(
            name=e["name"],
            kind=e["kind"],
            state=e.get("state"),
            affordances=frozenset(e.get("affordances", ())),
            objects=[object_from_dict(o) for o in e.get("objects", ())],
            extra=_extra(e, _ENTITY_KEYS),
        )
        for e in data.get("entities", ())
    ]
    return SemanticPayload(
        label=data["label"],
        entities=entities,
        description=data.get("description"),
        extra=_extra(data, _SEMANTIC_KEYS),
    )


def map_from_document(doc: dict[str, Any]) -> SentMap:
    """Build a map from an already-validated document."""
    nodes = {}
    for node_id, nd in doc["nodes"].items():
        sem = nd.get("semantic")
        nodes[node_id] = NavNode(
            id=node_id,
            zone=nd["zone"],
            neighbors=list(nd["neighbors"]),
            semantic=payload_from_dict(sem) if sem is not None else None,
            extra=_extra(nd, _NODE_KEYS),
        )
    people = [Person(p["name"], p.get("location"), _extra(p, _PERSON_KEYS)) for p in doc["people"]]
    return SentMap(nodes=nodes, people=people, version=doc["version"], extra=_extra(doc, _TOP_KEYS))


def object_to_dict(obj: ObjectItem) -> dict[str, Any]:
    out = copy.deepcopy(obj.extra)
    out["name"] = obj.name
    out["category"] = obj.category
    if obj.owner is not None:
        out["owner"] = obj.owner
    if obj.attributes:
        out["attributes"] = dict(obj.attributes)
    return out


def payload_to_dict(sem: SemanticPayload) -> dict[str, Any]:
    out = copy.deepcopy(sem.extra)
    out["label"] = sem.label
    if sem.description is not None:
        out["description"] = sem.description
    entities = []
    for ent in sem.entities:
        ed = copy.deepcopy(ent.extra)
        ed["name"] = ent.name
        ed["kind"] = ent.kind
        if ent.state is not None:
            ed["state"] = ent.state
        ed["affordances"] = sorted(ent.affordances)
        ed["objects"] = [object_to_dict(o) for o in ent.objects]
        entities.append(ed)
    out["entities"] = entities
    return out


def map_to_document(m: SentMap) -> dict[str, Any]:
    nodes = {}
    for node_id, node in m.nodes.items():
        nd = copy.deepcopy(node.extra)
        nd["zone"] = node.zone
        nd["neighbors"] = list(node.neighbors)
        if node.semantic is not None:
            nd["semantic"] = payload_to_dict(node.semantic)
        nodes[node_id] = nd
    people = []
    for p in m.people:
        pd = copy.deepcopy(p.extra)
        pd["name"] = p.name
        if p.location is not None:
            pd["location"] = p.location
        people.append(pd)
    out = copy.deepcopy(m.extra)
    out.update(version=m.version, nodes=nodes, people=people)
    return out


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def serialize_map(m: SentMap) -> str:
    return canonical_json(map_to_document(m))


# --- validation ------------------------------------------------------------


def _decode(doc: str | bytes) -> Any:
    if isinstance(doc, bytes):
        try:
            doc = doc.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"invalid UTF-8: {exc.reason}", exc.start) from None
    try:
        return json.loads(doc)
    except json.JSONDecodeError as exc:
        raise MalformedJson(exc.msg, exc.pos, exc.lineno, exc.colno) from None


def _schema_issues(validator: Draft202012Validator, data: Any, prefix: tuple = ()) -> list[Issue]:
    found = []
    for err in validator.iter_errors(data):
        found.append(Issue(ERROR, pointer(*prefix, *err.absolute_path), err.message))
    return sorted(found, key=lambda i: (i.path, i.message))


def _check_payload(report: ValidationReport, sem: dict[str, Any], base: tuple, people: set[str] | None) -> None:
    seen_entities: set[str] = set()
    names_at_node: dict[str, int] = {}
    for ei, ent in enumerate(sem["entities"]):
        epath = (*base, "entities", ei)
        if ent["name"] in seen_entities:
            report.error(pointer(*epath, "name"), f"duplicate entity name {ent['name']!r}")
        seen_entities.add(ent["name"])
        affs = set(ent["affordances"])
        if (OPENABLE in affs) != (CLOSABLE in affs):
            report.error(pointer(*epath, "affordances"), "openable and closable must appear together")
        if "state" in ent and not {OPENABLE, CLOSABLE} <= affs:
            report.error(pointer(*epath, "state"), "stateful entity must be openable and closable")
        seen_objects: set[str] = set()
        for oi, obj in enumerate(ent["objects"]):
            opath = (*epath, "objects", oi)
            if obj["name"] in seen_objects:
                report.error(pointer(*opath, "name"), f"duplicate object name {obj['name']!r} in entity")
            seen_objects.add(obj["name"])
            names_at_node[obj["name"]] = names_at_node.get(obj["name"], 0) + 1
            owner = obj.get("owner")
            if owner is not None and people is not None and owner not in people:
                report.error(pointer(*opath, "owner"), f"owner {owner!r} is not a declared person")
    for name, count in sorted(names_at_node.items()):
        if count > 1 and len(sem["entities"]) > 1:
            report.warn(pointer(*base), f"object name {name!r} appears {count} times at this node")
    if not sem["entities"]:
        report.warn(pointer(*base), "semantic payload has no entities")


def validate_document(doc: Any) -> ValidationReport:
    """Validate an already-decoded Scene JSON value."""
    report = ValidationReport(_schema_issues(_SCENE_VALIDATOR, doc))
    if not report.ok:
        return report

    nodes: dict[str, Any] = doc["nodes"]
    people = doc["people"]
    person_names: set[str] = set()
    for pi, person in enumerate(people):
        if person["name"] in person_names:
            report.error(pointer("people", pi, "name"), f"duplicate person {person['name']!r}")
        person_names.add(person["name"])
        loc = person.get("location")
        if loc is not None and loc not in nodes:
            report.error(pointer("people", pi, "location"), f"location {loc!r} is not a node")

    in_degree = {k: 0 for k in nodes}
    for node_id in sorted(nodes):
        nd = nodes[node_id]
        seen: set[str] = set()
        for ti, target in enumerate(nd["neighbors"]):
            path = pointer("nodes", node_id, "neighbors", ti)
            if target == node_id:
                report.error(path, f"self-loop on {node_id!r}")
            elif target not in nodes:
                report.error(path, f"edge to missing node {target!r}")
            else:
                in_degree[target] += 1
            if target in seen:
                report.warn(path, f"duplicate edge to {target!r}")
            seen.add(target)
        if "semantic" in nd:
            _check_payload(report, nd["semantic"], ("nodes", node_id, "semantic"), person_names)

    if len(nodes) > 1:
        for node_id in sorted(nodes):
            if in_degree[node_id] == 0:
                report.warn(pointer("nodes", node_id), "unreachable: no other node leads here")
    return report


def validate_map(doc: str | bytes) -> ValidationReport:
    """Validate raw Scene JSON text. Never raises; problems become issues."""
    try:
        data = _decode(doc)
    except MalformedJson as exc:
        return ValidationReport([Issue(ERROR, "", str(exc))])
    return validate_document(data)


def validate_payload(data: Any, people: Iterable[str] | None = None) -> ValidationReport:
    """Validate a standalone semantic payload (the describer's output)."""
    report = ValidationReport(_schema_issues(_SEMANTIC_VALIDATOR, data))
    if report.ok:
        _check_payload(report, data, (), set(people) if people is not None else None)
    return report


def parse_map(doc: str | bytes) -> SentMap:
    data = _decode(doc)
    report = validate_document(data)
    if not report.ok:
        raise SchemaViolation(report)
    return map_from_document(data)


def parse_payload(data: Any, people: Iterable[str] | None = None) -> SemanticPayload:
    report = validate_payload(data, people)
    if not report.ok:
        raise SchemaViolation(report)
    return payload_from_dict(data)


# --- operator edits --------------------------------------------------------

EDIT_OPS = (
    "add-object",
    "remove-object",
    "set-owner",
    "set-entity-state",
    "rename-label",
    "add-person",
    "set-person-location",
    "set-description",
)

# number of target segments each op expects: node / entity / object / person
_TARGET_ARITY = {
    "add-object": 2,
    "remove-object": 3,
    "set-owner": 3,
    "set-entity-state": 2,
    "rename-label": 1,
    "add-person": 0,
    "set-person-location": 1,
    "set-description": 1,
}


@dataclass(frozen=True)
class EditCommand:
    """One operator correction.

    ``target`` is either a tuple of names (``(node,)``, ``(node, entity)``,
    ``(node, entity, object)`` or ``(person,)`` depending on ``op``) or a
    JSON pointer into the Scene JSON document.
    """

    op: str
    target: tuple[str, ...] | str = ()
    value: Any = None

    def __post_init__(self) -> None:
        if self.op not in EDIT_OPS:
            raise InvalidEditValue(f"unknown edit op {self.op!r}")
        if isinstance(self.target, list):
            object.__setattr__(self, "target", tuple(self.target))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EditCommand:
        target = data.get("target", ())
        return cls(op=data["op"], target=tuple(target) if isinstance(target, list) else target, value=data.get("value"))

    def to_dict(self) -> dict[str, Any]:
        target = list(self.target) if isinstance(self.target, tuple) else self.target
        return {"op": self.op, "target": target, "value": self.value}


def _target_from_pointer(m: SentMap, cmd: EditCommand) -> tuple[str, ...]:
    try:
        parts = pointer_parts(cmd.target)  # type: ignore[arg-type]
    except ValueError as exc:
        raise UnknownTarget(cmd.target, str(exc)) from None
    if parts[:1] == ["people"]:
        if len(parts) == 1:
            return ()
        try:
            return (m.people[int(parts[1])].name,)
        except (ValueError, IndexError):
            raise UnknownTarget(cmd.target, "no such person") from None
    if parts[:1] != ["nodes"] or len(parts) < 2:
        raise UnknownTarget(cmd.target)
    node = m.nodes.get(parts[1])
    if node is None:
        raise UnknownTarget(cmd.target, "no such node")
    out = [node.id]
    rest = parts[2:]
    if len(rest) >= 3 and rest[:2] == ["semantic", "entities"] and node.semantic is not None:
        try:
            ent = node.semantic.entities[int(rest[2])]
            out.append(ent.name)
            if len(rest) >= 5 and rest[3] == "objects":
                out.append(ent.objects[int(rest[4])].name)
        except (ValueError, IndexError):
            raise UnknownTarget(cmd.target, "index out of range") from None
    return tuple(out)


def _resolve(m: SentMap, cmd: EditCommand) -> tuple[str, ...]:
    target = _target_from_pointer(m, cmd) if isinstance(cmd.target, str) else tuple(cmd.target)
    want = _TARGET_ARITY[cmd.op]
    if len(target) < want:
        raise UnknownTarget(cmd.target, f"{cmd.op} needs {want} target segment(s)")
    return target[:want]


def _require_str(cmd: EditCommand, optional: bool = False) -> str | None:
    if cmd.value is None and optional:
        return None
    if not isinstance(cmd.value, str) or not cmd.value:
        raise InvalidEditValue(f"{cmd.op} expects a non-empty string value, got {cmd.value!r}")
    return cmd.value


def apply_edit(m: SentMap, cmd: EditCommand) -> SentMap:
    """Apply one edit to a copy of ``m`` and revalidate the result."""
    target = _resolve(m, cmd)
    out = copy.deepcopy(m)

    def node_payload(node_id: str) -> SemanticPayload:
        node = out.nodes.get(node_id)
        if node is None:
            raise UnknownTarget(cmd.target, f"no node {node_id!r}")
        if node.semantic is None:
            raise UnknownTarget(cmd.target, f"node {node_id!r} has no semantic payload")
        return node.semantic

    def entity(node_id: str, name: str) -> Entity:
        ent = node_payload(node_id).entity_named(name)
        if ent is None:
            raise UnknownTarget(cmd.target, f"no entity {name!r} at {node_id!r}")
        return ent

    def item(node_id: str, ent_name: str, name: str) -> ObjectItem:
        obj = entity(node_id, ent_name).object_named(name)
        if obj is None:
            raise UnknownTarget(cmd.target, f"no object {name!r} in {ent_name!r}")
        return obj

    op = cmd.op
    if op == "add-object":
        ent = entity(*target)
        if not isinstance(cmd.value, dict):
            raise InvalidEditValue("add-object expects an object mapping")
        report = ValidationReport(_schema_issues(Draft202012Validator(_OBJECT_SCHEMA), cmd.value))
        if not report.ok:
            raise InvariantBroken(report)
        ent.objects.append(object_from_dict(cmd.value))
    elif op == "remove-object":
        ent = entity(target[0], target[1])
        obj = item(*target)
        ent.objects.remove(obj)
    elif op == "set-owner":
        item(*target).owner = _require_str(cmd, optional=True)
    elif op == "set-entity-state":
        if cmd.value is not None and cmd.value not in ENTITY_STATES:
            raise InvalidEditValue(f"entity state must be one of {ENTITY_STATES}, got {cmd.value!r}")
        entity(*target).state = cmd.value
    elif op == "rename-label":
        node_payload(target[0]).label = _require_str(cmd)  # type: ignore[assignment]
    elif op == "set-description":
        node_payload(target[0]).description = _require_str(cmd, optional=True)
    elif op == "add-person":
        value = cmd.value
        if isinstance(value, str):
            value = {"name": value}
        if not isinstance(value, dict) or not isinstance(value.get("name"), str) or not value["name"]:
            raise InvalidEditValue("add-person expects {'name': ..., 'location'?: ...}")
        out.people.append(Person(value["name"], value.get("location"), _extra(value, _PERSON_KEYS)))
    elif op == "set-person-location":
        person = out.person(target[0])
        if person is None:
            raise UnknownTarget(cmd.target, f"no person {target[0]!r}")
        person.location = _require_str(cmd, optional=True)

    report = validate_document(map_to_document(out))
    if not report.ok:
        raise InvariantBroken(report)
    return out


def apply_edits(m: SentMap, cmds: Sequence[EditCommand]) -> SentMap:
    for cmd in cmds:
        m = apply_edit(m, cmd)
    return m
