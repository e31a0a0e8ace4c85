"""In-memory SENT-Map model and pure graph operations.

A map is a directed graph of navigation nodes. Some nodes carry a
:class:`SemanticPayload` describing nearby stationary entities and the
objects they hold. Every operation here treats its input map as a value:
mutating operations return a fresh copy and never touch the argument, so a
constructed map can be shared read-only between threads.
"""

from __future__ import annotations

import copy
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from sentmap.errors import DanglingEdge, DuplicateNodeId, SelfLoop, UnknownNode, Unreachable

FORMAT_VERSION = "1"

OPEN = "open"
CLOSED = "closed"
ENTITY_STATES = (OPEN, CLOSED)

OPENABLE = "openable"
CLOSABLE = "closable"
SUPPORTS_PLACE = "supports-place"
SUPPORTS_PICK = "supports-pick"
AFFORDANCES = (OPENABLE, CLOSABLE, SUPPORTS_PLACE, SUPPORTS_PICK)

_NODE_ID_RE = re.compile(r"^\S+$")


def is_valid_node_id(value: Any) -> bool:
    return isinstance(value, str) and bool(_NODE_ID_RE.match(value))


@dataclass
class ObjectItem:
    """A movable, graspable item such as a mug or a sponge."""

    name: str
    category: str
    owner: str | None = None
    attributes: dict[str, str] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class Entity:
    """A stationary interactable (fridge, table, drawer) at a semantic node.

    ``state`` is only meaningful for openable containers. ``affordances``
    lists the interactions the robot may perform on it.
    """

    name: str
    kind: str
    state: str | None = None
    affordances: frozenset[str] = frozenset()
    objects: list[ObjectItem] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def object_named(self, name: str) -> ObjectItem | None:
        for obj in self.objects:
            if obj.name == name:
                return obj
        return None


@dataclass
class SemanticPayload:
    label: str
    entities: list[Entity] = field(default_factory=list)
    description: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def entity_named(self, name: str) -> Entity | None:
        for ent in self.entities:
            if ent.name == name:
                return ent
        return None


@dataclass
class NavNode:
    id: str
    zone: str
    neighbors: list[str] = field(default_factory=list)
    semantic: SemanticPayload | None = None
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class Person:
    name: str
    location: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class SentMap:
    nodes: dict[str, NavNode] = field(default_factory=dict)
    people: list[Person] = field(default_factory=list)
    version: str = FORMAT_VERSION
    extra: dict[str, Any] = field(default_factory=dict)

    def node(self, node_id: str) -> NavNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def person(self, name: str) -> Person | None:
        for p in self.people:
            if p.name == name:
                return p
        return None

    def semantic_nodes(self) -> list[NavNode]:
        return [self.nodes[k] for k in sorted(self.nodes) if self.nodes[k].semantic is not None]

    def zones(self) -> set[str]:
        return {n.zone for n in self.nodes.values()}

    def edges(self) -> set[tuple[str, str]]:
        return {(n.id, t) for n in self.nodes.values() for t in n.neighbors}

    def iter_objects(self) -> Iterator[tuple[str, str, ObjectItem]]:
        """Yield ``(node_id, entity_name, object)`` in deterministic node-id order."""
        for node_id in sorted(self.nodes):
            sem = self.nodes[node_id].semantic
            if sem is None:
                continue
            for ent in sem.entities:
                for obj in ent.objects:
                    yield node_id, ent.name, obj

    def iter_entities(self) -> Iterator[tuple[str, Entity]]:
        for node_id in sorted(self.nodes):
            sem = self.nodes[node_id].semantic
            if sem is not None:
                for ent in sem.entities:
                    yield node_id, ent

    def object_count(self) -> int:
        return sum(1 for _ in self.iter_objects())


@dataclass(frozen=True)
class ObjectQuery:
    """Match objects by any combination of name, category, owner and attributes."""

    name: str | None = None
    category: str | None = None
    owner: str | None = None
    attributes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.name is None and self.category is None and self.owner is None and not self.attributes:
            raise ValueError("object query needs at least one of name, category, owner")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ObjectQuery:
        attrs = data.get("attributes") or {}
        return cls(
            name=data.get("name"),
            category=data.get("category"),
            owner=data.get("owner"),
            attributes=tuple(sorted((str(k), str(v)) for k, v in attrs.items())),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for key in ("name", "category", "owner"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.attributes:
            out["attributes"] = dict(self.attributes)
        return out

    def without_owner(self) -> ObjectQuery | None:
        if self.name is None and self.category is None and not self.attributes:
            return None
        return ObjectQuery(name=self.name, category=self.category, attributes=self.attributes)

    def matches(self, obj: ObjectItem) -> bool:
        if self.name is not None and obj.name != self.name:
            return False
        if self.category is not None and obj.category != self.category:
            return False
        if self.owner is not None and obj.owner != self.owner:
            return False
        return all(obj.attributes.get(k) == v for k, v in self.attributes)


# --- construction ----------------------------------------------------------


def check_invariants(m: SentMap) -> None:
    """Raise on any edge-closure or self-loop violation. Cheap full scan."""
    for node in m.nodes.values():
        for t in node.neighbors:
            if t == node.id:
                raise SelfLoop(node.id)
            if t not in m.nodes:
                raise DanglingEdge(t, node.id)


def add_nav_nodes(m: SentMap, nodes: Iterable[NavNode]) -> SentMap:
    """Insert a batch of nodes whose edges may reference each other."""
    out = copy.deepcopy(m)
    batch = [copy.deepcopy(n) for n in nodes]
    for node in batch:
        if not is_valid_node_id(node.id):
            raise ValueError(f"invalid node id {node.id!r}")
        if node.id in out.nodes:
            raise DuplicateNodeId(node.id)
        out.nodes[node.id] = node
    for node in batch:
        for t in node.neighbors:
            if t == node.id:
                raise SelfLoop(node.id)
            if t not in out.nodes:
                raise DanglingEdge(t, node.id)
    return out


def add_nav_node(m: SentMap, node: NavNode) -> SentMap:
    return add_nav_nodes(m, [node])


def add_edge(m: SentMap, source: str, target: str, bidirectional: bool = False) -> SentMap:
    for nid in (source, target):
        if nid not in m.nodes:
            raise UnknownNode(nid)
    if source == target:
        raise SelfLoop(source)
    out = copy.deepcopy(m)
    pairs = [(source, target), (target, source)] if bidirectional else [(source, target)]
    for a, b in pairs:
        if b not in out.nodes[a].neighbors:
            out.nodes[a].neighbors.append(b)
    return out


# --- queries ---------------------------------------------------------------


def _hop_distances_to(m: SentMap, target: str) -> dict[str, int]:
    reverse: dict[str, list[str]] = {k: [] for k in m.nodes}
    for node in m.nodes.values():
        for t in node.neighbors:
            reverse[t].append(node.id)
    dist = {target: 0}
    queue = deque([target])
    while queue:
        cur = queue.popleft()
        for prev in reverse[cur]:
            if prev not in dist:
                dist[prev] = dist[cur] + 1
                queue.append(prev)
    return dist


def shortest_path(m: SentMap, current: str, target: str) -> list[str]:
    """Minimal-hop directed path from ``current`` to ``target``, endpoints included.

    Among equally short paths, the one whose successive node ids are
    lexicographically smallest is returned.
    """
    for nid in (current, target):
        if nid not in m.nodes:
            raise UnknownNode(nid)
    dist = _hop_distances_to(m, target)
    if current not in dist:
        raise Unreachable(current, target)
    path = [current]
    while path[-1] != target:
        here = path[-1]
        step = min(t for t in m.nodes[here].neighbors if dist.get(t) == dist[here] - 1)
        path.append(step)
    return path


def find_object(m: SentMap, query: ObjectQuery) -> list[tuple[str, str, ObjectItem]]:
    return [(nid, ent, obj) for nid, ent, obj in m.iter_objects() if query.matches(obj)]


# --- ablations -------------------------------------------------------------


def strip_semantics(m: SentMap) -> SentMap:
    """Baseline map: keep nodes, zones, edges, labels and entity names only.

    Object lists, entity states, descriptions, ownership and people's
    locations are removed; graph structure is untouched.
    """
    out = copy.deepcopy(m)
    for node in out.nodes.values():
        sem = node.semantic
        if sem is None:
            continue
        sem.description = None
        sem.extra = {}
        for ent in sem.entities:
            ent.objects = []
            ent.state = None
            ent.extra = {}
    for person in out.people:
        person.location = None
    return out


def strip_ownership(m: SentMap) -> SentMap:
    """Drop every object's owner tag, leaving everything else intact."""
    out = copy.deepcopy(m)
    for _, _, obj in out.iter_objects():
        obj.owner = None
    return out
