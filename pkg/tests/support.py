"""Independent oracles and generators shared by the test modules.

Nothing here imports the code under test beyond the plain data classes, so
the oracles can disagree with the implementation when it is wrong.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Any

from sentmap.core import (
    CLOSABLE,
    CLOSED,
    OPEN,
    OPENABLE,
    SUPPORTS_PICK,
    SUPPORTS_PLACE,
    Entity,
    NavNode,
    ObjectItem,
    Person,
    SemanticPayload,
    SentMap,
)

# --- random maps ------------------------------------------------------------

_ZONES = ["office", "lounge", "kitchen", "hall", "lab"]
_KINDS = ["table", "desk", "fridge", "cabinet", "shelf", "counter", "couch"]
_CATEGORIES = ["mug", "sponge", "drink", "tissue", "book", "snack", "coffee", "remote"]
_PEOPLE = ["Bob", "Alice", "Chen", "Dana"]
_TEXT = ["plain", "ünïcødé", "with space", "quote\"d", "tab\tbed", "日本"]


def random_map(rng: random.Random, max_nodes: int = 8) -> SentMap:
    """A valid map with random topology, payloads, people and extras."""
    n = rng.randint(0, max_nodes)
    ids = [f"n{i}_{rng.choice(_ZONES)}" for i in range(n)]
    people = [Person(p, rng.choice(ids + [None]) if ids else None) for p in rng.sample(_PEOPLE, rng.randint(0, 3))]
    names = [p.name for p in people]
    nodes: dict[str, NavNode] = {}
    for nid in ids:
        others = [o for o in ids if o != nid]
        neighbors = sorted(rng.sample(others, rng.randint(0, len(others))))
        semantic = _random_payload(rng, names) if rng.random() < 0.7 else None
        extra = {"floor": rng.randint(0, 3)} if rng.random() < 0.2 else {}
        nodes[nid] = NavNode(nid, nid.split("_", 1)[1], neighbors, semantic, extra)
    extra = {"site": rng.choice(_TEXT)} if rng.random() < 0.2 else {}
    return SentMap(nodes, people, "1", extra)


def _random_payload(rng: random.Random, people: list[str]) -> SemanticPayload:
    entities = []
    for k in range(rng.randint(0, 3)):
        kind = rng.choice(_KINDS)
        openable = kind in ("fridge", "cabinet") or rng.random() < 0.1
        affordances = {SUPPORTS_PLACE, SUPPORTS_PICK} if rng.random() < 0.9 else {SUPPORTS_PICK}
        state = None
        if openable:
            affordances |= {OPENABLE, CLOSABLE}
            state = rng.choice([OPEN, CLOSED])
        objects = []
        for j in range(rng.randint(0, 3)):
            attrs = {"color": rng.choice(["red", "blue"])} if rng.random() < 0.3 else {}
            owner = rng.choice(people) if people and rng.random() < 0.3 else None
            objects.append(ObjectItem(f"{rng.choice(_CATEGORIES)} {k}{j}", rng.choice(_CATEGORIES), owner, attrs))
        entities.append(Entity(f"{kind}{k}", kind, state, frozenset(affordances), objects))
    desc = rng.choice(_TEXT) if rng.random() < 0.5 else None
    return SemanticPayload(rng.choice(_TEXT), entities, desc)


def random_digraph(rng: random.Random, max_nodes: int = 8) -> dict[str, list[str]]:
    n = rng.randint(1, max_nodes)
    ids = [chr(ord("a") + i) for i in range(n)]
    rng.shuffle(ids)
    density = rng.random()
    return {v: [w for w in ids if w != v and rng.random() < density] for v in ids}


def graph_map(adj: dict[str, list[str]]) -> SentMap:
    return SentMap({v: NavNode(v, "z", list(ns)) for v, ns in adj.items()})


# --- path oracle ------------------------------------------------------------


def all_simple_paths(adj: dict[str, list[str]], src: str, dst: str) -> list[list[str]]:
    out: list[list[str]] = []

    def walk(path: list[str]) -> None:
        if path[-1] == dst:
            out.append(list(path))
            return
        for w in adj[path[-1]]:
            if w not in path:
                path.append(w)
                walk(path)
                path.pop()

    walk([src])
    return out


def brute_shortest(adj: dict[str, list[str]], src: str, dst: str) -> list[str] | None:
    """Fewest hops, ties broken by the lexicographically smallest node sequence."""
    paths = all_simple_paths(adj, src, dst)
    if not paths:
        return None
    best = min(len(p) for p in paths)
    return min(p for p in paths if len(p) == best)


# --- reference simulator ----------------------------------------------------


def _reachable(m: SentMap, src: str, dst: str) -> bool:
    seen, queue = {src}, deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            return True
        for w in m.nodes[v].neighbors:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


class RefWorld:
    """A second, deliberately naive implementation of the skill semantics.

    Only answers accept/reject; objects are tracked as a dict from
    (origin node, origin entity, name) to a location tuple.
    """

    def __init__(self, m: SentMap, start: str, capacity: int = 1):
        self.m = m
        self.capacity = capacity
        self.robot = start
        self.states = {
            (nid, e.name): e.state
            for nid, node in m.nodes.items()
            if node.semantic
            for e in node.semantic.entities
        }
        self.where: dict[tuple[str, str, str], tuple[Any, ...]] = {}
        for nid, node in m.nodes.items():
            for e in node.semantic.entities if node.semantic else []:
                for o in e.objects:
                    self.where[(nid, e.name, o.name)] = ("at", nid, e.name)
        self.people = {p.name: p.location for p in m.people}

    def _entity(self, ref: str) -> Entity | None:
        name, _, node = ref.partition("@")
        node = node or self.robot
        if node != self.robot or node not in self.m.nodes:
            return None
        sem = self.m.nodes[node].semantic
        for e in sem.entities if sem else []:
            if e.name == name:
                return e
        return None

    def _held(self) -> list[tuple[str, str, str]]:
        return sorted(k for k, v in self.where.items() if v == ("held",))

    def apply(self, skill: str, args: tuple[str, ...]) -> bool:
        """Mutate and return True if the step is legal, else leave untouched."""
        if skill == "goto":
            (node,) = args
            if node not in self.m.nodes or not _reachable(self.m, self.robot, node):
                return False
            self.robot = node
            return True
        if skill == "pick":
            (name,) = args
            here = sorted(k for k, v in self.where.items() if k[2] == name and v[:2] == ("at", self.robot))
            if not here or self._held() and len(self._held()) >= self.capacity:
                return False
            key = here[0]
            ent = self._entity(self.where[key][2])
            if ent is None or self.states[(self.robot, ent.name)] == CLOSED or SUPPORTS_PICK not in ent.affordances:
                return False
            self.where[key] = ("held",)
            return True
        if skill == "place":
            name, ref = args
            ent = self._entity(ref)
            held = [k for k in self._held() if k[2] == name]
            if ent is None or not held or self.states[(self.robot, ent.name)] == CLOSED:
                return False
            if SUPPORTS_PLACE not in ent.affordances:
                return False
            self.where[held[0]] = ("at", self.robot, ent.name)
            return True
        if skill in ("open", "close"):
            (ref,) = args
            ent = self._entity(ref)
            need = OPENABLE if skill == "open" else CLOSABLE
            if ent is None or need not in ent.affordances:
                return False
            self.states[(self.robot, ent.name)] = OPEN if skill == "open" else CLOSED
            return True
        if skill == "give":
            name, person = args
            held = [k for k in self._held() if k[2] == name]
            if not held or person not in self.people or self.people[person] != self.robot:
                return False
            self.where[held[0]] = ("given", person)
            return True
        return False


def ref_accepts(m: SentMap, start: str, steps: list[tuple[str, tuple[str, ...]]]) -> bool:
    world = RefWorld(m, start)
    return all(world.apply(s, a) for s, a in steps)


# criterion number -> (passed, one-line summary); printed by conftest
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
