from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentmap.core import (
    NavNode,
    ObjectQuery,
    SentMap,
    add_edge,
    add_nav_node,
    add_nav_nodes,
    check_invariants,
    find_object,
    shortest_path,
    strip_ownership,
    strip_semantics,
)
from sentmap.errors import DanglingEdge, DuplicateNodeId, SelfLoop, UnknownNode, Unreachable
from support import brute_shortest, graph_map, random_digraph, random_map


def line_map(*ids: str) -> SentMap:
    nodes = {a: NavNode(a, "z", [b]) for a, b in zip(ids, ids[1:])}
    nodes[ids[-1]] = NavNode(ids[-1], "z")
    return SentMap(nodes)


# --- construction ---


def test_add_single_node_to_empty_map():
    m = add_nav_node(SentMap(), NavNode("kitchen_sink", "kitchen"))
    assert list(m.nodes) == ["kitchen_sink"]
    assert m.edges() == set()


def test_ninth_semantic_node_completes_reference_size(ref_map):
    last = sorted(ref_map.nodes)[-1]
    node = ref_map.nodes[last]
    rest = SentMap({k: v for k, v in ref_map.nodes.items() if k != last}, ref_map.people)
    for other in rest.nodes.values():
        other.neighbors = [n for n in other.neighbors if n != last]
    assert len(rest.semantic_nodes()) == 8
    grown = add_nav_node(rest, node)
    assert len(grown.semantic_nodes()) == 9
    assert grown.zones() == {"office", "lounge", "kitchen"}


def test_dangling_neighbor_rejected():
    with pytest.raises(DanglingEdge) as info:
        add_nav_node(SentMap(), NavNode("a", "z", ["ghost"]))
    assert info.value.target == "ghost"


def test_duplicate_node_rejected():
    m = add_nav_node(SentMap(), NavNode("a", "z"))
    with pytest.raises(DuplicateNodeId):
        add_nav_node(m, NavNode("a", "z"))


def test_batch_insert_allows_mutual_edges():
    m = add_nav_nodes(SentMap(), [NavNode("a", "z", ["b"]), NavNode("b", "z", ["a"])])
    assert m.edges() == {("a", "b"), ("b", "a")}


def test_add_node_does_not_mutate_input():
    m = SentMap()
    add_nav_node(m, NavNode("a", "z"))
    assert m.nodes == {}


def test_add_edge_bidirectional():
    m = add_nav_nodes(SentMap(), [NavNode("A", "z"), NavNode("B", "z")])
    m = add_edge(m, "A", "B", bidirectional=True)
    assert m.nodes["A"].neighbors == ["B"]
    assert m.nodes["B"].neighbors == ["A"]


def test_add_edge_idempotent():
    m = add_nav_nodes(SentMap(), [NavNode("A", "z"), NavNode("B", "z")])
    once = add_edge(m, "A", "B")
    assert add_edge(once, "A", "B") == once
    assert once.edges() == {("A", "B")}


def test_add_edge_errors():
    m = add_nav_node(SentMap(), NavNode("A", "z"))
    with pytest.raises(SelfLoop):
        add_edge(m, "A", "A")
    with pytest.raises(UnknownNode):
        add_edge(m, "A", "B")


def test_reference_invariants(ref_map):
    check_invariants(ref_map)
    assert len(ref_map.semantic_nodes()) == 9
    assert ref_map.zones() == {"office", "lounge", "kitchen"}
    assert ref_map.object_count() == 23


def test_exactly_one_table_holds_tissue(ref_map):
    tables = [(n, e) for n, e in ref_map.iter_entities() if e.kind == "table"]
    assert len(tables) >= 3
    with_tissue = [(n, e) for n, e in tables if any(o.category == "tissue" for o in e.objects)]
    assert len(with_tissue) == 1


# --- shortest path ---


def test_shortest_path_identity():
    m = line_map("X", "Y")
    assert shortest_path(m, "X", "X") == ["X"]


def test_shortest_path_line():
    assert shortest_path(line_map("A", "B", "C"), "A", "C") == ["A", "B", "C"]


def test_shortest_path_respects_direction():
    with pytest.raises(Unreachable):
        shortest_path(line_map("A", "B", "C"), "C", "A")


def test_shortest_path_unknown_node():
    with pytest.raises(UnknownNode):
        shortest_path(line_map("A", "B"), "A", "Z")


def test_shortest_path_tie_break_is_lexicographic():
    m = graph_map({"s": ["m2", "m1"], "m1": ["t"], "m2": ["t"], "t": []})
    assert shortest_path(m, "s", "t") == ["s", "m1", "t"]


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_shortest_path_matches_brute_force(rng):
    adj = random_digraph(rng)
    m = graph_map(adj)
    for src in adj:
        for dst in adj:
            expected = brute_shortest(adj, src, dst)
            if expected is None:
                with pytest.raises(Unreachable):
                    shortest_path(m, src, dst)
            else:
                assert shortest_path(m, src, dst) == expected


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_shortest_path_is_a_real_walk(rng):
    adj = random_digraph(rng)
    m = graph_map(adj)
    src, dst = rng.choice(list(adj)), rng.choice(list(adj))
    try:
        path = shortest_path(m, src, dst)
    except Unreachable:
        return
    assert path[0] == src and path[-1] == dst
    assert all(b in adj[a] for a, b in zip(path, path[1:]))
    assert len(set(path)) == len(path)


# --- find_object ---


def test_find_sponge_at_kitchen_sink(ref_map):
    hits = find_object(ref_map, ObjectQuery(category="sponge"))
    assert [h[0] for h in hits] == ["kitchen_sink"]


def test_find_coffee_in_office(ref_map):
    hits = find_object(ref_map, ObjectQuery(category="coffee"))
    assert len(hits) == 1
    assert ref_map.nodes[hits[0][0]].zone == "office"
    assert hits[0][1] == "tray"


def test_find_bobs_two_items(ref_map):
    assert len(find_object(ref_map, ObjectQuery(owner="Bob"))) == 2


def test_query_needs_a_field():
    with pytest.raises(ValueError):
        ObjectQuery()


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_find_object_is_exhaustive_and_sound(rng):
    m = random_map(rng)
    objects = list(m.iter_objects())
    if not objects:
        return
    probe = rng.choice(objects)[2]
    query = ObjectQuery(category=probe.category, owner=probe.owner if rng.random() < 0.5 else None)
    hits = find_object(m, query)
    expected = [
        (n, e, o)
        for n, e, o in objects
        if o.category == query.category and (query.owner is None or o.owner == query.owner)
    ]
    assert hits == expected


# --- ablations ---


def test_strip_semantics_reference(ref_map):
    stripped = strip_semantics(ref_map)
    assert stripped.object_count() == 0
    labels = lambda mm: sorted(n.semantic.label for n in mm.semantic_nodes())  # noqa: E731
    assert labels(stripped) == labels(ref_map)
    assert stripped.edges() == ref_map.edges()
    assert find_object(stripped, ObjectQuery(category="tissue")) == []
    assert all(p.location is None for p in stripped.people)
    assert ref_map.object_count() == 23


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_strips_are_idempotent(rng):
    m = random_map(rng)
    once = strip_semantics(m)
    assert strip_semantics(once) == once
    owners = strip_ownership(m)
    assert strip_ownership(owners) == owners
    assert all(o.owner is None for _, _, o in owners.iter_objects())
    assert owners.object_count() == m.object_count()


def test_strip_ownership_keeps_people(ref_map):
    stripped = strip_ownership(ref_map)
    assert [p.name for p in stripped.people] == [p.name for p in ref_map.people]
    assert find_object(stripped, ObjectQuery(owner="Bob")) == []


def test_random_maps_satisfy_invariants():
    rng = random.Random(3)
    for _ in range(50):
        check_invariants(random_map(rng))
