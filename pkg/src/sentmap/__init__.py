"""Semantically enhanced topological maps for grounded robot task planning."""

from sentmap.core import (
    Entity,
    NavNode,
    ObjectItem,
    ObjectQuery,
    Person,
    SemanticPayload,
    SentMap,
    add_edge,
    add_nav_node,
    add_nav_nodes,
    find_object,
    shortest_path,
    strip_ownership,
    strip_semantics,
)
from sentmap.goals import GoalSpec
from sentmap.map_io import EditCommand, ValidationReport, apply_edit, parse_map, serialize_map, validate_map
from sentmap.skills import Plan, SkillApi, SkillCall, default_skill_api

__all__ = [
    "EditCommand",
    "Entity",
    "GoalSpec",
    "NavNode",
    "ObjectItem",
    "ObjectQuery",
    "Person",
    "Plan",
    "SemanticPayload",
    "SentMap",
    "SkillApi",
    "SkillCall",
    "ValidationReport",
    "add_edge",
    "add_nav_node",
    "add_nav_nodes",
    "apply_edit",
    "default_skill_api",
    "find_object",
    "parse_map",
    "serialize_map",
    "shortest_path",
    "strip_ownership",
    "strip_semantics",
    "validate_map",
]
