"""Exception types raised across the sentmap package."""

from __future__ import annotations

from typing import Any


class SentMapError(Exception):
    """Base class for every error raised by sentmap."""


# --- graph model -----------------------------------------------------------


class DuplicateNodeId(SentMapError):
    def __init__(self, node_id: str):
        super().__init__(f"node {node_id!r} already exists")
        self.node_id = node_id


class DanglingEdge(SentMapError):
    def __init__(self, target: str, source: str | None = None):
        where = f" from {source!r}" if source else ""
        super().__init__(f"edge{where} points to missing node {target!r}")
        self.target = target
        self.source = source


class UnknownNode(SentMapError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node {node_id!r}")
        self.node_id = node_id


class SelfLoop(SentMapError):
    def __init__(self, node_id: str):
        super().__init__(f"self-loop on {node_id!r} is not allowed")
        self.node_id = node_id


class Unreachable(SentMapError):
    def __init__(self, current: str, target: str):
        super().__init__(f"no path from {current!r} to {target!r}")
        self.current = current
        self.target = target


# --- wire format / editing -------------------------------------------------


class MalformedJson(SentMapError):
    def __init__(self, message: str, position: int, line: int = 0, column: int = 0):
        super().__init__(f"malformed JSON at line {line} column {column} (char {position}): {message}")
        self.position = position
        self.line = line
        self.column = column


class SchemaViolation(SentMapError):
    def __init__(self, report: Any):
        errors = report.errors
        first = errors[0] if errors else None
        detail = f"{first.path or '/'}: {first.message}" if first else "invalid document"
        extra = f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""
        super().__init__(f"schema violation at {detail}{extra}")
        self.report = report


class UnknownTarget(SentMapError):
    def __init__(self, target: Any, reason: str = ""):
        msg = f"edit target {target!r} does not resolve"
        super().__init__(f"{msg}: {reason}" if reason else msg)
        self.target = target


class InvariantBroken(SentMapError):
    def __init__(self, report: Any):
        errors = report.errors
        paths = ", ".join(i.path for i in errors) or "/"
        super().__init__(f"edit breaks map invariants at {paths}: {errors[0].message if errors else ''}")
        self.report = report


# --- map construction ------------------------------------------------------


class DescriberFailure(SentMapError):
    def __init__(self, event_index: int, cause: BaseException):
        super().__init__(f"describer failed on trace event {event_index}: {cause}")
        self.event_index = event_index
        self.cause = cause


class PayloadInvalid(SentMapError):
    def __init__(self, report: Any, event_index: int | None = None, raw: str | None = None):
        errors = report.errors
        where = f" (trace event {event_index})" if event_index is not None else ""
        first = f"{errors[0].path or '/'}: {errors[0].message}" if errors else "invalid payload"
        super().__init__(f"semantic payload invalid{where}: {first}")
        self.report = report
        self.event_index = event_index
        self.raw = raw


class FixtureMissing(SentMapError):
    def __init__(self, key: str):
        super().__init__(f"no fixture for {key!r}")
        self.key = key


class NoJsonInReply(SentMapError):
    def __init__(self, raw: str):
        super().__init__("model reply contains no JSON object")
        self.raw = raw


class BatchFailed(SentMapError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"edit {index} failed: {cause}")
        self.index = index
        self.cause = cause


class TraceInvalid(SentMapError):
    pass


# --- endpoints -------------------------------------------------------------


class TransportError(SentMapError):
    pass


class ReplayMiss(TransportError):
    def __init__(self, request_hash: str):
        super().__init__(f"no recorded response for request {request_hash[:12]}")
        self.request_hash = request_hash


class ConfigError(SentMapError):
    pass


# --- planning --------------------------------------------------------------


class EmptyQuery(SentMapError):
    def __init__(self) -> None:
        super().__init__("query must be non-empty")


class NoPlanFound(SentMapError):
    def __init__(self, reason: str = "no skill sequence found in reply", raw: str = ""):
        super().__init__(reason)
        self.raw = raw


class UnknownSkill(SentMapError):
    def __init__(self, name: str, step_index: int):
        super().__init__(f"step {step_index}: unknown skill {name!r}")
        self.name = name
        self.step_index = step_index


class ArityMismatch(SentMapError):
    def __init__(self, step_index: int, skill: str = "", expected: int = 0, got: int = 0):
        super().__init__(f"step {step_index}: {skill} takes {expected} argument(s), got {got}")
        self.step_index = step_index
        self.skill = skill
        self.expected = expected
        self.got = got


class PlanRejected(SentMapError):
    def __init__(self, last_error: str, transcript: list[dict[str, Any]]):
        super().__init__(f"plan rejected after {len(transcript)} round-trip(s): {last_error}")
        self.last_error = last_error
        self.transcript = transcript


class ModelRefusal(SentMapError):
    def __init__(self, raw: str, transcript: list[dict[str, Any]] | None = None):
        super().__init__("model declined to produce a plan")
        self.raw = raw
        self.transcript = transcript or []


class AmbiguousTarget(SentMapError):
    def __init__(self, candidates: list[Any], reason: str = ""):
        names = ", ".join(f"{n}/{e}/{o.name}" for n, e, o in candidates)
        msg = f"{len(candidates)} candidates match: {names}"
        super().__init__(f"{msg} ({reason})" if reason else msg)
        self.candidates = candidates


class TargetNotFound(SentMapError):
    pass


class UnresolvableGoal(SentMapError):
    pass


class InvalidEditValue(SentMapError, ValueError):
    pass
