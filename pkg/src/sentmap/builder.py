"""Build a SENT-Map from an operator walkthrough.

Each ``move_to`` event creates (or revisits) a navigation node and links it
to the previously visited node in both directions. Each ``snapshot`` event
asks a describer to turn the image into a semantic payload for that node.
Two describers are provided: a fixture store for deterministic builds and a
remote multimodal chat endpoint.
"""

from __future__ import annotations

import base64
import copy
import json
import logging
import mimetypes
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence

from sentmap.core import NavNode, SemanticPayload, SentMap
from sentmap.errors import (
    BatchFailed,
    DescriberFailure,
    FixtureMissing,
    MalformedJson,
    NoJsonInReply,
    PayloadInvalid,
    SentMapError,
    TraceInvalid,
)
from sentmap.llm import ChatClient, EndpointConfig, HttpChatClient, extract_json_object
from sentmap.map_io import (
    EditCommand,
    apply_edit,
    map_to_document,
    payload_from_dict,
    validate_document,
    validate_payload,
)

log = logging.getLogger(__name__)

JSON_TEMPLATE = """\
Describe the robot's surroundings in this snapshot as one JSON object with this structure:
{
  "label": "<short name of the location, e.g. kitchen sink>",
  "description": "<optional one-sentence summary>",
  "entities": [
    {
      "name": "<unique name of a stationary entity, e.g. fridge>",
      "kind": "<entity type: fridge, drawer, table, desk, cabinet, counter, ...>",
      "state": "<open|closed, only for entities that can be opened>",
      "affordances": ["<any of: openable, closable, supports-place, supports-pick>"],
      "objects": [
        {
          "name": "<unique name of a movable, graspable item>",
          "category": "<item type, e.g. mug, sponge, bottle>",
          "owner": "<optional person name>",
          "attributes": {"<key>": "<string value>"}
        }
      ]
    }
  ]
}
Only list entities and objects that are visible. Reply with the JSON object only.
"""

REQUIRED_TEMPLATE_FIELDS = ("label", "entities", "name", "kind", "affordances", "objects", "category")


# --- trace -----------------------------------------------------------------


@dataclass(frozen=True)
class MoveTo:
    node: str
    zone: str


@dataclass(frozen=True)
class SnapshotEvent:
    node: str
    image: str
    hint: str | None = None


TraceEvent = MoveTo | SnapshotEvent


@dataclass
class WalkthroughTrace:
    events: list[TraceEvent] = field(default_factory=list)

    def validate(self) -> None:
        if not self.events or not isinstance(self.events[0], MoveTo):
            raise TraceInvalid("trace must start with a move_to event")
        visited: set[str] = set()
        for i, ev in enumerate(self.events):
            if isinstance(ev, MoveTo):
                if not ev.node or not ev.zone:
                    raise TraceInvalid(f"event {i}: move_to needs node and zone")
                visited.add(ev.node)
            elif ev.node not in visited:
                raise TraceInvalid(f"event {i}: snapshot at {ev.node!r} before the robot visited it")
            elif not ev.image:
                raise TraceInvalid(f"event {i}: snapshot needs an image reference")

    @classmethod
    def from_list(cls, data: Sequence[Mapping[str, Any]]) -> WalkthroughTrace:
        events: list[TraceEvent] = []
        for i, item in enumerate(data):
            if "move_to" in item:
                mv = item["move_to"]
                events.append(MoveTo(mv.get("node", ""), mv.get("zone", "")))
            elif "snapshot" in item:
                sn = item["snapshot"]
                events.append(SnapshotEvent(sn.get("node", ""), sn.get("image", ""), sn.get("hint")))
            else:
                raise TraceInvalid(f"event {i}: expected 'move_to' or 'snapshot'")
        return cls(events)

    @classmethod
    def load(cls, path: str | Path) -> WalkthroughTrace:
        return cls.from_list(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_list(self) -> list[dict[str, Any]]:
        out = []
        for ev in self.events:
            if isinstance(ev, MoveTo):
                out.append({"move_to": {"node": ev.node, "zone": ev.zone}})
            else:
                snap = {"node": ev.node, "image": ev.image}
                if ev.hint is not None:
                    snap["hint"] = ev.hint
                out.append({"snapshot": snap})
        return out


# --- describers ------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    image_ref: str
    operator_hint: str | None = None

    def __post_init__(self) -> None:
        if not self.image_ref:
            raise ValueError("snapshot image reference must be non-empty")


@dataclass(frozen=True)
class DescriberRequest:
    snapshot: Snapshot
    template: str = JSON_TEMPLATE
    hint: str | None = None

    def prompt_text(self) -> str:
        text = self.template
        if self.hint:
            text += f"\nOperator note: {self.hint}\n"
        return text


@dataclass
class DescriberResult:
    payload: SemanticPayload
    raw: str


class Describer(Protocol):
    def describe(self, request: DescriberRequest) -> DescriberResult: ...


def _payload_or_raise(data: Any, raw: str) -> SemanticPayload:
    report = validate_payload(data)
    if not report.ok:
        raise PayloadInvalid(report, raw=raw)
    return payload_from_dict(data)


def describe_scene_fixture(request: DescriberRequest, fixtures: Mapping[str, str] | str | Path) -> DescriberResult:
    """Look up a recorded payload by image reference.

    ``fixtures`` is either a mapping from image reference to JSON text or a
    directory holding ``<image stem>.json`` files.
    """
    ref = request.snapshot.image_ref
    if isinstance(fixtures, Mapping):
        if ref not in fixtures:
            raise FixtureMissing(ref)
        raw = fixtures[ref]
    else:
        path = Path(fixtures) / (Path(ref).stem + ".json")
        if not path.is_file():
            raise FixtureMissing(ref)
        raw = path.read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedJson(exc.msg, exc.pos, exc.lineno, exc.colno) from None
    return DescriberResult(_payload_or_raise(data, raw), raw)


class FixtureDescriber:
    def __init__(self, fixtures: Mapping[str, str] | str | Path):
        self.fixtures = fixtures

    def describe(self, request: DescriberRequest) -> DescriberResult:
        return describe_scene_fixture(request, self.fixtures)


def _image_part(image_ref: str, image_root: Path | None) -> dict[str, Any]:
    path = Path(image_ref)
    if image_root is not None and not path.is_absolute():
        path = image_root / path
    mime = mimetypes.guess_type(path.name)[0] or "image/png"
    data = base64.b64encode(path.read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{data}"}}


def describe_scene_remote(
    request: DescriberRequest,
    endpoint: EndpointConfig | None = None,
    *,
    client: ChatClient | None = None,
    image_root: str | Path | None = None,
    repair_attempts: int = 2,
) -> DescriberResult:
    """Ask a multimodal chat endpoint for a semantic payload.

    The first JSON object in the reply is validated; on failure the model is
    re-prompted with the problem quoted, at most ``repair_attempts`` times.
    """
    if client is None:
        if endpoint is None:
            raise ValueError("need an endpoint config or a client")
        client = HttpChatClient(endpoint)
    root = Path(image_root) if image_root is not None else None
    messages: list[dict[str, Any]] = [
        {"role": "system", "content": "You turn robot camera snapshots into structured scene JSON."},
        {
            "role": "user",
            "content": [
                {"type": "text", "text": request.prompt_text()},
                _image_part(request.snapshot.image_ref, root),
            ],
        },
    ]
    failure: SentMapError | None = None
    for _ in range(repair_attempts + 1):
        raw = client.complete(messages)
        data = extract_json_object(raw)
        if data is None:
            failure = NoJsonInReply(raw)
            problem = "Your reply did not contain a JSON object."
        else:
            report = validate_payload(data)
            if report.ok:
                return DescriberResult(payload_from_dict(data), raw)
            failure = PayloadInvalid(report, raw=raw)
            problem = "The JSON did not validate:\n" + "\n".join(f"- {i.path or '/'}: {i.message}" for i in report.errors)
        messages = messages + [
            {"role": "assistant", "content": raw},
            {"role": "user", "content": f"{problem}\nReply again with one corrected JSON object only."},
        ]
    assert failure is not None
    raise failure


class RemoteDescriber:
    def __init__(
        self,
        endpoint: EndpointConfig | None = None,
        *,
        client: ChatClient | None = None,
        image_root: str | Path | None = None,
        repair_attempts: int = 2,
    ):
        if client is None and endpoint is None:
            raise ValueError("need an endpoint config or a client")
        self.client = client if client is not None else HttpChatClient(endpoint)  # type: ignore[arg-type]
        self.image_root = image_root
        self.repair_attempts = repair_attempts

    def describe(self, request: DescriberRequest) -> DescriberResult:
        return describe_scene_remote(
            request, client=self.client, image_root=self.image_root, repair_attempts=self.repair_attempts
        )


# --- building --------------------------------------------------------------


def _link(m: SentMap, a: str, b: str) -> None:
    if a == b:
        return
    if b not in m.nodes[a].neighbors:
        m.nodes[a].neighbors.append(b)
    if a not in m.nodes[b].neighbors:
        m.nodes[b].neighbors.append(a)


def build_map(trace: WalkthroughTrace, describer: Describer) -> tuple[SentMap, list[DescriberResult]]:
    """Turn a walkthrough into a map, returning raw describer output for audit."""
    trace.validate()
    m = SentMap()
    results: list[DescriberResult] = []
    prev: str | None = None
    for i, ev in enumerate(trace.events):
        if isinstance(ev, MoveTo):
            node = m.nodes.get(ev.node)
            if node is None:
                m.nodes[ev.node] = NavNode(id=ev.node, zone=ev.zone)
            elif node.zone != ev.zone:
                log.warning("event %d: %s revisited with zone %r, keeping %r", i, ev.node, ev.zone, node.zone)
            if prev is not None:
                _link(m, prev, ev.node)
            prev = ev.node
            continue

        request = DescriberRequest(Snapshot(ev.image, ev.hint), JSON_TEMPLATE, ev.hint)
        try:
            result = describer.describe(request)
        except PayloadInvalid as exc:
            raise PayloadInvalid(exc.report, i, exc.raw) from exc
        except Exception as exc:
            raise DescriberFailure(i, exc) from exc

        candidate = copy.deepcopy(m)
        if candidate.nodes[ev.node].semantic is not None:
            log.warning("event %d: replacing earlier payload at %s", i, ev.node)
        candidate.nodes[ev.node].semantic = result.payload
        report = validate_document(map_to_document(candidate))
        if not report.ok:
            raise PayloadInvalid(report, i, result.raw)
        m = candidate
        results.append(result)
    return m, results


def review_and_patch(m: SentMap, edits: Sequence[EditCommand]) -> SentMap:
    """Apply operator edits all-or-nothing; ``BatchFailed.index`` is 1-based."""
    out = m
    for k, cmd in enumerate(edits, start=1):
        try:
            out = apply_edit(out, cmd)
        except SentMapError as exc:
            raise BatchFailed(k, exc) from exc
    return out

