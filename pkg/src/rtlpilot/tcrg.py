"""Task and circuit relation graph: sub-tasks linked to signals, which link
to their transitions and worked examples; plus k-hop retrieval."""
from __future__ import annotations

import hashlib
import json
import re
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterable

import jsonschema

from .errors import RtlPilotError

if TYPE_CHECKING:
    from .task_graph import TaskPlan

TASK, SIGNAL, TRANSITION, EXAMPLE = "Task", "Signal", "Transition", "Example"
IMPLEMENTS, SIGNALTRANSITION, EXAMPLES = "IMPLEMENTS", "SIGNALTRANSITION", "EXAMPLES"
EDGE_TYPES = {
    IMPLEMENTS: (TASK, SIGNAL),
    SIGNALTRANSITION: (SIGNAL, TRANSITION),
    EXAMPLES: (SIGNAL, EXAMPLE),
}


class TcrgError(RtlPilotError):
    pass


class DanglingReference(TcrgError):
    pass


class UnknownNode(TcrgError, LookupError):
    pass


class NotATaskNode(TcrgError):
    pass


class SchemaError(TcrgError):
    pass


EXTRACTION_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["signals", "transitions", "examples"],
    "additionalProperties": False,
    "properties": {
        "signals": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "description"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string", "minLength": 1}, "description": {"type": "string"}},
            },
        },
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "description", "signals"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "description": {"type": "string"},
                    "signals": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "examples": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["description", "signals"],
                "additionalProperties": False,
                "properties": {
                    "description": {"type": "string", "minLength": 1},
                    "signals": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}

TCRG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["nodes", "edges"],
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "text"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": [TASK, SIGNAL, TRANSITION, EXAMPLE]},
                    "text": {"type": "string"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target", "rel"],
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "rel": {"enum": list(EDGE_TYPES)},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class SignalInfo:
    name: str
    description: str


@dataclass(frozen=True)
class TransitionInfo:
    label: str
    description: str
    signals: tuple[str, ...]


@dataclass(frozen=True)
class ExampleInfo:
    description: str
    signals: tuple[str, ...]


@dataclass(frozen=True)
class ExtractionDoc:
    signals: tuple[SignalInfo, ...] = ()
    transitions: tuple[TransitionInfo, ...] = ()
    examples: tuple[ExampleInfo, ...] = ()

    def __post_init__(self) -> None:
        names = [s.name for s in self.signals]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise SchemaError(f"duplicate signal names: {', '.join(sorted(dup))}")

    @classmethod
    def from_json(cls, data: str | dict) -> "ExtractionDoc":
        obj = json.loads(data) if isinstance(data, str) else data
        try:
            jsonschema.validate(obj, EXTRACTION_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaError(f"extraction document invalid: {exc.message}") from None
        return cls(
            tuple(SignalInfo(s["name"], s["description"]) for s in obj["signals"]),
            tuple(TransitionInfo(t["label"], t["description"], tuple(t["signals"])) for t in obj["transitions"]),
            tuple(ExampleInfo(e["description"], tuple(e["signals"])) for e in obj["examples"]),
        )

    def to_json(self) -> dict:
        return {
            "signals": [{"name": s.name, "description": s.description} for s in self.signals],
            "transitions": [{"label": t.label, "description": t.description, "signals": list(t.signals)}
                            for t in self.transitions],
            "examples": [{"description": e.description, "signals": list(e.signals)} for e in self.examples],
        }

    def validate_references(self) -> None:
        known = {s.name for s in self.signals}
        for where, refs in [(f"transition {t.label!r}", t.signals) for t in self.transitions] + \
                           [(f"example {e.description[:40]!r}", e.signals) for e in self.examples]:
            bad = [r for r in refs if r not in known]
            if bad:
                raise DanglingReference(f"{where} references unlisted signal(s): {', '.join(bad)}")


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    text: str


class Tcrg:
    """Typed property graph; immutable once constructed."""

    def __init__(self, nodes: Iterable[Node], edges: Iterable[tuple[str, str, str]]):
        self._nodes: dict[str, Node] = {}
        for n in nodes:
            if n.kind not in (TASK, SIGNAL, TRANSITION, EXAMPLE):
                raise TcrgError(f"bad node kind {n.kind!r}")
            if n.id in self._nodes:
                raise TcrgError(f"duplicate node id {n.id!r}")
            self._nodes[n.id] = n
        edge_set: set[tuple[str, str, str]] = set()
        for src, dst, rel in edges:
            if rel not in EDGE_TYPES:
                raise TcrgError(f"bad relation {rel!r}")
            for end in (src, dst):
                if end not in self._nodes:
                    raise UnknownNode(f"edge endpoint {end!r} is not a node")
            want = EDGE_TYPES[rel]
            got = (self._nodes[src].kind, self._nodes[dst].kind)
            if got != want:
                raise TcrgError(f"{rel} must connect {want[0]}->{want[1]}, got {got[0]}->{got[1]}")
            edge_set.add((src, dst, rel))
        self._edges = frozenset(edge_set)
        self._out: dict[str, list[str]] = {nid: [] for nid in self._nodes}
        for src, dst, _ in sorted(self._edges):
            self._out[src].append(dst)

    @property
    def nodes(self) -> dict[str, Node]:
        return dict(self._nodes)

    @property
    def edges(self) -> frozenset[tuple[str, str, str]]:
        return self._edges

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id!r}") from None

    def successors(self, node_id: str) -> list[str]:
        return list(self._out[node_id])

    def task_ids(self) -> list[str]:
        return [n.id for n in self._nodes.values() if n.kind == TASK]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Tcrg) and self._nodes == other._nodes and self._edges == other._edges

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": n.id, "kind": n.kind, "text": n.text} for n in sorted(self._nodes.values(), key=_node_order)],
            "edges": [{"source": s, "target": t, "rel": r} for s, t, r in sorted(self._edges)],
        }

    @classmethod
    def from_json(cls, data: str | dict) -> "Tcrg":
        obj = json.loads(data) if isinstance(data, str) else data
        try:
            jsonschema.validate(obj, TCRG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaError(f"graph document invalid: {exc.message}") from None
        return cls((Node(n["id"], n["kind"], n["text"]) for n in obj["nodes"]),
                   ((e["source"], e["target"], e["rel"]) for e in obj["edges"]))


def _node_order(n: Node) -> tuple:
    return ((TASK, SIGNAL, TRANSITION, EXAMPLE).index(n.kind), n.id)


def _digest(*parts: str) -> str:
    return hashlib.sha1("\x1f".join(parts).encode()).hexdigest()[:10]


def signal_id(name: str) -> str:
    return f"signal:{name}"


def transition_id(t: TransitionInfo) -> str:
    return f"transition:{_digest(t.label, t.description)}"


def example_id(e: ExampleInfo) -> str:
    return f"example:{_digest(e.description)}"


def mentions(text: str, name: str) -> bool:
    """Whole-token, case-sensitive occurrence of `name` in `text`."""
    return re.search(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])", text) is not None


def build_graph(plan: "TaskPlan", doc: ExtractionDoc) -> Tcrg:
    if not plan.subtasks:
        raise TcrgError("plan has no sub-tasks")
    doc.validate_references()
    nodes = [Node(t.id, TASK, t.description) for t in plan.subtasks]
    edges: list[tuple[str, str, str]] = []
    for s in doc.signals:
        nodes.append(Node(signal_id(s.name), SIGNAL, f"{s.name}: {s.description}"))
    for t in doc.transitions:
        nodes.append(Node(transition_id(t), TRANSITION, f"{t.label}: {t.description}"))
    for e in doc.examples:
        nodes.append(Node(example_id(e), EXAMPLE, e.description))
    for task in plan.subtasks:
        for s in doc.signals:
            if mentions(task.description, s.name):
                edges.append((task.id, signal_id(s.name), IMPLEMENTS))
    for t in doc.transitions:
        for name in t.signals:
            edges.append((signal_id(name), transition_id(t), SIGNALTRANSITION))
    for e in doc.examples:
        for name in e.signals:
            edges.append((signal_id(name), example_id(e), EXAMPLES))
    seen: set[str] = set()
    unique = []
    for n in nodes:
        if n.id not in seen:  # identical transitions/examples collapse
            seen.add(n.id)
            unique.append(n)
    return Tcrg(unique, edges)


@dataclass(frozen=True)
class RetrievalResult:
    task_id: str
    k: int
    signals: tuple[tuple[str, str, int], ...]
    transitions: tuple[tuple[str, str, int], ...]
    examples: tuple[tuple[str, str, int], ...]

    def node_ids(self) -> set[str]:
        return {nid for bucket in (self.signals, self.transitions, self.examples) for nid, _, _ in bucket}

    def render(self) -> str:
        if not self.node_ids():
            return f"No circuit details found within {self.k} hop(s) of task {self.task_id}."
        out = [f"Retrieved {self.k}-hop circuit information for task {self.task_id}:"]
        for title, bucket in (("Signals", self.signals), ("Signal transitions", self.transitions),
                              ("Examples", self.examples)):
            out.append(f"{title}:")
            out.extend(f"- {text}" for _, text, _ in bucket) if bucket else out.append("- (none)")
        return "\n".join(out)


def khop(graph: Tcrg, task_id: str, k: int) -> RetrievalResult:
    if k < 0:
        raise ValueError("k must be non-negative")
    node = graph.node(task_id)
    if node.kind != TASK:
        raise NotATaskNode(f"{task_id!r} is a {node.kind} node")
    dist = {task_id: 0}
    queue = deque([task_id])
    while queue:
        cur = queue.popleft()
        if dist[cur] == k:
            continue
        for nxt in graph.successors(cur):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    buckets: dict[str, list[tuple[str, str, int]]] = {SIGNAL: [], TRANSITION: [], EXAMPLE: []}
    for nid, d in sorted(dist.items(), key=lambda kv: (kv[1], kv[0])):
        n = graph.node(nid)
        if n.kind in buckets:
            buckets[n.kind].append((nid, n.text, d))
    return RetrievalResult(task_id, k, tuple(buckets[SIGNAL]), tuple(buckets[TRANSITION]), tuple(buckets[EXAMPLE]))
