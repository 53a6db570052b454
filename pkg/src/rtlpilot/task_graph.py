"""Sub-task plans, their dependency DAG and a halt-on-failure scheduler."""
from __future__ import annotations

import graphlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

from .errors import RtlPilotError

TYPE1, TYPE2 = "Type1", "Type2"
WIRE_KINDS = {"write": TYPE1, "verify": TYPE2}
PENDING, RUNNING, DONE, FAILED = "pending", "running", "done", "failed"
_ALLOWED = {PENDING: {RUNNING}, RUNNING: {DONE, FAILED}, DONE: set(), FAILED: set()}
FINAL_VERIFY_ID = "verify_final"
FINAL_VERIFY_TEXT = "Verify and debug the complete module against the testbench."


class PlanFormatError(RtlPilotError):
    pass


class PlanValidationError(RtlPilotError):
    pass


class CycleError(RtlPilotError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("dependency cycle: " + " -> ".join(cycle))


class StatusError(RtlPilotError):
    pass


@dataclass(frozen=True)
class SubTask:
    id: str
    kind: str
    description: str
    context: str = ""
    depends_on: tuple[str, ...] = ()

    def to_wire(self) -> dict:
        wire = {v: k for k, v in WIRE_KINDS.items()}[self.kind]
        return {"id": self.id, "type": wire, "description": self.description,
                "context": self.context, "depends_on": list(self.depends_on)}


def _validate(tasks: Iterable[SubTask]) -> None:
    tasks = list(tasks)
    ids = [t.id for t in tasks]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise PlanValidationError(f"duplicate task ids: {', '.join(dup)}")
    known = set(ids)
    for t in tasks:
        if t.kind not in (TYPE1, TYPE2):
            raise PlanValidationError(f"task {t.id}: unknown kind {t.kind!r}")
        bad = [d for d in t.depends_on if d not in known]
        if bad:
            raise PlanValidationError(f"task {t.id} depends on unknown task(s): {', '.join(bad)}")


@dataclass(frozen=True)
class TaskPlan:
    subtasks: tuple[SubTask, ...]

    def __post_init__(self) -> None:
        _validate(self.subtasks)
        if self.subtasks and self.subtasks[-1].kind != TYPE2:
            raise PlanValidationError("the final sub-task must be a verification (Type2) task")

    def get(self, task_id: str) -> SubTask:
        for t in self.subtasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def with_context(self, contexts: dict[str, str]) -> "TaskPlan":
        return TaskPlan(tuple(replace(t, context=contexts.get(t.id, t.context)) for t in self.subtasks))

    def to_json(self) -> str:
        return json.dumps([t.to_wire() for t in self.subtasks], indent=2)


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def _extract_json(text: str):
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    for cand in candidates:
        cand = cand.strip()
        try:
            return json.loads(cand)
        except json.JSONDecodeError:
            pass
        start, end = cand.find("["), cand.rfind("]")
        if 0 <= start < end:
            try:
                return json.loads(cand[start:end + 1])
            except json.JSONDecodeError:
                pass
    raise PlanFormatError("no JSON plan array found in planner output")


def parse_plan(text: str) -> TaskPlan:
    """Parse the planner's JSON array into a normalized TaskPlan."""
    raw = _extract_json(text)
    if isinstance(raw, dict) and isinstance(raw.get("tasks"), list):
        raw = raw["tasks"]
    if not isinstance(raw, list) or not raw:
        raise PlanFormatError("plan must be a nonempty JSON array of task objects")
    tasks: list[SubTask] = []
    prev: Optional[str] = None
    for n, item in enumerate(raw):
        if not isinstance(item, dict):
            raise PlanFormatError(f"plan entry {n} is not an object")
        try:
            tid = str(item["id"])
            kind = WIRE_KINDS[str(item.get("type", "write")).lower()]
            desc = str(item["description"])
        except KeyError as exc:
            raise PlanFormatError(f"plan entry {n}: missing or invalid field {exc}") from None
        deps = item.get("depends_on")
        if deps is None:
            deps = [prev] if prev is not None else []
        elif not isinstance(deps, list):
            raise PlanFormatError(f"plan entry {n}: depends_on must be a list")
        tasks.append(SubTask(tid, kind, desc, str(item.get("context", "")), tuple(str(d) for d in deps)))
        prev = tid
    if tasks[-1].kind != TYPE2:
        _validate(tasks)
        has_child = {d for t in tasks for d in t.depends_on}
        sinks = tuple(t.id for t in tasks if t.id not in has_child)
        final_id = FINAL_VERIFY_ID
        while final_id in {t.id for t in tasks}:
            final_id += "_"
        tasks.append(SubTask(final_id, TYPE2, FINAL_VERIFY_TEXT, "", sinks))
    return TaskPlan(tuple(tasks))


@dataclass
class TaskDag:
    nodes: dict[str, SubTask]
    order: list[str]
    parents: dict[str, tuple[str, ...]]
    status: dict[str, str] = field(default_factory=dict)

    @property
    def edges(self) -> set[tuple[str, str]]:
        return {(p, c) for c, ps in self.parents.items() for p in ps}

    def children(self, task_id: str) -> list[str]:
        return [c for c in self.order if task_id in self.parents[c]]

    @property
    def halted(self) -> bool:
        return FAILED in self.status.values()

    @property
    def finished(self) -> bool:
        return all(s == DONE for s in self.status.values())

    def _move(self, task_id: str, new: str) -> None:
        old = self.status[task_id]
        if new not in _ALLOWED[old]:
            raise StatusError(f"task {task_id}: illegal transition {old} -> {new}")
        self.status[task_id] = new

    def start(self, task_id: str) -> None:
        if self.status.get(task_id) == PENDING and task_id not in next_ready(self):
            raise StatusError(f"task {task_id} is not ready")
        self._move(task_id, RUNNING)

    def complete(self, task_id: str) -> None:
        self._move(task_id, DONE)

    def fail(self, task_id: str) -> None:
        self._move(task_id, FAILED)


def build_dag(plan: TaskPlan) -> TaskDag:
    parents = {t.id: tuple(dict.fromkeys(t.depends_on)) for t in plan.subtasks}
    sorter = graphlib.TopologicalSorter(parents)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        cycle = list(exc.args[1])
        raise CycleError(cycle) from None
    return TaskDag({t.id: t for t in plan.subtasks}, [t.id for t in plan.subtasks], parents,
                   {t.id: PENDING for t in plan.subtasks})


def next_ready(dag: TaskDag) -> set[str]:
    if dag.halted:
        return set()
    return {
        tid for tid in dag.order
        if dag.status[tid] == PENDING and all(dag.status[p] == DONE for p in dag.parents[tid])
    }


def run_sequential(dag: TaskDag, execute: Callable[[SubTask], bool],
                   on_event: Callable[[str, str], None] | None = None) -> list[str]:
    """Run ready tasks one at a time in plan order until done or a failure.

    Returns the executed ids in execution order."""
    executed: list[str] = []
    while True:
        ready = next_ready(dag)
        if not ready:
            break
        tid = next(t for t in dag.order if t in ready)
        dag.start(tid)
        if on_event:
            on_event(tid, RUNNING)
        try:
            ok = execute(dag.nodes[tid])
        except BaseException:
            dag.fail(tid)
            raise
        (dag.complete if ok else dag.fail)(tid)
        executed.append(tid)
        if on_event:
            on_event(tid, DONE if ok else FAILED)
    return executed


__all__ = [
    "TYPE1", "TYPE2", "PENDING", "RUNNING", "DONE", "FAILED", "PlanFormatError", "PlanValidationError",
    "CycleError", "StatusError", "SubTask", "TaskPlan", "TaskDag", "parse_plan", "build_dag", "next_ready",
    "run_sequential",
]
