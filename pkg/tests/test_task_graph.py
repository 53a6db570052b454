from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cyclic_wire, is_topological, random_dag_wire
from rtlpilot.task_graph import (
    DONE,
    FAILED,
    PENDING,
    RUNNING,
    TYPE1,
    TYPE2,
    CycleError,
    PlanFormatError,
    PlanValidationError,
    StatusError,
    SubTask,
    TaskPlan,
    build_dag,
    next_ready,
    parse_plan,
    run_sequential,
)

LINEAR = json.dumps([
    {"id": "a", "type": "write", "description": "ports"},
    {"id": "b", "type": "write", "description": "logic", "depends_on": ["a"]},
    {"id": "c", "type": "verify", "description": "check", "depends_on": ["b"]},
])
DIAMOND = json.dumps([
    {"id": "A", "type": "write", "description": "a", "depends_on": []},
    {"id": "B", "type": "write", "description": "b", "depends_on": ["A"]},
    {"id": "C", "type": "write", "description": "c", "depends_on": ["A"]},
    {"id": "D", "type": "verify", "description": "d", "depends_on": ["B", "C"]},
])


def test_well_formed_plan():
    plan = parse_plan(LINEAR)
    assert [(t.id, t.kind, t.depends_on) for t in plan.subtasks] == [
        ("a", TYPE1, ()), ("b", TYPE1, ("a",)), ("c", TYPE2, ("b",))]


def test_plan_inside_prose_and_fence():
    plan = parse_plan("Here is the plan:\n```json\n" + LINEAR + "\n```\nDone.")
    assert len(plan.subtasks) == 3


def test_missing_depends_on_defaults_to_previous():
    plan = parse_plan(json.dumps([{"id": "x", "description": "one"}, {"id": "y", "description": "two"},
                                  {"id": "z", "type": "verify", "description": "three"}]))
    assert [t.depends_on for t in plan.subtasks] == [(), ("x",), ("y",)]


def test_terminal_verify_synthesized_over_sinks():
    plan = parse_plan(json.dumps([
        {"id": "a", "type": "write", "description": "a", "depends_on": []},
        {"id": "b", "type": "write", "description": "b", "depends_on": ["a"]},
        {"id": "c", "type": "write", "description": "c", "depends_on": ["a"]},
    ]))
    last = plan.subtasks[-1]
    assert last.kind == TYPE2 and set(last.depends_on) == {"b", "c"}
    assert len(plan.subtasks) == 4


def test_synthesized_id_avoids_collision():
    plan = parse_plan(json.dumps([{"id": "verify_final", "type": "write", "description": "x"}]))
    assert plan.subtasks[-1].id == "verify_final_"


@pytest.mark.parametrize("text,error", [
    ("not json at all", PlanFormatError),
    ("[]", PlanFormatError),
    ('[{"id": "a"}]', PlanFormatError),
    ('[{"id": "a", "type": "maybe", "description": "x"}]', PlanFormatError),
    ('[{"id": "a", "description": "x", "depends_on": ["missing"]}]', PlanValidationError),
    ('[{"id": "a", "description": "x"}, {"id": "a", "type": "verify", "description": "y"}]', PlanValidationError),
])
def test_bad_plans(text, error):
    with pytest.raises(error):
        parse_plan(text)


def test_taskplan_requires_final_verify():
    with pytest.raises(PlanValidationError):
        TaskPlan((SubTask("a", TYPE1, "x"),))


def test_to_json_round_trip():
    plan = parse_plan(DIAMOND)
    assert parse_plan(plan.to_json()) == plan


def test_chain_dag():
    dag = build_dag(parse_plan(LINEAR))
    assert dag.edges == {("a", "b"), ("b", "c")}
    assert set(dag.status.values()) == {PENDING}
    assert next_ready(dag) == {"a"}


def test_two_cycle_named():
    plan = parse_plan(json.dumps([
        {"id": "p", "type": "write", "description": "x", "depends_on": ["q"]},
        {"id": "q", "type": "verify", "description": "y", "depends_on": ["p"]},
    ]))
    with pytest.raises(CycleError) as exc:
        build_dag(plan)
    assert {"p", "q"} <= set(exc.value.cycle)


def test_diamond_readiness():
    dag = build_dag(parse_plan(DIAMOND))
    assert dag.parents["D"] == ("B", "C")
    dag.start("A")
    dag.complete("A")
    assert next_ready(dag) == {"B", "C"}
    for t in ("B", "C"):
        dag.start(t)
        dag.complete(t)
    assert next_ready(dag) == {"D"}


def test_failure_halts():
    dag = build_dag(parse_plan(DIAMOND))
    dag.start("A")
    dag.fail("A")
    assert dag.halted and next_ready(dag) == set()


def test_illegal_transitions():
    dag = build_dag(parse_plan(LINEAR))
    with pytest.raises(StatusError):
        dag.start("b")  # parent not done
    with pytest.raises(StatusError):
        dag.complete("a")  # never started
    dag.start("a")
    dag.complete("a")
    with pytest.raises(StatusError):
        dag.start("a")


def test_run_sequential_stops_on_failure():
    dag = build_dag(parse_plan(LINEAR))
    seen = []
    executed = run_sequential(dag, lambda t: (seen.append(t.id), t.id != "b")[1])
    assert executed == ["a", "b"] and dag.status == {"a": DONE, "b": FAILED, "c": PENDING}


def test_run_sequential_exception_marks_failed():
    dag = build_dag(parse_plan(LINEAR))

    def boom(task):
        raise RuntimeError("x")

    with pytest.raises(RuntimeError):
        run_sequential(dag, boom)
    assert dag.status["a"] == FAILED


# -- properties -------------------------------------------------------------------

dags = st.integers(0, 2**32 - 1).map(lambda s: random_dag_wire(random.Random(s)))


@given(dags, st.randoms(use_true_random=False))
@settings(max_examples=150)
def test_any_ready_choice_gives_topological_order(wire, rnd):
    plan = parse_plan(json.dumps(wire))
    dag = build_dag(plan)
    order, history = [], {t: [PENDING] for t in dag.nodes}
    while True:
        ready = next_ready(dag)
        if not ready:
            break
        tid = rnd.choice(sorted(ready))
        dag.start(tid)
        history[tid].append(dag.status[tid])
        assert all(dag.status[p] == DONE for p in dag.parents[tid])
        dag.complete(tid)
        history[tid].append(dag.status[tid])
        order.append(tid)
    assert dag.finished
    assert is_topological(order, dag.edges, set(dag.nodes))
    assert all(h == [PENDING, RUNNING, DONE] for h in history.values())


@given(dags, st.randoms(use_true_random=False))
@settings(max_examples=100)
def test_failure_permanently_empties_ready(wire, rnd):
    dag = build_dag(parse_plan(json.dumps(wire)))
    victim = rnd.choice(dag.order)
    executed = run_sequential(dag, lambda t: t.id != victim)
    assert dag.status[victim] in (FAILED, PENDING)
    if dag.status[victim] == FAILED:
        assert next_ready(dag) == set() and dag.halted
        assert executed[-1] == victim
    assert is_topological([t for t in executed], {(p, c) for p, c in dag.edges if c in executed and p in executed},
                          set(executed))


@given(st.integers(0, 2**32 - 1).map(lambda s: cyclic_wire(random.Random(s))))
@settings(max_examples=100)
def test_cycles_rejected(wire):
    with pytest.raises(CycleError):
        build_dag(parse_plan(json.dumps(wire)))
