"""Per-problem orchestration for the two planner arms."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..llm import ChatMessage, ReplyBudgetExceeded
from ..sim_tools import check_syntax
from ..task_graph import (
    TYPE1,
    CycleError,
    PlanFormatError,
    PlanValidationError,
    SubTask,
    TaskPlan,
    build_dag,
    parse_plan,
    run_sequential,
)
from ..tcrg import ExtractionDoc, Tcrg, build_graph
from .coding import run_code_agent, run_debug_agent
from .common import AgentContext, AgentOutcome, ExtractionInvalid, extract_verilog
from .planning import run_extraction, run_high_level_planner, run_retrieval


@dataclass
class PipelineResult:
    source: str
    completed: bool
    stop_reason: str
    plan: Optional[TaskPlan] = None
    graph: Optional[Tcrg] = None
    tool_calls: Counter = field(default_factory=Counter)
    outcomes: list[tuple[str, AgentOutcome]] = field(default_factory=list)


def _execute(plan: TaskPlan, spec: str, testbench: str, ctx: AgentContext, result: PipelineResult,
             write_task, clock: Optional[str], ast_wt: bool) -> None:
    dag = build_dag(plan)
    final_id = plan.subtasks[-1].id

    def execute(task: SubTask) -> bool:
        if task.kind == TYPE1:
            out = write_task(task, result.source)
        elif task.id == final_id:
            out = run_debug_agent(result.source, testbench, spec, ctx, clock=clock, ast_wt=ast_wt)
        else:
            # intermediate verification: the partial module must at least compile
            report = check_syntax(result.source, ctx.workdir / f"syntax_{task.id}", ctx.sim)
            ctx.log.write("verify", task=task.id, ok=report.ok, summary=report.summary())
            return report.ok
        result.outcomes.append((task.id, out))
        result.tool_calls.update(out.tool_calls)
        if out.artifact:
            result.source = out.artifact
        if not out.ok:
            result.stop_reason = f"{task.id}:{out.stop_reason}"
        return out.ok

    run_sequential(dag, execute, on_event=lambda tid, status: ctx.log.write("task", task=tid, status=status))
    result.completed = dag.finished
    if result.completed:
        result.stop_reason = "completed"


def run_tcrg_arm(spec: str, testbench: str, ctx: AgentContext, clock: Optional[str] = None,
                 ast_wt: bool = True) -> PipelineResult:
    """Planner and critic, extraction, TCRG build, retrieval, then the task DAG."""
    result = PipelineResult("", False, "started")
    try:
        planned = run_high_level_planner(spec, ctx)
        result.outcomes.append(("planner", planned))
        if not planned.artifact:
            result.stop_reason = "planner:" + planned.stop_reason
            return result
        plan = parse_plan(planned.artifact)
        try:
            extracted = run_extraction(spec, ctx)
            result.outcomes.append(("extractor", extracted))
            doc = ExtractionDoc.from_json(extracted.artifact)
        except ExtractionInvalid as exc:
            ctx.log.write("extraction_failed", error=str(exc))
            doc = ExtractionDoc()
        result.graph = build_graph(plan, doc)
        retrieved = run_retrieval(plan, result.graph, ctx)
        result.outcomes.append(("retriever", retrieved))
        result.tool_calls.update(retrieved.tool_calls)
        result.plan = parse_plan(retrieved.artifact)
        _execute(result.plan, spec, testbench, ctx, result,
                 lambda task, src: run_code_agent(task, src, spec, ctx), clock, ast_wt)
    except ReplyBudgetExceeded:
        result.stop_reason = "reply_budget"
    return result


def _simple_write(task: SubTask, current: str, spec: str, ctx: AgentContext) -> AgentOutcome:
    """Engineer turns checked only by the compiler, no reviewer and no retrieval."""
    messages = [ChatMessage("system", ctx.prompts["simple_engineer"]), ChatMessage("user", (
        f"Module specification:\n{spec}\n\nSub-task {task.id}: {task.description}\n\nCurrent module:\n"
        + (f"```verilog\n{current.rstrip()}\n```" if current.strip() else "(empty: no code written yet)")))]
    transcript = []
    draft = current
    for rnd in range(1, ctx.round_budget + 1):
        reply = ctx.ask("simple_engineer", messages)
        transcript.append(reply.content)
        code = extract_verilog(reply.content)
        if code is not None:
            draft = code
            report = check_syntax(code, ctx.workdir / f"syntax_{task.id}", ctx.sim)
            if report.ok:
                return ctx.finish("simple_engineer", AgentOutcome(True, code, transcript, rnd))
            feedback = report.summary()
        else:
            feedback = "Reply with the complete module inside a ```verilog fence."
        messages = messages[:2] + [reply, ChatMessage("user", feedback)]
    return ctx.finish("simple_engineer", AgentOutcome(False, draft, transcript, ctx.round_budget, "round_budget"))


def run_simple_arm(spec: str, testbench: str, ctx: AgentContext, clock: Optional[str] = None,
                   ast_wt: bool = True) -> PipelineResult:
    """Ablation baseline: a single planner reply drives the engineer directly."""
    result = PipelineResult("", False, "started")
    try:
        reply = ctx.ask("simple_planner", [ChatMessage("system", ctx.prompts["simple_planner"]),
                                           ChatMessage("user", f"Module specification:\n{spec}")])
        try:
            plan = parse_plan(reply.content)
            build_dag(plan)
        except (PlanFormatError, PlanValidationError, CycleError) as exc:
            ctx.log.write("plan_fallback", error=str(exc))
            plan = parse_plan(json.dumps([{"id": "t1", "type": "write",
                                           "description": "Implement the complete module."}]))
        result.plan = plan
        _execute(plan, spec, testbench, ctx, result,
                 lambda task, src: _simple_write(task, src, spec, ctx), clock, ast_wt)
    except ReplyBudgetExceeded:
        result.stop_reason = "reply_budget"
    return result
