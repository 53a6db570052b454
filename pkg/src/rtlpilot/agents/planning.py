"""High-level planner, extraction agent and TCRG retrieval agent."""
from __future__ import annotations

import json

from ..llm import ChatMessage, Tool, react_loop, trim_memory
from ..task_graph import TYPE1, CycleError, PlanFormatError, PlanValidationError, TaskPlan, build_dag, parse_plan
from ..tcrg import ExtractionDoc, TcrgError, Tcrg, khop
from .common import AgentContext, AgentOutcome, ExtractionInvalid, count_tools, extract_json


def is_approval(text: str) -> bool:
    return text.strip().strip("*").upper().startswith("APPROVED")


def run_high_level_planner(spec: str, ctx: AgentContext) -> AgentOutcome:
    """Planner drafts, critic approves or suggests; repeat within the round budget."""
    if not spec.strip():
        raise ValueError("empty module specification")
    system = ChatMessage("system", ctx.prompts["planner"])
    query = ChatMessage("user", f"Module specification:\n{spec}")
    history = [system, query]
    transcript: list[dict] = []
    best: TaskPlan | None = None
    for rnd in range(1, ctx.round_budget + 1):
        draft = ctx.ask("planner", trim_memory(history, query))
        history.append(draft)
        transcript.append({"round": rnd, "role": "planner", "content": draft.content})
        try:
            plan = parse_plan(draft.content)
            build_dag(plan)
        except (PlanFormatError, PlanValidationError, CycleError) as exc:
            note = f"The plan could not be used: {exc}. Reply with the corrected JSON plan."
            history.append(ChatMessage("user", note))
            transcript.append({"round": rnd, "role": "harness", "content": note})
            continue
        best = plan
        review = ctx.ask("plan_critic", [
            ChatMessage("system", ctx.prompts["plan_critic"]),
            ChatMessage("user", f"Module specification:\n{spec}\n\nProposed plan:\n```json\n{plan.to_json()}\n```"),
        ])
        transcript.append({"round": rnd, "role": "plan_critic", "content": review.content})
        if is_approval(review.content):
            return ctx.finish("planner", AgentOutcome(True, plan.to_json(), transcript, rnd))
        history.append(ChatMessage("user", f"Revise the plan. Reviewer suggestions:\n{review.content}"))
    artifact = best.to_json() if best else ""
    return ctx.finish("planner", AgentOutcome(False, artifact, transcript, ctx.round_budget, "round_budget"))


def _parse_doc(text: str) -> ExtractionDoc:
    try:
        obj = extract_json(text)
    except ValueError as exc:
        raise TcrgError(str(exc)) from None
    doc = ExtractionDoc.from_json(obj)
    doc.validate_references()
    return doc


def run_extraction(spec: str, ctx: AgentContext) -> AgentOutcome:
    messages = [ChatMessage("system", ctx.prompts["extractor"]), ChatMessage("user", f"Module specification:\n{spec}")]
    transcript: list[dict] = []
    for attempt in (1, 2):
        reply = ctx.ask("extractor", messages)
        transcript.append({"round": attempt, "role": "extractor", "content": reply.content})
        try:
            doc = _parse_doc(reply.content)
        except TcrgError as exc:
            error = str(exc)
            messages = messages + [reply, ChatMessage(
                "user", f"Your output is invalid: {error}. Reply again with only the JSON object in a ```json fence.")]
            continue
        return ctx.finish("extractor", AgentOutcome(True, json.dumps(doc.to_json(), indent=2), transcript, attempt))
    ctx.finish("extractor", AgentOutcome(False, "", transcript, 2, "invalid"))
    raise ExtractionInvalid(f"extraction output invalid after a reformat retry: {error}")


def _retrieve_tool(graph: Tcrg, task_id: str) -> Tool:
    def invoke(arg: str) -> str:
        data = json.loads(arg) if arg.strip() else {}
        if isinstance(data, int):
            data = {"k": data}
        if not isinstance(data, dict):
            raise ValueError('action_input must be {"k": <hops>}')
        return khop(graph, str(data.get("task", task_id)), int(data.get("k", 1))).render()

    return Tool("tcrg_retrieve",
                'Retrieve signals, transitions and examples within k hops of a sub-task. Input: {"k": <hops>}.',
                invoke)


def run_retrieval(plan: TaskPlan, graph: Tcrg, ctx: AgentContext) -> AgentOutcome:
    """One retrieval loop per write task; its final answer becomes the task context."""
    contexts: dict[str, str] = {}
    flagged: list[str] = []
    traces = {}
    for task in plan.subtasks:
        if task.kind != TYPE1:
            continue
        graph.node(task.id)
        query = f"Sub-task {task.id}: {task.description}\nRetrieve the circuit information this sub-task needs."
        tr = react_loop(ctx.prompts["retriever"], query, {"tcrg_retrieve": _retrieve_tool(graph, task.id)},
                        ctx.backend, ctx.limits, role="retriever", on_turn=ctx.log.hook("retriever", task=task.id))
        traces[task.id] = tr
        if tr.stop_reason == "final":
            contexts[task.id] = tr.final_answer or ""
        else:
            flagged.append(task.id)
    enriched = plan.with_context(contexts)
    outcome = AgentOutcome(not flagged, enriched.to_json(), traces, len(traces),
                           "final" if not flagged else "budget:" + ",".join(flagged), count_tools(*traces.values()))
    return ctx.finish("retriever", outcome)
