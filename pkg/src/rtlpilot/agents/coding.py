"""Code agent (engineer plus verification assistant) and debug agent."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..ast_wt import TraceRequest, trace
from ..llm import ChatMessage, Tool, react_loop, trim_memory
from ..sim_tools import CompileReport, SimReport, SimTimeout, check_syntax, simulate
from ..task_graph import TYPE1, PlanValidationError, SubTask
from ..verilog import parse_module
from ..waveform import load_vcd
from .common import AgentContext, AgentOutcome, count_tools, extract_verilog
from .planning import is_approval


def _fenced(source: str) -> str:
    return f"```verilog\n{source.rstrip()}\n```" if source.strip() else "(empty: no code written yet)"


def run_code_agent(subtask: SubTask, current_source: str, spec: str, ctx: AgentContext) -> AgentOutcome:
    """Engineer extends the module; a reviewer with a syntax checker approves
    or returns corrections. The compiler result is also checked directly."""
    if subtask.kind != TYPE1:
        raise PlanValidationError(f"task {subtask.id} is not a write task")
    if not subtask.description.strip():
        raise PlanValidationError(f"task {subtask.id} has an empty description")
    system = ChatMessage("system", ctx.prompts["engineer"])
    context = subtask.context.strip() or "(none)"
    query = ChatMessage("user", (
        f"Module specification:\n{spec}\n\nSub-task {subtask.id}: {subtask.description}\n\n"
        f"Relevant circuit information:\n{context}\n\nCurrent module:\n{_fenced(current_source)}"))
    history = [system, query]
    draft = current_source
    reviews = []
    workdir = ctx.workdir / f"syntax_{subtask.id}"
    for rnd in range(1, ctx.round_budget + 1):
        reply = ctx.ask("engineer", trim_memory(history, query))
        history.append(reply)
        code = extract_verilog(reply.content)
        if code is None:
            history.append(ChatMessage("user", "Reply with the complete module inside a ```verilog fence."))
            continue
        draft = code
        report: CompileReport = check_syntax(draft, workdir, ctx.sim)

        def syntax_tool(_: str, report=report) -> str:
            return report.summary()

        review = react_loop(
            ctx.prompts["code_verifier"],
            f"Review the draft for sub-task {subtask.id}: {subtask.description}\n\nDraft module:\n{_fenced(draft)}",
            {"check_syntax": Tool("check_syntax", "Compile the draft and report syntax errors. Input: empty.",
                                  syntax_tool)},
            ctx.backend, ctx.limits, role="code_verifier", on_turn=ctx.log.hook("code_verifier", task=subtask.id))
        reviews.append(review)
        verdict = review.final_answer or ""
        if report.ok and review.stop_reason == "final" and is_approval(verdict):
            return ctx.finish("engineer", AgentOutcome(True, draft, reviews, rnd, "final", count_tools(*reviews)))
        notes = []
        if not report.ok:
            notes.append(report.summary())
        if verdict and not is_approval(verdict):
            notes.append(f"Reviewer: {verdict}")
        history.append(ChatMessage("user", "Fix the module.\n" + "\n".join(notes or ["Reviewer gave no verdict."])))
    return ctx.finish("engineer", AgentOutcome(False, draft, reviews, ctx.round_budget, "round_budget",
                                               count_tools(*reviews)))


@dataclass
class _DebugState:
    source: str
    report: Optional[SimReport] = None
    report_source: Optional[str] = None
    runs: int = 0


def run_debug_agent(source: str, testbench: str, spec: str, ctx: AgentContext, clock: Optional[str] = None,
                    ast_wt: bool = True) -> AgentOutcome:
    """Simulate, optionally trace, edit, re-simulate; ok only if the final
    source simulates with zero mismatches."""
    if not testbench.strip():
        raise ValueError("debugging needs a testbench")
    state = _DebugState(source)

    def run_sim(src: str) -> SimReport:
        state.runs += 1
        rep = simulate(src, testbench, ctx.workdir / f"debug_sim{state.runs}", config=ctx.sim)
        state.report, state.report_source = rep, src
        return rep

    def simulate_tool(arg: str) -> str:
        if arg.strip():
            code = extract_verilog(arg)
            if code is None:
                return "action_input must be empty or a complete replacement module (module ... endmodule)."
            state.source = code
        try:
            return run_sim(state.source).summary()
        except SimTimeout as exc:
            state.report, state.report_source = None, None
            return f"Simulation timed out: {exc}"

    def trace_tool(arg: str) -> str:
        rep = state.report
        if rep is None or not rep.compiled or rep.vcd_path is None or state.report_source != state.source:
            return "No waveform for the current code: run simulate first."
        args = json.loads(arg) if arg.strip() else {}
        if not isinstance(args, dict):
            raise ValueError('action_input must be {"signals": [...], "level": n}')
        signals = args.get("signals") or sorted(n for n, c in rep.mismatched_signals.items() if c)
        if isinstance(signals, str):
            signals = [signals]
        if not signals:
            return "No mismatched signals reported; pass signals explicitly."
        level = int(args.get("level", 1))
        at = int(args.get("time", rep.first_mismatch_time or 0))
        module = parse_module(state.source)
        db = load_vcd(rep.vcd_path)
        return trace(module, db, TraceRequest(frozenset(signals), level, at), clock).render()

    tools = {"simulate": Tool("simulate", "Compile and simulate against the testbench. Input: empty to simulate "
                              "the current module, or a complete replacement module.", simulate_tool)}
    if ast_wt:
        tools["ast_wt_trace"] = Tool(
            "ast_wt_trace", 'Trace the statements driving signals back `level` hops and show their waveform '
            'around the first mismatch. Input: {"signals": [names], "level": n}.', trace_tool)
    ctx.log.write("tools", agent="debugger", tools=sorted(tools))
    query = (f"Module specification:\n{spec}\n\nCurrent module:\n{_fenced(source)}\n\n"
             "Simulate it against the testbench and fix any mismatches.")
    tr = react_loop(ctx.prompts["debugger"], query, tools, ctx.backend, ctx.limits, role="debugger",
                    on_turn=ctx.log.hook("debugger"))
    rep = state.report if state.report_source == state.source else None
    if rep is None:
        try:
            rep = run_sim(state.source)
        except SimTimeout:
            rep = None
    ok = rep is not None and rep.passed
    reason = tr.stop_reason if not ok else "final"
    if not ok and tr.stop_reason == "final":
        reason = "unresolved"
    return ctx.finish("debugger", AgentOutcome(ok, state.source, tr, len(tr.steps), reason, count_tools(tr)))

