from __future__ import annotations

import json

import pytest

from rtlpilot.agents import AgentContext
from rtlpilot.agents.coding import run_code_agent, run_debug_agent
from rtlpilot.agents.common import ExtractionInvalid, extract_json, extract_verilog
from rtlpilot.agents.planning import run_extraction, run_high_level_planner, run_retrieval
from rtlpilot.agents.tracelog import TraceLog
from rtlpilot.fixtures import load_fixture
from rtlpilot.llm import ReactLimits, Rule, ScriptedBackend, final_action, tool_action
from rtlpilot.sim_tools import SimulatorConfig
from rtlpilot.task_graph import TYPE1, TYPE2, PlanValidationError, SubTask, parse_plan
from rtlpilot.tcrg import ExtractionDoc, build_graph

SPEC = "Build TopModule, a 2-to-1 mux with inputs a, b, sel and output out."

PLAN_A = json.dumps([
    {"id": "t1", "type": "write", "description": "Declare ports a, b, sel and out."},
    {"id": "t2", "type": "write", "description": "Drive out from a or b using sel."},
    {"id": "t3", "type": "verify", "description": "Simulate."},
])
PLAN_B = json.dumps([
    {"id": "t1", "type": "write", "description": "Write the whole mux."},
    {"id": "t2", "type": "verify", "description": "Simulate."},
])

FSM_DOC = {
    "signals": [{"name": "w", "description": "input signal examined by FSM in state B"},
                {"name": "state", "description": "current FSM state"}],
    "transitions": [{"label": "State A to State B", "description": "FSM moves to state B when w = 1",
                     "signals": ["state", "w"]}],
    "examples": [{"description": "when the input w = 1, 1, 0", "signals": ["w"]}],
}


def ctx_for(tmp_path, rules, **kw) -> AgentContext:
    return AgentContext(ScriptedBackend(rules), tmp_path, **kw)


def fenced(obj) -> str:
    return "```json\n" + (obj if isinstance(obj, str) else json.dumps(obj)) + "\n```"


# -- reply helpers ----------------------------------------------------------------

def test_extract_verilog_prefers_fenced_module():
    text = "Notes.\n```verilog\nmodule m; endmodule\n```\nmodule other; endmodule"
    assert extract_verilog(text) == "module m; endmodule\n"
    assert extract_verilog("bare module x; endmodule tail") == "module x; endmodule\n"
    assert extract_verilog("no code") is None


def test_extract_json_fenced_and_bare():
    assert extract_json("see\n```json\n[1]\n```") == [1]
    assert extract_json('{"a": 2}') == {"a": 2}
    with pytest.raises(ValueError):
        extract_json("nothing")


# -- planner ------------------------------------------------------------------------

def test_planner_approved_first_round(tmp_path):
    ctx = ctx_for(tmp_path, [Rule("^Module specification", fenced(PLAN_A), "planner"),
                             Rule("Proposed plan", "APPROVED", "plan_critic")])
    out = run_high_level_planner(SPEC, ctx)
    assert out.ok and out.rounds == 1
    assert parse_plan(out.artifact) == parse_plan(PLAN_A)


def test_planner_revises_after_critique(tmp_path):
    ctx = ctx_for(tmp_path, [
        Rule("^Module specification", fenced(PLAN_A), "planner"),
        Rule("^Revise the plan. Reviewer suggestions:\nMerge", fenced(PLAN_B), "planner"),
        Rule("Write the whole mux", "APPROVED", "plan_critic"),
        Rule("Proposed plan", "Merge t1 and t2 into one task.", "plan_critic"),
    ])
    out = run_high_level_planner(SPEC, ctx)
    assert out.ok and out.rounds == 2
    assert parse_plan(out.artifact) == parse_plan(PLAN_B)
    assert [e["role"] for e in out.trace] == ["planner", "plan_critic", "planner", "plan_critic"]


def test_planner_gives_up_on_unusable_plans(tmp_path):
    ctx = ctx_for(tmp_path, [Rule(".", "I would rather describe it in words.", "planner", None)], round_budget=3)
    out = run_high_level_planner(SPEC, ctx)
    assert not out.ok and out.stop_reason == "round_budget" and out.artifact == ""
    assert sum(e["role"] == "harness" for e in out.trace) == 3


def test_planner_rejects_empty_spec(tmp_path):
    backend = ScriptedBackend([])
    with pytest.raises(ValueError):
        run_high_level_planner("   ", AgentContext(backend, tmp_path))
    assert backend.calls == []


# -- extraction -------------------------------------------------------------------

def test_extraction_fsm_doc(tmp_path):
    out = run_extraction("FSM spec", ctx_for(tmp_path, [Rule(".", fenced(FSM_DOC), "extractor")]))
    doc = ExtractionDoc.from_json(json.loads(out.artifact))
    assert out.ok and out.rounds == 1
    assert [s.name for s in doc.signals] == ["w", "state"]
    assert doc.signals[0].description == "input signal examined by FSM in state B"


def test_extraction_combinational_has_no_transitions(tmp_path):
    doc_json = {"signals": [{"name": "out", "description": "mux output"}], "transitions": [], "examples": []}
    out = run_extraction(SPEC, ctx_for(tmp_path, [Rule(".", fenced(doc_json), "extractor")]))
    doc = ExtractionDoc.from_json(json.loads(out.artifact))
    assert doc.transitions == () and len(doc.signals) == 1


def test_extraction_retry_then_success(tmp_path):
    ctx = ctx_for(tmp_path, [Rule("^Module", "Here are the signals in prose.", "extractor"),
                             Rule("^Your output is invalid", fenced(FSM_DOC), "extractor")])
    out = run_extraction("spec", ctx)
    assert out.ok and out.rounds == 2


def test_extraction_invalid_twice(tmp_path):
    log = TraceLog(tmp_path / "log.jsonl")
    ctx = ctx_for(tmp_path, [Rule(".", "prose only", "extractor", None)], log=log)
    with pytest.raises(ExtractionInvalid):
        run_extraction("spec", ctx)
    rec = [r for r in log.read() if r["kind"] == "outcome"]
    assert rec and rec[-1]["ok"] is False and rec[-1]["stop_reason"] == "invalid"


# -- retrieval ----------------------------------------------------------------------

RET_PLAN = parse_plan(json.dumps([
    {"id": "t1", "type": "write", "description": "Declare the input w."},
    {"id": "t2", "type": "write", "description": "Register the output."},
    {"id": "t3", "type": "verify", "description": "Simulate."},
]))
GRAPH = build_graph(RET_PLAN, ExtractionDoc.from_json(FSM_DOC))
FORWARD = Rule("^(Retrieved|No circuit details)", final_action("{{last_json}}"), "retriever", None)


def test_retrieval_one_hop_context(tmp_path):
    ctx = ctx_for(tmp_path, [Rule("^Sub-task", tool_action("tcrg_retrieve", {"k": 1}), "retriever", None), FORWARD])
    out = run_retrieval(RET_PLAN, GRAPH, ctx)
    plan = parse_plan(out.artifact)
    t1, t2 = plan.subtasks[0], plan.subtasks[1]
    assert out.ok and out.tool_calls["tcrg_retrieve"] == 2
    assert "w: input signal examined by FSM in state B" in t1.context
    assert "State A to State B" not in t1.context
    assert "No circuit details" in t2.context
    assert plan.subtasks[2].context == ""


def test_retrieval_escalates_hops(tmp_path):
    ctx = ctx_for(tmp_path, [
        Rule("^Sub-task", tool_action("tcrg_retrieve", {"k": 1}), "retriever", None),
        Rule("^Retrieved 1-hop", tool_action("tcrg_retrieve", {"k": 2}), "retriever", None),
        FORWARD,
    ])
    out = run_retrieval(RET_PLAN, GRAPH, ctx)
    t1 = parse_plan(out.artifact).subtasks[0]
    assert "State A to State B" in t1.context and "when the input w = 1, 1, 0" in t1.context
    assert out.trace["t1"].tool_calls == ["tcrg_retrieve", "tcrg_retrieve"]


def test_retrieval_flags_budget_exhaustion(tmp_path):
    ctx = ctx_for(tmp_path, [Rule(".", tool_action("tcrg_retrieve", {"k": 1}), "retriever", None)],
                  limits=ReactLimits(max_steps=2))
    out = run_retrieval(RET_PLAN, GRAPH, ctx)
    assert not out.ok and out.stop_reason == "budget:t1,t2"


# -- code agent ---------------------------------------------------------------------

MUX = "module TopModule(input a, input b, input sel, output out);\n  assign out = sel ? b : a;\nendmodule\n"
MUX_BROKEN = MUX.replace("a;\n", "a\n")

VERIFIER = [
    Rule("^Review the draft", tool_action("check_syntax", ""), "code_verifier", None),
    Rule("^Compilation succeeded", final_action("APPROVED"), "code_verifier", None),
    Rule("^Compilation failed", final_action("Add the missing semicolon."), "code_verifier", None),
]


def test_code_agent_rejects_bad_tasks_before_calling_backend(tmp_path):
    backend = ScriptedBackend([])
    ctx = AgentContext(backend, tmp_path)
    with pytest.raises(PlanValidationError):
        run_code_agent(SubTask("t1", TYPE1, "   "), "", SPEC, ctx)
    with pytest.raises(PlanValidationError):
        run_code_agent(SubTask("t2", TYPE2, "Simulate."), "", SPEC, ctx)
    assert backend.calls == []


@pytest.mark.simulator
def test_code_agent_fixes_syntax_error(tmp_path):
    ctx = ctx_for(tmp_path, [
        Rule("^Module specification", "```verilog\n" + MUX_BROKEN + "```", "engineer"),
        Rule("^Fix the module.\nCompilation failed.*Reviewer: Add the missing semicolon", "```verilog\n" + MUX + "```",
             "engineer"),
        *VERIFIER,
    ])
    out = run_code_agent(SubTask("t1", TYPE1, "Write the mux."), "", SPEC, ctx)
    assert out.ok and out.rounds == 2 and out.artifact == MUX
    assert out.tool_calls["check_syntax"] == 2


@pytest.mark.simulator
def test_code_agent_round_budget(tmp_path):
    ctx = ctx_for(tmp_path, [Rule(".", "```verilog\n" + MUX_BROKEN + "```", "engineer", None), *VERIFIER],
                  round_budget=2)
    out = run_code_agent(SubTask("t1", TYPE1, "Write the mux."), "", SPEC, ctx)
    assert not out.ok and out.stop_reason == "round_budget" and out.artifact == MUX_BROKEN


# -- debug agent --------------------------------------------------------------------

def debugger_rules(problem: str) -> list[Rule]:
    fx = load_fixture(problem)
    return [Rule(r["match"], r["reply"], r.get("role"), r.get("times", 1))
            for r in fx.transcript["rules"] if r.get("role") == "debugger"]


@pytest.mark.simulator
def test_debug_agent_accepts_correct_module(tmp_path):
    fx = load_fixture("dff_reset")
    log = TraceLog(tmp_path / "log.jsonl")
    out = run_debug_agent(fx.golden, fx.problem.testbench, fx.problem.spec_text,
                          ctx_for(tmp_path, debugger_rules("dff_reset"), log=log), clock="clk")
    assert out.ok and out.trace.tool_calls == ["simulate"]
    records = log.read()
    assert [r for r in records if r["kind"] == "tools"][0]["tools"] == ["ast_wt_trace", "simulate"]
    assert records[-1]["kind"] == "outcome" and records[-1]["ok"] is True


@pytest.mark.simulator
def test_debug_agent_traces_and_fixes_reset_polarity(tmp_path):
    fx = load_fixture("dff_reset")
    bug = fx.bugs[0]
    out = run_debug_agent(bug.source, fx.problem.testbench, fx.problem.spec_text,
                          ctx_for(tmp_path, debugger_rules("dff_reset")), clock="clk")
    assert out.trace.tool_calls == ["simulate", "ast_wt_trace", "simulate"]
    assert out.ok and "if (reset)" in out.artifact
    trace_obs = out.trace.steps[1].observation
    assert "context: always @(posedge clk) > if (!reset)" in trace_obs and "== WAVEFORM ==" in trace_obs


@pytest.mark.simulator
def test_debug_agent_without_ast_wt(tmp_path):
    fx = load_fixture("dff_reset")
    log = TraceLog(tmp_path / "log.jsonl")
    out = run_debug_agent(fx.bugs[0].source, fx.problem.testbench, fx.problem.spec_text,
                          ctx_for(tmp_path, debugger_rules("dff_reset"), log=log), clock="clk", ast_wt=False)
    assert [r for r in log.read() if r["kind"] == "tools"][0]["tools"] == ["simulate"]
    assert out.trace.tool_calls == ["simulate"] and not out.ok
    assert out.stop_reason == "unresolved"


@pytest.mark.simulator
def test_debug_agent_timeout_is_an_observation(tmp_path):
    tb = "`timescale 1ns/1ps\nmodule tb;\n  reg clk = 0;\n  always #1 clk = ~clk;\nendmodule\n"
    ctx = ctx_for(tmp_path, [
        Rule("Simulate it against", tool_action("simulate", ""), "debugger"),
        Rule("^Simulation timed out", final_action("gave up"), "debugger"),
    ], sim=SimulatorConfig(timeout=1.0))
    out = run_debug_agent(MUX, tb, SPEC, ctx)
    assert out.trace.steps[0].observation.startswith("Simulation timed out")
    assert not out.ok and out.stop_reason == "unresolved"


def test_debug_agent_needs_testbench(tmp_path):
    with pytest.raises(ValueError):
        run_debug_agent(MUX, "  ", SPEC, AgentContext(ScriptedBackend([]), tmp_path))
