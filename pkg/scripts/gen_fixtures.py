"""Render the fixture corpus (problems, testbenches, scripted transcripts).

Run from the repository root:  python3 scripts/gen_fixtures.py [--check]

Each problem is described once below. The script writes spec.txt, ref.v,
tb.v, meta.json, transcript.json and bugs/*.v under
src/rtlpilot/fixtures/problems/<id>/. With --check it only reports files that
differ from what it would write.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from rtlpilot.llm import final_action, tool_action

ROOT = Path(__file__).resolve().parent.parent / "src" / "rtlpilot" / "fixtures" / "problems"


@dataclass
class Bug:
    name: str
    body: str
    description: str
    outputs: list[str]
    first_mismatch_ns: int


@dataclass
class Problem:
    id: str
    category: str
    spec: str
    header: str  # module header after the name, e.g. "(input a, output y);"
    ports: list[tuple[str, str, int]]  # (direction, name, width)
    body: str
    stimulus: str
    plan: list[dict]
    drafts: dict[str, str]  # write-task id -> body produced by the tcrg engineer
    extraction: dict
    bugs: list[Bug]
    clock: Optional[str] = None
    simple_body: Optional[str] = None  # None: the simple engineer writes the golden body
    critic: list[str] = field(default_factory=lambda: ["APPROVED"])
    revised_plan: Optional[list[dict]] = None
    fix_pattern: Optional[str] = None  # trace text that makes the debugger emit the golden module


def module(name: str, header: str, body: str) -> str:
    lines = [f"module {name}{header}"] + ([body.rstrip()] if body.strip() else []) + ["endmodule"]
    return "\n".join(lines) + "\n"


def loop(lhs: str, count: int, expr: str = "i") -> str:
    return (f"    for (i = 0; i < {count}; i = i + 1) begin\n"
            f"      @(posedge clk); #1 {lhs} = {expr};\n"
            f"      @(negedge clk) check;\n"
            f"    end\n")


def steps(*assigns: str) -> str:
    return "".join(f"    @(posedge clk); #1 {a}\n    @(negedge clk) check;\n" for a in assigns)


def testbench(p: Problem) -> str:
    ins = [(n, w) for d, n, w in p.ports if d == "input" and n != "clk"]
    outs = [(n, w) for d, n, w in p.ports if d == "output"]
    decl = lambda w: f"[{w - 1}:0] " if w > 1 else ""
    lines = ["`timescale 1ns/1ps", "module tb;", "  reg clk = 0;", "  always #5 clk = ~clk;"]
    lines += [f"  reg {decl(w)}{n};" for n, w in ins]
    lines += [f"  wire {decl(w)}{n}_ref, {n}_dut;" for n, w in outs]
    lines.append("  integer i, samples = 0, errors = 0, first_err = -1;")
    lines.append("  integer " + ", ".join(f"err_{n} = 0" for n, _ in outs) + ";")

    def conns(suffix: str) -> str:
        return ", ".join(f".{n}({n}{suffix if d == 'output' else ''})" for d, n, _ in p.ports)

    lines.append(f"  RefModule good({conns('_ref')});")
    lines.append(f"  TopModule dut({conns('_dut')});")
    lines += ["  task check;", "    begin", "      samples = samples + 1;"]
    both = lambda s: "{" + ", ".join(f"{n}{s}" for n, _ in outs) + "}"
    lines.append(f"      if ({both('_ref')} !== ({both('_ref')} ^ {both('_dut')} ^ {both('_ref')})) begin")
    lines += ["        errors = errors + 1;", "        if (first_err < 0) first_err = $time;", "      end"]
    for n, _ in outs:
        lines.append(f"      if ({n}_ref !== ({n}_ref ^ {n}_dut ^ {n}_ref)) err_{n} = err_{n} + 1;")
    lines += ["    end", "  endtask", "  initial begin", '    $dumpfile("wave.vcd");', "    $dumpvars(0, tb);"]
    lines += [f"    {n} = 0;" for n, _ in ins]
    lines.append(p.stimulus.rstrip("\n"))
    lines.append('    if (first_err >= 0) $display("Hint: First mismatch occurred at time %0d.", first_err);')
    for n, _ in outs:
        lines.append(f"    if (err_{n} > 0) $display(\"Hint: Output '{n}' has %0d mismatches.\", err_{n});")
    lines += ['    $display("Mismatches: %0d in %0d samples", errors, samples);', "    $finish;", "  end",
              "endmodule"]
    return "\n".join(lines) + "\n"


def _plan_json(plan: list[dict]) -> str:
    return "```json\n" + json.dumps(plan, indent=2) + "\n```"


def transcript(p: Problem) -> dict:
    golden = module("TopModule", p.header, p.body)
    rules: list[dict] = []
    add = lambda role, match, reply, times=1: rules.append(
        {"role": role, "match": match, "reply": reply, "times": times})

    # planner and critic (plain alternating chat)
    add("planner", r"^Module specification", _plan_json(p.plan))
    if p.revised_plan is not None:
        add("planner", r"^Revise the plan", _plan_json(p.revised_plan))
    for verdict in p.critic:
        add("plan_critic", r"Proposed plan", verdict)
    add("extractor", r"^Module specification", "```json\n" + json.dumps(p.extraction, indent=2) + "\n```")

    add("retriever", r"^Sub-task", tool_action("tcrg_retrieve", {"k": 2}, "Gather the linked signals."), None)
    add("retriever", r"^(Retrieved|No circuit details)",
        final_action("{{last_json}}", "Everything retrieved is relevant."), None)

    for tid, body in p.drafts.items():
        add("engineer", rf"Sub-task {tid}:",
            f"Implementation for {tid}.\n```verilog\n{module('TopModule', p.header, body)}```")
    add("code_verifier", r"^Review the draft", tool_action("check_syntax", "", "Compile the draft first."), None)
    add("code_verifier", r"^Compilation succeeded", final_action("APPROVED"), None)
    add("code_verifier", r"^Compilation failed", final_action("Fix the reported syntax errors."), None)

    add("simple_planner", r"^Module specification", _plan_json([
        {"id": "t1", "type": "write", "description": "Implement the complete module TopModule."},
        {"id": "t2", "type": "verify", "description": "Simulate the module against the testbench."}]))
    simple = module("TopModule", p.header, p.simple_body if p.simple_body is not None else p.body)
    add("simple_engineer", r"Sub-task t1:", f"```verilog\n{simple}```")

    add("debugger", r"Simulate it against the testbench",
        tool_action("simulate", "", "Run the testbench on the current code."), None)
    add("debugger", r"All outputs match the reference", final_action("The module passes the testbench."), None)
    add("debugger", r"^Simulation finished: [1-9]",
        tool_action("ast_wt_trace", {"level": 1}, "Trace the mismatched outputs to their drivers."), None)
    if p.fix_pattern:
        add("debugger", p.fix_pattern,
            tool_action("simulate", golden, "The traced statement is wrong; simulate the corrected module."), None)
    give_up = final_action("No fix found for the remaining mismatches.")
    for pattern in (r"^== CODE ==", r"^unknown tool", r"^tool error", r"^Compilation failed",
                    r"^Simulation timed out", r"^No waveform"):
        add("debugger", pattern, give_up, None)
    return {"rules": rules}


# -- corpus ------------------------------------------------------------------------------------------------------

def _write_task(tid, desc, deps=None):
    d = {"id": tid, "type": "write", "description": desc}
    if deps is not None:
        d["depends_on"] = deps
    return d


def _verify(tid, deps):
    return {"id": tid, "type": "verify", "description": "Simulate the module against the testbench and fix "
            "any mismatches.", "depends_on": deps}


def _sig(name, desc):
    return {"name": name, "description": desc}


PROBLEMS: list[Problem] = []

PROBLEMS.append(Problem(
    id="mux2", category="CombSeqFSM-Descr",
    spec="Build TopModule, a 2-to-1 multiplexer with 1-bit inputs a, b and sel and a 1-bit output out.\n"
         "When sel is 0 the output out equals a; when sel is 1 it equals b.\n",
    header="(input a, input b, input sel, output out);",
    ports=[("input", "a", 1), ("input", "b", 1), ("input", "sel", 1), ("output", "out", 1)],
    body="  assign out = sel ? b : a;",
    stimulus=loop("{a, b, sel}", 16),
    plan=[_write_task("t1", "Declare the module TopModule with inputs a, b, sel and output out."),
          _write_task("t2", "Drive out with b when sel is 1 and with a when sel is 0."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": "  assign out = sel ? b : a;"},
    extraction={"signals": [_sig("a", "data input selected when sel is 0"),
                            _sig("b", "data input selected when sel is 1"),
                            _sig("sel", "select input"), _sig("out", "multiplexer output")],
                "transitions": [],
                "examples": [{"description": "sel=1, a=0, b=1 gives out=1", "signals": ["sel", "a", "b", "out"]}]},
    bugs=[Bug("swapped_select", "  assign out = sel ? a : b;", "select polarity swapped", ["out"], 30)],
))

PROBLEMS.append(Problem(
    id="dff_reset", category="CombSeqFSM-Descr",
    spec="Build TopModule, an 8-bit register with inputs clk, reset and d[7:0] and output q[7:0].\n"
         "On every rising edge of clk, q takes the value of d. The reset is synchronous and active high:\n"
         "when reset is 1 at a rising edge, q becomes 0 instead.\n",
    header="(input clk, input reset, input [7:0] d, output reg [7:0] q);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "d", 8), ("output", "q", 8)],
    body="  always @(posedge clk) begin\n    if (reset) q <= 8'd0;\n    else q <= d;\n  end",
    stimulus="    reset = 1;\n" + steps("reset = 1; d = 8'h55;", "reset = 0; d = 8'h0f;", "d = 8'ha5;", "d = 8'h3c;",
                                    "reset = 1; d = 8'hff;", "reset = 0; d = 8'h81;", "d = 8'h42;"),
    plan=[_write_task("t1", "Declare TopModule with inputs clk, reset, d[7:0] and output register q[7:0]."),
          _write_task("t2", "On each rising edge of clk load q from d, clearing q to 0 while reset is high."),
          _verify("t3", ["t2"])],
    # the engineer plants the reset-polarity bug; the debugger repairs it with a trace
    drafts={"t1": "", "t2": "  always @(posedge clk) begin\n    if (!reset) q <= 8'd0;\n    else q <= d;\n  end"},
    extraction={"signals": [_sig("clk", "clock, active on the rising edge"),
                            _sig("reset", "synchronous active-high reset"), _sig("d", "8-bit data input"),
                            _sig("q", "8-bit registered output")],
                "transitions": [{"label": "reset", "description": "reset=1 at a rising edge of clk clears q to 0",
                                 "signals": ["reset", "clk", "q"]},
                                {"label": "load", "description": "reset=0 at a rising edge of clk loads d into q",
                                 "signals": ["reset", "clk", "d", "q"]}],
                "examples": []},
    bugs=[Bug("reset_polarity", "  always @(posedge clk) begin\n    if (!reset) q <= 8'd0;\n    else q <= d;\n  end",
              "reset tested as active low", ["q"], 20)],
    simple_body="  always @(posedge clk) begin\n    if (!reset) q <= 8'd0;\n    else q <= d;\n  end",
    fix_pattern=r"^== CODE ==.*context: always @\(posedge clk\) > if \(!reset\)",
))

_FSM_NEXT = ("  always @(*) begin\n    case (state)\n      A: next_state = w ? B : A;\n      B: next_state = w ? C : A;\n"
             "      C: next_state = w ? C : D;\n      D: next_state = w ? B : A;\n      default: next_state = A;\n"
             "    endcase\n  end\n")
_FSM_REG = "  always @(posedge clk) begin\n    if (reset) state <= A;\n    else state <= next_state;\n  end\n"
_FSM_DECL = "  localparam A = 2'd0, B = 2'd1, C = 2'd2, D = 2'd3;\n  reg [1:0] state, next_state;\n"
PROBLEMS.append(Problem(
    id="fsm_abcd", category="FSM-TransTable",
    spec="Build TopModule, a Moore state machine with inputs clk, reset and w and output z.\n"
         "States are A, B, C and D; the synchronous active-high reset returns it to A.\n"
         "State | next (w=0) | next (w=1) | z\n"
         "A     | A          | B          | 0\n"
         "B     | A          | C          | 0\n"
         "C     | D          | C          | 0\n"
         "D     | A          | B          | 1\n",
    header="(input clk, input reset, input w, output z);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "w", 1), ("output", "z", 1)],
    body=_FSM_DECL + _FSM_NEXT + _FSM_REG + "  assign z = (state == D);",
    stimulus="    reset = 1;\n" + steps("reset = 1; w = 0;", "reset = 0; w = 1;", "w = 1;", "w = 0;", "w = 0;",
                                    "w = 1;", "w = 1;", "w = 1;", "w = 0;", "w = 1;", "w = 0;", "w = 0;"),
    plan=[_write_task("t1", "Declare TopModule with clk, reset, w and z, the state encoding A to D, and the "
                      "state and next_state registers."),
          _write_task("t2", "Implement next_state from the transition table over w and the state register "
                      "with synchronous reset to A."),
          _write_task("t3", "Drive the Moore output z high only in state D."),
          _verify("t4", ["t3"])],
    drafts={"t1": _FSM_DECL, "t2": _FSM_DECL + _FSM_NEXT + _FSM_REG,
            "t3": _FSM_DECL + _FSM_NEXT + _FSM_REG + "  assign z = (state == D);"},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous active-high reset to state A"),
                            _sig("w", "input that selects the next state in every state"),
                            _sig("z", "Moore output, 1 only in state D"),
                            _sig("state", "current state register"), _sig("next_state", "next state")],
                "transitions": [{"label": "A->B", "description": "A goes to B when w=1, stays in A when w=0",
                                 "signals": ["state", "w", "next_state"]},
                                {"label": "B->C", "description": "B goes to C when w=1 and back to A when w=0",
                                 "signals": ["state", "w", "next_state"]},
                                {"label": "C->D", "description": "C goes to D when w=0 and stays in C when w=1",
                                 "signals": ["state", "w", "next_state"]},
                                {"label": "D->A", "description": "D goes to A when w=0 and to B when w=1",
                                 "signals": ["state", "w", "next_state"]}],
                "examples": [{"description": "w=1,1,0 after reset reaches D and raises z",
                              "signals": ["w", "z"]}]},
    bugs=[Bug("dropped_transition", (_FSM_DECL + _FSM_NEXT + _FSM_REG).replace("w ? C : D", "w ? C : A")
              + "  assign z = (state == D);", "transition C to D on w=0 lost", ["z"], 50)],
    simple_body=(_FSM_DECL + _FSM_NEXT + _FSM_REG).replace("w ? C : D", "w ? C : A") + "  assign z = (state == D);",
))

_SEQ = ("  localparam S0 = 2'd0, S1 = 2'd1, S2 = 2'd2;\n  reg [1:0] state, next_state;\n  always @(*) begin\n"
        "    case (state)\n      S0: next_state = x ? S1 : S0;\n      S1: next_state = x ? S1 : S2;\n"
        "      S2: next_state = x ? S1 : S0;\n      default: next_state = S0;\n    endcase\n  end\n"
        "  always @(posedge clk) begin\n    if (reset) state <= S0;\n    else state <= next_state;\n  end\n"
        "  assign z = (state == S2) & x;")
PROBLEMS.append(Problem(
    id="seq101", category="FSM-TransTable",
    spec="Build TopModule, a Mealy machine that detects the bit pattern 101 on input x (overlaps allowed).\n"
         "Inputs clk, reset (synchronous, active high, to S0) and x; output z.\n"
         "State | x=0: next, z | x=1: next, z\n"
         "S0    | S0, 0        | S1, 0\n"
         "S1    | S2, 0        | S1, 0\n"
         "S2    | S0, 0        | S1, 1\n",
    header="(input clk, input reset, input x, output z);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "x", 1), ("output", "z", 1)],
    body=_SEQ,
    stimulus="    reset = 1;\n" + steps("reset = 1; x = 0;", "reset = 0; x = 1;", "x = 0;", "x = 1;", "x = 1;",
                                    "x = 0;", "x = 1;", "x = 0;", "x = 1;", "x = 1;", "x = 0;", "x = 1;"),
    plan=[_write_task("t1", "Declare TopModule with clk, reset, x and z and the state registers state and "
                      "next_state with encodings S0, S1, S2."),
          _write_task("t2", "Implement next_state from the table, the state register with reset to S0, and the "
                      "Mealy output z."),
          _verify("t3", ["t2"])],
    drafts={"t1": "  localparam S0 = 2'd0, S1 = 2'd1, S2 = 2'd2;\n  reg [1:0] state, next_state;", "t2": _SEQ},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous reset to S0"),
                            _sig("x", "serial input bit"), _sig("z", "Mealy output, 1 when 101 completes"),
                            _sig("state", "current state"), _sig("next_state", "next state")],
                "transitions": [{"label": "S0", "description": "S0 moves to S1 on x=1, else stays",
                                 "signals": ["state", "x", "next_state"]},
                                {"label": "S1", "description": "S1 stays on x=1 and moves to S2 on x=0",
                                 "signals": ["state", "x", "next_state"]},
                                {"label": "S2", "description": "S2 moves to S1 with z=1 on x=1, to S0 on x=0",
                                 "signals": ["state", "x", "next_state", "z"]}],
                "examples": [{"description": "x=1,0,1 raises z during the final 1", "signals": ["x", "z"]}]},
    bugs=[Bug("dropped_self_loop", _SEQ.replace("S1: next_state = x ? S1 : S2", "S1: next_state = x ? S0 : S2"),
              "self loop S1 on x=1 lost", ["z"], 70)],
    simple_body=_SEQ.replace("S1: next_state = x ? S1 : S2", "S1: next_state = x ? S0 : S2"),
))

_TL_DECL = "  localparam G = 2'd0, Y = 2'd1, R1 = 2'd2, R2 = 2'd3;\n  reg [1:0] state;\n"
_TL_SEQ = ("  always @(posedge clk) begin\n    if (reset) state <= G;\n    else case (state)\n"
           "      G: state <= req ? Y : G;\n      Y: state <= R1;\n      R1: state <= R2;\n"
           "      default: state <= G;\n    endcase\n  end\n")
_TL_OUT = ("  assign green = (state == G);\n  assign yellow = (state == Y);\n"
           "  assign red = (state == R1) | (state == R2);")
PROBLEMS.append(Problem(
    id="traffic_light", category="Application-Descr",
    spec="Build TopModule, a pedestrian crossing light with inputs clk, reset and req and one-hot outputs\n"
         "green, yellow and red. After a synchronous active-high reset the light is green. While green, a\n"
         "request (req=1) at a rising clock edge switches it to yellow. Yellow lasts one cycle, then red\n"
         "lasts exactly two cycles, after which the light returns to green.\n",
    header="(input clk, input reset, input req, output green, output yellow, output red);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "req", 1), ("output", "green", 1),
           ("output", "yellow", 1), ("output", "red", 1)],
    body=_TL_DECL + _TL_SEQ + _TL_OUT,
    stimulus="    reset = 1;\n" + steps("reset = 1; req = 0;", "reset = 0;", "req = 1;", "req = 0;", "req = 0;",
                                    "req = 0;", "req = 0;", "req = 1;", "req = 1;", "req = 0;", "req = 0;",
                                    "req = 0;"),
    plan=[_write_task("t1", "Declare TopModule with clk, reset, req, green, yellow and red and a state register "
                      "covering green, yellow and two red cycles."),
          _write_task("t2", "Sequence the state register: reset to green, req moves green to yellow, yellow to "
                      "the first red cycle, then the second red cycle, then green."),
          _write_task("t3", "Decode the state into the one-hot outputs green, yellow and red."),
          _verify("t4", ["t3"])],
    drafts={"t1": _TL_DECL, "t2": _TL_DECL + _TL_SEQ, "t3": _TL_DECL + _TL_SEQ + _TL_OUT},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous active-high reset to green"),
                            _sig("req", "pedestrian request"), _sig("green", "green lamp"),
                            _sig("yellow", "yellow lamp"), _sig("red", "red lamp")],
                "transitions": [{"label": "green->yellow", "description": "green moves to yellow when req=1",
                                 "signals": ["green", "req", "yellow"]},
                                {"label": "yellow->red", "description": "yellow lasts one cycle, then red",
                                 "signals": ["yellow", "red"]},
                                {"label": "red->green", "description": "red lasts two cycles, then green",
                                 "signals": ["red", "green"]}],
                "examples": []},
    bugs=[Bug("short_red", _TL_DECL + _TL_SEQ.replace("R1: state <= R2", "R1: state <= G") + _TL_OUT,
              "red lasts a single cycle", ["green", "red"], 60)],
    simple_body=_TL_DECL + _TL_SEQ.replace("R1: state <= R2", "R1: state <= G") + _TL_OUT,
))

_PRIO = ("  assign valid = |req;\n  always @(*) begin\n    if (req[3]) grant = 2'd3;\n"
         "    else if (req[2]) grant = 2'd2;\n    else if (req[1]) grant = 2'd1;\n    else grant = 2'd0;\n  end")
PROBLEMS.append(Problem(
    id="priority_enc", category="Application-Descr",
    spec="Build TopModule, the arbitration logic of an interrupt controller with four request lines req[3:0].\n"
         "Output grant[1:0] is the index of the highest-numbered active request and valid is 1 when any\n"
         "request is active. With no active request grant is 0.\n",
    header="(input [3:0] req, output reg [1:0] grant, output valid);",
    ports=[("input", "req", 4), ("output", "grant", 2), ("output", "valid", 1)],
    body=_PRIO,
    stimulus=loop("req", 16),
    plan=[_write_task("t1", "Declare TopModule with input req[3:0] and outputs grant[1:0] and valid."),
          _write_task("t2", "Drive valid high when any req bit is set and grant with the highest active index."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": _PRIO},
    extraction={"signals": [_sig("req", "four interrupt request lines"),
                            _sig("grant", "index of the highest-numbered active request"),
                            _sig("valid", "1 when any request is active")],
                "transitions": [],
                "examples": [{"description": "req=0110 gives grant=2 and valid=1",
                              "signals": ["req", "grant", "valid"]}]},
    bugs=[Bug("lowest_first", "  assign valid = |req;\n  always @(*) begin\n    if (req[0]) grant = 2'd0;\n"
              "    else if (req[1]) grant = 2'd1;\n    else if (req[2]) grant = 2'd2;\n"
              "    else if (req[3]) grant = 2'd3;\n    else grant = 2'd0;\n  end",
              "lowest index wins instead of highest", ["grant"], 40)],
))

_CNT = "  always @(posedge clk) begin\n    if (reset) q <= 4'd0;\n    else if (en) q <= q + 4'd1;\n  end"
_COUNTER_PLAN = [
    _write_task("t1", "Declare TopModule with inputs clk, reset, en and output register q[3:0]."),
    _write_task("t2", "On each rising edge of clk clear q when reset is high, otherwise add 1 to q while en is "
                "high and hold q when en is low."),
    _verify("t3", ["t2"])]
PROBLEMS.append(Problem(
    id="counter4", category="CombSeqFSM-Descr",
    spec="Build TopModule, a 4-bit up counter with inputs clk, reset and en and output q[3:0].\n"
         "At each rising edge of clk: if reset (synchronous, active high) is 1, q becomes 0; otherwise if\n"
         "en is 1, q increments by one, wrapping from 15 to 0; otherwise q holds its value.\n",
    header="(input clk, input reset, input en, output reg [3:0] q);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "en", 1), ("output", "q", 4)],
    body=_CNT,
    stimulus="    reset = 1;\n" + steps("reset = 1; en = 0;", "reset = 0; en = 1;", "en = 1;", "en = 1;", "en = 0;",
                                    "en = 0;") + loop("en", 18, "1"),
    plan=[_write_task("t1", "Declare TopModule with inputs clk, reset, en and output register q[3:0]."),
          _write_task("t2", "Increment q on each rising edge of clk."),
          _verify("t3", ["t2"])],
    critic=["The plan ignores reset and en. Make the counting task clear q on reset and hold q while en is low.",
            "APPROVED"],
    revised_plan=_COUNTER_PLAN,
    drafts={"t1": "", "t2": _CNT},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous active-high reset"),
                            _sig("en", "count enable"), _sig("q", "4-bit count")],
                "transitions": [{"label": "count", "description": "en=1 increments q, wrapping 15 to 0",
                                 "signals": ["en", "q"]},
                                {"label": "hold", "description": "en=0 keeps q", "signals": ["en", "q"]}],
                "examples": []},
    bugs=[Bug("ignores_enable", "  always @(posedge clk) begin\n    if (reset) q <= 4'd0;\n"
              "    else q <= q + 4'd1;\n  end", "counts even when en is low", ["q"], 60)],
))

PROBLEMS.append(Problem(
    id="kmap4", category="Comb-Kmap",
    spec="Build TopModule with inputs a, b, c, d and output f, implementing this Karnaugh map\n"
         "(columns are ab, rows are cd):\n"
         "        ab=00 ab=01 ab=11 ab=10\n"
         "cd=00     1     1     0     0\n"
         "cd=01     1     1     1     0\n"
         "cd=11     0     0     1     1\n"
         "cd=10     0     0     1     1\n",
    header="(input a, input b, input c, input d, output f);",
    ports=[("input", "a", 1), ("input", "b", 1), ("input", "c", 1), ("input", "d", 1), ("output", "f", 1)],
    body="  assign f = (~a & ~c) | (a & c) | (b & ~c & d);",
    stimulus=loop("{a, b, c, d}", 16),
    plan=[_write_task("t1", "Declare TopModule with inputs a, b, c, d and output f."),
          _write_task("t2", "Drive f with a minimal sum of products covering every 1 cell of the map."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": "  assign f = (~a & ~c) | (a & c) | (b & ~c & d);"},
    extraction={"signals": [_sig("a", "map column variable"), _sig("b", "map column variable"),
                            _sig("c", "map row variable"), _sig("d", "map row variable"),
                            _sig("f", "function output")],
                "transitions": [],
                "examples": [{"description": "a=1 b=1 c=0 d=1 gives f=1", "signals": ["a", "b", "c", "d", "f"]}]},
    bugs=[Bug("missing_term", "  assign f = (~a & ~c) | (a & c);", "product term b&~c&d dropped", ["f"], 140)],
    simple_body="  assign f = (~a & ~c) | (a & c);",
))

PROBLEMS.append(Problem(
    id="wave_majority", category="CombSeqFSM-Waveform",
    spec="Build TopModule, a combinational circuit with inputs a, b, c and output q. Its behaviour is given\n"
         "by this simulation waveform:\n"
         "time(ns) | 10 20 30 40 50 60 70 80\n"
         "a        |  0  0  0  0  1  1  1  1\n"
         "b        |  0  0  1  1  0  0  1  1\n"
         "c        |  0  1  0  1  0  1  0  1\n"
         "q        |  0  0  0  1  0  1  1  1\n",
    header="(input a, input b, input c, output q);",
    ports=[("input", "a", 1), ("input", "b", 1), ("input", "c", 1), ("output", "q", 1)],
    body="  assign q = (a & b) | (a & c) | (b & c);",
    stimulus=loop("{a, b, c}", 16),
    plan=[_write_task("t1", "Declare TopModule with inputs a, b, c and output q."),
          _write_task("t2", "Derive q from the waveform rows and drive it combinationally from a, b and c."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": "  assign q = (a & b) | (a & c) | (b & c);"},
    extraction={"signals": [_sig("a", "input"), _sig("b", "input"), _sig("c", "input"),
                            _sig("q", "output, 1 when at least two inputs are 1")],
                "transitions": [],
                "examples": [{"description": "at 40 ns a=0 b=1 c=1 and q=1", "signals": ["a", "b", "c", "q"]},
                             {"description": "at 50 ns a=1 b=0 c=0 and q=0", "signals": ["a", "b", "c", "q"]}]},
    bugs=[Bug("parity", "  assign q = a ^ b ^ c;", "odd parity instead of majority", ["q"], 20)],
))

_EDGE = ("  reg prev;\n  always @(posedge clk) begin\n    if (reset) begin\n      prev <= 1'b0;\n"
         "      pulse <= 1'b0;\n    end else begin\n      prev <= din;\n      pulse <= din & ~prev;\n    end\n  end")
PROBLEMS.append(Problem(
    id="edge_detect", category="CombSeqFSM-Waveform",
    spec="Build TopModule with inputs clk, reset and din and output pulse. The waveform below (sampled just\n"
         "before each falling edge of clk, synchronous active-high reset released at cycle 2) shows the\n"
         "intended behaviour: pulse is 1 for one cycle after din rises.\n"
         "cycle | 1 2 3 4 5 6 7 8 9 10\n"
         "reset | 1 0 0 0 0 0 0 0 0 0\n"
         "din   | 0 0 1 1 0 0 1 0 1 1\n"
         "pulse | 0 0 0 1 0 0 0 1 0 1\n",
    header="(input clk, input reset, input din, output reg pulse);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "din", 1), ("output", "pulse", 1)],
    body=_EDGE,
    stimulus="    reset = 1;\n" + steps("reset = 1; din = 0;", "reset = 0; din = 0;", "din = 1;", "din = 1;", "din = 0;",
                                    "din = 0;", "din = 1;", "din = 0;", "din = 1;", "din = 1;"),
    plan=[_write_task("t1", "Declare TopModule with clk, reset, din and output register pulse, plus a register "
                      "prev holding the previous din."),
          _write_task("t2", "On each rising edge of clk store din into prev and set pulse when din is 1 and prev is "
                      "0; clear both on reset."),
          _verify("t3", ["t2"])],
    drafts={"t1": "  reg prev;", "t2": _EDGE},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous active-high reset"),
                            _sig("din", "monitored input"), _sig("pulse", "one-cycle pulse after din rises")],
                "transitions": [{"label": "rise", "description": "din going 0 to 1 raises pulse for one cycle",
                                 "signals": ["din", "pulse"]}],
                "examples": [{"description": "cycles 3 to 4: din rises and pulse is 1 in cycle 4",
                              "signals": ["din", "pulse"]}]},
    bugs=[Bug("both_edges", _EDGE.replace("pulse <= din & ~prev", "pulse <= din ^ prev"),
              "pulses on falling edges too", ["pulse"], 60)],
))

_SHIFT = "  always @(posedge clk) begin\n    if (reset) q <= 4'd0;\n    else if (en) q <= {q[2:0], sin};\n  end"
PROBLEMS.append(Problem(
    id="shift4", category="other",
    spec="Build TopModule, a 4-bit serial-in parallel-out shift register with inputs clk, reset, en and sin\n"
         "and output q[3:0]. On a rising edge of clk with en=1 the register shifts left, taking sin into\n"
         "q[0]. A synchronous active-high reset clears q; with en=0, q holds.\n",
    header="(input clk, input reset, input en, input sin, output reg [3:0] q);",
    ports=[("input", "clk", 1), ("input", "reset", 1), ("input", "en", 1), ("input", "sin", 1),
           ("output", "q", 4)],
    body=_SHIFT,
    stimulus="    reset = 1;\n" + steps("reset = 1;", "reset = 0; en = 1; sin = 1;", "sin = 0;", "sin = 1;",
                                    "sin = 1;", "en = 0; sin = 0;", "en = 1;", "sin = 1;"),
    plan=[_write_task("t1", "Declare TopModule with inputs clk, reset, en, sin and output register q[3:0]."),
          _write_task("t2", "Clear q on reset, otherwise shift sin into q[0] while en is high."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": _SHIFT},
    extraction={"signals": [_sig("clk", "clock"), _sig("reset", "synchronous reset"),
                            _sig("en", "shift enable"), _sig("sin", "serial input"),
                            _sig("q", "parallel output")],
                "transitions": [{"label": "shift", "description": "en=1 shifts q left with sin into q[0]",
                                 "signals": ["en", "sin", "q"]}],
                "examples": []},
    bugs=[Bug("shift_right", _SHIFT.replace("{q[2:0], sin}", "{sin, q[3:1]}"), "shifts in the wrong direction",
              ["q"], 30)],
))

_ALU = ("  always @(*) begin\n    case (op)\n      2'd0: y = a + b;\n      2'd1: y = a - b;\n"
        "      2'd2: y = a & b;\n      default: y = a | b;\n    endcase\n  end")
PROBLEMS.append(Problem(
    id="alu4", category="other",
    spec="Build TopModule, a 4-bit ALU with inputs a[3:0], b[3:0] and op[1:0] and output y[3:0].\n"
         "op=0 gives a+b, op=1 gives a-b, op=2 gives a&b and op=3 gives a|b; results keep the low 4 bits.\n",
    header="(input [3:0] a, input [3:0] b, input [1:0] op, output reg [3:0] y);",
    ports=[("input", "a", 4), ("input", "b", 4), ("input", "op", 2), ("output", "y", 4)],
    body=_ALU,
    stimulus=loop("{op, a, b}", 64, "i * 37"),
    plan=[_write_task("t1", "Declare TopModule with inputs a[3:0], b[3:0], op[1:0] and output y[3:0]."),
          _write_task("t2", "Select y from a+b, a-b, a&b or a|b according to op."),
          _verify("t3", ["t2"])],
    drafts={"t1": "", "t2": _ALU},
    extraction={"signals": [_sig("a", "first operand"), _sig("b", "second operand"),
                            _sig("op", "operation select"), _sig("y", "result")],
                "transitions": [],
                "examples": [{"description": "op=2 a=12 b=10 gives y=8", "signals": ["op", "a", "b", "y"]}]},
    bugs=[Bug("swapped_logic_ops", _ALU.replace("y = a & b", "y = TMP").replace("y = a | b", "y = a & b")
              .replace("y = TMP", "y = a | b"), "and/or opcodes swapped", ["y"], 150)],
))


# -- rendering -----------------------------------------------------------------------------------------------------

def render(p: Problem) -> dict[str, str]:
    files = {
        "spec.txt": p.spec,
        "ref.v": module("RefModule", p.header, p.body),
        "tb.v": module("RefModule", p.header, p.body) + "\n" + testbench(p),
        "meta.json": json.dumps({
            "category": p.category,
            "clock": "clk" if any(n == "clk" for _, n, _ in p.ports) else None,
            "bugs": [{"name": b.name, "file": f"bugs/{b.name}.v", "description": b.description,
                      "mismatched_outputs": b.outputs, "first_mismatch_ns": b.first_mismatch_ns} for b in p.bugs],
        }, indent=2) + "\n",
        "transcript.json": json.dumps(transcript(p), indent=2) + "\n",
    }
    for b in p.bugs:
        files[f"bugs/{b.name}.v"] = module("TopModule", p.header, b.body)
    return files


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="report stale files instead of writing")
    args = ap.parse_args(argv)
    stale = []
    for p in PROBLEMS:
        for rel, text in render(p).items():
            path = ROOT / p.id / rel
            if path.exists() and path.read_text() == text:
                continue
            stale.append(str(path))
            if not args.check:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
    for s in stale:
        print(("stale: " if args.check else "wrote: ") + s)
    return 1 if args.check and stale else 0


if __name__ == "__main__":
    sys.exit(main())
