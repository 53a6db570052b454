from __future__ import annotations

import threading

import pytest

from rtlpilot.fixtures import VCD_DIR, load_fixture
from rtlpilot.sim_tools import (
    MismatchRules,
    SimTimeout,
    SimulatorConfig,
    ToolUnavailable,
    check_syntax,
    first_divergence,
    parse_diagnostics,
    parse_stdout,
    select_backend,
    simulate,
    timescale_unit,
)
from rtlpilot.waveform import load_vcd

MUX = "module TopModule(input a, input b, input sel, output out);\n  assign out = sel ? b : a;\nendmodule\n"
MUX_NO_SEMI = "module TopModule(input a, input b, input sel, output out);\n  assign out = sel ? b : a\nendmodule\n"


# -- pure parsing ---------------------------------------------------------------

def test_parse_stdout_default_rules():
    text = ("Hint: First mismatch occurred at time 30.\nHint: Output 'out' has 7 mismatches.\n"
            "Hint: Output 'z' has 0 mismatches.\nMismatches: 7 in 16 samples\n")
    assert parse_stdout(text, MismatchRules()) == (7, 16, 30, {"out": 7, "z": 0})


def test_parse_stdout_custom_rules():
    rules = MismatchRules(count=r"ERRORS=(\d+)/(\d+)", first_time=r"first@(\d+)", per_signal=r"(\w+):(\d+) bad")
    assert parse_stdout("first@12\nq:3 bad\nERRORS=3/9\n", rules) == (3, 9, 12, {"q": 3})


def test_parse_stdout_missing_statistics():
    assert parse_stdout("nothing useful\n", MismatchRules()) == (None, None, None, {})


def test_parse_diagnostics_both_dialects():
    out = ("%Error: dut.v:3:1: syntax error, unexpected endmodule\n"
           "%Warning-WIDTH: dut.v:2:14: Operator ASSIGN expects 1 bits\n"
           "dut.v:7: syntax error\n"
           "tb.v:4: warning: implicit definition\n")
    diags = parse_diagnostics(out)
    assert [(d.file, d.line, d.severity) for d in diags] == [
        ("dut.v", 3, "error"), ("dut.v", 2, "warning"), ("dut.v", 7, "error"), ("tb.v", 4, "warning")]


def test_timescale_unit():
    assert timescale_unit("`timescale 1ns/1ps\nmodule t; endmodule") == 1e-9
    assert timescale_unit("`timescale 10 ps / 1 ps") == pytest.approx(1e-11)
    assert timescale_unit("module t; endmodule") is None


def test_first_divergence_from_dump():
    assert first_divergence(load_vcd(VCD_DIR / "multi_scope.vcd")) == 15000


def test_missing_binary_is_tool_unavailable(tmp_path):
    cfg = SimulatorConfig(backend="verilator", verilator=str(tmp_path / "no-such-verilator"))
    with pytest.raises(ToolUnavailable):
        select_backend(cfg)
    with pytest.raises(ToolUnavailable):
        check_syntax(MUX, tmp_path / "w", cfg)


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        select_backend(SimulatorConfig(backend="modelsim"))


# -- external simulator --------------------------------------------------------

@pytest.mark.simulator
def test_check_syntax_valid(tmp_path):
    rep = check_syntax(MUX, tmp_path)
    assert rep.ok
    assert not [d for d in rep.diagnostics if d.severity == "error"]
    assert (tmp_path / "dut.v").read_text() == MUX


@pytest.mark.simulator
def test_check_syntax_missing_semicolon(tmp_path):
    rep = check_syntax(MUX_NO_SEMI, tmp_path)
    assert not rep.ok
    errors = [d for d in rep.diagnostics if d.severity == "error"]
    assert errors and errors[0].line in (2, 3)
    assert rep.summary().startswith("Compilation failed")


@pytest.mark.simulator
def test_simulate_golden_and_swapped_mux(tmp_path):
    fx = load_fixture("mux2")
    good = simulate(fx.golden, fx.problem.testbench, tmp_path / "good")
    assert good.compiled and good.mismatch_count == 0 and good.passed
    assert good.first_mismatch_time is None
    assert good.vcd_path is not None and good.vcd_path.parent == tmp_path / "good"
    bug = fx.bugs[0]
    bad = simulate(bug.source, fx.problem.testbench, tmp_path / "bad")
    assert bad.mismatch_count > 0 and not bad.passed
    ns = bad.first_mismatch_time * load_vcd(bad.vcd_path).tick_seconds / 1e-9
    assert ns == pytest.approx(30)  # third stimulus vector {a,b,sel}=010, checked at 30 ns
    assert bad.mismatched_signals == {"out": bad.mismatch_count}
    for name in ("dut.v", "tb.v", "sim.out", "wave.vcd", "stdout.log"):
        assert (tmp_path / "bad" / name).exists()


@pytest.mark.simulator
def test_simulate_compile_failure(tmp_path):
    fx = load_fixture("mux2")
    rep = simulate(MUX_NO_SEMI, fx.problem.testbench, tmp_path)
    assert not rep.compiled
    assert rep.mismatch_count is None and rep.total_samples is None and rep.vcd_path is None
    assert rep.first_mismatch_time is None
    assert any(d.severity == "error" for d in rep.diagnostics)


@pytest.mark.simulator
def test_simulation_timeout(tmp_path):
    tb = "`timescale 1ns/1ps\nmodule tb;\n  reg clk = 0;\n  always #1 clk = ~clk;\nendmodule\n"
    dut = "module TopModule(input a, output y);\n  assign y = a;\nendmodule\n"
    with pytest.raises(SimTimeout):
        simulate(dut, tb, tmp_path, config=SimulatorConfig(timeout=1.0))


@pytest.mark.simulator
def test_concurrent_runs_are_isolated(tmp_path):
    fx = load_fixture("mux2")
    results = {}

    def run(name, src):
        results[name] = simulate(src, fx.problem.testbench, tmp_path / name)

    threads = [threading.Thread(target=run, args=("a", fx.golden)),
               threading.Thread(target=run, args=("b", fx.bugs[0].source))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results["a"].passed and not results["b"].passed
    assert results["a"].vcd_path.parent == tmp_path / "a"
    assert results["b"].vcd_path.parent == tmp_path / "b"
    assert (tmp_path / "a" / "dut.v").read_text() == fx.golden
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a", "b"]
