"""Syntax-checker and simulator tools over an external Verilog simulator.

Two adapters are provided: Icarus Verilog (`iverilog` + `vvp`) and
Verilator (`--binary --timing`). The first one found on the search path is
used unless the configuration names one.
"""
from __future__ import annotations

import logging
import os
import re
import shutil
import stat
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import FatalToolError, RtlPilotError
from .waveform import TIME_UNITS, WaveDb, load_vcd

log = logging.getLogger(__name__)

DUT_FILE = "dut.v"
TB_FILE = "tb.v"
SIM_BINARY = "sim.out"
VCD_FILE = "wave.vcd"
STDOUT_FILE = "stdout.log"


class ToolUnavailable(FatalToolError):
    pass


class WorkdirError(RtlPilotError):
    pass


class SimTimeout(RtlPilotError):
    def __init__(self, stage: str, seconds: float):
        self.stage = stage
        self.seconds = seconds
        super().__init__(f"{stage} exceeded the {seconds:g} s time budget")


@dataclass(frozen=True)
class SimulatorConfig:
    backend: str = "auto"  # auto | icarus | verilator
    iverilog: str = "iverilog"
    vvp: str = "vvp"
    verilator: str = "verilator"
    extra_flags: tuple[str, ...] = ()
    timeout: float = 30.0
    compile_timeout: float = 180.0


@dataclass(frozen=True)
class MismatchRules:
    """Regexes over testbench stdout. Defaults follow VerilogEval phrasing."""

    count: str = r"Mismatches:\s*(\d+)\s+in\s+(\d+)\s+samples"
    first_time: str = r"First mismatch occurred at time\s+(\d+)"
    per_signal: str = r"Output '(\w+)' has (\d+) mismatches"


@dataclass(frozen=True)
class CompileDiagnostic:
    line: int
    severity: str  # error | warning
    message: str
    file: str = DUT_FILE

    def __str__(self) -> str:
        return f"{self.file}:{self.line}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class CompileReport:
    ok: bool
    diagnostics: tuple[CompileDiagnostic, ...]
    raw_output: str

    def summary(self) -> str:
        if self.ok:
            return "Compilation succeeded with no errors." + (
                "\n" + "\n".join(map(str, self.diagnostics)) if self.diagnostics else "")
        lines = [str(d) for d in self.diagnostics] or [self.raw_output.strip()[:2000]]
        return "Compilation failed:\n" + "\n".join(lines)


@dataclass(frozen=True)
class SimReport:
    compiled: bool
    mismatch_count: Optional[int]
    total_samples: Optional[int]
    first_mismatch_time: Optional[int]  # VCD ticks
    vcd_path: Optional[Path]
    raw_stdout: str
    diagnostics: tuple[CompileDiagnostic, ...] = ()
    mismatched_signals: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.compiled and self.mismatch_count == 0

    def summary(self) -> str:
        if not self.compiled:
            return "Compilation failed:\n" + "\n".join(str(d) for d in self.diagnostics if d.severity == "error")
        if self.mismatch_count is None:
            return "Simulation ran but no mismatch statistics were found in its output:\n" + self.raw_stdout[-1500:]
        lines = [f"Simulation finished: {self.mismatch_count} mismatches in {self.total_samples} samples."]
        for sig, n in sorted(self.mismatched_signals.items()):
            if n:
                lines.append(f"Output '{sig}' has {n} mismatches.")
        if self.first_mismatch_time is not None:
            lines.append(f"First mismatch at time {self.first_mismatch_time}.")
        if self.mismatch_count == 0:
            lines.append("All outputs match the reference.")
        return "\n".join(lines)


# -- output parsing --------------------------------------------------------------

_ICARUS_DIAG = re.compile(r"^(?P<file>[^:\s]+\.s?v):(?P<line>\d+):\s*(?P<rest>.*)$")
_VERILATOR_DIAG = re.compile(
    r"^%(?P<sev>Error|Warning)(?:-[A-Z0-9_]+)?:\s*(?P<file>[^:\s]+\.s?v):(?P<line>\d+):(?:\d+:)?\s*(?P<msg>.*)$"
)


def parse_diagnostics(output: str) -> list[CompileDiagnostic]:
    """Extract line-numbered diagnostics from Icarus or Verilator output."""
    diags: list[CompileDiagnostic] = []
    for raw in output.splitlines():
        line = raw.strip()
        m = _VERILATOR_DIAG.match(line)
        if m:
            diags.append(CompileDiagnostic(int(m["line"]), m["sev"].lower(), m["msg"].strip(),
                                           Path(m["file"]).name))
            continue
        m = _ICARUS_DIAG.match(line)
        if m:
            rest = m["rest"]
            sev = "warning" if rest.lower().startswith("warning") else "error"
            msg = re.sub(r"^(error|warning):\s*", "", rest, flags=re.I)
            diags.append(CompileDiagnostic(int(m["line"]), sev, msg.strip(), Path(m["file"]).name))
    return diags


def parse_stdout(text: str, rules: MismatchRules) -> tuple[Optional[int], Optional[int], Optional[int], dict[str, int]]:
    count = total = first = None
    m = None
    for m in re.finditer(rules.count, text):
        pass
    if m is not None:
        count = int(m.group(1))
        total = int(m.group(2)) if m.re.groups >= 2 else None
    t = re.search(rules.first_time, text)
    if t is not None:
        first = int(t.group(1))
    per = {s: int(n) for s, n in re.findall(rules.per_signal, text)}
    return count, total, first, per


def timescale_unit(source: str) -> Optional[float]:
    m = re.search(r"`timescale\s+(\d+)\s*(s|ms|us|ns|ps|fs)\s*/", source)
    if not m:
        return None
    return int(m.group(1)) * TIME_UNITS[m.group(2)]


def first_divergence(db: WaveDb) -> Optional[int]:
    """Earliest time any `X_ref` / `X_dut` signal pair in the dump differs."""
    pairs = []
    for name in db.signals:
        if name.endswith("_ref"):
            other = name[:-4] + "_dut"
            if other in db.signals:
                pairs.append((name, other))
    best: Optional[int] = None
    for ref, dut in pairs:
        times = sorted({t for t, _ in db.changes[ref]} | {t for t, _ in db.changes[dut]})
        for t in times:
            a, b = db.value_at(ref, t), db.value_at(dut, t)
            if "x" in a or a == b:
                continue
            best = t if best is None else min(best, t)
            break
    return best


# -- adapters --------------------------------------------------------------------

class _Backend:
    name = ""
    default_time_unit = 1.0

    def __init__(self, config: SimulatorConfig):
        self.config = config

    def lint(self, workdir: Path) -> subprocess.CompletedProcess:
        raise NotImplementedError

    def build(self, workdir: Path) -> subprocess.CompletedProcess:
        raise NotImplementedError

    def run(self, workdir: Path) -> subprocess.CompletedProcess:
        raise NotImplementedError

    def _exec(self, argv: list[str], cwd: Path, timeout: float, stage: str, env=None) -> subprocess.CompletedProcess:
        log.debug("%s: %s", stage, " ".join(argv))
        try:
            return subprocess.run(argv, cwd=cwd, capture_output=True, text=True, timeout=timeout,
                                  errors="replace", env=env, start_new_session=True)
        except subprocess.TimeoutExpired:
            raise SimTimeout(stage, timeout) from None
        except FileNotFoundError as exc:
            raise ToolUnavailable(f"{argv[0]} not found: {exc}") from None


class IcarusBackend(_Backend):
    name = "icarus"

    def lint(self, workdir):
        return self._exec([self.config.iverilog, "-g2012", "-t", "null", *self.config.extra_flags, DUT_FILE],
                          workdir, self.config.compile_timeout, "syntax check")

    def build(self, workdir):
        return self._exec([self.config.iverilog, "-g2012", "-o", SIM_BINARY, *self.config.extra_flags,
                           DUT_FILE, TB_FILE], workdir, self.config.compile_timeout, "compilation")

    def run(self, workdir):
        return self._exec([self.config.vvp, "-n", SIM_BINARY], workdir, self.config.timeout, "simulation")


class VerilatorBackend(_Backend):
    name = "verilator"
    default_time_unit = 1e-9
    WARN_OFF = ("-Wno-fatal", "-Wno-lint", "-Wno-style", "-Wno-TIMESCALEMOD", "-Wno-STMTDLY", "-Wno-INITIALDLY")

    def lint(self, workdir):
        return self._exec([self.config.verilator, "--lint-only", *self.WARN_OFF, *self.config.extra_flags,
                           DUT_FILE], workdir, self.config.compile_timeout, "syntax check")

    def build(self, workdir):
        makeflags = "PYTHON3=python3 OPT_FAST=-O0 OPT_SLOW=-O0 OPT_GLOBAL=-O0 OBJCACHE=" + str(_objcache_shim())
        argv = [self.config.verilator, "--binary", "--timing", "--trace", *self.WARN_OFF,
                "--timescale", "1ns/1ps", "-MAKEFLAGS", makeflags, "--Mdir", "obj_dir", "-o", SIM_BINARY,
                *self.config.extra_flags, DUT_FILE, TB_FILE]
        proc = self._exec(argv, workdir, self.config.compile_timeout, "compilation")
        built = workdir / "obj_dir" / SIM_BINARY
        if proc.returncode == 0 and built.exists():
            shutil.copy2(built, workdir / SIM_BINARY)
        return proc

    def run(self, workdir):
        return self._exec([str(workdir / SIM_BINARY)], workdir, self.config.timeout, "simulation")


def _objcache_shim() -> Path:
    from .objcache import cache_root

    shim = cache_root().parent / "objcache-shim"
    if not shim.exists():
        shim.parent.mkdir(parents=True, exist_ok=True)
        tmp = shim.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(f"#!/bin/sh\nexec {sys.executable} -m rtlpilot.objcache \"$@\"\n")
        tmp.chmod(tmp.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
        os.replace(tmp, shim)
    return shim


def _verilator_path(config: SimulatorConfig) -> Optional[str]:
    found = shutil.which(config.verilator)
    if found:
        return found
    # the PyPI wheel installs `verilator-cli`
    return shutil.which("verilator-cli") if config.verilator == "verilator" else None


def select_backend(config: SimulatorConfig | None = None) -> _Backend:
    config = config or SimulatorConfig()
    wanted = config.backend
    if wanted in ("auto", "icarus") and shutil.which(config.iverilog) and shutil.which(config.vvp):
        return IcarusBackend(config)
    if wanted in ("auto", "verilator"):
        path = _verilator_path(config)
        if path:
            return VerilatorBackend(SimulatorConfig(**{**config.__dict__, "verilator": path}))
    if wanted not in ("auto", "icarus", "verilator"):
        raise ValueError(f"unknown simulator backend {wanted!r}")
    raise ToolUnavailable(f"no Verilog simulator found for backend {wanted!r} (looked for iverilog/vvp, verilator)")


def simulator_available(config: SimulatorConfig | None = None) -> bool:
    try:
        select_backend(config)
        return True
    except ToolUnavailable:
        return False


def _prepare(workdir: Path, files: dict[str, str]) -> Path:
    workdir = Path(workdir)
    try:
        workdir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (workdir / name).write_text(text)
    except OSError as exc:
        raise WorkdirError(f"cannot use workdir {workdir}: {exc}") from exc
    return workdir


def check_syntax(dut_source: str, workdir: Path, config: SimulatorConfig | None = None) -> CompileReport:
    backend = select_backend(config)
    workdir = _prepare(workdir, {DUT_FILE: dut_source})
    proc = backend.lint(workdir)
    output = (proc.stdout or "") + (proc.stderr or "")
    diags = tuple(parse_diagnostics(output))
    ok = proc.returncode == 0 and not any(d.severity == "error" for d in diags)
    if not ok and not any(d.severity == "error" for d in diags):
        diags += (CompileDiagnostic(0, "error", output.strip().splitlines()[-1] if output.strip() else
                                    f"compiler exited with status {proc.returncode}"),)
    return CompileReport(ok, diags, output)


def simulate(dut_source: str, testbench_source: str, workdir: Path, rules: MismatchRules | None = None,
             config: SimulatorConfig | None = None) -> SimReport:
    rules = rules or MismatchRules()
    backend = select_backend(config)
    workdir = _prepare(workdir, {DUT_FILE: dut_source, TB_FILE: testbench_source})
    for stale in (VCD_FILE, SIM_BINARY, STDOUT_FILE):
        (workdir / stale).unlink(missing_ok=True)
    proc = backend.build(workdir)
    build_out = (proc.stdout or "") + (proc.stderr or "")
    (workdir / "compile.log").write_text(build_out)
    diags = tuple(parse_diagnostics(build_out))
    if proc.returncode != 0 or not (workdir / SIM_BINARY).exists():
        if not any(d.severity == "error" for d in diags):
            tail = build_out.strip().splitlines()[-5:]
            diags += (CompileDiagnostic(0, "error", " | ".join(tail) or "build failed"),)
        return SimReport(False, None, None, None, None, build_out, diags)

    run = backend.run(workdir)
    stdout = run.stdout or ""
    (workdir / STDOUT_FILE).write_text(stdout + (run.stderr or ""))
    count, total, first, per = parse_stdout(stdout, rules)

    vcds = [workdir / VCD_FILE] if (workdir / VCD_FILE).exists() else sorted(workdir.glob("*.vcd"))
    vcd_path = vcds[0] if vcds else None
    db = None
    if vcd_path is not None:
        try:
            db = load_vcd(vcd_path)
        except RtlPilotError as exc:
            log.warning("could not read %s: %s", vcd_path, exc)
    if first is not None and db is not None:
        unit = timescale_unit(testbench_source) or backend.default_time_unit
        first = round(first * unit / db.tick_seconds)
    elif first is None and count and db is not None:
        first = first_divergence(db)
    if not count:
        first = None
    return SimReport(True, count, total, first, vcd_path, stdout, diags, per)


__all__ = [
    "ToolUnavailable", "WorkdirError", "SimTimeout", "SimulatorConfig", "MismatchRules", "CompileDiagnostic",
    "CompileReport", "SimReport", "parse_diagnostics", "parse_stdout", "timescale_unit", "first_divergence",
    "IcarusBackend", "VerilatorBackend", "select_backend", "simulator_available", "check_syntax", "simulate",
]
