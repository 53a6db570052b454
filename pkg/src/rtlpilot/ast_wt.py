"""AST-based waveform tracing: join a driver backtrace with the dumped
waveform around the first mismatch into a single plain-text report."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import UnknownSignal
from .verilog import AstModule, Site, TraceGraph, all_sites, backtrace
from .waveform import WaveDb, WaveTable, tabulate, window_around, window_by_changes

SIGNAL_BUDGET = 12
DEFAULT_CYCLES_BEFORE = 3
DEFAULT_CYCLES_AFTER = 2
NOT_DUMPED = "-"
# instance names testbenches conventionally give the design under test
DUT_INSTANCE_NAMES = frozenset({"dut", "uut", "top_module1"})


@dataclass(frozen=True)
class TraceRequest:
    mismatched_signals: frozenset[str]
    level: int
    mismatch_time: int
    cycles_before: int = DEFAULT_CYCLES_BEFORE
    cycles_after: int = DEFAULT_CYCLES_AFTER

    def __post_init__(self) -> None:
        object.__setattr__(self, "mismatched_signals", frozenset(self.mismatched_signals))
        if not self.mismatched_signals:
            raise ValueError("mismatched_signals must be nonempty")
        if self.level < 0:
            raise ValueError("level must be non-negative")
        if self.cycles_before < 0 or self.cycles_after < 0:
            raise ValueError("cycle counts must be non-negative")


@dataclass(frozen=True)
class CodeRef:
    signal: str
    text: str
    lines: tuple[int, int]
    hop: int
    guards: tuple[str, ...] = ()
    span: Optional[object] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TraceReport:
    code_refs: tuple[CodeRef, ...]
    table: WaveTable
    truncation_note: Optional[str]
    not_dumped: tuple[str, ...]
    graph: TraceGraph = field(compare=False, repr=False)
    clock: Optional[str] = None
    mismatch_time: int = 0

    def render(self) -> str:
        out = ["== CODE =="]
        if not self.code_refs:
            out.append("(no driving statements: the traced signals are module inputs)")
        for ref in self.code_refs:
            lines = f"line {ref.lines[0]}" if ref.lines[0] == ref.lines[1] else f"lines {ref.lines[0]}-{ref.lines[1]}"
            out.append(f"[hop {ref.hop}] {ref.signal} ({lines})")
            if ref.guards:
                out.append("  context: " + " > ".join(ref.guards))
            out.extend("  " + ln for ln in ref.text.splitlines())
        out.append("")
        out.append("== WAVEFORM ==")
        t0, t1 = self.table.window
        where = f"clock {self.clock}" if self.clock else "no clock"
        out.append(f"window {t0}..{t1} ({where}), first mismatch at {self.mismatch_time}")
        out.append(self.table.render())
        if self.not_dumped:
            out.append(f"not dumped: {', '.join(self.not_dumped)}")
        if self.truncation_note:
            out.append(f"note: {self.truncation_note}")
        return "\n".join(out)


def dut_scope(module: AstModule, db: WaveDb) -> Optional[str]:
    """The VCD scope holding the design: every port present, most module
    signals present; on ties prefer a conventional DUT instance name, then
    the deepest scope."""
    best: Optional[tuple[int, bool, int, str]] = None
    ports = [p.name for p in module.ports]
    for scope in db.scopes():
        if not all(f"{scope}.{p}" in db.signals for p in ports):
            continue
        hits = sum(f"{scope}.{s}" in db.signals for s in module.signals)
        key = (hits, scope.rsplit(".", 1)[-1] in DUT_INSTANCE_NAMES, scope.count("."), scope)
        if best is None or key > best:
            best = key
    return best[3] if best else None


def _locate(db: WaveDb, scope: Optional[str], name: str) -> Optional[str]:
    if scope and f"{scope}.{name}" in db.signals:
        return f"{scope}.{name}"
    if scope is None:
        return db.try_resolve(name)
    return None


def _resolve_clock(db: WaveDb, scope: Optional[str], clock: str) -> str:
    if scope and f"{scope}.{clock}" in db.signals:
        return f"{scope}.{clock}"
    return db.resolve(clock)


def trace(module: AstModule, db: WaveDb, req: TraceRequest, clock: Optional[str] = None) -> TraceReport:
    roots = sorted(req.mismatched_signals)
    graph = backtrace(module, roots, req.level)  # UnknownSignal for undeclared roots
    scope = dut_scope(module, db)
    absent = [r for r in roots if _locate(db, scope, r) is None]
    if absent:
        raise UnknownSignal(absent, list(db.signals), detail="not present in the waveform dump")

    ordered = graph.ordered()
    budget = max(SIGNAL_BUDGET, len(roots))
    kept = ordered[:budget]
    dropped = ordered[budget:]
    note = None
    if dropped:
        note = (f"showing {len(kept)} of {len(ordered)} traced signals; omitted: {', '.join(dropped)}. "
                f"Trace those signals directly to inspect them.")

    code_refs = _code_refs(module, graph, set(kept))

    located = {s: _locate(db, scope, s) for s in kept}
    dumped = [s for s in kept if located[s] is not None]
    not_dumped = tuple(s for s in kept if located[s] is None)
    clock_full = _resolve_clock(db, scope, clock) if clock else None
    if clock_full is not None:
        window = window_around(db, req.mismatch_time, req.cycles_before, req.cycles_after, clock_full)
    else:
        window = window_by_changes(db, req.mismatch_time, req.cycles_before, req.cycles_after,
                                   [located[s] for s in dumped])
    raw = tabulate(db, [located[s] for s in dumped], window)
    pos = {s: i for i, s in enumerate(dumped)}
    rows = tuple(
        (t, tuple(vals[pos[s]] if s in pos else NOT_DUMPED for s in kept)) for t, vals in raw.rows
    )
    table = WaveTable(tuple(kept), rows, window)
    return TraceReport(tuple(code_refs), table, note, not_dumped, graph, clock, req.mismatch_time)


def _code_refs(module: AstModule, graph: TraceGraph, kept: set[str]) -> list[CodeRef]:
    # Driving statements of every signal shown in the table; the deepest
    # hop's statements tell the agent where to look next.
    refs: dict[tuple[int, int], CodeRef] = {}
    for site in all_sites(module):
        hits = [t for t in site.targets if t in kept]
        if not hits:
            continue
        sig = min(hits, key=lambda t: (graph.level_of[t], t))
        key = (site.span.start, site.span.end)
        if key not in refs:
            refs[key] = _ref(module, site, sig, graph.level_of[sig])
    return sorted(refs.values(), key=lambda r: (r.hop, r.lines[0], r.span.start, r.signal))


def _ref(module: AstModule, site: Site, signal: str, hop: int) -> CodeRef:
    return CodeRef(signal, site.text(module.source), (site.span.line, site.span.end_line), hop, site.guards, site.span)


__all__ = ["TraceRequest", "TraceReport", "CodeRef", "trace", "dut_scope", "SIGNAL_BUDGET"]
