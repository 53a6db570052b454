"""Signal-driver (LVALUE -> RVALUE) extraction and breadth-first backtracing.

A signal's drivers are every identifier in the right-hand side of a
statement assigning it, plus identifiers in index positions of the target,
plus every identifier in the control context around that statement:
enclosing `if` conditions, case subjects and arm labels, and the event
list of the enclosing always block. Parameters and for-loop indices are
constants for this purpose and never appear as drivers.
"""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Optional

from ..errors import UnknownSignal
from . import ast as A


@dataclass(frozen=True)
class Site:
    span: A.Span
    kind: str  # continuous | blocking | nonblocking
    targets: tuple[str, ...]
    drivers: frozenset[str]
    guards: tuple[str, ...] = ()

    def text(self, source: str) -> str:
        return self.span.slice(source)


@dataclass(frozen=True)
class DriverSet:
    target: str
    drivers: frozenset[str]
    sites: tuple[Site, ...]


@dataclass(frozen=True)
class Edge:
    source: str
    driver: str
    site: A.Span

    def key(self) -> tuple:
        return (self.source, self.driver, self.site.start, self.site.end)


@dataclass(frozen=True)
class TraceGraph:
    roots: frozenset[str]
    edges: frozenset[Edge]
    level_of: dict[str, int] = field(hash=False)

    @property
    def signals(self) -> frozenset[str]:
        return frozenset(self.level_of)

    def signal_pairs(self) -> set[tuple[str, str]]:
        return {(e.source, e.driver) for e in self.edges}

    def ordered(self) -> list[str]:
        """Signals by hop distance, then name."""
        return sorted(self.level_of, key=lambda s: (self.level_of[s], s))


class _Collector:
    def __init__(self, module: A.AstModule):
        self.module = module
        self.source = module.source
        self.constants = set(module.parameters) | _loop_variables(module)
        self.sites: list[Site] = []

    def text(self, node) -> str:
        span = getattr(node, "span", None)
        if span is None or not self.source:
            return "?"
        return " ".join(span.slice(self.source).split())

    def names(self, exprs: Iterable[Optional[A.Expr]]) -> frozenset[str]:
        out = set()
        for e in exprs:
            out.update(A.identifiers(e))
        return frozenset(out - self.constants)

    def add(self, span, kind, lhs, rhs, guard_names: frozenset[str], guards: tuple[str, ...]) -> None:
        targets = tuple(dict.fromkeys(A.lvalue_targets(lhs)))
        drivers = self.names([rhs]) | frozenset(A.lvalue_selectors(lhs)) - self.constants | guard_names
        self.sites.append(Site(span, kind, targets, frozenset(drivers), guards))

    def run(self) -> list[Site]:
        for item in self.module.items:
            if isinstance(item, A.ContinuousAssign):
                self.add(item.span, "continuous", item.lhs, item.rhs, frozenset(), ())
            else:
                head = item.kind
                if item.star:
                    head += " @(*)" if item.kind == "always" else ""
                elif item.events:
                    head += " @(" + " or ".join(
                        (f"{ev.edge} " if ev.edge else "") + self.text(ev.expr) for ev in item.events
                    ) + ")"
                guard_names = self.names(ev.expr for ev in item.events)
                self.stmt(item.body, guard_names, (head,))
        return self.sites

    def stmt(self, s: A.Stmt, guard_names: frozenset[str], guards: tuple[str, ...]) -> None:
        if isinstance(s, A.Assign):
            self.add(s.span, s.kind, s.lhs, s.rhs, guard_names, guards)
        elif isinstance(s, A.If):
            g = guard_names | self.names([s.cond])
            cond = self.text(s.cond)
            self.stmt(s.then, g, guards + (f"if ({cond})",))
            if s.orelse is not None:
                self.stmt(s.orelse, g, guards + (f"else of if ({cond})",))
        elif isinstance(s, A.Case):
            subject = self.names([s.subject])
            all_labels = self.names(lab for it in s.items for lab in it.labels)
            head = f"{s.kind} ({self.text(s.subject)})"
            for it in s.items:
                if it.is_default:
                    g = guard_names | subject | all_labels
                    desc = f"{head} default"
                else:
                    g = guard_names | subject | self.names(it.labels)
                    desc = f"{head} {', '.join(self.text(lab) for lab in it.labels)}:"
                self.stmt(it.body, g, guards + (desc,))
        elif isinstance(s, A.Block):
            for sub in s.stmts:
                self.stmt(sub, guard_names, guards)
        elif isinstance(s, A.For):
            g = guard_names | self.names([s.cond])
            self.stmt(s.body, g, guards + (f"for ({self.text(s.cond)})",))


def _loop_variables(module: A.AstModule) -> set[str]:
    out: set[str] = set()

    def walk(s) -> None:
        if isinstance(s, A.For):
            out.update(A.lvalue_targets(s.init.lhs))
            walk(s.body)
        elif isinstance(s, A.If):
            walk(s.then)
            walk(s.orelse)
        elif isinstance(s, A.Case):
            for it in s.items:
                walk(it.body)
        elif isinstance(s, A.Block):
            for sub in s.stmts:
                walk(sub)

    for item in module.items:
        if isinstance(item, A.Always):
            walk(item.body)
    return out


def all_sites(module: A.AstModule) -> list[Site]:
    return _Collector(module).run()


def driver_index(module: A.AstModule) -> dict[str, DriverSet]:
    """DriverSet for every declared signal, computed in one pass."""
    per_target: dict[str, list[Site]] = {name: [] for name in module.signals}
    for site in all_sites(module):
        for t in site.targets:
            per_target.setdefault(t, []).append(site)
    return {
        name: DriverSet(name, frozenset().union(*(s.drivers for s in sites)), tuple(sites))
        for name, sites in per_target.items()
    }


def _require_declared(module: A.AstModule, names: Iterable[str]) -> None:
    missing = [n for n in names if not module.is_declared(n)]
    if missing:
        raise UnknownSignal(missing, module.signals, detail=f"module {module.name}")


def direct_drivers(module: A.AstModule, signal: str) -> DriverSet:
    _require_declared(module, [signal])
    index = driver_index(module)
    return index.get(signal, DriverSet(signal, frozenset(), ()))


def backtrace(module: A.AstModule, roots: Iterable[str], level: int) -> TraceGraph:
    """Breadth-first driver expansion from `roots`, at most `level` hops deep."""
    roots = frozenset(roots)
    if level < 0:
        raise ValueError("level must be non-negative")
    _require_declared(module, sorted(roots))
    index = driver_index(module)
    level_of = {r: 0 for r in roots}
    edges: set[Edge] = set()
    frontier = sorted(roots)
    for hop in range(1, level + 1):
        nxt: list[str] = []
        for sig in frontier:
            ds = index.get(sig)
            if ds is None:
                continue
            for site in ds.sites:
                for d in sorted(site.drivers):
                    edges.add(Edge(sig, d, site.span))
                    if d not in level_of:
                        level_of[d] = hop
                        nxt.append(d)
        if not nxt:
            break
        frontier = sorted(nxt)
    return TraceGraph(roots, frozenset(edges), level_of)
