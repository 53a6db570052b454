"""AST node types for the supported Verilog subset.

Spans are excluded from equality so two trees parsed from differently
formatted sources compare equal when their structure matches.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int
    column: int
    end_line: int

    def slice(self, source: str) -> str:
        return source[self.start:self.end]


def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Ident:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Number:
    text: str
    span: Span | None = _span()


@dataclass(frozen=True)
class String:
    text: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Ternary:
    cond: Expr
    if_true: Expr
    if_false: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Concat:
    parts: tuple[Expr, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Replicate:
    count: Expr
    parts: tuple[Expr, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Index:
    base: Expr
    index: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Slice:
    base: Expr
    msb: Expr
    lsb: Expr
    mode: str = ":"  # ':' | '+:' | '-:'
    span: Span | None = _span()


@dataclass(frozen=True)
class SysCall:
    name: str
    args: tuple[Expr, ...]
    span: Span | None = _span()


Expr = Union[Ident, Number, String, Unary, Binary, Ternary, Concat, Replicate, Index, Slice, SysCall]


# -- statements ----------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """Procedural assignment; kind is 'blocking' or 'nonblocking'."""

    kind: str
    lhs: Expr
    rhs: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None
    span: Span | None = _span()


@dataclass(frozen=True)
class CaseItem:
    labels: tuple[Expr, ...]  # empty tuple for `default`
    body: Stmt
    span: Span | None = _span()

    @property
    def is_default(self) -> bool:
        return not self.labels


@dataclass(frozen=True)
class Case:
    kind: str  # case | casez | casex
    subject: Expr
    items: tuple[CaseItem, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Block:
    stmts: tuple[Stmt, ...]
    name: Optional[str] = None
    span: Span | None = _span()


@dataclass(frozen=True)
class For:
    init: Assign
    cond: Expr
    step: Assign
    body: Stmt
    span: Span | None = _span()


@dataclass(frozen=True)
class SysTask:
    name: str
    args: tuple[Expr, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Null:
    span: Span | None = _span()


Stmt = Union[Assign, If, Case, Block, For, SysTask, Null]


# -- module items --------------------------------------------------------------

@dataclass(frozen=True)
class Range:
    msb: Expr
    lsb: Expr


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # input | output | inout
    range: Optional[Range] = None
    width: Optional[int] = None
    signed: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class Decl:
    name: str
    kind: str  # wire | reg | integer | parameter | localparam
    range: Optional[Range] = None
    width: Optional[int] = None
    init: Optional[Expr] = None
    array: tuple[Range, ...] = ()
    signed: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class Event:
    edge: Optional[str]  # posedge | negedge | None (level)
    expr: Expr


@dataclass(frozen=True)
class ContinuousAssign:
    lhs: Expr
    rhs: Expr
    from_decl: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class Always:
    kind: str  # always | always_comb | always_ff | always_latch | initial
    events: tuple[Event, ...]
    star: bool
    body: Stmt
    span: Span | None = _span()


Item = Union[ContinuousAssign, Always]


@dataclass(frozen=True)
class AstModule:
    name: str
    ports: tuple[Port, ...]
    decls: tuple[Decl, ...]
    items: tuple[Item, ...]
    source: str = field(default="", compare=False, repr=False)

    @property
    def source_map(self) -> dict[int, Span]:
        return {i: item.span for i, item in enumerate(self.items) if item.span is not None}

    @property
    def parameters(self) -> frozenset[str]:
        return frozenset(d.name for d in self.decls if d.kind in ("parameter", "localparam"))

    @property
    def signals(self) -> tuple[str, ...]:
        """Ports and non-constant declarations, in declaration order."""
        seen: dict[str, None] = {}
        for p in self.ports:
            seen.setdefault(p.name)
        for d in self.decls:
            if d.kind not in ("parameter", "localparam"):
                seen.setdefault(d.name)
        return tuple(seen)

    def port(self, name: str) -> Optional[Port]:
        return next((p for p in self.ports if p.name == name), None)

    def is_declared(self, name: str) -> bool:
        return any(p.name == name for p in self.ports) or any(d.name == name for d in self.decls)


def identifiers(expr: Optional[Expr]) -> list[str]:
    """All identifier names in an expression, left to right (with repeats)."""
    out: list[str] = []

    def walk(e) -> None:
        if e is None:
            return
        if isinstance(e, Ident):
            out.append(e.name)
        elif isinstance(e, Unary):
            walk(e.operand)
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Ternary):
            walk(e.cond)
            walk(e.if_true)
            walk(e.if_false)
        elif isinstance(e, Concat):
            for p in e.parts:
                walk(p)
        elif isinstance(e, Replicate):
            walk(e.count)
            for p in e.parts:
                walk(p)
        elif isinstance(e, Index):
            walk(e.base)
            walk(e.index)
        elif isinstance(e, Slice):
            walk(e.base)
            walk(e.msb)
            walk(e.lsb)
        elif isinstance(e, SysCall):
            for a in e.args:
                walk(a)

    walk(expr)
    return out


def lvalue_targets(expr: Expr) -> list[str]:
    """Names written by an assignment target (whole-signal granularity)."""
    if isinstance(expr, Ident):
        return [expr.name]
    if isinstance(expr, (Index, Slice)):
        return lvalue_targets(expr.base)
    if isinstance(expr, Concat):
        return [n for p in expr.parts for n in lvalue_targets(p)]
    return []


def lvalue_selectors(expr: Expr) -> list[str]:
    """Identifiers used in index/part-select positions of an assignment target."""
    if isinstance(expr, Index):
        return lvalue_selectors(expr.base) + identifiers(expr.index)
    if isinstance(expr, Slice):
        return lvalue_selectors(expr.base) + identifiers(expr.msb) + identifiers(expr.lsb)
    if isinstance(expr, Concat):
        return [n for p in expr.parts for n in lvalue_selectors(p)]
    return []
