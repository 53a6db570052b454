"""Recursive-descent parser for a synthesizable Verilog subset."""
from __future__ import annotations

from typing import Callable, Optional

from . import ast as A
from .diagnostics import (
    Diagnostic,
    UndeclaredIdentifier,
    UnsupportedConstruct,
    VerilogSyntaxError,
)
from .lexer import LineIndex, Token, tokenize

DIRECTIONS = ("input", "output", "inout")
NET_TYPES = ("wire", "reg", "logic", "tri", "integer")
ALWAYS_KINDS = ("always", "always_comb", "always_ff", "always_latch", "initial")
CASE_KINDS = ("case", "casez", "casex")

UNSUPPORTED_ITEMS = {
    "generate": "generate blocks",
    "genvar": "generate variables",
    "function": "functions",
    "task": "tasks",
    "typedef": "typedefs",
    "enum": "enumerated types",
    "struct": "structs",
    "specify": "specify blocks",
    "interface": "interfaces",
    "package": "packages",
    "import": "package imports",
    "defparam": "defparam",
    "real": "real variables",
    "realtime": "real variables",
    "time": "time variables",
    "event": "named events",
    "for": "module-level generate loops",
    "if": "module-level generate conditions",
    "case": "module-level generate conditions",
}
UNSUPPORTED_STMTS = {
    "while": "while loops",
    "repeat": "repeat loops",
    "forever": "forever loops",
    "wait": "wait statements",
    "fork": "fork/join",
    "disable": "disable statements",
    "assign": "procedural continuous assignment",
    "force": "force/release",
    "release": "force/release",
    "return": "return statements",
    "do": "do-while loops",
}

# Binary operator precedence, loosest first.
BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|",),
    ("^", "~^", "^~"),
    ("&",),
    ("==", "!=", "===", "!=="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", "<<<", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
    ("**",),
]
UNARY_OPS = ("+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.lines = LineIndex(source)
        self.toks = tokenize(source)
        self.i = 0

    # -- token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str, what: str | None = None) -> Token:
        if self.at(text):
            return self.advance()
        self.fail(f"expected {what or repr(text)}, found {self.describe(self.tok)}")

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind == "ident" and t.text not in _RESERVED:
            return self.advance()
        self.fail(f"expected {what}, found {self.describe(t)}")

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, message: str, tok: Token | None = None):
        t = tok or self.tok
        raise VerilogSyntaxError([Diagnostic(t.line, t.column, message)])

    def unsupported(self, what: str, tok: Token | None = None):
        t = tok or self.tok
        raise UnsupportedConstruct([Diagnostic(t.line, t.column, f"{what} are not supported")])

    def span(self, first: Token, last: Token | None = None) -> A.Span:
        last = last or self.toks[self.i - 1]
        end_line, _ = self.lines.locate(max(last.end - 1, first.start))
        return A.Span(first.start, last.end, first.line, first.column, end_line)

    # -- module ------------------------------------------------------------------

    def parse_module(self) -> A.AstModule:
        if self.tok.kind == "eof":
            self.fail("no module found")
        if not (self.at("module") or self.at("macromodule")):
            self.fail(f"expected 'module', found {self.describe(self.tok)}")
        self.advance()
        name = self.expect_ident("module name").text
        self.params: list[A.Decl] = []
        self.ports: dict[str, A.Port] = {}
        self.port_order: list[str] = []
        self.decls: dict[str, A.Decl] = {}
        self.items: list[A.Item] = []
        if self.accept("#"):
            self.parse_param_port_list()
        ansi_undirected: list[Token] = []
        if self.accept("("):
            ansi_undirected = self.parse_port_list()
        self.expect(";")
        while not self.at("endmodule"):
            if self.tok.kind == "eof":
                self.fail("missing 'endmodule'")
            self.parse_item()
        self.advance()
        if self.tok.kind != "eof":
            if self.at("module", "macromodule"):
                self.unsupported("multiple modules per source")
            self.fail(f"unexpected {self.describe(self.tok)} after 'endmodule'")
        for t in ansi_undirected:
            if t.text not in self.ports:
                self.fail(f"port {t.text!r} has no direction declaration", t)
        ports = tuple(self.ports[n] for n in self.port_order)
        decls = tuple(self.params) + tuple(self.decls.values())
        module = A.AstModule(name, ports, decls, tuple(self.items), self.source)
        _check_declared(module, self)
        return module

    def parse_param_port_list(self) -> None:
        self.expect("(")
        if self.accept(")"):
            return
        kind = "parameter"
        while True:
            if self.at("parameter", "localparam"):
                kind = self.advance().text
            self.parse_param_assignments(kind, terminators=(",", ")"), single=True)
            if self.accept(")"):
                return
            self.expect(",", "',' or ')'")

    def parse_param_assignments(self, kind: str, terminators=(";",), single=False) -> None:
        self.skip_param_type()
        rng = self.parse_range_opt()
        while True:
            first = self.tok
            name = self.expect_ident("parameter name").text
            self.expect("=")
            value = self.parse_expr()
            self.add_param(A.Decl(name, kind, rng, self.width_of(rng), value, span=self.span(first)), first)
            if single or not self.at(","):
                break
            # `parameter A = 1, B = 2` vs. a new `parameter` in a port list
            if self.peek().kind == "ident" and self.peek(2).text == "=":
                self.advance()
                continue
            break

    def skip_param_type(self) -> None:
        while self.at("signed", "unsigned", "integer", "logic", "bit", "int"):
            self.advance()

    def add_param(self, decl: A.Decl, tok: Token) -> None:
        if any(p.name == decl.name for p in self.params) or decl.name in self.decls:
            self.fail(f"duplicate declaration of {decl.name!r}", tok)
        self.params.append(decl)

    def parse_port_list(self) -> list[Token]:
        """Returns identifiers from a non-ANSI header that still need directions."""
        if self.accept(")"):
            return []
        undirected: list[Token] = []
        direction: Optional[str] = None
        net: Optional[str] = None
        signed = False
        rng: Optional[A.Range] = None
        while True:
            first = self.tok
            if self.at(*DIRECTIONS):
                direction = self.advance().text
                net, signed, rng = self.parse_net_type_opt()
            elif direction is not None and self.at(*NET_TYPES, "signed", "unsigned", "["):
                net, signed, rng = self.parse_net_type_opt()
            if self.at(".") or (self.tok.kind == "ident" and self.peek().text == "."):
                self.unsupported("interface or named port-expression headers")
            name_tok = self.expect_ident("port name")
            if self.at("["):
                self.unsupported("unpacked port arrays")
            if direction is None:
                undirected.append(name_tok)
                self.port_order.append(name_tok.text)
            else:
                self.add_port(A.Port(name_tok.text, direction, rng, self.width_of(rng), signed,
                                     span=self.span(first)), name_tok, header=True)
                if net in ("reg", "logic", "integer"):
                    self.decls[name_tok.text] = A.Decl(name_tok.text, "reg" if net == "logic" else net,
                                                       rng, self.width_of(rng), span=self.span(first))
            if self.accept(")"):
                return undirected
            self.expect(",", "',' or ')'")

    def parse_net_type_opt(self) -> tuple[Optional[str], bool, Optional[A.Range]]:
        net = None
        signed = False
        if self.at(*NET_TYPES):
            net = self.advance().text
        elif self.at("bit", "int", "byte", "shortint", "longint", "var"):
            self.unsupported(f"SystemVerilog '{self.tok.text}' types")
        if self.at("signed", "unsigned"):
            signed = self.advance().text == "signed"
        rng = self.parse_range_opt()
        if net == "integer":
            rng = rng or A.Range(A.Number("31"), A.Number("0"))
        return net, signed, rng

    def add_port(self, port: A.Port, tok: Token, header: bool) -> None:
        if port.name in self.ports:
            self.fail(f"duplicate port {port.name!r}", tok)
        if any(p.name == port.name for p in self.params):
            self.fail(f"port {port.name!r} conflicts with a parameter", tok)
        self.ports[port.name] = port
        if header:
            self.port_order.append(port.name)
        elif port.name not in self.port_order:
            self.fail(f"{port.name!r} is declared as a port but missing from the module header", tok)

    def parse_range_opt(self) -> Optional[A.Range]:
        if not self.at("["):
            return None
        self.advance()
        msb = self.parse_expr()
        self.expect(":")
        lsb = self.parse_expr()
        self.expect("]")
        return A.Range(msb, lsb)

    def width_of(self, rng: Optional[A.Range]) -> Optional[int]:
        if rng is None:
            return 1
        env = {p.name: p.init for p in self.params}
        msb = const_value(rng.msb, env)
        lsb = const_value(rng.lsb, env)
        if msb is None or lsb is None:
            return None
        return abs(msb - lsb) + 1

    # -- module items -----------------------------------------------------------

    def parse_item(self) -> None:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"unexpected {self.describe(t)} in module body")
        kw = t.text
        if kw in DIRECTIONS:
            self.parse_port_decl()
        elif kw in NET_TYPES:
            self.parse_net_decl()
        elif kw in ("parameter", "localparam"):
            self.advance()
            self.parse_param_assignments(kw)
            self.expect(";")
        elif kw == "assign":
            self.parse_continuous_assign()
        elif kw in ALWAYS_KINDS:
            self.parse_always()
        elif kw in UNSUPPORTED_ITEMS:
            self.unsupported(UNSUPPORTED_ITEMS[kw])
        elif kw in ("bit", "int", "byte", "shortint", "longint"):
            self.unsupported(f"SystemVerilog '{kw}' types")
        elif kw in _RESERVED:
            self.fail(f"unexpected keyword {kw!r} in module body")
        elif self.peek().kind == "ident" or self.peek().text == "#":
            self.unsupported("module instantiations")
        else:
            self.fail(f"unexpected {self.describe(t)} in module body")

    def parse_port_decl(self) -> None:
        first = self.tok
        direction = self.advance().text
        net, signed, rng = self.parse_net_type_opt()
        while True:
            name_tok = self.expect_ident("port name")
            self.add_port(A.Port(name_tok.text, direction, rng, self.width_of(rng), signed,
                                 span=self.span(first)), name_tok, header=False)
            if net in ("reg", "logic", "integer"):
                self.add_decl(A.Decl(name_tok.text, "reg" if net == "logic" else net, rng,
                                     self.width_of(rng), span=self.span(first)), name_tok)
            if not self.accept(","):
                break
        self.expect(";")

    def add_decl(self, decl: A.Decl, tok: Token) -> None:
        if decl.name in self.decls or any(p.name == decl.name for p in self.params):
            self.fail(f"duplicate declaration of {decl.name!r}", tok)
        self.decls[decl.name] = decl

    def parse_net_decl(self) -> None:
        first = self.tok
        raw = self.advance().text
        kind = "reg" if raw == "logic" else ("wire" if raw == "tri" else raw)
        signed = False
        if self.at("signed", "unsigned"):
            signed = self.advance().text == "signed"
        rng = self.parse_range_opt()
        if kind == "integer":
            rng = A.Range(A.Number("31"), A.Number("0"))
            signed = True
        pending: list[tuple[Token, Optional[A.Expr]]] = []
        while True:
            name_tok = self.expect_ident("signal name")
            dims: list[A.Range] = []
            while self.at("["):
                dims.append(self.parse_range_opt())
            init = None
            if self.accept("="):
                init = self.parse_expr()
            decl = A.Decl(name_tok.text, kind, rng, self.width_of(rng),
                          init if kind != "wire" else None, tuple(dims), signed)
            self.add_decl(decl, name_tok)
            pending.append((name_tok, init))
            if not self.accept(","):
                break
        self.expect(";")
        span = self.span(first)
        # Re-stamp spans now that the full statement extent is known.
        for name_tok, init in pending:
            d = self.decls[name_tok.text]
            self.decls[name_tok.text] = A.Decl(d.name, d.kind, d.range, d.width, d.init, d.array, d.signed, span=span)
            if kind == "wire" and init is not None:
                self.items.append(A.ContinuousAssign(A.Ident(name_tok.text, self.span(name_tok, name_tok)),
                                                     init, from_decl=True, span=span))

    def parse_continuous_assign(self) -> None:
        first = self.advance()
        if self.at("#"):
            self.unsupported("delays")
        pairs = []
        while True:
            lhs = self.parse_lvalue()
            self.expect("=")
            rhs = self.parse_expr()
            pairs.append((lhs, rhs))
            if not self.accept(","):
                break
        self.expect(";")
        span = self.span(first)
        for lhs, rhs in pairs:
            self.items.append(A.ContinuousAssign(lhs, rhs, span=span))

    def parse_always(self) -> None:
        first = self.advance()
        kind = first.text
        events: tuple[A.Event, ...] = ()
        star = kind in ("always_comb", "always_latch")
        if kind == "always" and not self.at("@"):
            if self.at("#"):
                self.unsupported("delay-controlled always blocks")
            self.fail("expected '@' event control after 'always'")
        if self.at("@"):
            if kind in ("always_comb", "always_latch", "initial"):
                self.fail(f"'{kind}' does not take an event control")
            self.advance()
            events, star = self.parse_event_control()
        elif kind == "always_ff":
            self.fail("expected '@' event control after 'always_ff'")
        body = self.parse_stmt()
        self.items.append(A.Always(kind, events, star, body, span=self.span(first)))

    def parse_event_control(self) -> tuple[tuple[A.Event, ...], bool]:
        if self.accept("*"):
            return (), True
        self.expect("(")
        if self.accept("*"):
            self.expect(")")
            return (), True
        events = []
        while True:
            edge = None
            if self.at("posedge", "negedge"):
                edge = self.advance().text
            events.append(A.Event(edge, self.parse_expr()))
            if self.accept("or") or self.accept(","):
                continue
            break
        self.expect(")")
        return tuple(events), False

    # -- statements ---------------------------------------------------------------

    def parse_stmt(self) -> A.Stmt:
        t = self.tok
        if t.kind == "op":
            if t.text == ";":
                self.advance()
                return A.Null(span=self.span(t))
            if t.text == "{":
                return self.parse_assignment_stmt()
            if t.text == "#":
                self.unsupported("delays")
            if t.text == "@":
                self.unsupported("statement-level event controls")
            self.fail(f"unexpected {self.describe(t)} at start of statement")
        if t.kind == "sysname":
            return self.parse_systask()
        if t.kind != "ident":
            self.fail(f"unexpected {self.describe(t)} at start of statement")
        kw = t.text
        if kw == "begin":
            return self.parse_block()
        if kw == "if":
            return self.parse_if()
        if kw in ("unique", "priority", "unique0"):
            self.advance()
            if self.at("if"):
                return self.parse_if()
            if not self.at(*CASE_KINDS):
                self.fail(f"expected 'case' or 'if' after '{kw}'")
            return self.parse_case()
        if kw in CASE_KINDS:
            return self.parse_case()
        if kw == "for":
            return self.parse_for()
        if kw in UNSUPPORTED_STMTS:
            self.unsupported(UNSUPPORTED_STMTS[kw])
        if kw in _RESERVED:
            self.fail(f"unexpected keyword {kw!r} at start of statement")
        if self.peek().text == "(" and self.peek().kind == "op":
            self.unsupported("task or function calls")
        return self.parse_assignment_stmt()

    def parse_assignment_stmt(self, terminated: bool = True) -> A.Assign:
        first = self.tok
        lhs = self.parse_lvalue()
        if self.accept("="):
            kind = "blocking"
        elif self.accept("<="):
            kind = "nonblocking"
        else:
            self.fail(f"expected '=' or '<=' in assignment, found {self.describe(self.tok)}")
        if self.at("#"):
            self.unsupported("intra-assignment delays")
        rhs = self.parse_expr()
        if terminated:
            self.expect(";")
        return A.Assign(kind, lhs, rhs, span=self.span(first))

    def parse_systask(self) -> A.SysTask:
        first = self.advance()
        args: list[A.Expr] = []
        if self.accept("("):
            if not self.at(")"):
                while True:
                    args.append(self.parse_expr())
                    if not self.accept(","):
                        break
            self.expect(")")
        self.expect(";")
        return A.SysTask(first.text, tuple(args), span=self.span(first))

    def parse_block(self) -> A.Block:
        first = self.advance()
        name = None
        if self.accept(":"):
            name = self.expect_ident("block name").text
        stmts = []
        while not self.at("end"):
            if self.tok.kind == "eof":
                self.fail("missing 'end'", first)
            if self.at(*NET_TYPES):
                self.unsupported("block-local declarations")
            stmts.append(self.parse_stmt())
        self.advance()
        if self.accept(":"):
            self.expect_ident("block name")
        return A.Block(tuple(stmts), name, span=self.span(first))

    def parse_if(self) -> A.If:
        first = self.advance()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_stmt()
        orelse = None
        if self.accept("else"):
            orelse = self.parse_stmt()
        return A.If(cond, then, orelse, span=self.span(first))

    def parse_case(self) -> A.Case:
        first = self.tok
        kind = self.advance().text
        self.expect("(")
        subject = self.parse_expr()
        self.expect(")")
        items = []
        seen_default = False
        while not self.at("endcase"):
            if self.tok.kind == "eof":
                self.fail("missing 'endcase'", first)
            item_first = self.tok
            if self.accept("default"):
                if seen_default:
                    self.fail("multiple default items in case statement", item_first)
                seen_default = True
                self.accept(":")
                labels: tuple[A.Expr, ...] = ()
            else:
                lab = [self.parse_expr()]
                while self.accept(","):
                    lab.append(self.parse_expr())
                self.expect(":")
                labels = tuple(lab)
            body = self.parse_stmt()
            items.append(A.CaseItem(labels, body, span=self.span(item_first)))
        self.advance()
        return A.Case(kind, subject, tuple(items), span=self.span(first))

    def parse_for(self) -> A.For:
        first = self.advance()
        self.expect("(")
        if self.at("int", "integer", "genvar"):
            self.unsupported("loop-local variable declarations")
        init = self.parse_assignment_stmt(terminated=False)
        self.expect(";")
        cond = self.parse_expr()
        self.expect(";")
        step = self.parse_assignment_stmt(terminated=False)
        self.expect(")")
        body = self.parse_stmt()
        if init.kind != "blocking" or step.kind != "blocking":
            self.fail("for-loop init and step must be blocking assignments", first)
        return A.For(init, cond, step, body, span=self.span(first))

    # -- expressions --------------------------------------------------------------

    def parse_lvalue(self) -> A.Expr:
        first = self.tok
        if self.accept("{"):
            parts = [self.parse_lvalue()]
            while self.accept(","):
                parts.append(self.parse_lvalue())
            self.expect("}")
            return A.Concat(tuple(parts), span=self.span(first))
        name = self.expect_ident("assignment target")
        if self.at("."):
            self.unsupported("hierarchical references")
        return self.parse_selects(A.Ident(name.text, span=self.span(name, name)), first)

    def parse_selects(self, base: A.Expr, first: Token) -> A.Expr:
        while self.at("["):
            self.advance()
            idx = self.parse_expr()
            if self.at(":", "+:", "-:"):
                mode = self.advance().text
                other = self.parse_expr()
                self.expect("]")
                base = A.Slice(base, idx, other, mode, span=self.span(first))
            else:
                self.expect("]")
                base = A.Index(base, idx, span=self.span(first))
        return base

    def parse_expr(self) -> A.Expr:
        first = self.tok
        cond = self.parse_binary(0)
        if self.accept("?"):
            a = self.parse_expr()
            self.expect(":")
            b = self.parse_expr()
            return A.Ternary(cond, a, b, span=self.span(first))
        return cond

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(BINARY_LEVELS):
            return self.parse_unary()
        first = self.tok
        left = self.parse_binary(level + 1)
        ops = BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            if op == "**":
                right = self.parse_binary(level)  # right-associative
                return A.Binary(op, left, right, span=self.span(first))
            right = self.parse_binary(level + 1)
            left = A.Binary(op, left, right, span=self.span(first))
        return left

    def parse_unary(self) -> A.Expr:
        first = self.tok
        if first.kind == "op" and first.text in UNARY_OPS:
            self.advance()
            return A.Unary(first.text, self.parse_unary(), span=self.span(first))
        return self.parse_primary()

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return A.Number("".join(t.text.split()), span=self.span(t, t))
        if t.kind == "string":
            self.advance()
            return A.String(t.text, span=self.span(t, t))
        if t.kind == "sysname":
            self.advance()
            args: list[A.Expr] = []
            if self.accept("("):
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept(","):
                            break
                self.expect(")")
            return self.parse_selects(A.SysCall(t.text, tuple(args), span=self.span(t)), t)
        if t.kind == "op" and t.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return self.parse_selects(inner, t) if self.at("[") else inner
        if t.kind == "op" and t.text == "{":
            return self.parse_concat()
        if t.kind == "ident" and t.text not in _RESERVED:
            self.advance()
            if self.at("("):
                self.unsupported("function calls", t)
            if self.at("."):
                self.unsupported("hierarchical references")
            return self.parse_selects(A.Ident(t.text, span=self.span(t, t)), t)
        self.fail(f"expected expression, found {self.describe(t)}")

    def parse_concat(self) -> A.Expr:
        first = self.advance()
        head = self.parse_expr()
        if self.at("{"):
            self.advance()
            parts = [self.parse_expr()]
            while self.accept(","):
                parts.append(self.parse_expr())
            self.expect("}")
            self.expect("}")
            return self.parse_selects(A.Replicate(head, tuple(parts), span=self.span(first)), first)
        parts = [head]
        while self.accept(","):
            parts.append(self.parse_expr())
        self.expect("}")
        return self.parse_selects(A.Concat(tuple(parts), span=self.span(first)), first)


_RESERVED = frozenset(
    """always always_comb always_ff always_latch and assign begin case casex casez default
    else end endcase endfunction endgenerate endmodule endtask for forever fork function generate
    genvar if initial inout input integer localparam logic macromodule module negedge or output
    parameter posedge reg repeat signed task tri unsigned while wire unique priority""".split()
)


def _check_declared(module: A.AstModule, parser: _Parser) -> None:
    declared = {p.name for p in module.ports} | {d.name for d in module.decls}
    problems: list[Diagnostic] = []
    reported: set[tuple[str, int]] = set()

    def check(expr: Optional[A.Expr]) -> None:
        stack = [expr]
        while stack:
            e = stack.pop()
            if e is None:
                continue
            if isinstance(e, A.Ident):
                if e.name not in declared:
                    line = e.span.line if e.span else 0
                    if (e.name, line) not in reported:
                        reported.add((e.name, line))
                        problems.append(Diagnostic(line, e.span.column if e.span else 0,
                                                   f"{e.name!r} is not declared"))
                continue
            for v in vars(e).values():
                if isinstance(v, tuple):
                    stack.extend(x for x in v if not isinstance(x, (str, A.Span)))
                elif v is not None and not isinstance(v, (str, A.Span, bool, int)):
                    stack.append(v)

    for d in module.decls:
        check(d.init)
        if d.range:
            check(d.range.msb)
            check(d.range.lsb)
    for item in module.items:
        if isinstance(item, A.ContinuousAssign):
            check(item.lhs)
            check(item.rhs)
        else:
            for ev in item.events:
                check(ev.expr)
            _walk_stmt(item.body, check)
    if problems:
        problems.sort(key=lambda d: (d.line, d.column))
        raise UndeclaredIdentifier(problems)


def _walk_stmt(stmt: A.Stmt, visit: Callable[[A.Expr], None]) -> None:
    if isinstance(stmt, A.Assign):
        visit(stmt.lhs)
        visit(stmt.rhs)
    elif isinstance(stmt, A.If):
        visit(stmt.cond)
        _walk_stmt(stmt.then, visit)
        if stmt.orelse is not None:
            _walk_stmt(stmt.orelse, visit)
    elif isinstance(stmt, A.Case):
        visit(stmt.subject)
        for item in stmt.items:
            for lab in item.labels:
                visit(lab)
            _walk_stmt(item.body, visit)
    elif isinstance(stmt, A.Block):
        for s in stmt.stmts:
            _walk_stmt(s, visit)
    elif isinstance(stmt, A.For):
        _walk_stmt(stmt.init, visit)
        visit(stmt.cond)
        _walk_stmt(stmt.step, visit)
        _walk_stmt(stmt.body, visit)
    elif isinstance(stmt, A.SysTask):
        for a in stmt.args:
            visit(a)


def const_value(expr: Optional[A.Expr], env: dict[str, Optional[A.Expr]], depth: int = 0) -> Optional[int]:
    """Evaluate a constant integer expression; None when not statically known."""
    if expr is None or depth > 32:
        return None
    if isinstance(expr, A.Number):
        return number_value(expr.text)
    if isinstance(expr, A.Ident):
        return const_value(env.get(expr.name), env, depth + 1) if expr.name in env else None
    if isinstance(expr, A.Unary):
        v = const_value(expr.operand, env, depth + 1)
        if v is None:
            return None
        return {"-": -v, "+": v, "!": int(not v)}.get(expr.op)
    if isinstance(expr, A.Binary):
        a = const_value(expr.left, env, depth + 1)
        b = const_value(expr.right, env, depth + 1)
        if a is None or b is None:
            return None
        try:
            return {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "/": lambda: a // b, "%": lambda: a % b, "**": lambda: a ** b,
                "<<": lambda: a << b, ">>": lambda: a >> b,
            }[expr.op]()
        except (KeyError, ZeroDivisionError, ValueError):
            return None
    if isinstance(expr, A.SysCall) and expr.name == "$clog2" and len(expr.args) == 1:
        v = const_value(expr.args[0], env, depth + 1)
        return None if v is None or v < 0 else max(v - 1, 0).bit_length()
    return None


def number_value(text: str) -> Optional[int]:
    t = text.replace("_", "")
    if "'" not in t:
        return int(t)
    _, _, rest = t.partition("'")
    rest = rest.lstrip("sS")
    if not rest or rest[0] not in "bBoOdDhH":
        return None  # fill literal such as '0
    base = {"b": 2, "o": 8, "d": 10, "h": 16}[rest[0].lower()]
    digits = rest[1:]
    if any(c in "xXzZ?" for c in digits):
        return None
    try:
        return int(digits, base)
    except ValueError:
        return None


def parse_module(source: str) -> A.AstModule:
    """Parse one Verilog module.

    Raises VerilogSyntaxError, UnsupportedConstruct or UndeclaredIdentifier,
    each carrying line-numbered diagnostics.
    """
    return _Parser(source).parse_module()


def parse_statement(text: str) -> tuple[str, list[str]]:
    """Parse a standalone statement; returns (kind, written signal names).

    Accepts continuous assigns, net declarations with an initializer and
    procedural assignments. Used to check that reported spans re-slice to a
    well-formed driving statement.
    """
    p = _Parser(text)
    first = p.tok
    if first.text == "assign":
        p.advance()
        targets: list[str] = []
        while True:
            targets += A.lvalue_targets(p.parse_lvalue())
            p.expect("=")
            p.parse_expr()
            if not p.accept(","):
                break
        p.expect(";")
        kind = "continuous"
    elif first.text in NET_TYPES:
        p.params, p.ports, p.port_order, p.decls, p.items = [], {}, [], {}, []
        p.parse_net_decl()
        targets = [i.lhs.name for i in p.items]
        kind = "continuous"
    else:
        stmt = p.parse_assignment_stmt()
        targets = A.lvalue_targets(stmt.lhs)
        kind = stmt.kind
    if p.tok.kind != "eof":
        p.fail(f"trailing text after statement: {p.describe(p.tok)}")
    return kind, targets
