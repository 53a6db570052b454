from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, UnsupportedConstruct, VerilogSyntaxError

IGNORED_DIRECTIVES = {"timescale", "default_nettype", "resetall", "celldefine", "endcelldefine"}

# Longest operators first.
OPERATORS = [
    "<<<", ">>>", "===", "!==",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~&", "~|", "~^", "^~", "**", "+:", "-:",
    "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "?", "=", "+", "-", "*", "/", "%",
    "&", "|", "^", "~", "!", "<", ">", "@", "#",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<directive>`[A-Za-z_]\w*[^\n]*)
  | (?P<based>(?:[0-9][0-9_]*\s*)?'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+)
  | (?P<fill>'[01xXzZ](?![\w']))
  | (?P<real>[0-9][0-9_]*\.[0-9][0-9_]*)
  | (?P<decimal>[0-9][0-9_]*)
  | (?P<sysname>\$[A-Za-z_]\w*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<escaped>\\\S+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>"""
    + "|".join(re.escape(o) for o in OPERATORS)
    + r"""
    )
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | sysname | op | eof
    text: str
    start: int
    end: int
    line: int
    column: int


class LineIndex:
    """Maps byte offsets to 1-based (line, column)."""

    def __init__(self, text: str):
        self.starts = [0]
        for m in re.finditer("\n", text):
            self.starts.append(m.end())

    def locate(self, offset: int) -> tuple[int, int]:
        i = bisect.bisect_right(self.starts, offset) - 1
        return i + 1, offset - self.starts[i] + 1


def tokenize(source: str) -> list[Token]:
    lines = LineIndex(source)
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            line, col = lines.locate(pos)
            if source.startswith("/*", pos):
                raise VerilogSyntaxError([Diagnostic(line, col, "unterminated block comment")])
            raise VerilogSyntaxError([Diagnostic(line, col, f"unexpected character {source[pos]!r}")])
        kind = m.lastgroup
        text = m.group()
        line, col = lines.locate(pos)
        if kind == "directive":
            name = re.match(r"`(\w+)", text).group(1)
            if name not in IGNORED_DIRECTIVES:
                raise UnsupportedConstruct([Diagnostic(line, col, f"compiler directive `{name} is not supported")])
        elif kind == "real":
            raise UnsupportedConstruct([Diagnostic(line, col, f"real literal {text} is not supported")])
        elif kind == "escaped":
            raise UnsupportedConstruct([Diagnostic(line, col, "escaped identifiers are not supported")])
        elif kind in ("based", "fill", "decimal"):
            tokens.append(Token("number", text, pos, m.end(), line, col))
        elif kind in ("ident", "sysname", "string", "op"):
            tokens.append(Token(kind, text, pos, m.end(), line, col))
        pos = m.end()
    line, col = lines.locate(n)
    tokens.append(Token("eof", "", n, n, line, col))
    return tokens
