from __future__ import annotations

from dataclasses import dataclass

from ..errors import RtlPilotError


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}:{self.column}: {self.message}"


class VerilogError(RtlPilotError):
    """Parse failure carrying one or more line-numbered diagnostics."""

    kind = "error"

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(f"{self.kind}: {d}" for d in self.diagnostics))

    @property
    def line(self) -> int:
        return self.diagnostics[0].line


class VerilogSyntaxError(VerilogError):
    kind = "syntax error"


class UnsupportedConstruct(VerilogError):
    kind = "unsupported construct"


class UndeclaredIdentifier(VerilogError):
    kind = "undeclared identifier"
