from .ast import AstModule, Span
from .diagnostics import (
    Diagnostic,
    UndeclaredIdentifier,
    UnsupportedConstruct,
    VerilogError,
    VerilogSyntaxError,
)
from .drivers import DriverSet, Edge, Site, TraceGraph, all_sites, backtrace, direct_drivers, driver_index
from .parser import parse_module, parse_statement

__all__ = [
    "AstModule", "Span", "Diagnostic", "VerilogError", "VerilogSyntaxError", "UnsupportedConstruct",
    "UndeclaredIdentifier", "DriverSet", "Edge", "Site", "all_sites", "TraceGraph", "backtrace", "direct_drivers",
    "driver_index", "parse_module", "parse_statement",
]
