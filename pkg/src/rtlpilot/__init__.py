"""Autonomous Verilog completion: planning graph, LLM agents, simulator tools and AST waveform tracing."""

__version__ = "0.1.0"
