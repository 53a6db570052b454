"""LLM agent roles: planner and critic, extraction, retrieval, code and debug."""
from .coding import run_code_agent, run_debug_agent
from .common import AgentContext, AgentOutcome, ExtractionInvalid, extract_json, extract_verilog, load_prompts
from .pipeline import PipelineResult, run_simple_arm, run_tcrg_arm
from .planning import run_extraction, run_high_level_planner, run_retrieval
from .tracelog import TraceLog

__all__ = [
    "AgentContext", "AgentOutcome", "ExtractionInvalid", "PipelineResult", "TraceLog", "extract_json",
    "extract_verilog", "load_prompts", "run_code_agent", "run_debug_agent", "run_extraction",
    "run_high_level_planner", "run_retrieval", "run_simple_arm", "run_tcrg_arm",
]
