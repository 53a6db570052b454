"""Command-line entry point: single problems, suites and the ablation grid.

    rtlpilot run --problem DIR [options]
    rtlpilot suite --dir DIR [--ablation] [options]
    rtlpilot validate-fixtures [--dir DIR]
"""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .agents import AgentContext, TraceLog, load_prompts, run_simple_arm, run_tcrg_arm
from .errors import FatalToolError, RtlPilotError
from .llm import (
    BackendConfig,
    BackendUnavailable,
    CountingBackend,
    HttpBackend,
    ReactLimits,
    ScriptedBackend,
    api_key_from_env,
)
from .problem import CATEGORIES, ProblemConfigError, ProblemSpec, discover, load_problem
from .sim_tools import SimulatorConfig, simulate

log = logging.getLogger("rtlpilot")

PER_PROBLEM = "problem"  # --scripted without a file: each problem's own transcript.json
ARMS = (("simple", False), ("simple", True), ("tcrg", False), ("tcrg", True))


@dataclass(frozen=True)
class RunConfig:
    backend_url: str = BackendConfig.endpoint
    model: str = BackendConfig.model
    temperature: float = BackendConfig.temperature
    planner: str = "tcrg"
    ast_wt: bool = True
    jobs: int = 1
    timeout_sim: float = SimulatorConfig.timeout
    out: str = "rtlpilot-out"
    scripted: Optional[str] = None
    verbose: bool = False
    round_budget: int = 8
    reply_cap: int = 100
    max_steps: int = 40
    prompts: Optional[str] = None
    simulator: str = "auto"

    def __post_init__(self) -> None:
        if self.planner not in ("simple", "tcrg"):
            raise ValueError(f"planner must be simple or tcrg, not {self.planner!r}")
        if self.jobs < 1 or self.round_budget < 1 or self.reply_cap < 1:
            raise ValueError("jobs, round_budget and reply_cap must be positive")
        if self.timeout_sim <= 0:
            raise ValueError("timeout_sim must be positive")

    @property
    def arm(self) -> str:
        return f"{self.planner}+{'ast-wt' if self.ast_wt else 'no-ast-wt'}"

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        if isinstance(data.get("ast_wt"), str):
            data["ast_wt"] = data["ast_wt"] == "on"
        return cls(**data)


@dataclass
class ProblemResult:
    id: str
    category: str
    passed: bool
    stop_reason: str
    tool_calls: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0
    replies: int = 0
    artifacts: dict[str, str] = field(default_factory=dict)
    fatal: bool = False


@dataclass
class SuiteReport:
    arm: str
    results: list[ProblemResult]

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def pass_rate(self) -> float:
        return self.passed / len(self.results) if self.results else 0.0

    def per_category(self) -> dict[str, tuple[int, int]]:
        """category -> (passed, total), for categories present in the suite."""
        out: dict[str, list[int]] = {}
        for r in self.results:
            cell = out.setdefault(r.category, [0, 0])
            cell[0] += r.passed
            cell[1] += 1
        return {c: tuple(out[c]) for c in CATEGORIES if c in out}

    def to_json(self, timings: bool = True) -> dict:
        rows = []
        for r in self.results:
            row = asdict(r)
            if not timings:
                row.pop("wall_time")
            rows.append(row)
        return {"arm": self.arm, "passed": self.passed, "total": len(self.results), "pass_rate": self.pass_rate,
                "per_category": {c: {"passed": p, "total": t, "rate": p / t}
                                 for c, (p, t) in self.per_category().items()},
                "problems": rows}

    def render(self) -> str:
        lines = [f"arm: {self.arm}", f"{'problem':<16}{'category':<22}{'pass':<6}{'stop reason':<22}"
                 f"{'time':>7}  tools"]
        for r in self.results:
            tools = ", ".join(f"{k}={v}" for k, v in sorted(r.tool_calls.items())) or "-"
            lines.append(f"{r.id:<16}{r.category:<22}{'yes' if r.passed else 'no':<6}{r.stop_reason[:21]:<22}"
                         f"{r.wall_time:>6.1f}s  {tools}")
        lines.append(f"pass rate: {self.passed}/{len(self.results)} ({100 * self.pass_rate:.1f}%)")
        lines.append("")
        lines.append(f"{'category':<22}{'passed':>8}{'total':>7}{'rate':>9}")
        for c, (p, t) in self.per_category().items():
            lines.append(f"{c:<22}{p:>8}{t:>7}{100 * p / t:>8.1f}%")
        return "\n".join(lines)


@dataclass
class AblationReport:
    suites: dict[tuple[str, bool], SuiteReport]

    def grid(self) -> dict[str, dict[str, float]]:
        """planner -> {"without": rate, "with": rate} over AST-WT."""
        return {planner: {("with" if ast else "without"): self.suites[(planner, ast)].pass_rate
                          for p, ast in ARMS if p == planner}
                for planner in ("simple", "tcrg")}

    def category_rates(self) -> dict[str, dict[str, float]]:
        """arm -> category -> pass rate."""
        return {s.arm: {c: p / t for c, (p, t) in s.per_category().items()} for s in self.suites.values()}

    def to_json(self, timings: bool = True) -> dict:
        return {"grid": self.grid(), "per_category": self.category_rates(),
                "suites": [self.suites[a].to_json(timings) for a in ARMS]}

    def render(self) -> str:
        g = self.grid()
        lines = ["pass rate (%)", f"{'':<16}{'without AST-WT':>16}{'with AST-WT':>14}"]
        for planner, label in (("simple", "simple planner"), ("tcrg", "TCRG planner")):
            lines.append(f"{label:<16}{100 * g[planner]['without']:>16.1f}{100 * g[planner]['with']:>14.1f}")
        lines.append("")
        cats = [c for c in CATEGORIES if any(c in s.per_category() for s in self.suites.values())]
        lines.append(f"{'category':<22}" + "".join(f"{self.suites[a].arm:>20}" for a in ARMS))
        for c in cats:
            cells = []
            for a in ARMS:
                p, t = self.suites[a].per_category().get(c, (0, 0))
                cells.append(f"{100 * p / t:.1f}% ({p}/{t})" if t else "-")
            lines.append(f"{c:<22}" + "".join(f"{x:>20}" for x in cells))
        return "\n".join(lines)


def make_backend(config: RunConfig, problem_dir: Optional[Path] = None, on_exchange=None):
    if config.scripted is None:
        return HttpBackend(BackendConfig(endpoint=config.backend_url, model=config.model,
                                         temperature=config.temperature), api_key_from_env(),
                           on_exchange=on_exchange)
    if config.scripted == PER_PROBLEM:
        if problem_dir is None or not (problem_dir / "transcript.json").is_file():
            raise ProblemConfigError(f"no transcript.json in {problem_dir}")
        return ScriptedBackend.from_file(problem_dir / "transcript.json")
    return ScriptedBackend.from_file(Path(config.scripted))


def recheck(source: str, testbench: str, config: Optional[SimulatorConfig] = None):
    """Compile and simulate `source` from scratch in a throwaway directory.
    This, not any agent's claim, decides whether a problem passed."""
    if not source.strip():
        return None
    with tempfile.TemporaryDirectory(prefix="rtlpilot-recheck-") as tmp:
        return simulate(source, testbench, Path(tmp), config=config)


def run_problem(problem_dir: Path, config: RunConfig, out_dir: Optional[Path] = None) -> ProblemResult:
    """One pipeline run plus the independent re-simulation gate. Artifacts
    land in `out_dir` (default: <config.out>/<problem id>)."""
    problem_dir = Path(problem_dir)
    problem: ProblemSpec = load_problem(problem_dir)
    out = Path(out_dir) if out_dir is not None else Path(config.out) / problem.id
    if out.exists():
        shutil.rmtree(out)
    (out / "work").mkdir(parents=True)
    trace = TraceLog(out / "trace.jsonl", problem.id, config.verbose)
    sim_config = SimulatorConfig(backend=config.simulator, timeout=config.timeout_sim)
    started = time.monotonic()
    trace.write("start", arm=config.arm, category=problem.category)
    result = ProblemResult(problem.id, problem.category, False, "started")
    source = ""
    try:
        backend = CountingBackend(make_backend(config, problem_dir), config.reply_cap)
        ctx = AgentContext(backend, out / "work", load_prompts(config.prompts), trace, sim_config,
                           config.round_budget, ReactLimits(max_steps=config.max_steps))
        arm = run_tcrg_arm if config.planner == "tcrg" else run_simple_arm
        pipeline = arm(problem.spec_text, problem.testbench, ctx, clock=problem.clock, ast_wt=config.ast_wt)
        source = pipeline.source
        result.stop_reason = pipeline.stop_reason
        result.tool_calls = dict(sorted(pipeline.tool_calls.items()))
        result.replies = backend.replies
        if pipeline.plan is not None:
            (out / "plan.json").write_text(pipeline.plan.to_json() + "\n")
            result.artifacts["plan"] = str(out / "plan.json")
        if pipeline.graph is not None:
            (out / "tcrg.json").write_text(json.dumps(pipeline.graph.to_json(), indent=2) + "\n")
            result.artifacts["tcrg"] = str(out / "tcrg.json")
    except (FatalToolError, BackendUnavailable) as exc:
        result.stop_reason, result.fatal = f"fatal: {exc}", True
    except RtlPilotError as exc:
        result.stop_reason = f"error: {type(exc).__name__}: {exc}"
    if source.strip():
        (out / "final.v").write_text(source)
        result.artifacts["final"] = str(out / "final.v")
    if not result.fatal:
        try:
            gate = recheck(source, problem.testbench, sim_config)
        except FatalToolError as exc:
            gate, result.stop_reason, result.fatal = None, f"fatal: {exc}", True
        except RtlPilotError as exc:
            gate = None
            result.stop_reason += f" (re-check error: {exc})"
        result.passed = gate is not None and gate.passed
        trace.write("recheck", passed=result.passed, summary=gate.summary() if gate else "no artifact")
        if result.stop_reason == "completed" and not result.passed:
            result.stop_reason = "recheck_failed"
    result.wall_time = round(time.monotonic() - started, 3)
    result.artifacts["trace"] = str(out / "trace.jsonl")
    trace.write("result", **{k: v for k, v in asdict(result).items() if k != "artifacts"})
    (out / "result.json").write_text(json.dumps(asdict(result), indent=2) + "\n")
    result.artifacts["result"] = str(out / "result.json")
    return result


def run_suite(problems_dir: Path, config: RunConfig, out_dir: Optional[Path] = None) -> SuiteReport:
    """Every problem once; failures of single problems are recorded, never raised."""
    dirs = discover(problems_dir)
    root = Path(out_dir) if out_dir is not None else Path(config.out)

    def one(d: Path) -> ProblemResult:
        try:
            return run_problem(d, config, root / d.name)
        except Exception as exc:  # a broken problem must not take the suite down
            log.exception("problem %s crashed", d.name)
            meta_cat = "other"
            try:
                meta_cat = json.loads((d / "meta.json").read_text()).get("category", "other")
            except (OSError, ValueError):
                pass
            return ProblemResult(d.name, meta_cat if meta_cat in CATEGORIES else "other", False,
                                 f"error: {type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(one, dirs))
    report = SuiteReport(config.arm, results)
    root.mkdir(parents=True, exist_ok=True)
    (root / "suite.json").write_text(json.dumps(report.to_json(), indent=2) + "\n")
    (root / "suite.txt").write_text(report.render() + "\n")
    return report


def run_ablation(problems_dir: Path, config: RunConfig, out_dir: Optional[Path] = None) -> AblationReport:
    root = Path(out_dir) if out_dir is not None else Path(config.out)
    suites = {}
    for planner, ast in ARMS:
        arm_config = replace(config, planner=planner, ast_wt=ast)
        suites[(planner, ast)] = run_suite(problems_dir, arm_config, root / arm_config.arm)
    report = AblationReport(suites)
    (root / "ablation.json").write_text(json.dumps(report.to_json(), indent=2) + "\n")
    (root / "ablation.txt").write_text(report.render() + "\n")
    return report


# -- argument handling ---------------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with option defaults (flags override it)")
    p.add_argument("--backend-url", help="chat-completions endpoint")
    p.add_argument("--model")
    p.add_argument("--planner", choices=("simple", "tcrg"))
    p.add_argument("--ast-wt", choices=("on", "off"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--timeout-sim", type=float, metavar="SECS")
    p.add_argument("--out", help="output directory")
    p.add_argument("--scripted", nargs="?", const=PER_PROBLEM, metavar="FILE",
                   help="scripted transcript; without FILE each problem's transcript.json is used")
    p.add_argument("--verbose", action="store_true", default=None, help="log full prompts in the trace")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtlpilot", description="Multi-agent Verilog generation and repair")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one problem directory")
    run.add_argument("--problem", type=Path, required=True)
    _common(run)
    suite = sub.add_parser("suite", help="run every problem under a directory")
    suite.add_argument("--dir", type=Path, required=True)
    suite.add_argument("--ablation", action="store_true", help="run all four planner/AST-WT arms")
    _common(suite)
    val = sub.add_parser("validate-fixtures", help="check golden designs and planted bugs in a corpus")
    val.add_argument("--dir", type=Path, help="problem corpus (default: the bundled fixtures)")
    val.add_argument("--jobs", type=int, default=1)
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    for name in ("backend_url", "model", "planner", "jobs", "timeout_sim", "out", "scripted", "verbose"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if args.ast_wt is not None:
        overrides["ast_wt"] = args.ast_wt == "on"
    return replace(config, **overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate-fixtures":
        from .fixtures import PROBLEMS_DIR, validate_fixtures
        report = validate_fixtures(args.dir or PROBLEMS_DIR, jobs=args.jobs)
        for v in report.violations:
            print(f"VIOLATION {v}")
        print(f"checked {report.checked} designs: {'ok' if report.ok else f'{len(report.violations)} violations'}")
        return 0 if report.ok else 1
    try:
        config = resolve_config(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            result = run_problem(args.problem, config, Path(config.out) / args.problem.name)
            print(json.dumps(asdict(result), indent=2))
            return 3 if result.fatal else (0 if result.passed else 1)
        if args.ablation:
            report = run_ablation(args.dir, config)
            fatal = any(r.fatal for s in report.suites.values() for r in s.results)
        else:
            report = run_suite(args.dir, config)
            fatal = any(r.fatal for r in report.results)
        print(report.render())
        return 3 if fatal else 0
    except ProblemConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
