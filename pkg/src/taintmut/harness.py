"""Run analyzers over stored artifacts and classify the outcomes.

A :class:`ToolAdapter` describes how to invoke a tool and how to read its
output.  External tools run as subprocesses in a scratch directory; the
built-in analyzers run in-process and go through the same extractor, fed
with their native text output.
"""

from __future__ import annotations

import enum
import json
import os
import re
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import yaml

from .analysis.analyzer import analyze
from .analysis.config import AnalyzerConfig
from .analysis.report import fingerprint, parse_trace
from .app_model.model import AppModel
from .errors import IoFailure, SpawnFailure, TaintMutError
from .mutators.common import PathTruth
from .store import MutantRecord, MutantStore

BUILTIN_PREFIX = "builtin:"
DEFAULT_TIMEOUT = 120.0
MODES = ("per-file", "pairwise", "path-effect")
RESULTS = "results.jsonl"

TAINTED, CLEAN, ERROR, TIMEOUT = "tainted", "clean", "error", "timeout"

NATIVE_PATTERNS = {
    "tainted_pattern": r"^VERDICT tainted\b",
    "clean_pattern": r"^VERDICT clean\b",
    "finding_pattern": r"^FINDING (?P<kind>\S+) (?P<source>\S+)",
    "path_pattern": r"^PATH (?P<function>\S+) (?P<trace>\S+) (?P<kind>\S+) (?P<line>\d+) (?P<verdict>tainted|benign)",
}


class Outcome(str, enum.Enum):
    KILLED = "Killed"
    LIVE = "Live"
    FALSE_POSITIVE = "FalsePositive"
    TRUE_NEGATIVE = "TrueNegative"
    NOT_EXECUTED = "NotExecuted"

    @property
    def cell(self) -> str:
        return _CELLS[self]


_CELLS = {Outcome.KILLED: "K", Outcome.LIVE: "L", Outcome.FALSE_POSITIVE: "FP",
          Outcome.TRUE_NEGATIVE: "TN", Outcome.NOT_EXECUTED: "NE"}


@dataclass(frozen=True)
class ToolAdapter:
    name: str
    argv: tuple[str, ...] = ()
    timeout: float = DEFAULT_TIMEOUT
    tainted_pattern: str = NATIVE_PATTERNS["tainted_pattern"]
    clean_pattern: Optional[str] = NATIVE_PATTERNS["clean_pattern"]
    finding_pattern: Optional[str] = NATIVE_PATTERNS["finding_pattern"]
    path_pattern: Optional[str] = NATIVE_PATTERNS["path_pattern"]
    reports_paths: bool = False
    env: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.builtin and sum(tok.count("{file}") for tok in self.argv) != 1:
            raise ValueError(f"adapter {self.name!r}: command must contain {{file}} exactly once")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def builtin(self) -> bool:
        return self.name.startswith(BUILTIN_PREFIX) and not self.argv

    @property
    def config(self) -> AnalyzerConfig:
        return AnalyzerConfig.from_spec(self.name[len(BUILTIN_PREFIX):])

    @property
    def slug(self) -> str:
        return _slug(self.name)

    @classmethod
    def from_dict(cls, d: dict) -> "ToolAdapter":
        d = dict(d)
        argv = d.pop("argv", d.pop("command", ()))
        if isinstance(argv, str):
            argv = argv.split()
        return cls(argv=tuple(argv), env=dict(d.pop("env", None) or {}), **d)


def builtin_adapter(spec: str, timeout: float = DEFAULT_TIMEOUT) -> ToolAdapter:
    """Adapter for a built-in analyzer, e.g. ``builtin_adapter("flow-insensitive")``."""
    if spec.startswith(BUILTIN_PREFIX):
        spec = spec[len(BUILTIN_PREFIX):]
    cfg = AnalyzerConfig.from_spec(spec)
    return ToolAdapter(BUILTIN_PREFIX + spec, timeout=timeout, reports_paths=cfg.reports_paths)


def load_adapters(path: str | Path) -> list[ToolAdapter]:
    """Read a YAML file with one adapter document per tool."""
    try:
        with open(path, encoding="utf-8") as fh:
            docs = [d for d in yaml.safe_load_all(fh) if d]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return [ToolAdapter.from_dict(d) for d in docs]


def resolve_tools(names: Iterable[str], adapters: Iterable[ToolAdapter] = ()) -> list[ToolAdapter]:
    by_name = {a.name: a for a in adapters}
    out = []
    for n in names:
        if n in by_name:
            out.append(by_name[n])
        elif n.startswith(BUILTIN_PREFIX):
            out.append(builtin_adapter(n))
        else:
            raise ValueError(f"unknown tool {n!r}")
    return out


@dataclass(frozen=True)
class ToolRun:
    adapter: str
    mutant_id: str
    exit_status: Optional[int]
    raw_output: str
    wall_time: float
    verdict: str
    fingerprint: str
    paths: tuple = ()  # (function, trace, kind, line, tainted)
    spawn_failed: bool = False

    @property
    def executed(self) -> bool:
        return self.verdict in (TAINTED, CLEAN)


def extract(adapter: ToolAdapter, output: str, exit_status: Optional[int]) -> tuple[str, str, tuple]:
    """Verdict, fingerprint and path listings read from raw tool output."""
    if exit_status not in (0, None):
        return ERROR, "", ()
    flags = re.MULTILINE
    if re.search(adapter.tainted_pattern, output, flags):
        verdict = TAINTED
    elif adapter.clean_pattern is None or re.search(adapter.clean_pattern, output, flags):
        verdict = CLEAN
    else:
        return ERROR, "", ()
    findings = []
    if adapter.finding_pattern:
        findings = [(m.group("kind"), m.group("source")) for m in re.finditer(adapter.finding_pattern, output, flags)]
    paths = ()
    if adapter.reports_paths and adapter.path_pattern:
        paths = tuple(
            (m.group("function"), parse_trace(m.group("trace")), m.group("kind"), int(m.group("line")),
             m.group("verdict") == "tainted")
            for m in re.finditer(adapter.path_pattern, output, flags)
        )
    if verdict == CLEAN:
        return CLEAN, "", paths
    fp = fingerprint(findings, [(p[0], p[2], p[3], p[4]) for p in paths] or None) or TAINTED
    return TAINTED, fp, paths


def run(adapter: ToolAdapter, path: str | Path, mutant_id: str = "") -> ToolRun:
    """Run *adapter* on one file.  Raises :class:`SpawnFailure` when the tool cannot start."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    if adapter.builtin:
        return _run_builtin(adapter, path, mutant_id)
    argv = [tok.replace("{file}", str(path.resolve())) for tok in adapter.argv]
    env = {**os.environ, **{k: str(v) for k, v in adapter.env.items()}}
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="taintmut-run-") as scratch:
        try:
            proc = subprocess.run(argv, cwd=scratch, env=env, capture_output=True, text=True,
                                  timeout=adapter.timeout)
        except subprocess.TimeoutExpired as exc:
            out = exc.stdout.decode(errors="replace") if isinstance(exc.stdout, bytes) else (exc.stdout or "")
            return ToolRun(adapter.name, mutant_id, None, out, max(time.monotonic() - start, adapter.timeout),
                           TIMEOUT, "")
        except (FileNotFoundError, PermissionError, NotADirectoryError) as exc:
            raise SpawnFailure(f"{adapter.name}: cannot start {argv[0]!r}: {exc}") from exc
    wall = time.monotonic() - start
    output = proc.stdout + proc.stderr
    verdict, fp, paths = extract(adapter, output, proc.returncode)
    return ToolRun(adapter.name, mutant_id, proc.returncode, output, wall, verdict, fp, paths)


def _run_builtin(adapter: ToolAdapter, path: Path, mutant_id: str) -> ToolRun:
    start = time.monotonic()
    try:
        report = analyze(AppModel(path.read_text(encoding="utf-8"), path.stem), adapter.config)
        output, status = report.to_native(), 0
    except TaintMutError as exc:
        output, status = f"ERROR {exc}\n", 1
    verdict, fp, paths = extract(adapter, output, status)
    return ToolRun(adapter.name, mutant_id, status, output, time.monotonic() - start, verdict, fp, paths)


def spawn_failure_run(adapter: ToolAdapter, mutant_id: str, message: str) -> ToolRun:
    return ToolRun(adapter.name, mutant_id, None, message, 0.0, ERROR, "", (), True)


# -- classification ------------------------------------------------------------


def classify_per_file(run: ToolRun, ground_truth: str) -> Outcome:
    if not run.executed:
        return Outcome.NOT_EXECUTED
    flagged = run.verdict == TAINTED
    if ground_truth == "vulnerable":
        return Outcome.KILLED if flagged else Outcome.LIVE
    return Outcome.FALSE_POSITIVE if flagged else Outcome.TRUE_NEGATIVE


def classify_pairwise(base: ToolRun, mutant: ToolRun, base_truth: str, mutant_truth: str) -> Outcome:
    """Judge a (base, mutant) pair.  *base_truth* is recorded but not needed by the rule."""
    if not (base.executed and mutant.executed):
        return Outcome.NOT_EXECUTED
    if mutant_truth != "vulnerable":
        return Outcome.FALSE_POSITIVE if mutant.verdict == TAINTED else Outcome.TRUE_NEGATIVE
    return Outcome.KILLED if base.fingerprint != mutant.fingerprint else Outcome.LIVE


@dataclass(frozen=True)
class PathTally:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "PathTally") -> "PathTally":
        return PathTally(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


_ARM = {"then": "T", "else": "F"}


def score_paths(run: ToolRun, truth: PathTruth, reports_paths: bool) -> PathTally:
    """Per-path TP/FP/FN/TN for one mutant.

    A path-reporting tool is matched arm by arm on the listings that pass
    through the branch and reach the sink.  Any other tool is credited from
    its overall verdict; a tainted verdict counts every benign path as FP.
    """
    if not run.executed:
        return PathTally()
    tally = PathTally()
    for label in truth.paths:
        if reports_paths:
            arm = (truth.branch_line, _ARM[label.arm])
            hits = [p for p in run.paths if p[3] == truth.sink_line and arm in p[1]]
            flagged = any(p[4] for p in hits)
        else:
            flagged = run.verdict == TAINTED
        if label.tainted:
            tally += PathTally(tp=1) if flagged else PathTally(fn=1)
        else:
            tally += PathTally(fp=1) if flagged else PathTally(tn=1)
    return tally


# -- evaluation over a store ----------------------------------------------------


@dataclass(frozen=True)
class ResultRecord:
    tool: str
    mode: str
    operator: str
    variant: str
    source_app: str
    mutant_id: str
    role: str
    ground_truth: str
    verdict: str
    fingerprint: str
    exit_status: Optional[int]
    outcome: str
    base_id: Optional[str] = None
    base_verdict: Optional[str] = None
    base_fingerprint: Optional[str] = None
    tally: Optional[dict] = None
    spawn_failed: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(**d)


def _units(store: MutantStore, mode: str, operators, variants, filters: dict) -> list[tuple]:
    """What gets judged: single records, (base, mutant) pairs, or records with path truth."""
    if mode == "pairwise":
        units = store.pairs(**filters)
    else:
        recs = store.query(**filters)
        if mode == "path-effect":
            recs = [r for r in recs if r.path_truth]
        units = [(r,) for r in recs]
    if operators is not None:
        units = [u for u in units if u[-1].operator in operators]
    if variants:
        units = [u for u in units if u[-1].variant in variants]
    return units


def evaluate(store: MutantStore, adapters: Iterable[ToolAdapter], mode: str, results_dir: str | Path,
             workers: int = 1, operators: Optional[Iterable[str]] = None, variants: Optional[Iterable[str]] = None,
             **filters) -> list[ResultRecord]:
    """Run every adapter over the selected artifacts and write ``results.jsonl``.

    Raw outputs go to ``<results>/<tool>/<mutant-id>.out``.  A tool that
    cannot be started yields NotExecuted rows (``spawn_failed`` runs); the
    caller decides how to report that.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    adapters = list(adapters)
    results_dir = Path(results_dir)
    units = _units(store, mode, set(operators) if operators is not None else None, set(variants or ()), filters)
    needed = sorted({r.mutant_id: r for u in units for r in u}.values(), key=lambda r: r.key)

    def job(item):
        adapter, rec = item
        try:
            return run(adapter, store.path_of(rec), rec.mutant_id)
        except SpawnFailure as exc:
            return spawn_failure_run(adapter, rec.mutant_id, str(exc))

    items = [(a, r) for a in adapters for r in needed]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        runs = {(it[0].name, it[1].mutant_id): r for it, r in zip(items, pool.map(job, items))}

    try:
        for (tool, mid), r in sorted(runs.items()):
            target = results_dir / _slug(tool) / f"{mid}.out"
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(r.raw_output, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc

    rows = []
    for adapter in adapters:
        for unit in units:
            rows.append(_row(adapter, mode, unit, runs))
    write_results(results_dir / RESULTS, rows)
    return rows


def _slug(name: str) -> str:
    return re.sub(r"[^\w.-]+", "_", name)


def _row(adapter: ToolAdapter, mode: str, unit: tuple, runs: dict) -> ResultRecord:
    rec: MutantRecord = unit[-1]
    r = runs[(adapter.name, rec.mutant_id)]
    common = dict(tool=adapter.name, mode=mode, operator=rec.operator, variant=rec.variant,
                  source_app=rec.source_app, mutant_id=rec.mutant_id, role=rec.role,
                  ground_truth=rec.ground_truth, verdict=r.verdict, fingerprint=r.fingerprint,
                  exit_status=r.exit_status, spawn_failed=r.spawn_failed)
    if mode == "pairwise":
        base: MutantRecord = unit[0]
        b = runs[(adapter.name, base.mutant_id)]
        common["spawn_failed"] = r.spawn_failed or b.spawn_failed
        outcome = classify_pairwise(b, r, base.ground_truth, rec.ground_truth)
        return ResultRecord(**common, outcome=outcome.value, base_id=base.mutant_id,
                            base_verdict=b.verdict, base_fingerprint=b.fingerprint)
    outcome = classify_per_file(r, rec.ground_truth)
    tally = None
    if mode == "path-effect":
        tally = asdict(score_paths(r, PathTruth.from_dict(rec.path_truth), adapter.reports_paths))
    return ResultRecord(**common, outcome=outcome.value, tally=tally)


def write_results(path: str | Path, rows: Iterable[ResultRecord]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(row.to_json() + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_results(path: str | Path) -> list[ResultRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [ResultRecord.from_dict(json.loads(ln)) for ln in fh if ln.strip()]
