"""App corpora: ingest a directory of ``.groovy`` files and vet apps as benign."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .analysis.analyzer import analyze
from .analysis.config import AnalyzerConfig
from .analysis.oracle import brute_force_oracle
from .app_model.model import AppModel
from .errors import MissingDirectory, TaintMutError

UNVETTED = "unvetted"
BENIGN = "benign"
FLAGGED = "flagged"
ALLOWED = "flagged-but-allowed"
ORACLE = "oracle"


@dataclass(frozen=True)
class AppEntry:
    id: str
    path: str
    text: str
    line_count: int
    provenance: str = "user"
    status: str = UNVETTED
    reason: str = ""
    parsed: bool = True

    @property
    def eligible(self) -> bool:
        return self.parsed and self.status in (BENIGN, ALLOWED)

    def model(self) -> AppModel:
        return AppModel(self.text, self.id)

    def record(self) -> dict:
        return {"id": self.id, "status": self.status, "reason": self.reason}


@dataclass(frozen=True)
class Corpus:
    apps: tuple[AppEntry, ...]
    provenance: str = "user"

    def __post_init__(self):
        ids = [a.id for a in self.apps]
        if len(ids) != len(set(ids)):
            raise ValueError("app ids must be unique")

    def __len__(self) -> int:
        return len(self.apps)

    def __iter__(self):
        return iter(self.apps)

    def get(self, app_id: str) -> Optional[AppEntry]:
        return next((a for a in self.apps if a.id == app_id), None)

    def eligible(self) -> list[AppEntry]:
        return [a for a in self.apps if a.eligible]

    def flagged(self) -> list[AppEntry]:
        return [a for a in self.apps if a.status in (FLAGGED, ALLOWED)]

    def report_lines(self) -> list[str]:
        """One machine-readable record per app, sorted by id."""
        return [json.dumps(a.record()) for a in self.apps]


def bundled_dir() -> Path:
    return Path(str(resources.files("taintmut") / "data" / "corpus"))


def _entry(path: Path, provenance: str) -> AppEntry:
    text = path.read_text(encoding="utf-8")
    lines = len(text.splitlines())
    try:
        AppModel(text, path.stem)
    except (TaintMutError, ValueError, RecursionError) as exc:
        return AppEntry(path.stem, str(path), text, lines, provenance, FLAGGED, f"parse error: {exc}", False)
    return AppEntry(path.stem, str(path), text, lines, provenance)


def ingest(directory: str | Path, provenance: str = "user") -> Corpus:
    """Read every ``*.groovy`` file directly under *directory*.

    Unparsable files stay in the corpus, flagged with a parse-error reason.
    """
    root = Path(directory)
    if not root.is_dir():
        raise MissingDirectory(f"corpus directory not found: {root}")
    apps = tuple(_entry(p, provenance) for p in sorted(root.glob("*.groovy")))
    return Corpus(apps, provenance)


def load_bundled() -> Corpus:
    return ingest(bundled_dir(), "bundled")


def _tainted_flows(model: AppModel, analyzer: str) -> int:
    if analyzer == ORACLE:
        truth = brute_force_oracle(model)
        return len({(p.function, s.kind, s.line) for p in truth.paths for s in p.sinks if s.tainted})
    report = analyze(model, AnalyzerConfig.from_spec(analyzer))
    return len(report.findings)


def _vet_one(app: AppEntry, analyzer: str, allow: frozenset[str]) -> AppEntry:
    if not app.parsed:
        return app
    try:
        flows = _tainted_flows(app.model(), analyzer)
    except TaintMutError as exc:
        status, reason = FLAGGED, f"analysis failed: {exc}"
    else:
        if flows == 0:
            return replace(app, status=BENIGN, reason="")
        status, reason = FLAGGED, f"{flows} tainted flow(s)"
    if app.id in allow:
        status = ALLOWED
    return replace(app, status=status, reason=reason)


def vet_benign(corpus: Corpus, analyzer: str = ORACLE, allow_flagged: Iterable[str] = (),
               workers: int = 1) -> Corpus:
    """Mark each app benign iff *analyzer* finds no tainted flow.

    *analyzer* is ``"oracle"`` or an analyzer spec such as
    ``"flow-sensitive,path-sensitive"``.  Apps named in *allow_flagged* stay
    eligible as ``flagged-but-allowed``.
    """
    if analyzer != ORACLE:
        AnalyzerConfig.from_spec(analyzer)
    allow = frozenset(allow_flagged)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        apps = tuple(pool.map(lambda a: _vet_one(a, analyzer, allow), corpus.apps))
    return Corpus(apps, corpus.provenance)
