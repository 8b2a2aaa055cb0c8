"""Mutant store: generated files plus the ``manifest.jsonl`` meta-data repository."""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional

from . import __version__
from .app_model.model import AppModel
from .errors import DuplicateRecord, IoFailure
from .mutators import Outcome, generate
from .mutators.common import DEFAULT_CONDITION, MutantArtifact
from .validation import check_operator, check_variant, operator_category, variants_for

MANIFEST = "manifest.jsonl"
GENERATED = "generated"
NOT_POSSIBLE = "not possible"


def mutant_id(app: str, operator: str, variant: str, role: str) -> str:
    return hashlib.sha1(f"{app}|{operator}|{variant}|{role}".encode()).hexdigest()[:12]


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def output_path(operator: str, app: str, variant: str, role: str) -> str:
    parts = [operator, app] + ([variant] if variant else []) + [f"{role}.groovy"]
    return "/".join(parts)


@dataclass(frozen=True)
class MutantRecord:
    mutant_id: str
    operator: str
    variant: str
    source_app: str
    role: str
    ground_truth: Optional[str]
    sink_kind: Optional[str]
    injected_input: Optional[str]
    injection_sites: list
    output_path: Optional[str]
    generator_version: str
    path_truth: Optional[dict]
    applicability: str
    expected_hunks: int = 0
    condition: Optional[str] = None
    sha256: Optional[str] = None

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.source_app, self.operator, self.variant, self.role)

    @property
    def generated(self) -> bool:
        return self.applicability == GENERATED

    @property
    def category(self) -> str:
        return operator_category(self.operator)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "MutantRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    @classmethod
    def for_artifact(cls, art: MutantArtifact, condition: Optional[str] = None) -> "MutantRecord":
        return cls(
            mutant_id(art.source_app, art.operator, art.variant, art.role), art.operator, art.variant,
            art.source_app, art.role, art.ground_truth, art.sink_kind, art.injected_input,
            art.injection_sites, output_path(art.operator, art.source_app, art.variant, art.role),
            __version__, art.path_truth.to_dict() if art.path_truth else None, GENERATED,
            art.expected_hunks, condition if art.operator == "Aps" else None, sha256_text(art.text),
        )

    @classmethod
    def not_possible(cls, app: str, operator: str, variant: str = "") -> "MutantRecord":
        return cls(mutant_id(app, operator, variant, "none"), operator, variant, app, "none", None, None,
                   None, [], None, __version__, None, NOT_POSSIBLE)


def sort_key(rec: MutantRecord):
    return rec.key


class MutantStore:
    """Files under *root* plus an append-only manifest; appends go through one lock."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._records: dict[tuple, MutantRecord] = {}
        if self.manifest_path.exists():
            for rec in read_manifest(self.manifest_path):
                self._records[rec.key] = rec

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    def __len__(self) -> int:
        return len(self._records)

    def persist(self, record: MutantRecord, text: Optional[str] = None) -> str:
        """Write the file (when generated) and append *record*; returns the mutant id."""
        if record.generated and (text is None or record.output_path is None):
            raise ValueError("a generated record needs text and an output path")
        with self._lock:
            if record.key in self._records:
                raise DuplicateRecord(f"record already stored: {record.key}")
            try:
                self.root.mkdir(parents=True, exist_ok=True)
                if record.generated:
                    target = self.root / record.output_path
                    target.parent.mkdir(parents=True, exist_ok=True)
                    target.write_text(text, encoding="utf-8")
                with self.manifest_path.open("a", encoding="utf-8") as fh:
                    fh.write(record.to_json() + "\n")
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
            self._records[record.key] = record
        return record.mutant_id

    def persist_artifact(self, art: MutantArtifact, condition: Optional[str] = None) -> str:
        return self.persist(MutantRecord.for_artifact(art, condition), art.text)

    def records(self) -> list[MutantRecord]:
        return sorted(self._records.values(), key=sort_key)

    def query(self, operator: Optional[str] = None, category: Optional[str] = None, app: Optional[str] = None,
              role: Optional[str] = None, variant: Optional[str] = None,
              include_not_possible: bool = False) -> list[MutantRecord]:
        """Records matching every given filter, ordered by (app, operator, variant, role).

        ``not possible`` records are left out unless *include_not_possible*.
        """
        op = check_operator(operator) if operator else None
        var = check_variant(op, variant) if (variant is not None and op) else variant
        out = []
        for rec in self.records():
            if not include_not_possible and not rec.generated:
                continue
            if op and rec.operator != op:
                continue
            if category and rec.category != category:
                continue
            if app and rec.source_app != app:
                continue
            if role and rec.role != role:
                continue
            if var is not None and rec.variant != var:
                continue
            out.append(rec)
        return out

    def path_of(self, rec: MutantRecord) -> Path:
        return self.root / rec.output_path

    def text_of(self, rec: MutantRecord) -> str:
        return self.path_of(rec).read_text(encoding="utf-8")

    def pairs(self, **filters) -> list[tuple[MutantRecord, MutantRecord]]:
        """(base, mutant) records grouped by (app, operator, variant); Add pairs are (flow1, flow2)."""
        groups: dict[tuple, dict[str, MutantRecord]] = {}
        for rec in self.query(**filters):
            groups.setdefault(rec.key[:3], {})[rec.role] = rec
        out = []
        for key in sorted(groups):
            g = groups[key]
            base = g.get("base") or g.get("flow1")
            mut = g.get("mutant") or g.get("flow2")
            if base and mut:
                out.append((base, mut))
        return out


def read_manifest(path: str | Path) -> list[MutantRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(MutantRecord.from_dict(json.loads(line)))
    return out


def _outcomes(model: AppModel, operator: str, variants, condition: str) -> list[Outcome]:
    return generate(model, operator, variants, condition=condition)


def populate(store: MutantStore, models: Iterable[AppModel], operators: Iterable[str],
             variants: Optional[Iterable[str]] = None, condition: str = DEFAULT_CONDITION,
             workers: int = 1) -> dict[str, int]:
    """Generate every requested operator/variant for every app and persist the results.

    Generation runs in parallel; persisting happens afterwards in sorted
    order so the manifest is identical for any worker count.  Returns the
    number of generated files per operator.
    """
    models = sorted(models, key=lambda m: m.name)
    ops = [check_operator(o) for o in operators]
    wanted = list(variants) if variants is not None else None
    jobs = [(m, op) for m in models for op in ops]

    def run(job):
        m, op = job
        return m, op, _outcomes(m, op, select_variants(op, wanted), condition)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, jobs))

    counts = {op: 0 for op in ops}
    records: list[tuple[MutantRecord, Optional[str]]] = []
    for m, op, outs in results:
        for o in outs:
            if not o.possible:
                records.append((MutantRecord.not_possible(m.name, op, o.variant), None))
                continue
            for art in o.artifacts:
                records.append((MutantRecord.for_artifact(art, condition), art.text))
                counts[op] += 1
    for rec, text in sorted(records, key=lambda rt: sort_key(rt[0])):
        store.persist(rec, text)
    return counts


def select_variants(op: str, wanted: Optional[list[str]]) -> Optional[list[str]]:
    """Variants of *op* named in *wanted*; ``None`` means all of them."""
    if wanted is None:
        return None
    picked = []
    for v in wanted:
        try:
            picked.append(check_variant(op, v))
        except ValueError:
            continue
    if variants_for(op) == ("",):
        picked = [v for v in picked if v]
        return picked or None
    return picked


def replay(manifest: str | Path, models: dict[str, AppModel], out: str | Path) -> MutantStore:
    """Rebuild a store from a manifest by re-running each recorded operator.

    Raises ``ValueError`` when a regenerated file's hash differs from the manifest.
    """
    store = MutantStore(out)
    cache: dict[tuple, list[Outcome]] = {}
    for rec in read_manifest(manifest):
        if not rec.generated:
            store.persist(rec)
            continue
        cond = rec.condition or DEFAULT_CONDITION
        key = (rec.source_app, rec.operator, cond)
        if key not in cache:
            cache[key] = _outcomes(models[rec.source_app], rec.operator, None, cond)
        art = next(a for o in cache[key] for a in o.artifacts if a.variant == rec.variant and a.role == rec.role)
        if sha256_text(art.text) != rec.sha256:
            raise ValueError(f"replayed file differs from manifest: {rec.output_path}")
        store.persist(MutantRecord.for_artifact(art, rec.condition), art.text)
    return store
