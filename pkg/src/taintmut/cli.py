"""Command-line entry point: generate, vet, evaluate, report, analyze, oracle.

Exit codes: 0 success, 2 usage error, 3 corpus or vetting failure, 4 I/O
failure (including tools that cannot be started).  Tool verdicts never
change the exit code.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis.analyzer import analyze
from .analysis.config import AnalyzerConfig
from .analysis.oracle import brute_force_oracle
from .analysis.report import format_trace
from .app_model.model import AppModel
from .corpus import ORACLE, Corpus, bundled_dir, ingest, vet_benign
from .errors import IoFailure, MissingDirectory, TaintMutError
from .harness import MODES, RESULTS, evaluate, load_adapters, read_results, resolve_tools
from .metrics import build_report, render_table, write_report
from .mutators import generate as generate_outcomes
from .mutators.common import DEFAULT_CONDITION
from .store import MANIFEST, MutantStore, populate, read_manifest, select_variants
from .validation import CATEGORIES, OPERATORS, check_operator

EXIT_OK, EXIT_USAGE, EXIT_CORPUS, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _split(values: Optional[Sequence[str]]) -> list[str]:
    out: list[str] = []
    for v in values or ():
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return out


def select_operators(categories: Sequence[str], operators: Sequence[str]) -> list[str]:
    """Operators named directly or through a category, in canonical order; all when neither is given."""
    chosen: set[str] = set()
    for cat in categories:
        if cat not in CATEGORIES:
            raise CliError(f"unknown category {cat!r}; expected one of {', '.join(CATEGORIES)}", EXIT_USAGE)
        chosen.update(CATEGORIES[cat])
    for op in operators:
        try:
            chosen.add(check_operator(op))
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from exc
    if not chosen:
        return list(OPERATORS)
    return [op for op in OPERATORS if op in chosen]


def sample_apps(ids: Sequence[str], size: Optional[int], seed: int) -> list[str]:
    """Reproducible subset of *ids*: ``random.Random(seed).sample`` over the sorted ids."""
    ids = sorted(ids)
    if size is None:
        return ids
    if size < 0 or size > len(ids):
        raise CliError(f"--size {size} but only {len(ids)} eligible apps", EXIT_USAGE)
    return sorted(random.Random(seed).sample(ids, size))


def _load_corpus(args) -> Corpus:
    try:
        corpus = ingest(args.corpus) if args.corpus else ingest(bundled_dir(), "bundled")
    except MissingDirectory as exc:
        raise CliError(str(exc), EXIT_CORPUS) from exc
    if not len(corpus):
        raise CliError("corpus is empty", EXIT_CORPUS)
    return corpus


def _vet(args, corpus: Corpus) -> Corpus:
    try:
        return vet_benign(corpus, getattr(args, "analyzer", ORACLE), _split(args.allow_flagged), args.workers)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


# -- subcommands -----------------------------------------------------------------


def cmd_vet(args, out) -> int:
    corpus = _vet(args, _load_corpus(args))
    for line in corpus.report_lines():
        print(line, file=out)
    return EXIT_OK


def cmd_generate(args, out) -> int:
    corpus = _load_corpus(args)
    if args.skip_vet:
        apps = [a for a in corpus if a.parsed]
    else:
        corpus = _vet(args, corpus)
        apps = corpus.eligible()
    if not apps:
        raise CliError("no eligible apps in corpus", EXIT_CORPUS)
    ops = select_operators(_split(args.category), _split(args.operators))
    variants = _split(args.variants) or None
    condition = args.path_condition or DEFAULT_CONDITION
    models = {a.id: a.model() for a in apps}
    if args.size is not None:
        applicable = [i for i, m in models.items()
                      if any(o.possible for op in ops for o in generate_outcomes(m, op, select_variants(op, variants),
                                                                                 condition=condition))]
        models = {i: models[i] for i in sample_apps(applicable, args.size, args.seed)}
    store = MutantStore(args.out)
    if len(store):
        raise CliError(f"{Path(args.out) / MANIFEST} already exists; use a fresh --out", EXIT_USAGE)
    counts = populate(store, models.values(), ops, variants, condition, args.workers)
    for op in ops:
        recs = store.query(operator=op, include_not_possible=True)
        n_apps = len({r.source_app for r in recs if r.generated})
        n_na = len({r.source_app for r in recs if not r.generated} - {r.source_app for r in recs if r.generated})
        print(f"{op}\tfiles={counts[op]}\tapps={n_apps}\tnot_possible={n_na}", file=out)
    print(f"manifest: {store.manifest_path}", file=out)
    return EXIT_OK


def cmd_evaluate(args, out) -> int:
    root = Path(args.out)
    if not (root / MANIFEST).is_file():
        raise CliError(f"no manifest under {root}", EXIT_IO)
    adapters = load_adapters(args.adapters) if args.adapters else []
    names = args.tool or [a.name for a in adapters]
    if not names:
        raise CliError("name at least one --tool or pass --adapters", EXIT_USAGE)
    try:
        tools = resolve_tools(names, adapters)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    store = MutantStore(root)
    ops = select_operators(_split(args.category), _split(args.operators)) if (args.category or args.operators) else None
    variants = {v[1:] if v[:1] in "vV" else v for v in _split(args.variants)}
    results_dir = Path(args.results) if args.results else root / "results"
    rows = evaluate(store, tools, args.mode, results_dir, args.workers, ops, variants)
    failed = sorted({r.tool for r in rows if r.spawn_failed})
    print(f"{len(rows)} results -> {results_dir / RESULTS}", file=out)
    if failed:
        print(f"could not start: {', '.join(failed)}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_report(args, out) -> int:
    root = Path(args.out) if args.out else None
    results_dir = Path(args.results) if args.results else (root / "results" if root else None)
    if results_dir is None or not (results_dir / RESULTS).is_file():
        raise CliError("no results.jsonl found; pass --results or --out", EXIT_IO)
    rows = read_results(results_dir / RESULTS)
    if args.mode:
        rows = [r for r in rows if r.mode == args.mode]
    records = read_manifest(root / MANIFEST) if root and (root / MANIFEST).is_file() else []
    report = build_report(rows, records)
    csv_path, json_path = write_report(report, results_dir)
    out.write(render_table(report))
    print(f"wrote {csv_path} and {json_path}", file=out)
    return EXIT_OK


def _read_app(path: str) -> AppModel:
    p = Path(path)
    try:
        return AppModel(p.read_text(encoding="utf-8"), p.stem)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from exc


def cmd_analyze(args, out) -> int:
    try:
        cfg = AnalyzerConfig.from_spec(args.config)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    out.write(analyze(_read_app(args.file), cfg).to_native())
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    truth = brute_force_oracle(_read_app(args.file), args.budget, args.depth, args.state)
    print(f"VERDICT {truth.verdict}", file=out)
    for p in truth.paths:
        for s in p.sinks:
            label = "tainted" if s.tainted else "benign"
            witness = " ".join(">".join(chain) for chain in s.witness)
            print(f"PATH {p.function} {format_trace(p.trace)} {s.kind} {s.line} {label} {witness}".rstrip(), file=out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taintmut", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus=True):
        p.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
        if corpus:
            p.add_argument("--corpus", help="directory of .groovy apps (default: bundled corpus)")
            p.add_argument("--allow-flagged", action="append", metavar="ID",
                           help="keep a flagged app eligible (repeatable or comma-separated)")

    def selectors(p):
        p.add_argument("--category", action="append", help="flow, path or context")
        p.add_argument("--operators", action="append", help="comma-separated operator ids")
        p.add_argument("--variants", action="append", help="comma-separated variant ids")

    g = sub.add_parser("generate", help="generate mutants and the manifest")
    common(g)
    selectors(g)
    g.add_argument("--out", required=True, help="output directory for mutants and manifest.jsonl")
    g.add_argument("--size", type=int, help="sample this many applicable apps")
    g.add_argument("--seed", type=int, default=0, help="seed for --size sampling (default 0)")
    g.add_argument("--path-condition", help=f"condition used by Aps (default {DEFAULT_CONDITION})")
    g.add_argument("--skip-vet", action="store_true", help="use every parsable app without vetting")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("vet", help="vet corpus apps as benign")
    common(v)
    v.add_argument("--analyzer", default=ORACLE, help="oracle or an analyzer spec (default oracle)")
    v.set_defaults(func=cmd_vet)

    e = sub.add_parser("evaluate", help="run tools over generated mutants")
    common(e, corpus=False)
    selectors(e)
    e.add_argument("--out", required=True, help="directory written by generate")
    e.add_argument("--tool", action="append", help="builtin:<spec> or an adapter name (repeatable)")
    e.add_argument("--adapters", help="YAML file with adapter documents")
    e.add_argument("--mode", choices=MODES, default="per-file")
    e.add_argument("--results", help="results directory (default <out>/results)")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="compute metrics and write report.csv and summary.json")
    r.add_argument("--out", help="directory written by generate (adds N/A cells)")
    r.add_argument("--results", help="results directory (default <out>/results)")
    r.add_argument("--mode", choices=MODES, help="only rows of this mode")
    r.set_defaults(func=cmd_report)

    a = sub.add_parser("analyze", help="run a built-in analyzer on one file")
    a.add_argument("file")
    a.add_argument("--config", default="flow-sensitive", help="analyzer spec, e.g. flow-sensitive,path-sensitive")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="enumerate paths of one file")
    o.add_argument("file")
    o.add_argument("--budget", type=int, default=4096)
    o.add_argument("--depth", type=int, default=1, help="inline depth (default 1)")
    o.add_argument("--state", action="store_true", help="treat state.* reads as sources")
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (IoFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TaintMutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORPUS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
