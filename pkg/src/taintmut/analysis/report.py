"""Analysis results and the line-oriented native verdict format.

Native format, one record per line::

    VERDICT tainted|clean
    FINDING <kind> <source> <line>
    PATH <function> <trace> <kind> <line> tainted|benign
    DEGRADED <function>

``trace`` is ``L12:T,L20:F`` (branch line and arm) or ``-`` for a path
without branches.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

Trace = tuple[tuple[int, str], ...]


@dataclass(frozen=True, order=True)
class SinkEvent:
    kind: str
    line: int
    function: str
    sources: frozenset[str] = frozenset()

    @property
    def tainted(self) -> bool:
        return bool(self.sources)


@dataclass(frozen=True, order=True)
class Finding:
    kind: str
    source: str
    line: int
    function: str = ""


@dataclass(frozen=True, order=True)
class PathListing:
    function: str
    trace: Trace
    kind: str
    line: int
    tainted: bool


@dataclass(frozen=True)
class TaintReport:
    findings: tuple[Finding, ...] = ()
    paths: tuple[PathListing, ...] = ()
    degraded: tuple[str, ...] = ()
    reports_paths: bool = False
    config: str = ""

    @property
    def tainted(self) -> bool:
        return bool(self.findings)

    @property
    def verdict(self) -> str:
        return "tainted" if self.tainted else "clean"

    @property
    def fingerprint(self) -> str:
        return fingerprint(
            [(f.kind, f.source) for f in self.findings],
            [(p.function, p.kind, p.line, p.tainted) for p in self.paths] if self.reports_paths else None,
        )

    def to_native(self) -> str:
        lines = [f"VERDICT {self.verdict}"]
        lines += [f"FINDING {f.kind} {f.source} {f.line}" for f in self.findings]
        for p in self.paths:
            label = "tainted" if p.tainted else "benign"
            lines.append(f"PATH {p.function} {format_trace(p.trace)} {p.kind} {p.line} {label}")
        lines += [f"DEGRADED {fn}" for fn in self.degraded]
        return "\n".join(lines) + "\n"


def format_trace(trace: Trace) -> str:
    return ",".join(f"L{line}:{arm}" for line, arm in trace) or "-"


_TRACE_ITEM = re.compile(r"L(\d+):([TF])")


def parse_trace(text: str) -> Trace:
    if text in ("", "-"):
        return ()
    return tuple((int(m.group(1)), m.group(2)) for m in _TRACE_ITEM.finditer(text))


def fingerprint(findings: Iterable[tuple[str, str]], paths=None) -> str:
    """Canonical, order-independent text of a result.

    ``findings`` are ``(kind, source)`` pairs.  ``paths``, when given, are
    ``(function, kind, line, tainted)`` tuples; they are reduced to per-sink
    ``kind:paths:tainted`` counts so that line shifts do not matter.
    """
    items = sorted({f"{k}:{s}" for k, s in findings})
    if not items:
        return ""
    out = ";".join(items)
    if paths:
        per_sink: dict[tuple, list[int]] = defaultdict(lambda: [0, 0])
        for function, kind, line, tainted in paths:
            cell = per_sink[(function, kind, line)]
            cell[0] += 1
            cell[1] += int(bool(tainted))
        summary = sorted(f"{key[1]}:{n}:{t}" for key, (n, t) in per_sink.items())
        out += "|" + ";".join(summary)
    return out


@dataclass
class ParsedOutput:
    verdict: str
    findings: list[tuple[str, str]] = field(default_factory=list)
    paths: list[PathListing] = field(default_factory=list)
