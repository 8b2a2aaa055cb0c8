"""Artifacts, code templates and text-insertion helpers shared by all operators."""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Optional

from ..app_model.model import AppModel, Edit, SensitiveInput, SinkKind, apply_text_edits
from ..app_model.nodes import Block, FunctionDef, Return

PHONE = '"11111111111"'
BENIGN_FLOW = '"new event happened"'
ATTACK_URI = '"https://attacker.com"'
CONTENT_TYPE = '"application/x-www-form-urlencoded"'
DEFAULT_CONDITION = "state.x"


@dataclass(frozen=True)
class PathLabel:
    arm: str  # "then" | "else"
    tainted: bool


@dataclass(frozen=True)
class PathTruth:
    """Expected per-path verdicts for the branch a path operator injected or reused."""

    branch_line: int
    sink_line: int
    paths: tuple[PathLabel, ...]

    @property
    def total(self) -> int:
        return len(self.paths)

    @property
    def tainted_count(self) -> int:
        return sum(p.tainted for p in self.paths)

    def to_dict(self) -> dict:
        return {
            "branch_line": self.branch_line,
            "sink_line": self.sink_line,
            "paths": [{"arm": p.arm, "tainted": p.tainted} for p in self.paths],
        }

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> Optional["PathTruth"]:
        if not d:
            return None
        return cls(d["branch_line"], d["sink_line"], tuple(PathLabel(p["arm"], p["tainted"]) for p in d["paths"]))


@dataclass(frozen=True)
class MutantArtifact:
    text: str
    role: str  # base | mutant | flow1 | flow2
    ground_truth: str  # vulnerable | benign
    operator: str
    variant: str
    source_app: str
    sink_kind: str
    injected_input: Optional[str]
    edits: tuple[Edit, ...] = ()
    expected_hunks: int = 0
    path_truth: Optional[PathTruth] = None

    @property
    def injection_sites(self) -> list[list[int]]:
        return [[e.start, e.end] for e in self.edits]

    @property
    def vulnerable(self) -> bool:
        return self.ground_truth == "vulnerable"


@dataclass
class Injection:
    """Edits against one source text plus the expected diff-hunk count."""

    edits: list[Edit] = field(default_factory=list)
    hunks: int = 0

    def add(self, start: int, end: int, text: str) -> None:
        self.edits.append(Edit(start, end, text))


def diff_hunks(before: str, after: str) -> int:
    """Number of changed regions in a line diff without context."""
    sm = difflib.SequenceMatcher(None, before.splitlines(), after.splitlines(), autojunk=False)
    return sum(1 for op in sm.get_opcodes() if op[0] != "equal")


def fresh_name(model: AppModel, base: str, taken: set[str] | None = None) -> str:
    used = {t.text.lstrip("$") for t in model.tokens if t.kind == "ident"}
    used |= {ip.code.split(".")[0] for t in model.tokens for ip in t.interpolations}
    used |= taken or set()
    if base not in used:
        return base
    i = 1
    while f"{base}{i}" in used:
        i += 1
    return f"{base}{i}"


def pick_input(model: AppModel, index: int = 0) -> Optional[SensitiveInput]:
    inputs = model.inputs()
    if not inputs or index >= len(inputs) or index < 0:
        return None
    return inputs[index]


# -- code templates ------------------------------------------------------------


def http_map(value: str, unit: str) -> list[str]:
    """The attacker request map, continuation lines indented one extra step."""
    cont = unit * 2
    return [
        f"[uri: {ATTACK_URI},",
        f"{cont}path: \"\",",
        f"{cont}requestContentType: {CONTENT_TYPE},",
        f"{cont}body: [\"massage\": {value}]]",
    ]


def assign_lines(var: str, value: str, kind: SinkKind, unit: str, declare: bool) -> list[str]:
    prefix = f"def {var} = " if declare else f"{var} = "
    if kind is SinkKind.HTTP:
        lines = http_map(value, unit)
        return [prefix + lines[0]] + lines[1:]
    return [prefix + value]


def http_post_block(var: str, unit: str) -> list[str]:
    u = unit
    return [
        "try {",
        f"{u}httpPost({var}) {{ resp ->",
        f"{u * 2}if (resp.status == 200) {{",
        f"{u * 3}log.debug \"attack succeeded\"",
        f"{u * 2}}} else {{",
        f"{u * 3}log.error \"attack failed\"",
        f"{u * 2}}}",
        f"{u}}}",
        "} catch (Exception e) {",
        f"{u}log.error \"Unexpected exception\", e",
        "}",
    ]


def sink_lines(kind: SinkKind, var: str, phone: str, unit: str, declare_phone: bool = True) -> list[str]:
    if kind is SinkKind.SMS:
        lines = [f"def {phone} = {PHONE}"] if declare_phone else []
        return lines + [f"sendSms({phone}, {var})"]
    if kind is SinkKind.PUSH:
        return [f"sendPush({var})"]
    return http_post_block(var, unit)


def sink_line_offset(kind: SinkKind, lines: list[str]) -> int:
    """Index, within *lines*, of the line holding the sink call."""
    key = {SinkKind.SMS: "sendSms(", SinkKind.PUSH: "sendPush(", SinkKind.HTTP: "httpPost("}[kind]
    return next(i for i, ln in enumerate(lines) if key in ln)


def indent_lines(lines: list[str], indent: str, nl: str = "\n") -> str:
    return nl.join(indent + ln if ln else ln for ln in lines)


# -- insertion geometry --------------------------------------------------------


def only_ws(text: str) -> bool:
    return text.strip() == ""


def starts_line(model: AppModel, offset: int) -> bool:
    return only_ws(model.text[model.line_start(offset):offset])


def ends_line(model: AppModel, offset: int) -> bool:
    return only_ws(model.text[offset:model.line_end(offset)])


def body_indent(model: AppModel, block: Block, owner_start: int) -> str:
    """Indentation used for statements of a braced *block*."""
    for st in block.stmts:
        if starts_line(model, st.start) and model.line_of(st.start) != model.line_of(block.start):
            return model.indent_at(st.start)
    return model.indent_at(owner_start) + model.indent_unit()


def insert_at_block_start(model: AppModel, block: Block, owner_start: int, lines: list[str]) -> tuple[Edit, int]:
    """Insert *lines* as the first statements of a braced block.

    Returns the edit and the 0-based line index, in the edited text, of the
    first inserted line.
    """
    nl = model.newline()
    ind = body_indent(model, block, owner_start)
    code = indent_lines(lines, ind, nl)
    first_line = model.line_of(block.start)  # 1-based line of "{"; inserted code starts on the next one
    if ends_line(model, block.start + 1):
        pos = model.line_end(block.start + 1)
        return Edit(pos, pos, nl + code), first_line
    return Edit(block.start + 1, block.start + 1, nl + code + nl + ind), first_line


def insert_at_function_end(model: AppModel, fn: FunctionDef, lines: list[str]) -> tuple[Edit, int]:
    """Insert *lines* at the end of *fn*'s body, before a trailing ``return``.

    Returns the edit and the 1-based line number, in the edited text, of the
    first inserted line.
    """
    nl = model.newline()
    body = fn.body
    ind = body_indent(model, body, fn.start)
    code = indent_lines(lines, ind, nl)
    stmts = body.stmts
    if stmts and isinstance(stmts[-1], Return) and starts_line(model, stmts[-1].start):
        pos = model.line_start(stmts[-1].start)
        return Edit(pos, pos, code + nl), model.line_of(pos)
    close = body.end - 1
    if starts_line(model, close):
        pos = model.line_start(close)
        return Edit(pos, pos, code + nl), model.line_of(pos)
    # closing brace shares a line with code: break the line before it
    return Edit(close, close, nl + code + nl + model.indent_at(fn.start)), model.line_of(close) + 1


def interp(name: str, braced: bool = True) -> str:
    return f'"${{{name}}}"' if braced else f'"${name}"'


def apply(model: AppModel, inj: Injection) -> str:
    return apply_text_edits(model.text, inj.edits)
