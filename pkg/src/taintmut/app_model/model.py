"""AppModel: an immutable parsed app plus the queries mutators rely on."""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Optional

from .lexer import Token
from .nodes import (
    Attribute, Block, Call, Closure, Expr, FunctionDef, If, Loop, MapLit, Module, Name, Node,
    StringLit, Switch, VarDecl,
)
from .parser import parse_tokens


class SinkKind(str, enum.Enum):
    SMS = "Sms"
    PUSH = "Push"
    HTTP = "Http"

    @property
    def function(self) -> str:
        """Name used when emitting a new call."""
        return _EMIT_NAME[self]

    @classmethod
    def parse(cls, value: "str | SinkKind") -> "SinkKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).lower():
                return kind
        raise ValueError(f"unknown sink kind {value!r}")


_EMIT_NAME = {SinkKind.SMS: "sendSms", SinkKind.PUSH: "sendPush", SinkKind.HTTP: "httpPost"}
SINK_FUNCTIONS = {"sendSms": SinkKind.SMS, "sendSMS": SinkKind.SMS, "sendPush": SinkKind.PUSH, "httpPost": SinkKind.HTTP}
LIFECYCLE = ("installed", "updated")


@dataclass(frozen=True)
class Span:
    start: int
    end: int


@dataclass(frozen=True)
class SensitiveInput:
    name: str
    capability: str
    span: Span


@dataclass(frozen=True)
class SinkSite:
    kind: SinkKind
    call: Call
    span: Span
    function: Optional[str]
    payload: Optional[Expr]


@dataclass(frozen=True)
class BranchSite:
    node: If
    span: Span
    then: Block
    orelse: Optional[Node]
    function: Optional[str]
    nested: bool  # inside a closure, loop or switch arm

    @property
    def has_else(self) -> bool:
        return self.orelse is not None

    @property
    def is_chain(self) -> bool:
        return isinstance(self.orelse, If)


@dataclass(frozen=True)
class CallSite:
    decl: VarDecl
    call: Call
    callee: FunctionDef
    function: Optional[str]

    @property
    def args(self):
        return self.call.args

    @property
    def span(self) -> Span:
        return Span(self.decl.start, self.decl.end)


@dataclass(frozen=True)
class Edit:
    """Replace ``text[start:end]`` with ``replacement``."""

    start: int
    end: int
    replacement: str


def sink_payload(kind: SinkKind, call: Call) -> Optional[Expr]:
    pos = call.positional
    if kind is SinkKind.SMS:
        return pos[1] if len(pos) > 1 else None
    if kind is SinkKind.PUSH:
        return pos[0] if pos else None
    body = call.named("body")
    if body is not None:
        return body
    if pos and isinstance(pos[0], MapLit):
        entry = pos[0].get("body")
        return entry.value if entry is not None else pos[0]
    return pos[0] if pos else None


class AppModel:
    """Parsed app.  Immutable: edits produce a new model."""

    def __init__(self, text: str, name: str = "app"):
        self.name = name
        self.text = text
        tokens, module = parse_tokens(text)
        self.tokens: tuple[Token, ...] = tuple(tokens)
        self.module: Module = module

    @classmethod
    def parse(cls, text: str, name: str = "app") -> "AppModel":
        return cls(text, name)

    def emit(self) -> str:
        return "".join(t.text for t in self.tokens)

    def source(self, node: Node) -> str:
        return self.text[node.start:node.end]

    def __repr__(self) -> str:
        return f"AppModel({self.name!r}, {len(self.text)} chars)"

    # -- text geometry -------------------------------------------------------

    @cached_property
    def _line_starts(self) -> list[int]:
        starts = [0]
        for i, c in enumerate(self.text):
            if c == "\n":
                starts.append(i + 1)
        return starts

    def line_of(self, offset: int) -> int:
        """1-based line number of *offset*."""
        return bisect.bisect_right(self._line_starts, offset)

    def line_start(self, offset: int) -> int:
        return self._line_starts[self.line_of(offset) - 1]

    def line_end(self, offset: int) -> int:
        nl = self.text.find("\n", offset)
        return len(self.text) if nl < 0 else nl

    def indent_at(self, offset: int) -> str:
        ls = self.line_start(offset)
        i = ls
        while i < len(self.text) and self.text[i] in " \t":
            i += 1
        return self.text[ls:i]

    def indent_unit(self) -> str:
        """Smallest positive indentation step of code lines (default two spaces)."""
        comments = [(t.start, t.end) for t in self.tokens if t.kind == "comment"]
        widths = set()
        for ls in self._line_starts:
            i = ls
            while i < len(self.text) and self.text[i] in " \t":
                i += 1
            if i == ls or i >= len(self.text) or self.text[i] in "\r\n":
                continue
            if any(a <= i < b for a, b in comments):
                continue
            if self.text[ls] == "\t":
                return "\t"
            widths.add(i - ls)
        return " " * min(widths) if widths else "  "

    def newline(self) -> str:
        return "\r\n" if "\r\n" in self.text else "\n"

    # -- edits ---------------------------------------------------------------

    def apply_edits(self, edits: Iterable[Edit]) -> "AppModel":
        return AppModel(apply_text_edits(self.text, edits), self.name)

    # -- structure -----------------------------------------------------------

    @cached_property
    def functions(self) -> tuple[FunctionDef, ...]:
        return tuple(it for it in self.module.items if isinstance(it, FunctionDef))

    def definitions(self, name: str) -> list[FunctionDef]:
        return [f for f in self.functions if f.name == name]

    def function_named(self, name: str, arity: Optional[int] = None) -> Optional[FunctionDef]:
        for f in self.functions:
            if f.name == name and (arity is None or f.accepts(arity)):
                return f
        return None

    def lifecycle_fn(self, name: str) -> Optional[FunctionDef]:
        return self.function_named(name)

    def _top_call(self, name: str) -> Optional[Call]:
        for it in self.module.items:
            expr = getattr(it, "expr", None)
            if isinstance(expr, Call) and expr.callee == name and expr.is_bare:
                return expr
        return None

    @property
    def definition(self) -> Optional[Call]:
        return self._top_call("definition")

    @property
    def preferences(self) -> Optional[Call]:
        return self._top_call("preferences")

    def sections(self) -> list[Call]:
        prefs = self.preferences
        if prefs is None:
            return []
        return [n for n in prefs.walk() if isinstance(n, Call) and n.callee == "section" and n.is_bare]

    def inputs(self) -> list[SensitiveInput]:
        prefs = self.preferences
        if prefs is None:
            return []
        found = []
        for node in prefs.walk():
            if not (isinstance(node, Call) and node.is_bare and node.callee == "input"):
                continue
            pos = node.positional
            name_expr = node.named("name") or (pos[0] if pos else None)
            cap_expr = node.named("type") or (pos[1] if len(pos) > 1 else None)
            if not isinstance(name_expr, StringLit) or name_expr.interpolated or not name_expr.value:
                continue
            cap = cap_expr.value if isinstance(cap_expr, StringLit) else ""
            found.append(SensitiveInput(name_expr.value, cap, Span(node.start, node.end)))
        return found

    def input_names(self) -> frozenset[str]:
        return frozenset(i.name for i in self.inputs())

    # -- contextual traversal ------------------------------------------------

    def _walk_ctx(self) -> Iterator[tuple[Node, Optional[str], bool]]:
        """Pre-order walk yielding (node, enclosing function, nested flag)."""
        stack: list[tuple[Node, Optional[str], bool]] = [(self.module, None, False)]
        while stack:
            node, fn, nested = stack.pop()
            yield node, fn, nested
            if isinstance(node, FunctionDef):
                fn = node.name
            inner = nested or isinstance(node, (Closure, Loop, Switch))
            stack.extend((c, fn, inner) for c in reversed(list(node.children())))

    def sinks(self, kind: Optional[SinkKind] = None) -> list[SinkSite]:
        out = []
        for node, fn, _ in self._walk_ctx():
            if isinstance(node, Call) and node.is_bare and node.callee in SINK_FUNCTIONS:
                k = SINK_FUNCTIONS[node.callee]
                if kind is None or k is SinkKind.parse(kind):
                    out.append(SinkSite(k, node, Span(node.start, node.end), fn, sink_payload(k, node)))
        return out

    def branches(self) -> list[BranchSite]:
        out = []
        for node, fn, nested in self._walk_ctx():
            if isinstance(node, If):
                out.append(BranchSite(node, Span(node.start, node.end), node.then, node.orelse, fn, nested))
        return out

    def clonable_calls(self) -> list[CallSite]:
        out = []
        for node, fn, _ in self._walk_ctx():
            if not (isinstance(node, VarDecl) and isinstance(node.value, Call)):
                continue
            call = node.value
            if not call.is_bare or call.closure is not None or call.callee in LIFECYCLE:
                continue
            defs = self.definitions(call.callee)
            if len(defs) != 1 or not defs[0].accepts(len(call.args)):
                continue
            if any(a.name is not None for a in call.args):
                continue
            out.append(CallSite(node, call, defs[0], fn))
        return out


def apply_text_edits(text: str, edits: Iterable[Edit]) -> str:
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    pieces = []
    pos = 0
    for e in ordered:
        if e.start < pos or e.end < e.start or e.end > len(text):
            raise ValueError(f"overlapping or out-of-range edit {e}")
        pieces.append(text[pos:e.start])
        pieces.append(e.replacement)
        pos = e.end
    pieces.append(text[pos:])
    return "".join(pieces)


def parse(text: str, name: str = "app") -> AppModel:
    return AppModel(text, name)


def emit(model: AppModel) -> str:
    return model.emit()


def is_attribute_of(expr: Expr, obj: str) -> bool:
    return isinstance(expr, Attribute) and isinstance(expr.obj, Name) and expr.obj.name == obj
