"""Syntax tree node types.

All nodes are immutable and carry ``start``/``end`` character offsets into
the source they were parsed from.  A node's text is ``source[start:end]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional


@dataclass(frozen=True)
class Node:
    start: int
    end: int

    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, tuple):
                for item in value:
                    if isinstance(item, Node):
                        yield item
                    elif isinstance(item, tuple):
                        yield from (x for x in item if isinstance(x, Node))

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal, children in source order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children())))


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class Literal(Expr):
    text: str


@dataclass(frozen=True)
class StringLit(Expr):
    text: str
    parts: tuple[Expr, ...] = ()

    @property
    def interpolated(self) -> bool:
        return bool(self.parts)

    @property
    def value(self) -> str:
        """Text between the quotes, escapes left as written."""
        for q in ('"""', "'''", '"', "'", "$/", "/"):
            if self.text.startswith(q):
                close = "/$" if q == "$/" else q
                return self.text[len(q):len(self.text) - len(close)]
        return self.text


@dataclass(frozen=True)
class Name(Expr):
    name: str


@dataclass(frozen=True)
class Attribute(Expr):
    obj: Expr
    attr: str
    op: str = "."


@dataclass(frozen=True)
class Index(Expr):
    obj: Expr
    index: Expr


@dataclass(frozen=True)
class Arg(Node):
    name: Optional[str]
    value: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: Expr
    args: tuple[Arg, ...]
    closure: Optional["Closure"] = None
    parens: bool = True

    @property
    def callee(self) -> Optional[str]:
        """Bare function name for ``f(...)``, method name for ``x.f(...)``."""
        if isinstance(self.func, Name):
            return self.func.name
        if isinstance(self.func, Attribute):
            return self.func.attr
        return None

    @property
    def is_bare(self) -> bool:
        return isinstance(self.func, Name)

    @property
    def positional(self) -> tuple[Expr, ...]:
        return tuple(a.value for a in self.args if a.name is None)

    def named(self, key: str) -> Optional[Expr]:
        for a in self.args:
            if a.name == key:
                return a.value
        return None


@dataclass(frozen=True)
class MapEntry(Node):
    key: str
    key_expr: Optional[Expr]
    value: Expr


@dataclass(frozen=True)
class MapLit(Expr):
    entries: tuple[MapEntry, ...]

    def get(self, key: str) -> Optional[MapEntry]:
        for e in self.entries:
            if e.key == key:
                return e
        return None


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class Closure(Expr):
    params: tuple[str, ...]
    body: "Block"
    explicit_params: bool = False


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str
    operand: Expr
    postfix: bool = False


@dataclass(frozen=True)
class Ternary(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Elvis(Expr):
    value: Expr
    fallback: Expr


@dataclass(frozen=True)
class Paren(Expr):
    inner: Expr


@dataclass(frozen=True)
class New(Expr):
    type_name: str
    args: tuple[Arg, ...]


@dataclass(frozen=True)
class OpaqueExpr(Expr):
    """Expression text the parser could not structure.  ``names`` lists the
    identifiers it mentions so analyses can stay conservative."""

    text: str
    names: tuple[str, ...] = ()


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Stmt(Node):
    pass


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple[Stmt, ...]
    braced: bool = True

    @property
    def open(self) -> int:
        """Offset of ``{`` (braced) or of the single statement."""
        return self.start

    @property
    def close(self) -> int:
        """Offset of the closing ``}``; end of the statement if unbraced."""
        return self.end - 1 if self.braced else self.end


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(frozen=True)
class VarDecl(Stmt):
    name: str
    value: Optional[Expr]
    type_name: str = "def"


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr
    op: str
    value: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Stmt | Block] = None
    else_start: Optional[int] = None

    @property
    def has_else(self) -> bool:
        return self.orelse is not None

    @property
    def is_chain(self) -> bool:
        return isinstance(self.orelse, If)


@dataclass(frozen=True)
class Catch(Node):
    header: str
    body: Block


@dataclass(frozen=True)
class Try(Stmt):
    body: Block
    catches: tuple[Catch, ...] = ()
    final: Optional[Block] = None


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr]


@dataclass(frozen=True)
class Loop(Stmt):
    kind: str
    header: Optional[Expr]
    body: Block


@dataclass(frozen=True)
class Switch(Stmt):
    subject: Expr
    arms: tuple[Block, ...]


@dataclass(frozen=True)
class Opaque(Stmt):
    """Verbatim segment outside the supported subset."""

    text: str


@dataclass(frozen=True)
class Param(Node):
    name: str
    has_default: bool = False


@dataclass(frozen=True)
class FunctionDef(Stmt):
    name: str
    params: tuple[Param, ...]
    body: Block
    header_end: int = 0

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def required(self) -> int:
        return sum(1 for p in self.params if not p.has_default)

    def accepts(self, n: int) -> bool:
        return self.required <= n <= self.arity


@dataclass(frozen=True)
class Module(Node):
    items: tuple[Stmt, ...] = field(default=())
