"""Brute-force path enumerator used as the ground-truth checker.

Written separately from :mod:`.engine` on purpose: it uses immutable
environments and generators and shares nothing with the analyzers except the
syntax tree.  Both arms of every ``if`` are explored without looking at the
condition.  A user call is inlined by (name, arity); its paths are
enumerated and their results united, so callee branches do not multiply
caller paths.  Closure, loop, switch and catch bodies are enumerated for
sinks but never fork the enclosing path and leave no effects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from ..app_model.model import SINK_FUNCTIONS, AppModel, sink_payload
from ..app_model.nodes import (
    Assign, Attribute, BinOp, Block, Call, Closure, Elvis, Expr, ExprStmt, FunctionDef, If, Index,
    ListLit, Loop, MapLit, Name, New, OpaqueExpr, Paren, Return, StringLit, Switch, Ternary, Try,
    UnaryOp, VarDecl,
)
from ..errors import PathBudgetExceeded

# A taint value maps each source name to one witness chain (tuple of steps).
Taint = Mapping[str, tuple[str, ...]]
NONE: dict[str, tuple[str, ...]] = {}


@dataclass(frozen=True)
class OracleSink:
    kind: str
    line: int
    witness: tuple[tuple[str, ...], ...]  # one chain per tainting source, sorted

    @property
    def tainted(self) -> bool:
        return bool(self.witness)


@dataclass(frozen=True)
class OraclePath:
    function: str
    trace: tuple[tuple[int, str], ...]
    sinks: tuple[OracleSink, ...]

    @property
    def tainted(self) -> bool:
        return any(s.tainted for s in self.sinks)

    def sink_at(self, line: int) -> OracleSink | None:
        hits = [s for s in self.sinks if s.line == line]
        if not hits:
            return None
        return max(hits, key=lambda s: s.tainted)


@dataclass(frozen=True)
class PathTaintTruth:
    paths: tuple[OraclePath, ...]
    budget: int

    @property
    def tainted(self) -> bool:
        return any(p.tainted for p in self.paths)

    @property
    def verdict(self) -> str:
        return "tainted" if self.tainted else "clean"

    def function_paths(self, name: str) -> list[OraclePath]:
        return [p for p in self.paths if p.function == name]

    def project(self, branch_line: int, sink_line: int) -> dict[str, bool]:
        """Tainted flag per arm of the branch at *branch_line*, judged at the sink on *sink_line*."""
        out: dict[str, bool] = {}
        for p in self.paths:
            arm = dict(p.trace).get(branch_line)
            sink = p.sink_at(sink_line)
            if arm is None or sink is None:
                continue
            key = "then" if arm == "T" else "else"
            out[key] = out.get(key, False) or sink.tainted
        return out


@dataclass(frozen=True)
class _Path:
    env: tuple  # sorted (name, taint-items) pairs; kept hashable and immutable
    trace: tuple
    sinks: tuple
    ret: tuple = ()
    returned: bool = False

    def get(self, name):
        for k, v in self.env:
            if k == name:
                return dict(v)
        return None

    def bind(self, name, taint: Taint) -> "_Path":
        items = tuple(sorted(taint.items()))
        env = tuple((k, v) for k, v in self.env if k != name) + ((name, items),)
        return _Path(tuple(sorted(env)), self.trace, self.sinks, self.ret, self.returned)


def _union(*taints: Taint) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    for t in taints:
        for src, chain in t.items():
            if src not in out or len(chain) < len(out[src]):
                out[src] = chain
    return out


def _extend(t: Taint, step: str) -> dict[str, tuple[str, ...]]:
    return {k: v + (step,) for k, v in t.items()}


class _Oracle:
    def __init__(self, model: AppModel, budget: int, inline_depth: int, state_sources: bool):
        self.model = model
        self.budget = budget
        self.inline_depth = inline_depth
        self.state_sources = state_sources
        self.inputs = model.input_names()
        self.function = ""

    def line(self, node) -> int:
        return self.model.line_of(node.start)

    # Each statement maps a path to an iterator of successor paths.

    def block(self, stmts, path: _Path, depth: int) -> Iterator[_Path]:
        if not stmts:
            yield path
            return
        head, rest = stmts[0], stmts[1:]
        for p in self.stmt(head, path, depth):
            if p.returned:
                yield p
            else:
                yield from self.block(rest, p, depth)

    def stmt(self, s, path: _Path, depth: int) -> Iterator[_Path]:
        if isinstance(s, VarDecl):
            t, path = self.expr(s.value, path, depth) if s.value is not None else (NONE, path)
            yield path.bind(s.name, _extend(t, f"L{self.line(s)}:{s.name}"))
        elif isinstance(s, Assign):
            t, path = self.expr(s.value, path, depth)
            target = s.target
            step = f"L{self.line(s)}"
            if isinstance(target, Name):
                old = path.get(target.name) or NONE
                new = t if s.op == "=" else _union(old, t)
                yield path.bind(target.name, _extend(new, f"{step}:{target.name}"))
            else:
                _, path = self.expr(target, path, depth)
                root = target
                while isinstance(root, (Attribute, Index)):
                    root = root.obj
                if isinstance(root, Name) and path.get(root.name) is not None:
                    yield path.bind(root.name, _union(path.get(root.name), _extend(t, f"{step}:{root.name}")))
                else:
                    yield path
        elif isinstance(s, ExprStmt):
            yield self.expr(s.expr, path, depth)[1]
        elif isinstance(s, Return):
            t, path = self.expr(s.value, path, depth) if s.value is not None else (NONE, path)
            yield _Path(path.env, path.trace, path.sinks, tuple(sorted(t.items())), True)
        elif isinstance(s, If):
            _, path = self.expr(s.cond, path, depth)
            ln = self.line(s)
            then_path = _Path(path.env, path.trace + ((ln, "T"),), path.sinks)
            yield from self.block(s.then.stmts, then_path, depth)
            else_path = _Path(path.env, path.trace + ((ln, "F"),), path.sinks)
            if s.orelse is None:
                yield else_path
            elif isinstance(s.orelse, Block):
                yield from self.block(s.orelse.stmts, else_path, depth)
            else:
                yield from self.stmt(s.orelse, else_path, depth)
        elif isinstance(s, Try):
            catch_sinks = ()
            for c in s.catches:
                catch_sinks += self.detached(c.body, path, {}, depth)
            for p in self.block(s.body.stmts, path, depth):
                p = _Path(p.env, p.trace, _add_sinks(p.sinks, catch_sinks), p.ret, p.returned)
                if s.final is not None and not p.returned:
                    yield from self.block(s.final.stmts, p, depth)
                else:
                    yield p
        elif isinstance(s, Loop):
            if s.header is not None:
                _, path = self.expr(s.header, path, depth)
            yield _Path(path.env, path.trace, _add_sinks(path.sinks, self.detached(s.body, path, {}, depth)))
        elif isinstance(s, Switch):
            _, path = self.expr(s.subject, path, depth)
            found = ()
            for arm in s.arms:
                found += self.detached(arm, path, {}, depth)
            yield _Path(path.env, path.trace, _add_sinks(path.sinks, found))
        elif isinstance(s, Block):
            yield from self.block(s.stmts, path, depth)
        else:
            yield path  # opaque statements and nested definitions

    def detached(self, body: Block, path: _Path, bindings: dict, depth: int) -> tuple:
        """Sinks reachable in *body*, on any of its paths, starting from *path*."""
        start = path
        for k, v in bindings.items():
            start = start.bind(k, v)
        start = _Path(start.env, (), ())
        found = ()
        for p in self.block(body.stmts, start, depth):
            found = _add_sinks(found, p.sinks)
        return found

    # Expressions return (taint, path) because sink calls extend the path.

    def name(self, n: str, path: _Path) -> Taint:
        v = path.get(n)
        if v is not None:
            return v
        if n in self.inputs:
            return {n: (f"input:{n}",)}
        if n[:1] == "$" and n[1:] in self.inputs:
            return {n[1:]: (f"input:{n[1:]}",)}
        return NONE

    def expr(self, e: Expr | None, path: _Path, depth: int):
        if e is None:
            return NONE, path
        if isinstance(e, Name):
            return self.name(e.name, path), path
        if isinstance(e, Attribute):
            if isinstance(e.obj, Name) and path.get(e.obj.name) is None:
                if e.obj.name == "settings" and e.attr in self.inputs:
                    return {e.attr: (f"input:{e.attr}",)}, path
                if e.obj.name in ("state", "atomicState"):
                    return ({"state": ("state",)} if self.state_sources else NONE), path
            return self.expr(e.obj, path, depth)
        if isinstance(e, Call):
            return self.call(e, path, depth)
        if isinstance(e, Closure):
            found = self.detached(e.body, path, {p: NONE for p in e.params}, depth)
            return NONE, _Path(path.env, path.trace, _add_sinks(path.sinks, found), path.ret, path.returned)
        if isinstance(e, OpaqueExpr):
            return _union(*(self.name(n, path) for n in e.names)), path
        if isinstance(e, BinOp) and e.op in ("as", "instanceof"):
            return self.expr(e.left, path, depth)
        if isinstance(e, Ternary):
            _, path = self.expr(e.cond, path, depth)
            return self.many([e.then, e.orelse], path, depth)
        parts = {
            StringLit: lambda: list(e.parts),
            Index: lambda: [e.obj, e.index],
            MapLit: lambda: [x for en in e.entries for x in (en.key_expr, en.value) if x is not None],
            ListLit: lambda: list(e.items),
            BinOp: lambda: [e.left, e.right],
            UnaryOp: lambda: [e.operand],
            Paren: lambda: [e.inner],
            Elvis: lambda: [e.value, e.fallback],
            New: lambda: [a.value for a in e.args],
        }.get(type(e))
        if parts is None:
            return NONE, path
        return self.many(parts(), path, depth)

    def many(self, exprs, path: _Path, depth: int):
        acc: Taint = NONE
        for x in exprs:
            t, path = self.expr(x, path, depth)
            acc = _union(acc, t)
        return acc, path

    def call(self, c: Call, path: _Path, depth: int):
        recv = NONE
        if isinstance(c.func, Attribute):
            recv, path = self.expr(c.func.obj, path, depth)
        args = []
        for a in c.args:
            t, path = self.expr(a.value, path, depth)
            args.append(t)
        fname = c.callee if c.is_bare else None
        if fname in SINK_FUNCTIONS:
            kind = SINK_FUNCTIONS[fname]
            payload = sink_payload(kind, c)
            t, path = self.expr(payload, path, depth) if payload is not None else (NONE, path)
            ln = self.line(c)
            witness = tuple(sorted(chain + (f"L{ln}:{kind.value}",) for chain in t.values()))
            sinks = _add_sinks(path.sinks, (OracleSink(kind.value, ln, witness),))
            if c.closure is not None:
                sinks = _add_sinks(sinks, self.detached(c.closure.body, path, {p: NONE for p in c.closure.params}, depth))
            return NONE, _Path(path.env, path.trace, sinks, path.ret, path.returned)
        flow_in = _union(recv, *args)
        defs = [f for f in self.model.functions if f.name == fname] if fname else []
        if defs:
            result, path = self.inline(fname, args, path, depth)
        else:
            result = flow_in
        if c.closure is not None:
            found = self.detached(c.closure.body, path, {p: flow_in for p in c.closure.params}, depth)
            path = _Path(path.env, path.trace, _add_sinks(path.sinks, found), path.ret, path.returned)
        return result, path

    def inline(self, fname: str, args: list, path: _Path, depth: int):
        if depth >= self.inline_depth:
            return _union(*args), path
        callee = next((f for f in self.model.functions if f.name == fname and f.accepts(len(args))), None)
        if callee is None:
            return _union(*args), path
        start = _Path((), (), ())
        for i, p in enumerate(callee.params):
            start = start.bind(p.name, _extend(args[i], f"param:{fname}.{p.name}") if i < len(args) else NONE)
        ret: Taint = NONE
        sinks = path.sinks
        count = 0
        for p in self.block(callee.body.stmts, start, depth + 1):
            count += 1
            if count > self.budget:
                raise PathBudgetExceeded(fname, self.budget)
            ret = _union(ret, dict(p.ret))
            sinks = _add_sinks(sinks, p.sinks)
        return _extend(ret, f"ret:{fname}"), _Path(path.env, path.trace, sinks, path.ret, path.returned)

    def run(self, fn: FunctionDef) -> list[OraclePath]:
        start = _Path((), (), ())
        for p in fn.params:
            start = start.bind(p.name, NONE)
        out = []
        for p in self.block(fn.body.stmts, start, 0):
            out.append(OraclePath(fn.name, p.trace, p.sinks))
            if len(out) > self.budget:
                raise PathBudgetExceeded(fn.name, self.budget)
        return out


def _add_sinks(existing: tuple, new: tuple) -> tuple:
    out = list(existing)
    for s in new:
        if s not in out:
            out.append(s)
    return tuple(out)


def brute_force_oracle(model: AppModel, budget: int = 4096, inline_depth: int = 1,
                       state_sources: bool = False) -> PathTaintTruth:
    """Enumerate every branch combination of every function (each one an entry point)."""
    o = _Oracle(model, budget, inline_depth, state_sources)
    paths: list[OraclePath] = []
    for fn in model.functions:
        paths.extend(o.run(fn))
    return PathTaintTruth(tuple(paths), budget)
