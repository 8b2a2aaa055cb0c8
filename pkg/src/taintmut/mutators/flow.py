"""Flow-sensitivity operators: MMfs, MPfs, MHfs (Modify) and AMfs, APfs, AHfs (Add)."""

from __future__ import annotations

from ..app_model.model import AppModel, Edit, SensitiveInput, SinkKind, SinkSite
from ..app_model.nodes import Assign, ExprStmt, FunctionDef, MapLit, Name, Node, VarDecl
from .common import (
    BENIGN_FLOW, Injection, MutantArtifact, apply, assign_lines, insert_at_function_end, interp,
    fresh_name, pick_input, sink_lines, starts_line,
)

MODIFY_OPS = {"MMfs": SinkKind.SMS, "MPfs": SinkKind.PUSH, "MHfs": SinkKind.HTTP}
ADD_OPS = {"AMfs": SinkKind.SMS, "APfs": SinkKind.PUSH, "AHfs": SinkKind.HTTP}
FLOW_LABEL = "people in house "


def _mentions_input(model: AppModel, node: Node | None, names: frozenset[str]) -> bool:
    if node is None:
        return False
    for n in node.walk():
        ident = getattr(n, "name", None)
        if isinstance(n, Name) and (ident in names or ident.lstrip("$") in names):
            return True
        if getattr(n, "names", None) and any(x in names for x in n.names):
            return True
        if getattr(n, "attr", None) in names:
            return True
    return False


def _modify_targets(model: AppModel, kind: SinkKind) -> list[tuple[SinkSite, Edit]]:
    """Qualifying sinks and the edit each one needs (without the input name filled in)."""
    names = model.input_names()
    out = []
    for site in model.sinks(kind):
        fn = model.function_named(site.function) if site.function else None
        fn = next((f for f in model.functions if f.body.start <= site.span.start < f.body.end), fn)
        if fn is None:
            continue
        stmt = next((s for s in fn.body.stmts if isinstance(s, ExprStmt) and s.expr is site.call), None)
        if stmt is None or not starts_line(model, stmt.start):
            continue
        earlier = [s for s in fn.body.stmts if s.end <= stmt.start]
        if kind is SinkKind.HTTP:
            target = _http_body(model, site, earlier, names)
            if target is not None:
                out.append((site, target))
            continue
        payload = site.payload
        if not isinstance(payload, Name):
            continue
        var = payload.name
        writes = [s for s in earlier if _writes(s, var)]
        if not writes or not isinstance(writes[0], VarDecl):
            continue
        last = writes[-1]
        if _mentions_input(model, last.value, names) or last.value is None:
            continue
        if _nested_write(fn, var, stmt.start):
            continue
        out.append((site, Edit(model.line_start(stmt.start), model.line_start(stmt.start), "")))
    return out


def _writes(stmt: Node, var: str) -> bool:
    if isinstance(stmt, VarDecl):
        return stmt.name == var
    if isinstance(stmt, Assign):
        return isinstance(stmt.target, Name) and stmt.target.name == var
    return False


def _nested_write(fn: FunctionDef, var: str, before: int) -> bool:
    """True when *var* is written somewhere other than a top-level statement before *before*."""
    top = set(map(id, fn.body.stmts))
    for n in fn.body.walk():
        if n.start >= before:
            continue
        if (isinstance(n, (VarDecl, Assign))) and _writes(n, var) and id(n) not in top:
            return True
    return False


def _http_body(model: AppModel, site: SinkSite, earlier, names) -> Edit | None:
    call = site.call
    body = call.named("body")
    if body is None and call.positional:
        first = call.positional[0]
        mapping = None
        if isinstance(first, MapLit):
            mapping = first
        elif isinstance(first, Name):
            writes = [s for s in earlier if _writes(s, first.name)]
            if len(writes) == 1 and isinstance(writes[0], VarDecl) and isinstance(writes[0].value, MapLit):
                mapping = writes[0].value
        if mapping is not None and mapping.get("body") is not None:
            body = mapping.get("body").value
    if body is None or _mentions_input(model, body, names):
        return None
    return Edit(body.start, body.end, "")


def apply_modify(model: AppModel, kind: SinkKind | str, input_index: int = 0, operator: str | None = None) -> list[MutantArtifact]:
    """One vulnerable mutant per qualifying sink; empty when the operator is not possible."""
    kind = SinkKind.parse(kind)
    operator = operator or next(k for k, v in MODIFY_OPS.items() if v is kind)
    src = pick_input(model, input_index)
    if src is None:
        return []
    nl = model.newline()
    out = []
    for n, (site, edit) in enumerate(_modify_targets(model, kind), start=1):
        if kind is SinkKind.HTTP:
            new = Edit(edit.start, edit.end, interp(src.name))
        else:
            var = site.payload.name
            ind = model.indent_at(site.call.start)
            new = Edit(edit.start, edit.end, f"{ind}{var} = {interp(src.name)}{nl}")
        inj = Injection([new], 1)
        out.append(MutantArtifact(
            apply(model, inj), "mutant", "vulnerable", operator, f"sink{n}", model.name, kind.value,
            src.name, tuple(inj.edits), inj.hunks,
        ))
    return out


def _flow_lines(model: AppModel, kind: SinkKind, src: SensitiveInput, tainted_first: bool) -> list[str]:
    unit = model.indent_unit()
    var = fresh_name(model, "takeParams" if kind is SinkKind.HTTP else "messages")
    phone = fresh_name(model, "phone")
    tainted = f'"{FLOW_LABEL}${{{src.name}}}"'
    first, second = (tainted, BENIGN_FLOW) if tainted_first else (BENIGN_FLOW, tainted)
    lines = assign_lines(var, first, kind, unit, declare=True)
    lines += assign_lines(var, second, kind, unit, declare=False)
    return lines + sink_lines(kind, var, phone, unit)


def apply_add(model: AppModel, kind: SinkKind | str, input_index: int = 0,
              operator: str | None = None) -> tuple[MutantArtifact, MutantArtifact] | None:
    """Flow1 (benign, taint overwritten) and Flow2 (vulnerable) at the end of the first function."""
    kind = SinkKind.parse(kind)
    operator = operator or next(k for k, v in ADD_OPS.items() if v is kind)
    src = pick_input(model, input_index)
    if src is None or not model.functions:
        return None
    host = model.functions[0]
    pair = []
    for role, tainted_first, truth in (("flow1", True, "benign"), ("flow2", False, "vulnerable")):
        edit, _ = insert_at_function_end(model, host, _flow_lines(model, kind, src, tainted_first))
        inj = Injection([edit], 1)
        pair.append(MutantArtifact(
            apply(model, inj), role, truth, operator, "", model.name, kind.value, src.name,
            tuple(inj.edits), inj.hunks,
        ))
    return pair[0], pair[1]
