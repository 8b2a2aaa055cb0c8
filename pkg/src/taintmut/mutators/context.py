"""Context-sensitivity operators: AMcs, APcs, AHcs.

The callee of the first clonable call gets a benign body (``return true``)
and a clone with an extra leading ``flag`` parameter that it returns at once,
keeping the original statements after that return.  The host lifecycle
function then calls both overloads; only the clone receives the input.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..app_model.model import AppModel, CallSite, SinkKind
from ..app_model.nodes import FunctionDef
from .common import (
    Injection, MutantArtifact, apply, assign_lines, body_indent, ends_line, fresh_name,
    insert_at_block_start, interp, pick_input, sink_lines,
)

CONTEXT_OPS = {"AMcs": SinkKind.SMS, "APcs": SinkKind.PUSH, "AHcs": SinkKind.HTTP}
HOSTS = {SinkKind.SMS: "installed", SinkKind.PUSH: "updated", SinkKind.HTTP: "installed"}


@dataclass(frozen=True)
class ContextPlan:
    target: CallSite
    clone_name: str
    clone_arity: int
    host: FunctionDef
    sink_kind: SinkKind
    injected_input: str
    flag: str


def plan_cs(model: AppModel, kind: SinkKind | str, input_index: int = 0) -> ContextPlan | None:
    kind = SinkKind.parse(kind)
    src = pick_input(model, input_index)
    host = model.lifecycle_fn(HOSTS[kind])
    if src is None or host is None:
        return None
    calls = [c for c in model.clonable_calls() if c.callee is not host]
    if not calls:
        return None
    callee = calls[0].callee
    flag = fresh_name(model, "flag")
    return ContextPlan(calls[0], callee.name, callee.arity + 1, host, kind, src.name, flag)


def _clone_edit(model: AppModel, plan: ContextPlan):
    """One insertion right after the callee's ``{``: stub body, then the clone header.

    The original statements end up in the clone, after ``return flag``.
    """
    fn = plan.target.callee
    nl = model.newline()
    text = model.text
    ind = body_indent(model, fn.body, fn.start)
    fn_ind = model.indent_at(fn.start)
    header = text[fn.start:fn.body.start].rstrip()
    lp = header.index("(", header.index(fn.name) + len(fn.name))
    sep = "," if fn.params else ""
    clone_header = header[:lp + 1] + plan.flag + sep + header[lp + 1:]
    code = f"{nl}{ind}return true{nl}{fn_ind}}}{nl}{nl}{fn_ind}{clone_header} {{{nl}{ind}return {plan.flag}"
    pos = fn.body.start + 1
    if not ends_line(model, pos):
        code += nl + ind
    return pos, code


def apply_cs(model: AppModel, kind: SinkKind | str, input_index: int = 0,
             operator: str | None = None) -> tuple[MutantArtifact, MutantArtifact] | None:
    kind = SinkKind.parse(kind)
    operator = operator or next(k for k, v in CONTEXT_OPS.items() if v is kind)
    plan = plan_cs(model, kind, input_index)
    if plan is None:
        return None
    unit = model.indent_unit()
    f = plan.clone_name
    n_args = plan.target.callee.arity
    call1 = fresh_name(model, "functionCall1")
    call2 = fresh_name(model, "functionCall2")
    phone = fresh_name(model, "phone")
    benign_args = ",".join(['"random"'] * n_args)
    tainted_args = ",".join([interp(plan.injected_input)] + ['"random"'] * n_args)
    pos, clone_code = _clone_edit(model, plan)

    pair = []
    for role, payload_var, truth in (("base", call1, "benign"), ("mutant", call2, "vulnerable")):
        lines = [f"def {call1} = {f}({benign_args})", f"def {call2} = {f}({tainted_args})"]
        if kind is SinkKind.HTTP:
            params = fresh_name(model, "takeParams")
            lines += assign_lines(params, interp(payload_var), kind, unit, True)
            lines += sink_lines(kind, params, phone, unit)
        else:
            lines += sink_lines(kind, payload_var, phone, unit)
        host_edit, _ = insert_at_block_start(model, plan.host.body, plan.host.start, lines)
        inj = Injection([host_edit], 2)
        inj.add(pos, pos, clone_code)
        pair.append(MutantArtifact(
            apply(model, inj), role, truth, operator, "", model.name, kind.value, plan.injected_input,
            tuple(sorted(inj.edits, key=lambda e: e.start)), inj.hunks,
        ))
    return pair[0], pair[1]
