"""Path-sensitivity operators.

``Aps`` injects a fresh if/else block (variants 1_1..2_3).  ``AMps``,
``APps`` and ``AHps`` reuse an existing branch of the app (variants 1, 1_1,
2, 3); their base is the unmodified app.
"""

from __future__ import annotations

from typing import Optional

from ..app_model.model import AppModel, BranchSite, Edit, SinkKind
from ..app_model.nodes import Block, If, Return
from .common import (
    DEFAULT_CONDITION, Injection, MutantArtifact, PathLabel, PathTruth, apply, assign_lines,
    body_indent, ends_line, fresh_name, indent_lines, insert_at_function_end, interp, pick_input,
    sink_line_offset, sink_lines, starts_line,
)

APS_VARIANTS = {
    # variant: (sink, init tainted, then tainted, else tainted)
    "1_1": (SinkKind.SMS, False, True, False),
    "1_2": (SinkKind.SMS, False, False, True),
    "1_3": (SinkKind.SMS, True, False, False),
    "2_1": (SinkKind.HTTP, False, True, False),
    "2_2": (SinkKind.HTTP, False, False, True),
    "2_3": (SinkKind.HTTP, True, False, False),
}
BRANCH_OPS = {"AMps": SinkKind.SMS, "APps": SinkKind.PUSH, "AHps": SinkKind.HTTP}
BRANCH_VARIANTS = {
    # variant: (needs else, init tainted, then tainted, else tainted)
    "1": (True, False, True, False),
    "1_1": (False, False, True, False),
    "2": (True, False, False, True),
    "3": (True, True, False, False),
}
APS_BENIGN = '"benign info"'
BRANCH_BENIGN = '"hello"'

# Path-effect groups: if/else with one tainted path, if-only with one tainted path, all-benign.
GROUPS = {
    1: {("Aps", v) for v in ("1_1", "1_2", "2_1", "2_2")} | {(op, v) for op in BRANCH_OPS for v in ("1", "2")},
    2: {(op, "1_1") for op in BRANCH_OPS},
    3: {("Aps", "1_3"), ("Aps", "2_3")} | {(op, "3") for op in BRANCH_OPS},
}


def path_group(operator: str, variant: str) -> Optional[int]:
    for g, members in GROUPS.items():
        if (operator, variant) in members:
            return g
    return None


def _line_in(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def apply_aps(model: AppModel, variant: str, condition: str = DEFAULT_CONDITION,
              input_index: int = 0) -> tuple[MutantArtifact, MutantArtifact] | None:
    kind, init_t, then_t, else_t = APS_VARIANTS[variant]
    src = pick_input(model, input_index)
    if src is None or not model.functions:
        return None
    host = model.functions[0]
    unit = model.indent_unit()
    var = fresh_name(model, "takeParams" if kind is SinkKind.HTTP else "message")
    phone = fresh_name(model, "phone")

    def value(tainted: bool) -> str:
        return interp(src.name) if tainted else APS_BENIGN

    head = [f"def {phone} = \"11111111111\""] if kind is SinkKind.SMS else []
    init = assign_lines(var, value(init_t), kind, unit, declare=True)
    then = assign_lines(var, value(then_t), kind, unit, declare=False)
    other = assign_lines(var, value(else_t), kind, unit, declare=False)
    tail = sink_lines(kind, var, phone, unit, declare_phone=False)

    mutant_lines = head + init + [f"if ({condition}) {{"] + [unit + ln for ln in then] + ["} else {"]
    mutant_lines += [unit + ln for ln in other] + ["}"] + tail
    base_lines = head + init + then + other + tail

    base_edit, _ = insert_at_function_end(model, host, base_lines)
    mut_edit, first = insert_at_function_end(model, host, mutant_lines)
    branch_line = first + len(head) + len(init)
    sink_line = first + len(mutant_lines) - len(tail) + sink_line_offset(kind, tail)
    truth = PathTruth(branch_line, sink_line, (PathLabel("then", then_t), PathLabel("else", else_t)))
    base_vuln = else_t  # flattened: the last assignment wins
    mut_vuln = then_t or else_t
    base = MutantArtifact(apply(model, Injection([base_edit])), "base", "vulnerable" if base_vuln else "benign",
                          "Aps", variant, model.name, kind.value, src.name, (base_edit,), 1)
    mutant = MutantArtifact(apply(model, Injection([mut_edit])), "mutant", "vulnerable" if mut_vuln else "benign",
                            "Aps", variant, model.name, kind.value, src.name, (mut_edit,), 1, truth)
    return base, mutant


# -- existing-branch families ----------------------------------------------------


def _has_return(block) -> bool:
    return any(isinstance(n, Return) for n in block.walk())


def _arm_ok(model: AppModel, arm: Block, head_end: int) -> bool:
    """The arm's first statement must sit on its own line after the header."""
    if not arm.stmts:
        return False
    first = arm.stmts[0]
    if arm.braced:
        return ends_line(model, arm.start + 1) and starts_line(model, first.start) and starts_line(model, arm.end - 1)
    return model.line_of(first.start) > model.line_of(head_end) and ends_line(model, head_end)


def qualifies(model: AppModel, site: BranchSite, need_else: bool) -> bool:
    node = site.node
    if site.nested or site.function is None or site.is_chain:
        return False
    if need_else and not site.has_else:
        return False
    if _is_else_if(model, node) or not starts_line(model, node.start) or not ends_line(model, node.end):
        return False
    if _has_return(node.then) or (site.has_else and _has_return(node.orelse)):
        return False
    cond_end = _cond_close(model, node)
    if cond_end is None or not _arm_ok(model, node.then, cond_end):
        return False
    if site.has_else:
        els = node.orelse
        if not (starts_line(model, node.else_start) or (node.then.braced and model.text[node.then.end - 1] == "}"
                                                        and model.line_of(node.then.end - 1) == model.line_of(node.else_start))):
            return False
        if not node.then.braced and not starts_line(model, node.else_start):
            return False
        if not _arm_ok(model, els, node.else_start + 4):
            return False
    return True


def _is_else_if(model: AppModel, node: If) -> bool:
    before = model.text[:node.start].rstrip()
    return before.endswith("else")


def _cond_close(model: AppModel, node: If) -> Optional[int]:
    """Offset just past the ``)`` closing the condition."""
    for tok in model.tokens:
        if tok.start >= node.cond.end and not tok.is_trivia:
            return tok.end if tok.text == ")" else None
    return None


def branch_sites(model: AppModel, need_else: bool) -> list[BranchSite]:
    return [b for b in model.branches() if qualifies(model, b, need_else)]


def _map_offset(edits: list[Edit], offset: int) -> int:
    """Position of source *offset* in the edited text (insertions at *offset* land before it)."""
    shift = 0
    for e in edits:
        if e.end <= offset and (e.start < offset or e.start == e.end):
            shift += len(e.replacement) - (e.end - e.start)
    return offset + shift


def apply_branch_ps(model: AppModel, family: SinkKind | str, variant: str,
                    input_index: int = 0, operator: str | None = None) -> tuple[MutantArtifact, MutantArtifact] | None:
    kind = SinkKind.parse(family)
    operator = operator or next(k for k, v in BRANCH_OPS.items() if v is kind)
    need_else, init_t, then_t, else_t = BRANCH_VARIANTS[variant]
    src = pick_input(model, input_index)
    if src is None:
        return None
    sites = branch_sites(model, need_else)
    if not sites:
        return None
    node = sites[0].node
    nl = model.newline()
    unit = model.indent_unit()
    text = model.text
    var = fresh_name(model, "takeParams" if kind is SinkKind.HTTP else "msg")
    phone = fresh_name(model, "phone")
    tainted = interp(src.name, braced=kind is SinkKind.HTTP)

    def value(t: bool) -> str:
        return tainted if t else BRANCH_BENIGN

    ind = model.indent_at(node.start)
    inj = Injection()
    inj.add(model.line_start(node.start), model.line_start(node.start),
            indent_lines(assign_lines(var, value(init_t), kind, unit, True), ind, nl) + nl)

    then = node.then
    then_code = assign_lines(var, value(then_t), kind, unit, False)
    if then.braced:
        arm_ind = body_indent(model, then, node.start)
        pos = model.line_end(then.start)
        inj.add(pos, pos, nl + indent_lines(then_code, arm_ind, nl))
    else:
        arm_ind = model.indent_at(then.stmts[0].start)
        pos = model.line_end(_cond_close(model, node))
        opener = "{" if text[pos - 1:pos] in (" ", "\t") else " {"
        inj.add(pos, pos, opener + nl + indent_lines(then_code, arm_ind, nl))
    hunks = 2 if then.braced else 1

    last_braced = then.braced
    if node.orelse is not None:
        els = node.orelse
        else_code = assign_lines(var, value(else_t), kind, unit, False)
        close_then = "" if then.braced else "} "
        if els.braced:
            arm_ind = body_indent(model, els, node.start)
            if close_then:
                inj.add(node.else_start, node.else_start, close_then)
            pos = model.line_end(els.start)
            inj.add(pos, pos, nl + indent_lines(else_code, arm_ind, nl))
        else:
            arm_ind = model.indent_at(els.stmts[0].start)
            end = model.line_end(node.else_start)
            inj.add(node.else_start, end, close_then + "else {" + nl + indent_lines(else_code, arm_ind, nl))
        hunks += 1
        last_braced = els.braced

    sink = sink_lines(kind, var, phone, unit)
    tail = "" if last_braced else nl + ind + "}"
    inj.add(node.end, node.end, tail + nl + indent_lines(sink, ind, nl))
    inj.hunks = hunks + 1

    out_text = apply(model, inj)
    edits = sorted(inj.edits, key=lambda e: (e.start, e.end))
    branch_line = _line_in(out_text, _map_offset(edits, node.start))
    end_mapped = _map_offset([e for e in edits if e.start < node.end or e.end < node.end], node.end)
    sink_line = _line_in(out_text, end_mapped) + tail.count(nl) + 1 + sink_line_offset(kind, sink)
    labels = [PathLabel("then", then_t), PathLabel("else", else_t if node.orelse is not None else init_t)]
    truth = PathTruth(branch_line, sink_line, tuple(labels))
    mutant_vuln = any(p.tainted for p in labels)
    base = MutantArtifact(model.text, "base", "benign", operator, variant, model.name, kind.value, src.name, (), 0)
    mutant = MutantArtifact(out_text, "mutant", "vulnerable" if mutant_vuln else "benign", operator, variant,
                            model.name, kind.value, src.name, tuple(edits), inj.hunks, truth)
    return base, mutant
