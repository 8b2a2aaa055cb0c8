"""Mutation operators and their estimator wrappers."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from sklearn.base import BaseEstimator, TransformerMixin

from ..app_model.model import AppModel, SinkKind
from ..validation import (
    CONTEXT_OPERATORS, FLOW_OPERATORS, check_apps, check_operator, check_variant, variants_for,
)
from .common import DEFAULT_CONDITION, MutantArtifact, PathLabel, PathTruth, diff_hunks
from .context import CONTEXT_OPS, apply_cs, plan_cs
from .flow import ADD_OPS, MODIFY_OPS, apply_add, apply_modify
from .path import BRANCH_OPS, GROUPS, apply_aps, apply_branch_ps, path_group

__all__ = [
    "ContextMutator", "FlowMutator", "MutantArtifact", "Outcome", "PathLabel", "PathMutator", "PathTruth",
    "apply_add", "apply_aps", "apply_branch_ps", "apply_cs", "apply_modify", "diff_hunks", "generate",
    "path_group", "plan_cs", "GROUPS",
]


@dataclass(frozen=True)
class Outcome:
    """Result of one (operator, variant) on one app: artifacts, or empty when not possible."""

    operator: str
    variant: str
    artifacts: tuple[MutantArtifact, ...]

    @property
    def possible(self) -> bool:
        return bool(self.artifacts)


def generate(model: AppModel, operator: str, variants=None, input_index: int = 0,
             condition: str = DEFAULT_CONDITION) -> list[Outcome]:
    """Run one operator over every selected variant of *model*."""
    op = check_operator(operator)
    if op in MODIFY_OPS:
        arts = apply_modify(model, MODIFY_OPS[op], input_index, op)
        if not arts:
            return [Outcome(op, "", ())]
        base = MutantArtifact(model.text, "base", "benign", op, "", model.name, MODIFY_OPS[op].value,
                              arts[0].injected_input, (), 0)
        chosen = [a for a in arts if variants is None or a.variant in variants]
        return [Outcome(op, a.variant, (_rebase(base, a.variant), a)) for a in chosen]
    if op in ADD_OPS:
        pair = apply_add(model, ADD_OPS[op], input_index, op)
        return [Outcome(op, "", tuple(pair or ()))]
    if op in CONTEXT_OPS:
        pair = apply_cs(model, CONTEXT_OPS[op], input_index, op)
        return [Outcome(op, "", tuple(pair or ()))]
    selected = variants_for(op) if variants is None else [check_variant(op, v) for v in variants]
    out = []
    for v in selected:
        if v not in variants_for(op):
            continue
        if op == "Aps":
            pair = apply_aps(model, v, condition, input_index)
        else:
            pair = apply_branch_ps(model, BRANCH_OPS[op], v, input_index, op)
        out.append(Outcome(op, v, tuple(pair or ())))
    return out


def _rebase(base: MutantArtifact, variant: str) -> MutantArtifact:
    return replace(base, variant=variant)


class _MutatorBase(TransformerMixin, BaseEstimator):
    _operators: tuple[str, ...] = ()

    def _check(self):
        op = check_operator(self.operator)
        if op not in self._operators:
            raise ValueError(f"{type(self).__name__} handles {self._operators}, not {op}")
        return op

    def fit(self, X=None, y=None):
        self._check()
        return self

    def _variants(self) -> Optional[list[str]]:
        return None

    def transform(self, X) -> list[list[MutantArtifact]]:
        """For each app, the flat list of generated artifacts (empty when not possible)."""
        op = self._check()
        out = []
        for model in check_apps(X):
            arts: list[MutantArtifact] = []
            for o in generate(model, op, self._variants(), self.input_index, getattr(self, "condition", DEFAULT_CONDITION)):
                arts.extend(o.artifacts)
            out.append(arts)
        return out


class FlowMutator(_MutatorBase):
    _operators = FLOW_OPERATORS

    def __init__(self, operator="AMfs", input_index=0):
        self.operator = operator
        self.input_index = input_index


class PathMutator(_MutatorBase):
    _operators = ("Aps", "AMps", "APps", "AHps")

    def __init__(self, operator="Aps", variant=None, condition=DEFAULT_CONDITION, input_index=0):
        self.operator = operator
        self.variant = variant
        self.condition = condition
        self.input_index = input_index

    def _variants(self):
        if self.variant is None:
            return None
        return [self.variant] if isinstance(self.variant, str) else list(self.variant)


class ContextMutator(_MutatorBase):
    _operators = CONTEXT_OPERATORS

    def __init__(self, operator="AMcs", input_index=0):
        self.operator = operator
        self.input_index = input_index


def sink_kind_of(operator: str) -> SinkKind:
    op = check_operator(operator)
    for table in (MODIFY_OPS, ADD_OPS, BRANCH_OPS, CONTEXT_OPS):
        if op in table:
            return table[op]
    return SinkKind.SMS  # Aps: variant decides (1_x Sms, 2_x Http)
