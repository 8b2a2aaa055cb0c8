"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable

from .app_model.model import AppModel

FLOW_OPERATORS = ("MMfs", "MPfs", "MHfs", "AMfs", "APfs", "AHfs")
PATH_OPERATORS = ("Aps", "AMps", "APps", "AHps")
CONTEXT_OPERATORS = ("AMcs", "APcs", "AHcs")
OPERATORS = FLOW_OPERATORS + PATH_OPERATORS + CONTEXT_OPERATORS
CATEGORIES = {"flow": FLOW_OPERATORS, "path": PATH_OPERATORS, "context": CONTEXT_OPERATORS}

APS_VARIANTS = ("1_1", "1_2", "1_3", "2_1", "2_2", "2_3")
BRANCH_VARIANTS = ("1", "1_1", "2", "3")


def check_app(app) -> AppModel:
    """Accept an :class:`AppModel`, Groovy source text or a path to a ``.groovy`` file."""
    if isinstance(app, AppModel):
        return app
    if isinstance(app, Path) or (isinstance(app, str) and app.endswith(".groovy") and "\n" not in app
                                 and os.path.isfile(app)):
        p = Path(app)
        return AppModel(p.read_text(encoding="utf-8"), p.stem)
    if isinstance(app, str):
        return AppModel(app)
    raise TypeError(f"expected AppModel, source text or path, got {type(app).__name__}")


def check_apps(apps) -> list[AppModel]:
    if isinstance(apps, (AppModel, str, Path)):
        apps = [apps]
    if hasattr(apps, "tolist"):
        apps = apps.tolist()
    return [check_app(a) for a in _flatten(apps)]


def _flatten(items: Iterable):
    for it in items:
        if isinstance(it, (list, tuple)) and len(it) == 1:
            yield it[0]
        else:
            yield it


def check_operator(op: str) -> str:
    for known in OPERATORS:
        if known.lower() == str(op).lower():
            return known
    raise ValueError(f"unknown operator {op!r}; expected one of {', '.join(OPERATORS)}")


def operator_category(op: str) -> str:
    op = check_operator(op)
    return next(cat for cat, ops in CATEGORIES.items() if op in ops)


def variants_for(op: str) -> tuple[str, ...]:
    op = check_operator(op)
    if op == "Aps":
        return APS_VARIANTS
    if op in PATH_OPERATORS:
        return BRANCH_VARIANTS
    return ("",)


def check_variant(op: str, variant: str) -> str:
    op = check_operator(op)
    variant = str(variant)
    allowed = variants_for(op)
    if op in FLOW_OPERATORS[:3] and (variant == "" or variant.startswith("sink")):
        return variant
    if variant.upper().startswith("V") and op in PATH_OPERATORS[1:]:
        variant = variant[1:]
    if variant not in allowed:
        raise ValueError(f"variant {variant!r} not valid for {op}; expected one of {allowed}")
    return variant
