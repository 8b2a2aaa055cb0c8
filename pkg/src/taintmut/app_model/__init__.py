from .lexer import Token, tokenize
from .model import (
    AppModel, BranchSite, CallSite, Edit, SensitiveInput, SinkKind, SinkSite, Span,
    apply_text_edits, emit, parse,
)

__all__ = [
    "AppModel", "BranchSite", "CallSite", "Edit", "SensitiveInput", "SinkKind", "SinkSite", "Span",
    "Token", "apply_text_edits", "emit", "parse", "tokenize",
]
