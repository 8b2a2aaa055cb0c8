"""Mutation-based evaluation of static taint analyzers for smart-home apps."""

__version__ = "0.1.0"

from .analysis import AnalyzerConfig, TaintAnalyzer, TaintReport, analyze, brute_force_oracle  # noqa: E402
from .app_model import AppModel, SinkKind, emit, parse, tokenize  # noqa: E402
from .mutators import ContextMutator, FlowMutator, MutantArtifact, PathMutator, generate  # noqa: E402

__all__ = [
    "AnalyzerConfig", "AppModel", "ContextMutator", "FlowMutator", "MutantArtifact", "PathMutator",
    "SinkKind", "TaintAnalyzer", "TaintReport", "__version__", "analyze", "brute_force_oracle", "emit",
    "generate", "parse", "tokenize",
]
