"""Built-in taint analyzers with selectable sensitivity."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..app_model.model import AppModel
from ..errors import PathBudgetExceeded
from ..validation import check_app, check_apps
from .config import AnalyzerConfig
from .engine import Engine
from .report import Finding, PathListing, TaintReport

LABELS = np.array(["benign", "vulnerable"])


def analyze(model: AppModel, config: AnalyzerConfig | None = None, strict: bool = False) -> TaintReport:
    """Run one analysis.

    With a path-sensitive config, a function whose path count exceeds the
    budget is re-analysed path-insensitively and listed in ``degraded``;
    pass ``strict=True`` to get :class:`PathBudgetExceeded` instead.
    """
    config = config or AnalyzerConfig()
    engine = Engine(model, config)
    engine.solve_summaries()
    findings: set[Finding] = set()
    paths: list[PathListing] = []
    degraded: list[str] = []
    for fn in model.functions:
        try:
            states = engine.run_entry(fn)
            forked = engine.fork
        except PathBudgetExceeded:
            if strict:
                raise
            degraded.append(fn.name)
            states = engine.run_entry(fn, fork=False)
            forked = False
        for st in states:
            seen = set()
            for ev in st.events:
                for src in ev.sources:
                    findings.add(Finding(ev.kind, src, ev.line, ev.function))
                if forked and (ev.kind, ev.line) not in seen:
                    seen.add((ev.kind, ev.line))
                    paths.append(PathListing(fn.name, st.trace, ev.kind, ev.line, ev.tainted))
    return TaintReport(
        findings=tuple(sorted(findings)),
        paths=tuple(sorted(set(paths))) if config.reports_paths else (),
        degraded=tuple(degraded),
        reports_paths=config.reports_paths,
        config=config.label,
    )


class TaintAnalyzer(ClassifierMixin, BaseEstimator):
    """Estimator wrapper: ``predict`` labels each app ``benign`` or ``vulnerable``.

    Parameters mirror :class:`AnalyzerConfig`.  ``fit`` only validates the
    configuration; the analysis itself needs no training.
    """

    def __init__(self, flow="sensitive", path="insensitive", context="call-site",
                 inline_depth=1, path_budget=4096, state_sources=False):
        self.flow = flow
        self.path = path
        self.context = context
        self.inline_depth = inline_depth
        self.path_budget = path_budget
        self.state_sources = state_sources

    @classmethod
    def from_spec(cls, spec: str) -> "TaintAnalyzer":
        cfg = AnalyzerConfig.from_spec(spec)
        return cls(**{k: getattr(cfg, k) for k in cls._get_param_names()})

    @property
    def config_(self) -> AnalyzerConfig:
        return AnalyzerConfig(self.flow, self.path, self.context, self.inline_depth,
                              self.path_budget, self.state_sources)

    def fit(self, X=None, y=None):
        self.config_  # raises on an invalid combination
        self.classes_ = LABELS.copy()
        if X is not None:
            self.n_features_in_ = 1
        return self

    def analyze(self, app) -> TaintReport:
        return analyze(check_app(app), self.config_)

    def predict(self, X) -> np.ndarray:
        apps = check_apps(X)
        return np.array([LABELS[int(analyze(a, self.config_).tainted)] for a in apps], dtype=object)

    def with_config(self, **changes) -> "TaintAnalyzer":
        cfg = replace(self.config_, **changes)
        return type(self)(**{k: getattr(cfg, k) for k in self._get_param_names()})
