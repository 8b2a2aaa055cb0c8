"""Analyzer sensitivity settings."""

from __future__ import annotations

from dataclasses import dataclass, replace

FLOW_MODES = ("insensitive", "sensitive")
PATH_MODES = ("insensitive", "sensitive")
CONTEXT_MODES = ("call-site", "name-summary")


@dataclass(frozen=True)
class AnalyzerConfig:
    flow: str = "sensitive"
    path: str = "insensitive"
    context: str = "call-site"
    inline_depth: int = 1
    path_budget: int = 4096
    state_sources: bool = False

    def __post_init__(self):
        if self.flow not in FLOW_MODES:
            raise ValueError(f"flow must be one of {FLOW_MODES}, got {self.flow!r}")
        if self.path not in PATH_MODES:
            raise ValueError(f"path must be one of {PATH_MODES}, got {self.path!r}")
        if self.context not in CONTEXT_MODES:
            raise ValueError(f"context must be one of {CONTEXT_MODES}, got {self.context!r}")
        if self.path == "sensitive" and self.flow != "sensitive":
            raise ValueError("a path-sensitive analysis must also be flow-sensitive")
        if self.inline_depth < 0:
            raise ValueError("inline_depth must be >= 0")
        if self.path_budget < 1:
            raise ValueError("path_budget must be >= 1")

    @property
    def reports_paths(self) -> bool:
        return self.path == "sensitive"

    @property
    def label(self) -> str:
        parts = [f"flow-{self.flow}", f"path-{self.path}", self.context]
        if self.inline_depth != 1:
            parts.append(f"depth-{self.inline_depth}")
        if self.state_sources:
            parts.append("state")
        return ",".join(parts)

    @classmethod
    def from_spec(cls, spec: str) -> "AnalyzerConfig":
        """Build a config from a comma list such as ``flow-sensitive,path-sensitive``.

        Recognised items: ``flow-{sensitive,insensitive}``,
        ``path-{sensitive,insensitive}``, ``call-site``, ``name-summary``,
        ``depth-N``, ``budget-N`` and ``state``.  A bare ``path-sensitive``
        implies ``flow-sensitive``.
        """
        cfg = cls()
        for item in filter(None, (s.strip() for s in spec.split(","))):
            if item.startswith("flow-"):
                cfg = replace(cfg, flow=item[5:], path="insensitive" if item == "flow-insensitive" else cfg.path)
            elif item.startswith("path-"):
                cfg = replace(cfg, path=item[5:])
            elif item in CONTEXT_MODES:
                cfg = replace(cfg, context=item)
            elif item.startswith("depth-"):
                cfg = replace(cfg, inline_depth=int(item[6:]))
            elif item.startswith("budget-"):
                cfg = replace(cfg, path_budget=int(item[7:]))
            elif item == "state":
                cfg = replace(cfg, state_sources=True)
            else:
                raise ValueError(f"unknown analyzer setting {item!r}")
        return cfg
