from .analyzer import TaintAnalyzer, analyze
from .config import AnalyzerConfig
from .oracle import OraclePath, PathTaintTruth, brute_force_oracle
from .report import Finding, PathListing, TaintReport, fingerprint

__all__ = [
    "AnalyzerConfig", "Finding", "OraclePath", "PathListing", "PathTaintTruth", "TaintAnalyzer",
    "TaintReport", "analyze", "brute_force_oracle", "fingerprint",
]
