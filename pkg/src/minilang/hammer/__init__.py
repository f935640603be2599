"""Sledgehammer-style ATP: premise selection, backends, learning DB."""

from .db import LemmaDB, LemmaInfo
from .features import classify_usage, knn_features, weighted_jaccard
from .prove import (
    Failed,
    Hammer,
    HammerConfig,
    Proved,
    ProveRequest,
    ProveResult,
    select_premises,
)
from .resolution import ResolutionConfig
from .tableau import TableauConfig

__all__ = [
    "Failed", "Hammer", "HammerConfig", "LemmaDB", "LemmaInfo", "Proved",
    "ProveRequest", "ProveResult", "ResolutionConfig", "TableauConfig",
    "classify_usage", "knn_features", "select_premises", "weighted_jaccard",
]
