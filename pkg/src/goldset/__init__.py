"""Golden-dataset curation, benchmarking, and monitoring for moderation agents."""

from .model import (
    CODEBOOK_SIZE,
    ContentItem,
    PolicyVersion,
    GoldLabel,
    AgentDecision,
    validate_decision,
)
from .store import ContentPool, GdsStore, GdsVersion, build_version, new_items
from . import metrics, sampler, delta, monitor, simlab, errors

__all__ = [
    "CODEBOOK_SIZE",
    "ContentItem",
    "PolicyVersion",
    "GoldLabel",
    "AgentDecision",
    "validate_decision",
    "ContentPool",
    "GdsStore",
    "GdsVersion",
    "build_version",
    "new_items",
    "metrics",
    "sampler",
    "delta",
    "monitor",
    "simlab",
    "errors",
]
