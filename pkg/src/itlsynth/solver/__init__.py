"""Finite synthesis solver, response trees and bounded satisfiability."""

from __future__ import annotations

from .bounded import BoundedResult, bounded_sat, set_partitions
from .search import LOSE, UNKNOWN, WIN, GameSolver, Limits, UnsupportedFragment, prepare_table
from .synthesis import (
    REALIZABLE,
    RESOURCE_EXCEEDED,
    UNREALIZABLE,
    SynthesisVerdict,
    decide_finite_synthesis,
    resolve_items,
)
from .tree import Edge, ResponseTree, TreeStrategy, extract_strategy, tree_runs
from .wqo import MultisetCollection, dominated, is_minimal_prefix, multiset_collection, wqo_leq

__all__ = [
    "BoundedResult",
    "Edge",
    "GameSolver",
    "LOSE",
    "Limits",
    "MultisetCollection",
    "REALIZABLE",
    "RESOURCE_EXCEEDED",
    "ResponseTree",
    "SynthesisVerdict",
    "TreeStrategy",
    "UNKNOWN",
    "UNREALIZABLE",
    "UnsupportedFragment",
    "WIN",
    "bounded_sat",
    "decide_finite_synthesis",
    "dominated",
    "extract_strategy",
    "is_minimal_prefix",
    "multiset_collection",
    "prepare_table",
    "resolve_items",
    "set_partitions",
    "tree_runs",
    "wqo_leq",
]
