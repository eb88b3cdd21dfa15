"""Multiset collections and their embedding order."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ..atoms import CompassStructure


@dataclass(frozen=True)
class MultisetCollection:
    """A multiset of nonempty multisets, stored canonically as sorted tuples."""

    inner: tuple[tuple[Hashable, ...], ...]

    @staticmethod
    def of(groups: Iterable[Iterable[Hashable]]) -> MultisetCollection:
        parts = []
        for g in groups:
            g = tuple(sorted(g, key=_sort_key))
            if not g:
                raise ValueError("inner multisets must be nonempty")
            parts.append(g)
        return MultisetCollection(tuple(sorted(parts, key=_sort_key)))

    def __len__(self) -> int:
        return len(self.inner)

    def with_extra(self, group: Iterable[Hashable]) -> MultisetCollection:
        return MultisetCollection.of(list(self.inner) + [tuple(group)])

    def with_grown(self, index: int, element: Hashable) -> MultisetCollection:
        groups = [list(g) for g in self.inner]
        groups[index].append(element)
        return MultisetCollection.of(groups)


def _sort_key(v):
    return repr(v) if not isinstance(v, (int, tuple)) else (0, v)


def _included(small: Sequence[Hashable], big: Sequence[Hashable]) -> bool:
    if len(small) > len(big):
        return False
    cb = Counter(big)
    for k, c in Counter(small).items():
        if cb[k] < c:
            return False
    return True


def wqo_leq(a: MultisetCollection, b: MultisetCollection) -> bool:
    """Whether ``a`` embeds injectively into ``b`` with inner inclusion."""
    if len(a) > len(b):
        return False
    if not a.inner:
        return True
    rows, cols = [], []
    for i, small in enumerate(a.inner):
        hit = False
        for j, big in enumerate(b.inner):
            if _included(small, big):
                rows.append(i)
                cols.append(j)
                hit = True
        if not hit:
            return False
    graph = csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(a), len(b))
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool((match >= 0).all())


def dominated(history: Sequence[MultisetCollection], newest: MultisetCollection) -> bool:
    """Whether some earlier collection embeds into the newest one."""
    return any(wqo_leq(old, newest) for old in history)


def is_minimal_prefix(collections: Sequence[MultisetCollection]) -> bool:
    """No pair y < y' with collections[y] <= collections[y']."""
    for j in range(1, len(collections)):
        if dominated(collections[:j], collections[j]):
            return False
    return True


def multiset_collection(G: CompassStructure, y: int) -> MultisetCollection:
    """Row ``y`` of a compass grouped by the equivalence classes of points."""
    if not 0 <= y < G.n:
        raise ValueError(f"row {y} outside the compass")
    classes: list[list[int]] = []
    for x in range(y + 1):
        for group in classes:
            if G.sim(group[0], x):
                group.append(x)
                break
        else:
            classes.append([x])
    return MultisetCollection.of([[G.cell(x, y).bits for x in group] for group in classes])
