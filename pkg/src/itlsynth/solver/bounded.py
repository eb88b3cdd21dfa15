"""Bounded satisfiability: search for a small finite model by backtracking.

Each candidate structure size is searched separately, smallest first.  The
valuation is filled in cell by cell; after every decision the formula is
evaluated in three-valued logic (each subformula is a pair of grids: surely
true and possibly true) and the branch is cut once the formula can no longer
hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..formula import (
    Diamond,
    FalseConst,
    Formula,
    Fragment,
    FragmentError,
    Not,
    Or,
    Prop,
    Rel,
    Sim,
    letters,
    normalize,
    subformulas,
    uses_sim,
)
from ..structures import IntervalStructure, intervals


@dataclass
class BoundedResult:
    model: IntervalStructure | None
    max_points: int
    nodes: int = 0

    @property
    def sat(self) -> bool:
        return self.model is not None


def set_partitions(n: int) -> Iterator[list[int]]:
    """Restricted growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, top: int) -> Iterator[list[int]]:
        if i == n:
            yield list(labels)
            return
        for v in range(top + 2):
            labels[i] = v
            yield from rec(i + 1, max(top, v))

    labels[0] = 0
    yield from rec(1, 0)


def _diamond(rel: Rel, c: np.ndarray, valid: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    c = c & valid
    out = np.zeros_like(c)
    if rel is Rel.A:
        row = c.any(axis=1)  # some [y, z]
        out[:, :] = row[np.newaxis, :]
    elif rel is Rel.ABAR:
        col = c.any(axis=0)  # some [z, x]
        out[:, :] = col[:, np.newaxis]
    elif rel is Rel.B:
        # some [x, z] with z < y
        acc = np.logical_or.accumulate(c, axis=1)
        out[:, 1:] = acc[:, :-1]
    elif rel is Rel.BBAR:
        acc = np.logical_or.accumulate(c[:, ::-1], axis=1)[:, ::-1]
        out[:, : n - 1] = acc[:, 1:]
    return out & valid


class _ThreeValued:
    def __init__(self, phi: Formula, n: int, sim: np.ndarray) -> None:
        self.order = list(subformulas(normalize(phi)))
        self.root = self.order[-1]
        self.n = n
        self.valid = np.triu(np.ones((n, n), dtype=bool))
        self.sim = sim & self.valid

    def eval(self, known: dict[str, np.ndarray], value: dict[str, np.ndarray]):
        """Return (surely, possibly) grids for the formula."""
        lo: dict[Formula, np.ndarray] = {}
        hi: dict[Formula, np.ndarray] = {}
        v = self.valid
        for g in self.order:
            if isinstance(g, Prop):
                val = value.get(g.name)
                if val is None:
                    lo[g] = np.zeros_like(v)
                    hi[g] = np.zeros_like(v)
                else:
                    k = known[g.name]
                    lo[g] = val & k
                    hi[g] = (val | ~k) & v
            elif isinstance(g, Sim):
                lo[g] = hi[g] = self.sim
            elif isinstance(g, FalseConst):
                lo[g] = hi[g] = np.zeros_like(v)
            elif isinstance(g, Not):
                lo[g] = ~hi[g.child] & v
                hi[g] = ~lo[g.child] & v
            elif isinstance(g, Or):
                lo[g] = lo[g.left] | lo[g.right]
                hi[g] = hi[g.left] | hi[g.right]
            elif isinstance(g, Diamond):
                lo[g] = _diamond(g.rel, lo[g.child], v)
                hi[g] = _diamond(g.rel, hi[g.child], v)
            else:
                raise TypeError(f"unexpected node {g!r}")
        return lo[self.root], hi[self.root]


def bounded_sat(
    phi: Formula,
    max_points: int,
    frag: Fragment | None = None,
    at_origin: bool = True,
    max_nodes: int | None = None,
) -> BoundedResult:
    """Smallest model with at most ``max_points`` points, if any.

    With ``at_origin`` the formula must hold on [0, 0]; otherwise on some
    interval.  The search is deterministic: sizes ascend, partitions come in
    lexicographic order and each cell tries "false" before "true".
    """
    if frag is not None and not frag.conforms(phi):
        raise FragmentError("formula uses operators outside the fragment")
    names = sorted(letters(phi))
    with_sim = uses_sim(phi)
    nodes = 0
    for n in range(1, max_points + 1):
        cells = list(intervals(n))
        parts = set_partitions(n) if with_sim else iter([list(range(n))])
        for part in parts:
            arr = np.array(part)
            sim = arr[:, np.newaxis] == arr[np.newaxis, :]
            ev = _ThreeValued(phi, n, sim)
            known = {a: np.zeros((n, n), dtype=bool) for a in names}
            value = {a: np.zeros((n, n), dtype=bool) for a in names}
            slots = [(x, y, a) for (x, y) in cells for a in names]

            def verdict() -> int:
                lo, hi = ev.eval(known, value)
                if at_origin:
                    return 1 if lo[0, 0] else (0 if not hi[0, 0] else 2)
                return 1 if lo.any() else (0 if not hi.any() else 2)

            def search(k: int) -> bool:
                nonlocal nodes
                nodes += 1
                if max_nodes is not None and nodes > max_nodes:
                    raise RuntimeError("bounded search exceeded its node budget")
                v = verdict()
                if v == 0:
                    return False
                if v == 1 or k == len(slots):
                    return v == 1
                x, y, a = slots[k]
                known[a][x, y] = True
                for bit in (False, True):
                    value[a][x, y] = bit
                    if search(k + 1):
                        return True
                known[a][x, y] = False
                value[a][x, y] = False
                return False

            if search(0):
                valuation = {
                    (x, y): frozenset(a for a in names if known[a][x, y] and value[a][x, y])
                    for (x, y) in cells
                }
                valuation = {c: s for c, s in valuation.items() if s}
                classes = _classes(part)
                return BoundedResult(IntervalStructure.build(n, valuation, classes), max_points, nodes)
    return BoundedResult(None, max_points, nodes)


def _classes(part: list[int]) -> list[list[int]]:
    groups: dict[int, list[int]] = {}
    for p, b in enumerate(part):
        groups.setdefault(b, []).append(p)
    return list(groups.values())


__all__ = ["BoundedResult", "bounded_sat", "set_partitions"]
