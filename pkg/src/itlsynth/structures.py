"""Finite interval structures and a table-driven model checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .formula import (
    ClosureTable,
    Diamond,
    FalseConst,
    Formula,
    Not,
    Or,
    Prop,
    Rel,
    Sim,
    normalize,
    subformulas,
)


@dataclass(frozen=True, order=True)
class Interval:
    x: int
    y: int

    def __post_init__(self) -> None:
        if self.x > self.y:
            raise ValueError(f"interval [{self.x},{self.y}] has x > y")

    def __str__(self) -> str:
        return f"[{self.x},{self.y}]"


def intervals(n: int) -> Iterator[tuple[int, int]]:
    """All (x, y) with 0 <= x <= y < n, ordered by y then x."""
    for y in range(n):
        for x in range(y + 1):
            yield x, y


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalStructure:
    """Points ``0..n-1``, letters on intervals, and a partition of points.

    ``cls[p]`` is the class representative of point ``p`` (the smallest
    member of its class).  The ``~`` letter is never stored; it is true on
    [x, y] exactly when ``cls[x] == cls[y]``.
    """

    n: int
    valuation: Mapping[tuple[int, int], frozenset[str]]
    cls: tuple[int, ...]

    @staticmethod
    def build(
        n: int,
        valuation: Mapping[tuple[int, int], Iterable[str]] | None = None,
        classes: Iterable[Iterable[int]] = (),
    ) -> IntervalStructure:
        if n < 1:
            raise StructureError("a structure needs at least one point")
        val: dict[tuple[int, int], frozenset[str]] = {}
        for (x, y), labels in (valuation or {}).items():
            if not (0 <= x <= y < n):
                raise StructureError(f"interval [{x},{y}] invalid for {n} points")
            labels = frozenset(labels)
            if "~" in labels:
                raise StructureError("~ is derived from the partition, not labelled")
            if labels:
                val[(x, y)] = val.get((x, y), frozenset()) | labels
        parent = list(range(n))

        def find(p: int) -> int:
            while parent[p] != p:
                parent[p] = parent[parent[p]]
                p = parent[p]
            return p

        for group in classes:
            group = list(group)
            for p in group:
                if not 0 <= p < n:
                    raise StructureError(f"point {p} out of range for {n} points")
            for p in group[1:]:
                a, b = find(group[0]), find(p)
                if a != b:
                    parent[max(a, b)] = min(a, b)
        cls = tuple(find(p) for p in range(n))
        return IntervalStructure(n, dict(sorted(val.items())), cls)

    def label(self, x: int, y: int) -> frozenset[str]:
        return self.valuation.get((x, y), frozenset())

    def sim(self, x: int, y: int) -> bool:
        return self.cls[x] == self.cls[y]

    def classes(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for p, c in enumerate(self.cls):
            groups.setdefault(c, []).append(p)
        return [groups[c] for c in sorted(groups)]

    def letters(self) -> frozenset[str]:
        out: set[str] = set()
        for labels in self.valuation.values():
            out |= labels
        return frozenset(out)

    def key(self) -> tuple:
        """Hashable identity of the structure."""
        return (self.n, tuple(sorted((k, tuple(sorted(v))) for k, v in self.valuation.items())), self.cls)


def parse_structure(text: str) -> IntervalStructure:
    """Parse the line-oriented structure format."""
    n: int | None = None
    labels: dict[tuple[int, int], set[str]] = {}
    classes: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        try:
            if head == "points":
                if n is not None:
                    raise StructureError("duplicate points line")
                n = int(rest)
                if n < 1:
                    raise StructureError("points must be positive")
            elif n is None:
                raise StructureError("the first line must be 'points N'")
            elif head == "class":
                pts = [int(tok) for tok in rest.split()]
                for p in pts:
                    if not 0 <= p < n:
                        raise StructureError(f"point {p} out of range")
                classes.append(pts)
            elif head == "label":
                coords, sep, names = rest.partition(":")
                if not sep:
                    raise StructureError("label line needs ':'")
                xs = coords.split()
                if len(xs) != 2:
                    raise StructureError("label line needs exactly two points")
                x, y = int(xs[0]), int(xs[1])
                if not (0 <= x < n and 0 <= y < n):
                    raise StructureError(f"point index out of range in [{x},{y}]")
                if x > y:
                    raise StructureError(f"interval [{x},{y}] has x > y")
                ids = names.split()
                for name in ids:
                    if name == "~":
                        raise StructureError("~ is given by class lines, not labels")
                labels.setdefault((x, y), set()).update(ids)
            else:
                raise StructureError(f"unknown directive {head!r}")
        except StructureError as exc:
            raise StructureError(f"line {lineno}: {exc}") from None
        except ValueError:
            raise StructureError(f"line {lineno}: malformed line {raw!r}") from None
    if n is None:
        raise StructureError("missing 'points N' line")
    return IntervalStructure.build(n, labels, classes)


def dump_structure(M: IntervalStructure) -> str:
    lines = [f"points {M.n}"]
    for group in M.classes():
        if len(group) > 1:
            lines.append("class " + " ".join(map(str, group)))
    for (x, y), labels in sorted(M.valuation.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if labels:
            lines.append(f"label {x} {y} : " + " ".join(sorted(labels)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Model checking

Grid = list  # grid[x][y] -> bool, defined for x <= y


class ModelChecker:
    """Bottom-up truth tables over a fixed structure.

    Each distinct normalized subformula gets one n-by-n table, computed once
    from the tables of its children; every (subformula, interval) pair is
    therefore evaluated exactly once.
    """

    def __init__(self, M: IntervalStructure) -> None:
        self.M = M
        self.tables: dict[Formula, Grid] = {}
        self.evaluations = 0

    def table(self, f: Formula) -> Grid:
        f = normalize(f)
        if f not in self.tables:
            for g in subformulas(f):
                if g not in self.tables:
                    self.tables[g] = self._compute(g)
        return self.tables[f]

    def check(self, x: int, y: int, f: Formula) -> bool:
        return self.table(f)[x][y]

    def _compute(self, g: Formula) -> Grid:
        n = self.M.n
        self.evaluations += n * (n + 1) // 2
        out = [[False] * n for _ in range(n)]
        if isinstance(g, Prop):
            for (x, y), labels in self.M.valuation.items():
                if g.name in labels:
                    out[x][y] = True
        elif isinstance(g, Sim):
            for x, y in intervals(n):
                out[x][y] = self.M.sim(x, y)
        elif isinstance(g, FalseConst):
            pass
        elif isinstance(g, Not):
            c = self.tables[g.child]
            for x, y in intervals(n):
                out[x][y] = not c[x][y]
        elif isinstance(g, Or):
            a, b = self.tables[g.left], self.tables[g.right]
            for x, y in intervals(n):
                out[x][y] = a[x][y] or b[x][y]
        elif isinstance(g, Diamond):
            self._diamond(g.rel, self.tables[g.child], out)
        else:
            raise TypeError(f"unexpected node {g!r} after normalization")
        return out

    def _diamond(self, rel: Rel, c: Grid, out: Grid) -> None:
        n = self.M.n
        if rel is Rel.A:
            # [x,y] A [y,z]: depends only on y.
            for y in range(n):
                v = any(c[y][z] for z in range(y, n))
                for x in range(y + 1):
                    out[x][y] = v
        elif rel is Rel.ABAR:
            # [x,y] Abar [z,x]: depends only on x.
            for x in range(n):
                v = any(c[z][x] for z in range(x + 1))
                for y in range(x, n):
                    out[x][y] = v
        elif rel is Rel.B:
            for x in range(n):
                seen = False
                for y in range(x, n):
                    out[x][y] = seen
                    seen = seen or c[x][y]
        elif rel is Rel.BBAR:
            for x in range(n):
                seen = False
                for y in range(n - 1, x - 1, -1):
                    out[x][y] = seen
                    seen = seen or c[x][y]


def check(M: IntervalStructure, I: Interval | tuple[int, int], phi: Formula) -> bool:
    """Truth of ``phi`` on interval ``I`` of ``M``."""
    x, y = (I.x, I.y) if isinstance(I, Interval) else I
    if not (0 <= x <= y < M.n):
        raise ValueError(f"interval [{x},{y}] invalid for {M.n} points")
    return ModelChecker(M).check(x, y, phi)


def all_types(M: IntervalStructure, table: ClosureTable) -> dict[tuple[int, int], frozenset[int]]:
    """For every interval, the ids of extended-closure items true on it."""
    mc = ModelChecker(M)
    grids = [mc.table(item) for item in table.items]
    return {
        (x, y): frozenset(i for i, g in enumerate(grids) if g[x][y])
        for x, y in intervals(M.n)
    }


def type_bits(M: IntervalStructure, table: ClosureTable) -> dict[tuple[int, int], int]:
    """Like ``all_types`` but as bitsets over item ids."""
    mc = ModelChecker(M)
    grids = [mc.table(item) for item in table.items]
    out: dict[tuple[int, int], int] = {}
    for x, y in intervals(M.n):
        bits = 0
        for i, g in enumerate(grids):
            if g[x][y]:
                bits |= 1 << i
        out[(x, y)] = bits
    return out
