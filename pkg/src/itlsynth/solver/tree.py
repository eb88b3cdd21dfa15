"""Response trees: finite encodings of winning Duplicator strategies.

A tree is stored as a DAG: nodes reached through the same search position
with the same label are shared.  Unfolding the DAG from the root gives the
tree; node ids follow a canonical depth-first order so the serialization does
not depend on how the strategy was found.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice
from typing import Iterator

from ..formula import ClosureTable
from ..game import (
    Move,
    Role,
    Run,
    StrategyError,
    empty_run,
    legal_moves,
    success_violations,
)
from ..structures import Interval


@dataclass(frozen=True)
class Edge:
    interval: Interval
    spoiler: frozenset[int]
    child: int


@dataclass
class ResponseTree:
    table: ClosureTable = field(repr=False)
    sigma_sp: frozenset[int]
    labels: list[frozenset[int] | None]  # index 0 is the root, labelled None
    edges: dict[int, list[Edge]]
    requests: str = "closure"

    def children(self, node: int) -> list[Edge]:
        return self.edges.get(node, [])

    def is_leaf(self, node: int) -> bool:
        return not self.edges.get(node)

    def __len__(self) -> int:
        return len(self.labels)

    def paths(self) -> Iterator[Run]:
        """Every root-to-leaf path of the unfolded tree, as a run."""
        start = empty_run(self.table, self.sigma_sp, self.requests)
        stack: list[tuple[int, Run]] = [(0, start)]
        while stack:
            node, run = stack.pop()
            if node != 0 and self.is_leaf(node):
                yield run
                continue
            for e in reversed(self.children(node)):
                label = self.labels[e.child] or frozenset()
                stack.append(
                    (
                        e.child,
                        run.extend(
                            Move(e.interval, e.spoiler, Role.SPOILER),
                            Move(e.interval, label, Role.DUPLICATOR),
                        ),
                    )
                )

    def verify(self, max_paths: int | None = None) -> list[str]:
        """Check success of every path and the covering condition.

        Returns a list of problems; with ``max_paths`` only that many paths
        are unfolded.
        """
        problems: list[str] = []
        subsets = _subsets(sorted(self.sigma_sp))
        start = empty_run(self.table, self.sigma_sp, self.requests)
        stack: list[tuple[int, Run]] = [(0, start)]
        done = 0
        while stack:
            if max_paths is not None and done >= max_paths:
                break
            node, run = stack.pop()
            if node != 0 and self.is_leaf(node):
                done += 1
                reasons = success_violations(run)
                if reasons:
                    problems.append(f"path ending at node {node}: {reasons[0]}")
                continue
            wanted = {(iv, s) for iv in legal_moves(run) for s in subsets}
            have = {(e.interval, e.spoiler) for e in self.children(node)}
            if wanted != have:
                problems.append(f"node {node} does not cover every Spoiler move")
            for e in reversed(self.children(node)):
                label = self.labels[e.child] or frozenset()
                if label & self.sigma_sp:
                    problems.append(f"node {e.child} labels Spoiler items")
                stack.append(
                    (
                        e.child,
                        run.extend(
                            Move(e.interval, e.spoiler, Role.SPOILER),
                            Move(e.interval, label, Role.DUPLICATOR),
                        ),
                    )
                )
        return problems

    def serialize(self) -> str:
        names = self.table.names
        lines = []
        for i, label in enumerate(self.labels):
            text = "root" if label is None else ", ".join(names(label))
            lines.append(f"node {i} : {text}".rstrip())
        for parent in sorted(self.edges):
            for e in self.edges[parent]:
                sp = ", ".join(names(e.spoiler))
                lines.append(
                    f"edge {parent} {e.child} {e.interval.x} {e.interval.y} : {sp}".rstrip()
                )
        return "\n".join(lines) + "\n"


def _subsets(items: list[int]) -> list[frozenset[int]]:
    return [
        frozenset(i for j, i in enumerate(items) if (mask >> j) & 1)
        for mask in range(1 << len(items))
    ]


@dataclass
class TreeStrategy:
    """Duplicator strategy that follows a response tree."""

    tree: ResponseTree

    def __call__(self, prefix: Run) -> frozenset[int]:
        if len(prefix) % 2 != 1:
            raise StrategyError("a strategy answers right after a Spoiler move")
        node = 0
        moves = prefix.moves
        for k in range(0, len(moves), 2):
            s_move = moves[k]
            edge = next(
                (
                    e
                    for e in self.tree.children(node)
                    if e.interval == s_move.interval and e.spoiler == s_move.sigma
                ),
                None,
            )
            if edge is None:
                raise StrategyError(f"Spoiler move at {s_move.interval} leaves the tree")
            label = self.tree.labels[edge.child] or frozenset()
            if k + 1 < len(moves):
                if moves[k + 1].sigma != label:
                    raise StrategyError("Duplicator moves in the prefix differ from the tree")
            else:
                return label
            node = edge.child
        raise StrategyError("empty prefix")


def extract_strategy(tree: ResponseTree, check_paths: int | None = 10_000) -> TreeStrategy:
    """A prefix-lookup strategy; rejects trees that fail verification."""
    problems = tree.verify(max_paths=check_paths)
    if problems:
        raise StrategyError("tree rejected: " + problems[0])
    return TreeStrategy(tree)


def tree_runs(tree: ResponseTree, limit: int | None = None) -> list[Run]:
    return list(islice(tree.paths(), limit))


__all__ = [
    "Edge",
    "ResponseTree",
    "TreeStrategy",
    "extract_strategy",
    "tree_runs",
]
