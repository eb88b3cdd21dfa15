"""Finite synthesis decision: verdicts, root task splitting and tree assembly."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from ..formula import ClosureTable, Formula, Fragment, is_identifier, normalize, parse_formula
from ..structures import Interval
from .search import (
    LOSE,
    UNKNOWN,
    WIN,
    BudgetExceeded,
    Choice,
    GameSolver,
    Limits,
    Position,
    prepare_table,
)
from .tree import Edge, ResponseTree

REALIZABLE = "REALIZABLE"
UNREALIZABLE = "UNREALIZABLE"
RESOURCE_EXCEEDED = "RESOURCE_EXCEEDED"


@dataclass
class SynthesisVerdict:
    kind: str
    tree: ResponseTree | None = None
    stats: dict = field(default_factory=dict)
    bounded: bool = False

    @property
    def realizable(self) -> bool:
        return self.kind == REALIZABLE

    def serialize(self) -> str:
        """Deterministic text form: the verdict line, then the tree if any."""
        out = self.kind + "\n"
        if self.tree is not None:
            out += self.tree.serialize()
        return out


def resolve_items(table: ClosureTable, items: Iterable[int | str]) -> frozenset[int]:
    """Item ids from ids, letter names or formula text."""
    out: set[int] = set()
    for it in items:
        if isinstance(it, int):
            out.add(it)
            continue
        text = it.strip()
        f = normalize(parse_formula(text))
        if f not in table.index:
            kind = "letter" if is_identifier(text) else "item"
            raise ValueError(f"{kind} {text!r} does not occur in the formula")
        out.add(table.index[f])
    return frozenset(out)


@dataclass(frozen=True)
class _Options:
    limits: Limits
    prune: bool
    horizon_loses: bool
    requests: str
    deadline: float | None


def _solver(
    table: ClosureTable, sigma_sp: frozenset[int], opt: _Options, optimistic: bool = False
) -> GameSolver:
    return GameSolver(
        table,
        sigma_sp,
        limits=opt.limits,
        prune=opt.prune,
        optimistic=optimistic,
        requests=opt.requests,
        deadline=opt.deadline,
    )


def _run_task(args) -> tuple[int, dict, int, str]:
    """Evaluate one root reply in fresh solvers.

    First with the cut-off scored as a loss (a WIN there is final), then,
    unless the game is bounded, with the cut-off scored as a win (a LOSE
    there is final).  Returns (value, winning choices reachable from the
    reply, nodes, budget note).
    """
    phi, frag, sigma_sp, opt, child = args
    table = prepare_table(phi, frag)
    nodes = 0
    solver = _solver(table, sigma_sp, opt)
    try:
        value = solver.value_of(child)
        nodes += solver.nodes
        if value == WIN:
            return WIN, solver.reachable_choices(child), nodes, ""
        if opt.horizon_loses:
            return LOSE, {}, nodes, ""
        solver = _solver(table, sigma_sp, opt, optimistic=True)
        solver.nodes = nodes
        value = solver.value_of(child)
        nodes = solver.nodes
    except BudgetExceeded as exc:
        return UNKNOWN, {}, solver.nodes, str(exc)
    if value == LOSE:
        return LOSE, {}, nodes, ""
    return UNKNOWN, {}, nodes, "point limit"


def decide_finite_synthesis(
    phi: Formula,
    sigma_sp: Iterable[int | str] = (),
    limits: Limits = Limits(),
    frag: Fragment | None = None,
    prune: bool = True,
    horizon_loses: bool = False,
    requests: str = "closure",
    workers: int = 1,
) -> SynthesisVerdict:
    """Decide whether Duplicator can force a successful finite run.

    The root of the game is split into tasks, one per (Spoiler choice on
    [0,0], Duplicator reply); each task is solved with its own memo table
    and node budget, either in order or in a process pool, and the results
    are combined in canonical order.  The verdict and tree are therefore the
    same for any worker count.
    """
    table = prepare_table(phi, frag)
    sp_ids = resolve_items(table, sigma_sp)
    deadline = time.monotonic() + limits.timeout_s if limits.timeout_s is not None else None
    opt = _Options(limits, prune, horizon_loses, requests, deadline)
    solver = _solver(table, sp_ids, opt)
    root = solver.root()
    moves = solver.spoiler_moves(root)
    per_move = [solver.candidates(root, x, s) for x, s in moves]
    tasks = [
        (phi, frag, sp_ids, opt, child)
        for cands in per_move
        for (_label, child, _done) in cands
    ]

    results: list[tuple[int, dict, int, str] | None] = [None] * len(tasks)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for k, res in enumerate(pool.map(_run_task, tasks)):
                results[k] = res
    else:
        k = 0
        for cands in per_move:
            move_value = LOSE
            for _ in cands:
                res = _run_task(tasks[k])
                results[k] = res
                k += 1
                if res[0] == WIN:
                    move_value = WIN
                    break
                if res[0] == UNKNOWN:
                    move_value = UNKNOWN
            k = _skip_to_next_move(per_move, cands, k)
            if move_value == LOSE:
                break

    overall = WIN
    root_choices: list[tuple[int, int, Choice]] = []
    merged: dict = {}
    nodes = 0
    notes: set[str] = set()
    k = 0
    for (x, smask), cands in zip(moves, per_move):
        move_value = LOSE
        for label, child, _done in cands:
            res = results[k]
            k += 1
            if res is None:
                continue
            value, choices, n, note = res
            nodes += n
            if note:
                notes.add(note)
            if value == WIN and move_value != WIN:
                move_value = WIN
                root_choices.append((x, smask, Choice(label, child)))
                merged.update(choices)
            elif value == UNKNOWN and move_value == LOSE:
                move_value = UNKNOWN
        if move_value == LOSE:
            overall = LOSE
            break
        if move_value == UNKNOWN:
            overall = UNKNOWN
    stats = {"tasks": len(tasks), "nodes": nodes}
    if notes and overall != WIN:
        stats["budget"] = ", ".join(sorted(notes))
    if overall == LOSE:
        return SynthesisVerdict(UNREALIZABLE, None, stats, bounded=horizon_loses)
    if overall == UNKNOWN:
        return SynthesisVerdict(RESOURCE_EXCEEDED, None, stats)
    tree = build_tree(table, sp_ids, solver, root, root_choices, merged, requests)
    return SynthesisVerdict(REALIZABLE, tree, stats)


def _skip_to_next_move(per_move, cands, k: int) -> int:
    """Index of the first task of the move after ``cands``."""
    start = 0
    for c in per_move:
        if c is cands:
            return start + len(c)
        start += len(c)
    return k


def build_tree(
    table: ClosureTable,
    sigma_sp: frozenset[int],
    solver: GameSolver,
    root: Position,
    root_choices: list[tuple[int, int, Choice]],
    choices: dict,
    requests: str,
) -> ResponseTree:
    """Number the strategy's nodes in canonical depth-first order."""
    labels: list[frozenset[int] | None] = [None]
    edges: dict[int, list[Edge]] = {}
    ids: dict[tuple[frozenset[int], Position | None], int] = {}

    def outgoing(pos: Position) -> list[tuple[int, int, Choice]]:
        return [(x, s, choices[(pos, x, s)]) for x, s in solver.spoiler_moves(pos)]

    # Iterative DFS: (parent id, position, pending out-edges)
    stack = [(0, root, iter(root_choices))]
    while stack:
        parent, pos, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            continue
        x, smask, ch = nxt
        key = (ch.label, ch.child)
        iv = Interval(x, pos.y)
        new = key not in ids
        if new:
            ids[key] = len(labels)
            labels.append(ch.label)
        edges.setdefault(parent, []).append(Edge(iv, solver.spoiler_sigma(smask), ids[key]))
        if new and ch.child is not None:
            stack.append((ids[key], ch.child, iter(outgoing(ch.child))))
    return ResponseTree(table, sigma_sp, labels, edges, requests)


__all__ = [
    "REALIZABLE",
    "RESOURCE_EXCEEDED",
    "UNREALIZABLE",
    "SynthesisVerdict",
    "build_tree",
    "decide_finite_synthesis",
    "resolve_items",
]
