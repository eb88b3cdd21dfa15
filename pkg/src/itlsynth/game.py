"""Admissible runs of the Spoiler/Duplicator interval game.

A run lists moves in pairs: at even positions Spoiler picks an interval and
its own letters/requests, at odd positions Duplicator labels the same
interval with the rest.  Intervals are visited row by row: the right endpoint
grows by one only after every interval ending at the current one was played.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

from .atoms import lit_true, space
from .formula import ClosureTable, Diamond, Formula, Prop, Rel, normalize
from .structures import Interval, IntervalStructure, ModelChecker, intervals


class Role(enum.Enum):
    SPOILER = "S"
    DUPLICATOR = "D"


@dataclass(frozen=True)
class Move:
    interval: Interval
    sigma: frozenset[int]
    role: Role


@dataclass(frozen=True)
class Run:
    """A finite sequence of moves over a closure table.

    ``sigma_sp`` is the set of item ids Spoiler controls.  ``requests``
    selects which diamonds are declared during play (see
    :meth:`ClosureTable.game_alphabet`).
    """

    moves: tuple[Move, ...]
    table: ClosureTable = field(repr=False)
    sigma_sp: frozenset[int] = frozenset()
    requests: str = "closure"

    @property
    def alphabet(self) -> frozenset[int]:
        return self.table.game_alphabet(self.requests)

    @property
    def duplicator_alphabet(self) -> frozenset[int]:
        return self.alphabet - self.sigma_sp

    def extend(self, *moves: Move) -> Run:
        return Run(self.moves + tuple(moves), self.table, self.sigma_sp, self.requests)

    def __len__(self) -> int:
        return len(self.moves)

    def visited(self) -> list[Interval]:
        return [m.interval for m in self.moves[0::2]]

    def points(self) -> int:
        """Number of points touched so far (1 + largest right endpoint)."""
        return 1 + max((m.interval.y for m in self.moves), default=-1)


def empty_run(table: ClosureTable, sigma_sp: Iterable[int] = (), requests: str = "closure") -> Run:
    sigma_sp = frozenset(sigma_sp)
    alphabet = table.game_alphabet(requests)
    if not sigma_sp <= alphabet:
        raise ValueError("Spoiler letters must be declarable items")
    return Run((), table, sigma_sp, requests)


def legal_moves(prefix: Run) -> list[Interval]:
    """Intervals Spoiler may pick next, in ascending order of left endpoint."""
    if len(prefix) % 2:
        raise ValueError("Spoiler moves only after a complete pair")
    if not prefix.moves:
        return [Interval(0, 0)]
    visited = set(prefix.visited())
    y = max(i.y for i in visited)
    row = [Interval(x, y) for x in range(y + 1) if Interval(x, y) not in visited]
    if row:
        return row
    return [Interval(x, y + 1) for x in range(y + 2)]


# ---------------------------------------------------------------------------
# Validation

CONDITION_NAMES = {
    1: "condition 1 (every interval over the touched points is visited)",
    2: "condition 2 (pairing, roles, start at [0,0], visit once, legal labels)",
    3: "condition 3 (right endpoint grows by one, only after its row is full)",
}


@dataclass(frozen=True)
class RunViolation:
    condition: int
    index: int | None
    message: str

    def __str__(self) -> str:
        where = f"move {self.index}: " if self.index is not None else ""
        return f"{where}{self.message} [{CONDITION_NAMES[self.condition]}]"


def validate_run(rho: Run, complete: bool = False) -> list[RunViolation]:
    """Check the admissibility rules; with ``complete`` also completeness."""
    out: list[RunViolation] = []
    alphabet = rho.alphabet
    visited: set[Interval] = set()
    y_cur = -1
    for i, move in enumerate(rho.moves):
        expected = Role.SPOILER if i % 2 == 0 else Role.DUPLICATOR
        if move.role is not expected:
            out.append(RunViolation(2, i, f"expected a {expected.name.lower()} move"))
        if not move.sigma <= alphabet:
            out.append(RunViolation(2, i, "labels outside the declarable items"))
        if move.role is Role.SPOILER and not move.sigma <= rho.sigma_sp:
            out.append(RunViolation(2, i, "Spoiler declared items it does not control"))
        if move.role is Role.DUPLICATOR and move.sigma & rho.sigma_sp:
            out.append(RunViolation(2, i, "Duplicator declared items Spoiler controls"))
        iv = move.interval
        if i % 2 == 1:
            if iv != rho.moves[i - 1].interval:
                out.append(RunViolation(2, i, "Duplicator must answer on Spoiler's interval"))
            continue
        if i == 0 and iv != Interval(0, 0):
            out.append(RunViolation(2, i, "the first interval must be [0,0]"))
        if iv in visited:
            out.append(RunViolation(2, i, f"interval {iv} visited twice"))
        if i > 0:
            if iv.y == y_cur + 1:
                missing = [Interval(x, y_cur) for x in range(y_cur + 1) if Interval(x, y_cur) not in visited]
                if missing:
                    out.append(
                        RunViolation(3, i, f"moved to right endpoint {iv.y} before visiting {missing[0]}")
                    )
            elif iv.y != y_cur:
                out.append(RunViolation(3, i, f"right endpoint jumped from {y_cur} to {iv.y}"))
        visited.add(iv)
        y_cur = max(y_cur, iv.y)
    if complete:
        if len(rho.moves) % 2:
            out.append(RunViolation(1, None, "the last interval has no Duplicator answer"))
        m = y_cur + 1
        missing = [Interval(x, y) for x, y in intervals(m) if Interval(x, y) not in visited]
        if not rho.moves:
            out.append(RunViolation(1, None, "the run is empty"))
        elif missing:
            out.append(RunViolation(1, None, f"interval {missing[0]} never visited"))
    return out


def is_complete(rho: Run) -> bool:
    return bool(rho.moves) and not validate_run(rho, complete=True)


# ---------------------------------------------------------------------------
# Induced structures and success


def cell_declarations(rho: Run) -> dict[Interval, int]:
    """Bitset of items declared on each fully played interval."""
    out: dict[Interval, int] = {}
    for s_move, d_move in zip(rho.moves[0::2], rho.moves[1::2]):
        bits = 0
        for i in s_move.sigma | d_move.sigma:
            bits |= 1 << i
        out[s_move.interval] = bits
    return out


def induced_structure(rho: Run) -> tuple[IntervalStructure, dict[Interval, int]]:
    """The structure read off a complete run, and the interval -> index map."""
    report = validate_run(rho, complete=True)
    if report:
        raise ValueError("run is not complete and admissible: " + str(report[0]))
    table = rho.table
    names = {i: table.items[i].name for i in table.letter_ids if isinstance(table.items[i], Prop)}
    f_rho: dict[Interval, int] = {}
    val: dict[tuple[int, int], list[str]] = {}
    classes: list[list[int]] = []
    sim_id = table.sim_id
    for k in range(0, len(rho.moves), 2):
        iv = rho.moves[k].interval
        f_rho[iv] = k
        sigma = rho.moves[k].sigma | rho.moves[k + 1].sigma
        labels = [names[i] for i in sorted(sigma) if i in names]
        if labels:
            val[(iv.x, iv.y)] = labels
        if sim_id is not None and sim_id in sigma and iv.x < iv.y:
            classes.append([iv.x, iv.y])
    return IntervalStructure.build(rho.points(), val, classes), f_rho


def success_violations(rho: Run, phi: Formula | None = None) -> list[str]:
    """Reasons a complete run fails to be successful (empty when it succeeds)."""
    report = validate_run(rho, complete=True)
    if report:
        return [str(v) for v in report]
    table = rho.table
    phi = table.phi if phi is None else normalize(phi)
    M, f_rho = induced_structure(rho)
    mc = ModelChecker(M)
    out: list[str] = []
    if not mc.check(0, 0, phi):
        out.append("the formula is false on [0,0]")
    decl = cell_declarations(rho)
    requests = [i for i in sorted(rho.alphabet) if isinstance(table.items[i], Diamond)]
    sim_id = table.sim_id
    for iv, bits in decl.items():
        for i in requests:
            truth = mc.check(iv.x, iv.y, table.items[i])
            if bool((bits >> i) & 1) != truth:
                word = "declared" if truth is False else "omitted"
                out.append(f"{table.name(i)} {word} on {iv} against its truth")
        if sim_id is not None and sim_id in rho.alphabet:
            if bool((bits >> sim_id) & 1) != M.sim(iv.x, iv.y):
                out.append(f"~ on {iv} breaks the equivalence of points")
    return out


def is_successful(rho: Run, phi: Formula | None = None) -> bool:
    return not success_violations(rho, phi)


def run_from_structure(
    M: IntervalStructure,
    table: ClosureTable,
    sigma_sp: Iterable[int] = (),
    order: Sequence[Interval] | None = None,
    requests: str = "closure",
) -> Run:
    """A complete run whose declarations are the true values in ``M``."""
    sigma_sp = frozenset(sigma_sp)
    alphabet = table.game_alphabet(requests)
    mc = ModelChecker(M)
    grids = {i: mc.table(table.items[i]) for i in alphabet}
    if order is None:
        order = [Interval(x, y) for x, y in intervals(M.n)]
    moves: list[Move] = []
    for iv in order:
        true_ids = frozenset(i for i, g in grids.items() if g[iv.x][iv.y])
        moves.append(Move(iv, true_ids & sigma_sp, Role.SPOILER))
        moves.append(Move(iv, true_ids - sigma_sp, Role.DUPLICATOR))
    return Run(tuple(moves), table, sigma_sp, requests)


# ---------------------------------------------------------------------------
# Unbounded-play probe


@dataclass(frozen=True)
class PrefixCheck:
    """Outcome of the bounded probe for infinite plays.

    ``ok`` means no violation was observed within the prefix; this is never
    a proof that an infinite continuation succeeds.
    """

    ok: bool
    depth: int
    violations: tuple[str, ...]
    conclusive: bool = False


def prefix_violations(rho: Run, depth: int | None = None) -> PrefixCheck:
    """Definite violations visible in the first ``depth`` pairs of a run.

    Declarations are closed under the Boolean layer to get the truth of every
    closure formula on played intervals; a declared request is refuted when a
    played interval contradicts it.
    """
    pairs = len(rho.moves) // 2 if depth is None else min(depth, len(rho.moves) // 2)
    prefix = Run(rho.moves[: 2 * pairs], rho.table, rho.sigma_sp, rho.requests)
    out = [str(v) for v in validate_run(prefix)]
    table = rho.table
    sp = space(table)
    cells = {iv: sp.complete(bits) for iv, bits in cell_declarations(prefix).items()}
    root_id, root_pos = table.root
    origin = cells.get(Interval(0, 0))
    if origin is not None and not lit_true(origin, 2 * root_id + (0 if root_pos else 1)):
        out.append("the formula is false on [0,0]")
    declared = [i for i in rho.alphabet if i in sp.arg_of]
    for iv, bits in cells.items():
        for i in declared:
            rel, code = sp.arg_of[i]
            if rel is Rel.A:
                witnesses = [cells[q] for q in cells if q.x == iv.y]
            elif rel is Rel.B:
                witnesses = [cells[q] for q in cells if q.x == iv.x and q.y < iv.y]
            elif rel is Rel.BBAR:
                witnesses = [cells[q] for q in cells if q.x == iv.x and q.y > iv.y]
            else:
                witnesses = [cells[q] for q in cells if q.y == iv.x]
            seen = any(lit_true(w, code) for w in witnesses)
            if seen and not (bits >> i) & 1:
                out.append(f"{table.name(i)} denied on {iv} but witnessed")
            if rel is Rel.B and not seen and (bits >> i) & 1:
                out.append(f"{table.name(i)} declared on {iv} without a witness")
        if table.sim_id is not None and iv.x == iv.y and not (bits >> table.sim_id) & 1:
            out.append(f"~ denied on {iv}")
    return PrefixCheck(not out, pairs, tuple(out))


# ---------------------------------------------------------------------------
# Strategies


class StrategyError(RuntimeError):
    """A strategy broke its contract or was asked about an unknown prefix."""


class Strategy(Protocol):
    def __call__(self, prefix: Run) -> frozenset[int]: ...


@dataclass(frozen=True)
class ConstantStrategy:
    sigma: frozenset[int] = frozenset()

    def __call__(self, prefix: Run) -> frozenset[int]:
        return self.sigma


@dataclass(frozen=True)
class CallbackStrategy:
    fn: Callable[[Run], Iterable[int]]

    def __call__(self, prefix: Run) -> frozenset[int]:
        return frozenset(self.fn(prefix))


def respond(
    strategy: Strategy,
    spoiler_moves: Sequence[Move | tuple[Interval, Iterable[int]]],
    table: ClosureTable,
    sigma_sp: Iterable[int] = (),
    requests: str = "closure",
) -> Run:
    """Interleave Spoiler's moves with the strategy's answers."""
    run = empty_run(table, sigma_sp, requests)
    for move in spoiler_moves:
        if not isinstance(move, Move):
            iv, sigma = move
            move = Move(iv, frozenset(sigma), Role.SPOILER)
        if move.interval not in legal_moves(run):
            raise ValueError(f"interval {move.interval} is not legal here")
        if not move.sigma <= run.sigma_sp:
            raise ValueError("Spoiler declared items it does not control")
        run = run.extend(move)
        answer = frozenset(strategy(run))
        if answer & run.sigma_sp or not answer <= run.alphabet:
            raise StrategyError("strategy answered with items it does not control")
        run = run.extend(Move(move.interval, answer, Role.DUPLICATOR))
    return run


# ---------------------------------------------------------------------------
# Trace format


def dump_run(rho: Run) -> str:
    lines = []
    for m in rho.moves:
        names = ", ".join(rho.table.names(m.sigma))
        lines.append(f"{m.role.value} {m.interval.x} {m.interval.y} : {names}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def parse_run(
    text: str, table: ClosureTable, sigma_sp: Iterable[int] = (), requests: str = "closure"
) -> Run:
    """Parse ``S|D x y : f1, f2, ...`` lines into a run (not validated)."""
    moves = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        parts = head.split()
        if len(parts) != 3 or parts[0] not in ("S", "D"):
            raise ValueError(f"line {lineno}: expected 'S|D x y : items'")
        try:
            iv = Interval(int(parts[1]), int(parts[2]))
            sigma = table.parse_ids(rest) if sep else frozenset()
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        moves.append(Move(iv, sigma, Role(parts[0])))
    return Run(tuple(moves), table, frozenset(sigma_sp), requests)


__all__ = [
    "CONDITION_NAMES",
    "CallbackStrategy",
    "ConstantStrategy",
    "Move",
    "PrefixCheck",
    "Role",
    "Run",
    "RunViolation",
    "Strategy",
    "StrategyError",
    "cell_declarations",
    "dump_run",
    "empty_run",
    "induced_structure",
    "is_complete",
    "is_successful",
    "legal_moves",
    "parse_run",
    "prefix_violations",
    "respond",
    "run_from_structure",
    "success_violations",
    "validate_run",
]
