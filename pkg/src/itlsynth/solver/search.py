"""AND-OR search for Duplicator strategies in the finite synthesis game.

The game is played over rows: row ``y`` consists of the intervals ``[x, y]``
for ``x <= y``.  Instead of storing the full history, a search position keeps
only what the rest of the game can observe:

* per column ``x``: the arguments of ``<B>`` requests already true below the
  current row (``seen``), the literals that must still hold on some later cell
  of the column (``must``) and those that may never hold again (``mustnot``);
* the values of ``<A>`` requests shared by the current row, once fixed;
* the partition of points and the pending class of the current right
  endpoint when ``~`` is in play;
* with pruning on, the row summaries of every completed row.

Every ``<B>`` request on a cell is determined by ``seen``; a ``<Bb>`` request
on ``[x, y]`` must agree with the value on ``[x, y-1]``, which ``must`` and
``mustnot`` encode.  A completed row with no pending ``must`` literal ends the
play successfully.  At each completed row the multiset collection of column
states (grouped by equivalence class) is compared with the earlier rows; a
row that dominates an earlier one is pruned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable

from ..atoms import lit_true, space
from ..formula import ClosureTable, Formula, Fragment, Rel, closure
from .wqo import MultisetCollection, dominated

WIN, LOSE, UNKNOWN = 1, 0, 2  # UNKNOWN only in verdict bookkeeping


class UnsupportedFragment(ValueError):
    """Synthesis is only decided for formulas without the Abar modality."""


class BudgetExceeded(Exception):
    """Internal signal: node or time budget exhausted."""


@dataclass(frozen=True)
class Limits:
    max_points: int = 6
    max_nodes: int = 2_000_000
    timeout_s: float | None = None


@dataclass(frozen=True)
class Position:
    """Search state at a Spoiler turn (see module docstring)."""

    y: int
    cols: tuple[tuple[int, int, int], ...]
    mask: int
    arow: int
    cls: tuple[int, ...]
    target: int
    excl: int
    hist: tuple[MultisetCollection, ...] = ()


@dataclass(frozen=True)
class Choice:
    """Duplicator's reply to a Spoiler move and where it leads."""

    label: frozenset[int]
    child: Position | None  # None: the play ended successfully


class GameSolver:
    """Solves the game for one formula and Spoiler alphabet.

    Plays that reach ``max_points`` rows are cut off and scored as a
    Duplicator loss, or as a win when ``optimistic`` is set.  A pessimistic
    WIN is a real strategy; an optimistic LOSE is a real refutation (with
    pruning, a minimal winning strategy never repeats a dominated row, so it
    survives the search up to the cut-off).
    """

    def __init__(
        self,
        table: ClosureTable,
        sigma_sp: Iterable[int] = (),
        limits: Limits = Limits(),
        prune: bool = True,
        optimistic: bool = False,
        requests: str = "closure",
        deadline: float | None = None,
    ) -> None:
        if Rel.ABAR in table.ext_modalities:
            raise UnsupportedFragment("formulas with <Ab> are outside the decidable fragment")
        self.table = table
        self.sp = space(table)
        self.limits = limits
        self.prune = prune
        self.optimistic = optimistic
        self.requests = requests
        self.alphabet = sorted(table.game_alphabet(requests))
        self.sigma_sp = sorted(frozenset(sigma_sp))
        if not set(self.sigma_sp) <= set(self.alphabet):
            raise ValueError("Spoiler items must be declarable")
        sp_set = set(self.sigma_sp)
        self.dup_ids = [i for i in self.alphabet if i not in sp_set]
        alpha = set(self.alphabet)
        arg = self.sp.arg_of
        self.A = [(i, arg[i][1]) for i in self.alphabet if i in arg and arg[i][0] is Rel.A]
        self.B = [(i, arg[i][1]) for i in self.alphabet if i in arg and arg[i][0] is Rel.B]
        self.Bb = [(i, arg[i][1]) for i in self.alphabet if i in arg and arg[i][0] is Rel.BBAR]
        self.b_args = 0
        for _, c in self.B:
            self.b_args |= 1 << c
        codes = {c for _, c in self.A + self.B + self.Bb}
        self.codes = sorted(codes)
        self.sim_id = table.sim_id if table.sim_id in alpha else None
        root_id, root_pos = table.root
        self.root_code = 2 * root_id + (0 if root_pos else 1)
        self.or_items = self.sp.ors
        self.memo: dict[Position, int] = {}
        self.choices: dict[tuple[Position, int, int], Choice] = {}
        self.nodes = 0
        self.deadline = deadline
        if deadline is None and limits.timeout_s is not None:
            self.deadline = time.monotonic() + limits.timeout_s
        self._future_cache: dict[tuple[int, int], bool] = {}
        self._options: dict[tuple, list] = {}

    # -- helpers ----------------------------------------------------------

    def root(self) -> Position:
        return Position(0, (), 0, -1, (), -1, 0, ())

    def spoiler_moves(self, pos: Position) -> list[tuple[int, int]]:
        xs = [x for x in range(pos.y + 1) if not (pos.mask >> x) & 1]
        k = len(self.sigma_sp)
        return [(x, s) for x in xs for s in range(1 << k)]

    def spoiler_sigma(self, smask: int) -> frozenset[int]:
        return frozenset(i for j, i in enumerate(self.sigma_sp) if (smask >> j) & 1)

    def _complete(self, bits: int) -> int:
        for i, a, b in self.or_items:
            if lit_true(bits, a) or lit_true(bits, b):
                bits |= 1 << i
            else:
                bits &= ~(1 << i)
        return bits

    def _lits(self, bits: int) -> int:
        out = 0
        for c in self.codes:
            if lit_true(bits, c):
                out |= 1 << c
        return out

    def _possible_later(self, seen: int, code: int) -> bool:
        """Can ``code`` hold on a later cell of a column with this ``seen``?

        Three-valued evaluation: <B> requests whose argument was seen are
        true, ``false`` is false, everything else is unknown.
        """
        key = (seen, code)
        hit = self._future_cache.get(key)
        if hit is not None:
            return hit
        table = self.table
        val: dict[int, int] = {}
        for i, f in enumerate(table.items):
            if i not in table.closure_ids:
                break
            if i == table.false_id:
                val[i] = 0
            elif i in self.sp.arg_of and self.sp.arg_of[i][0] is Rel.B and (seen >> self.sp.arg_of[i][1]) & 1:
                val[i] = 1
            else:
                val[i] = 2
        for i, a, b in self.or_items:
            va, vb = _lit3(val, a), _lit3(val, b)
            val[i] = 1 if 1 in (va, vb) else (0 if va == vb == 0 else 2)
        result = _lit3(val, code) != 0
        self._future_cache[key] = result
        return result

    # -- move generation ---------------------------------------------------

    def candidates(self, pos: Position, x: int, smask: int) -> list[tuple[frozenset[int], Position | None, bool]]:
        """Duplicator replies on [x, y] in canonical order.

        Returns (label, next position, row finished) triples, where a
        finished row with no pending obligation gives ``None`` as position.
        """
        y = pos.y
        col = pos.cols[x] if x < y else None
        sim = None
        if self.sim_id is not None:
            if x == y:
                sim = 1
            elif pos.target >= 0:
                sim = 1 if pos.cls[x] == pos.target else 0
            elif (pos.excl >> pos.cls[x]) & 1:
                sim = 0
        key = (x == 0 and y == 0, col, pos.arow, sim, smask)
        options = self._options.get(key)
        if options is None:
            options = self._cell_options(*key)
            self._options[key] = options
        out = []
        full_row = (1 << (y + 1)) - 1
        for bits, label, state in options:
            cols = list(pos.cols)
            if x < y:
                cols[x] = state
            else:
                cols.append(state)
            arow = pos.arow
            if arow < 0:
                arow = 0
                for j, (i, _c) in enumerate(self.A):
                    if (bits >> i) & 1:
                        arow |= 1 << j
            target, excl = pos.target, pos.excl
            if self.sim_id is not None and x < y and target < 0:
                if (bits >> self.sim_id) & 1:
                    target = pos.cls[x]
                else:
                    excl |= 1 << pos.cls[x]
            mask = pos.mask | (1 << x)
            if mask != full_row:
                nxt = Position(y, tuple(cols), mask, arow, pos.cls, target, excl, pos.hist)
                out.append((label, nxt, False))
                continue
            cls = pos.cls + ((target if target >= 0 else y),)
            if all(c[1] == 0 for c in cols):
                out.append((label, None, True))
                continue
            hist = pos.hist
            if self.prune:
                coll = self.collection(cols, cls)
                if dominated(hist, coll):
                    continue
                hist = hist + (coll,)
            nxt = Position(y + 1, tuple(cols), 0, -1, cls, -1, 0, hist)
            out.append((label, nxt, True))
        return out

    def _cell_options(
        self,
        origin: bool,
        col: tuple[int, int, int] | None,
        arow: int,
        sim: int | None,
        smask: int,
    ) -> list[tuple[int, frozenset[int], tuple[int, int, int]]]:
        """Legal labels of one cell and the column state they leave behind.

        ``col`` is the column state below the cell (None on the diagonal),
        ``arow`` the row's fixed <A> values (-1 if not fixed yet) and ``sim``
        the forced value of ``~`` if any.
        """
        below = col is not None
        fixed = 0
        known = 0
        spoiler = self.spoiler_sigma(smask)
        for i in self.sigma_sp:
            known |= 1 << i
            if i in spoiler:
                fixed |= 1 << i
        forced: dict[int, int] = {}
        seen, must, mustnot = col if below else (0, 0, 0)
        for i, c in self.B:
            forced[i] = 1 if below and (seen >> c) & 1 else 0
        if arow >= 0:
            for j, (i, _c) in enumerate(self.A):
                forced[i] = (arow >> j) & 1
        bb_prev: list[int] = []
        if below:
            for i, c in self.Bb:
                prev = (must >> c) & 1
                bb_prev.append(prev)
                if not prev:
                    forced[i] = 0
        if sim is not None:
            forced[self.sim_id] = sim
        for i, v in forced.items():
            if (known >> i) & 1:
                if ((fixed >> i) & 1) != v:
                    return []
            else:
                known |= 1 << i
                if v:
                    fixed |= 1 << i
        free = [i for i in self.dup_ids if not (known >> i) & 1]
        out = []
        for assign in range(1 << len(free)):
            bits = fixed
            for j, i in enumerate(free):
                if (assign >> j) & 1:
                    bits |= 1 << i
            bits = self._complete(bits)
            if origin and not lit_true(bits, self.root_code):
                continue
            lits = self._lits(bits)
            bb_true = bb_false = 0
            ok = True
            for k, (i, c) in enumerate(self.Bb):
                if (bits >> i) & 1:
                    bb_true |= 1 << c
                else:
                    bb_false |= 1 << c
                    if below and bb_prev[k] and not (lits >> c) & 1:
                        ok = False
                        break
            if not ok:
                continue
            if below:
                if lits & mustnot:
                    continue
                nseen = seen | (lits & self.b_args)
                nmust = (must & ~lits) | bb_true
                nmustnot = mustnot | bb_false
            else:
                a_true = a_false = 0
                for i, c in self.A:
                    if (bits >> i) & 1:
                        if not (lits >> c) & 1:
                            a_true |= 1 << c
                    elif (lits >> c) & 1:
                        ok = False
                        break
                    else:
                        a_false |= 1 << c
                if not ok:
                    continue
                nseen = lits & self.b_args
                nmust = a_true | bb_true
                nmustnot = a_false | bb_false
            if nmust & nmustnot:
                continue
            m = nmust
            while m:
                low = m & -m
                if not self._possible_later(nseen, low.bit_length() - 1):
                    ok = False
                    break
                m ^= low
            if not ok:
                continue
            label = frozenset(i for i in self.dup_ids if (bits >> i) & 1)
            out.append((bits, label, (nseen, nmust, nmustnot)))
        return out

    def collection(self, cols, cls) -> MultisetCollection:
        groups: dict[int, list] = {}
        for x, state in enumerate(cols):
            groups.setdefault(cls[x], []).append(state)
        return MultisetCollection.of(groups.values())

    # -- search -----------------------------------------------------------------

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.limits.max_nodes:
            raise BudgetExceeded("node budget")
        if self.deadline is not None and (self.nodes & 255) == 0 and time.monotonic() > self.deadline:
            raise BudgetExceeded("time budget")

    def value_of(self, child: Position | None) -> int:
        """Value of the position reached after a Duplicator reply."""
        if child is None:
            return WIN
        if child.y >= self.limits.max_points:
            return WIN if self.optimistic else LOSE
        return self.value(child)

    def value(self, pos: Position) -> int:
        hit = self.memo.get(pos)
        if hit is not None:
            return hit
        self._tick()
        result = WIN
        for x, smask in self.spoiler_moves(pos):
            for label, child, _row_done in self.candidates(pos, x, smask):
                if self.value_of(child) == WIN:
                    self.choices[(pos, x, smask)] = Choice(label, child)
                    break
            else:
                result = LOSE
                break
        self.memo[pos] = result
        return result

    def reachable_choices(self, start: Position | None) -> dict[tuple[Position, int, int], Choice]:
        """Choices along the winning strategy from ``start``."""
        out: dict[tuple[Position, int, int], Choice] = {}
        stack = [start] if start is not None else []
        done: set[Position] = set()
        while stack:
            pos = stack.pop()
            if pos in done:
                continue
            done.add(pos)
            for x, smask in self.spoiler_moves(pos):
                ch = self.choices[(pos, x, smask)]
                out[(pos, x, smask)] = ch
                if ch.child is not None:
                    stack.append(ch.child)
        return out


def _lit3(val: dict[int, int], code: int) -> int:
    v = val[code >> 1]
    if code & 1 and v != 2:
        return 1 - v
    return v


def prepare_table(phi: Formula, frag: Fragment | None = None) -> ClosureTable:
    table = closure(phi, frag)
    if Rel.ABAR in table.ext_modalities:
        raise UnsupportedFragment(
            "synthesis with <Ab> is undecidable; use bounded play in the game module instead"
        )
    return table


__all__ = [
    "BudgetExceeded",
    "Choice",
    "GameSolver",
    "LOSE",
    "Limits",
    "Position",
    "UNKNOWN",
    "UnsupportedFragment",
    "WIN",
    "prepare_table",
]
