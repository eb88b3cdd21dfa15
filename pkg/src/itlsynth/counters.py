"""Minsky counter machines, lossy semantics and their interval-logic encodings.

Configurations are laid out on consecutive unit intervals: a block is one
state unit (``at_<state>``) followed by one unit per counter token (``c<i>``).
Two encodings are built:

* ``encode`` (modalities A, Abar, B, Bbar): blocks in execution order, with a
  transfer letter ``p`` linking each surviving token to its copy in the next
  block.  Injectivity of ``p`` is delegated to a Spoiler-controlled letter
  ``p_sp`` through ``psi_inj``.
* ``encode_abb_sim`` (modalities A, B, Bbar and ``~``): blocks in reverse
  order (halt first, init last), tokens linked by point equivalence instead
  of ``p``; missing links model lossy drops.

Each encoder exposes its conjuncts by name so they can be model-checked one
at a time against the structures built by ``encode_witness_structure``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence, Union

from .formula import (
    SIM,
    TRUE,
    And,
    Box,
    Diamond,
    Formula,
    Not,
    Prop,
    Rel,
    box_g,
    conj,
    disj,
    implies,
    psi_inj,
    psi_sur,
    phi_sim_inj,
    sing,
    unit,
)
from .structures import IntervalStructure


class MachineError(ValueError):
    """Malformed machine description or invalid computation."""


@dataclass(frozen=True)
class Inc:
    counter: int
    next: str


@dataclass(frozen=True)
class Zdec:
    counter: int
    if_zero: str
    if_pos: str


Rule = Union[Inc, Zdec]


@dataclass(frozen=True)
class Configuration:
    state: str
    counters: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.counters):
            raise MachineError("counters must be nonnegative")

    def __str__(self) -> str:
        return f"({self.state}, [{', '.join(map(str, self.counters))}])"


@dataclass
class CounterMachine:
    k: int
    delta: dict[str, Rule]
    q_init: str
    q_halt: str
    states: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.k < 1:
            raise MachineError("a machine needs at least one counter")
        seen = list(self.states)
        for q in [self.q_init, self.q_halt, *self.delta]:
            if q not in seen:
                seen.append(q)
        for rule in self.delta.values():
            targets = [rule.next] if isinstance(rule, Inc) else [rule.if_zero, rule.if_pos]
            for q in targets:
                if q not in seen:
                    seen.append(q)
            if not 1 <= rule.counter <= self.k:
                raise MachineError(f"counter {rule.counter} out of range 1..{self.k}")
        self.states = tuple(seen)
        missing = [q for q in self.states if q != self.q_halt and q not in self.delta]
        if missing:
            raise MachineError(f"no rule for state(s) {', '.join(missing)}")
        if self.q_halt in self.delta:
            raise MachineError("the halting state has no rule")

    def initial(self) -> Configuration:
        return Configuration(self.q_init, (0,) * self.k)

    def final(self) -> Configuration:
        return Configuration(self.q_halt, (0,) * self.k)


_STATE_RE = re.compile(
    r"state\s+(\w+)\s*:\s*(?:inc\s+(\d+)\s+goto\s+(\w+)"
    r"|ifz\s+(\d+)\s+goto\s+(\w+)\s+else\s+dec\s+(\d+)\s+goto\s+(\w+))$"
)


def parse_machine(text: str) -> CounterMachine:
    """Parse the line format ``counters K`` / ``state ...`` / ``init q`` / ``halt q``."""
    k = None
    init = halt = None
    delta: dict[str, Rule] = {}
    order: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "counters" and len(words) == 2 and words[1].isdigit():
            k = int(words[1])
        elif words[0] == "init" and len(words) == 2:
            init = words[1]
        elif words[0] == "halt" and len(words) == 2:
            halt = words[1]
        elif words[0] == "state":
            m = _STATE_RE.match(line)
            if not m:
                raise MachineError(f"line {lineno}: cannot parse rule {line!r}")
            q = m.group(1)
            if q in delta:
                raise MachineError(f"line {lineno}: duplicate rule for {q}")
            if m.group(2):
                delta[q] = Inc(int(m.group(2)), m.group(3))
            else:
                if m.group(4) != m.group(6):
                    raise MachineError(f"line {lineno}: test and decrement use different counters")
                delta[q] = Zdec(int(m.group(4)), m.group(5), m.group(7))
            order.append(q)
        else:
            raise MachineError(f"line {lineno}: unknown directive {words[0]!r}")
    if k is None or init is None or halt is None:
        raise MachineError("machine needs 'counters', 'init' and 'halt' lines")
    return CounterMachine(k, delta, init, halt, tuple(order))


def dump_machine(M: CounterMachine) -> str:
    lines = [f"counters {M.k}"]
    for q in M.states:
        rule = M.delta.get(q)
        if isinstance(rule, Inc):
            lines.append(f"state {q}: inc {rule.counter} goto {rule.next}")
        elif isinstance(rule, Zdec):
            lines.append(
                f"state {q}: ifz {rule.counter} goto {rule.if_zero} "
                f"else dec {rule.counter} goto {rule.if_pos}"
            )
    lines += [f"init {M.q_init}", f"halt {M.q_halt}"]
    return "\n".join(lines) + "\n"


# -- semantics ---------------------------------------------------------------


def _below(v: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    return product(*(range(x + 1) for x in v))


def perfect_step(M: CounterMachine, c: Configuration) -> Configuration | None:
    rule = M.delta.get(c.state)
    if rule is None:
        return None
    z = list(c.counters)
    i = rule.counter - 1
    if isinstance(rule, Inc):
        z[i] += 1
        return Configuration(rule.next, tuple(z))
    if z[i] == 0:
        return Configuration(rule.if_zero, tuple(z))
    z[i] -= 1
    return Configuration(rule.if_pos, tuple(z))


def step(M: CounterMachine, c: Configuration, lossy: bool = False) -> set[Configuration]:
    """Successors of ``c``; lossy steps may drop counters before and after."""
    if not lossy:
        nxt = perfect_step(M, c)
        return {nxt} if nxt is not None else set()
    out: set[Configuration] = set()
    for before in _below(c.counters):
        mid = perfect_step(M, Configuration(c.state, before))
        if mid is None:
            continue
        for after in _below(mid.counters):
            out.add(Configuration(mid.state, after))
    return out


FOUND = "FOUND"
CLOSED = "CLOSED"
BOUND_EXHAUSTED = "BOUND_EXHAUSTED"


@dataclass
class ReachResult:
    status: str
    path: list[Configuration] | None = None
    explored: int = 0
    cap_hit: bool = False

    @property
    def found(self) -> bool:
        return self.status == FOUND


def reach_00(
    M: CounterMachine, lossy: bool = False, bound: int = 100_000, cap: int | None = None
) -> ReachResult:
    """Breadth-first search from (init, 0) to (halt, 0).

    ``bound`` limits explored configurations and ``cap`` counter values.  A
    CLOSED status means the capped space was exhausted without hitting the
    cap, so the target is unreachable; otherwise an unsuccessful search is
    reported as BOUND_EXHAUSTED.
    """
    start, goal = M.initial(), M.final()
    parent: dict[Configuration, Configuration | None] = {start: None}
    queue = deque([start])
    cap_hit = False
    explored = 0
    while queue:
        if explored >= bound:
            return ReachResult(BOUND_EXHAUSTED, None, explored, cap_hit)
        c = queue.popleft()
        explored += 1
        if c == goal:
            path = [c]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return ReachResult(FOUND, path[::-1], explored, cap_hit)
        for d in sorted(step(M, c, lossy), key=lambda d: (d.state, d.counters)):
            if cap is not None and max(d.counters, default=0) > cap:
                cap_hit = True
                continue
            if d not in parent:
                parent[d] = c
                queue.append(d)
    return ReachResult(BOUND_EXHAUSTED if cap_hit else CLOSED, None, explored, cap_hit)


def is_computation(M: CounterMachine, path: Sequence[Configuration], lossy: bool) -> bool:
    return all(b in step(M, a, lossy) for a, b in zip(path, path[1:]))


# -- formula helpers ---------------------------------------------------------


def state_letter(q: str) -> str:
    return f"at_{q}"


def counter_letter(i: int) -> str:
    return f"c{i}"


NEW, DEL, P, P_SP, S = "new", "del", "p", "p_sp", "s"


class _Vocab:
    """Shared building blocks over the letters of one machine."""

    def __init__(self, M: CounterMachine) -> None:
        self.M = M
        self.U = And(unit(), Not(sing()))
        self.pi = sing()
        self.at = {q: Prop(state_letter(q)) for q in M.states}
        self.c = {i: Prop(counter_letter(i)) for i in range(1, M.k + 1)}
        self.S = disj(list(self.at.values()))
        self.C = disj(list(self.c.values()))
        self.new, self.dele = Prop(NEW), Prop(DEL)

    def u(self, f: Formula) -> Formula:
        return And(self.U, f)

    def no_state_in(self) -> Formula:
        # no state unit starts strictly inside (before the right end)
        return Box(Rel.B, Box(Rel.A, Not(self.u(self.S))))

    def exactly_one_unit(self, f: Formula) -> Formula:
        uf = self.u(f)
        return And(
            Diamond(Rel.B, Diamond(Rel.A, uf)),
            Box(Rel.B, implies(Diamond(Rel.A, uf), Box(Rel.B, Box(Rel.A, Not(uf))))),
        )

    # The following are evaluated on a state unit and talk about its block.
    def none_in_block(self, f: Formula) -> Formula:
        return Box(Rel.A, implies(self.no_state_in(), Box(Rel.B, Box(Rel.A, Not(self.u(f))))))

    def some_in_block(self, f: Formula) -> Formula:
        return Diamond(Rel.A, And(self.no_state_in(), Diamond(Rel.B, Diamond(Rel.A, self.u(f)))))

    def at_most_one_in_block(self, f: Formula) -> Formula:
        uf = self.u(f)
        return Box(
            Rel.A,
            implies(And(self.no_state_in(), Diamond(Rel.A, uf)), Box(Rel.B, Box(Rel.A, Not(uf)))),
        )

    def exactly_one_in_block(self, f: Formula) -> Formula:
        return And(self.some_in_block(f), self.at_most_one_in_block(f))

    def next_block(self, f: Formula) -> Formula:
        """The next block exists and its state unit satisfies ``f``."""
        return Diamond(Rel.A, And(self.no_state_in(), Diamond(Rel.A, self.u(And(self.S, f)))))

    def common(self) -> list[tuple[str, Formula]]:
        out = []
        marks = [self.new, self.dele]
        for f in list(self.at.values()) + list(self.c.values()):
            out.append((f"unit-only:{f.name}", box_g(implies(f, self.U))))
        for f in marks:
            out.append((f"counter-only:{f.name}", box_g(implies(f, And(self.U, self.C)))))
        letters = list(self.at.values()) + list(self.c.values())
        one = disj(
            [conj([f] + [Not(g) for g in letters if g is not f]) for f in letters]
        )
        out.append(("one-letter-per-unit", box_g(implies(self.U, one))))
        return out

    def rule_effects(self, q: str, exact_new: bool) -> list[tuple[Formula, Formula, str, Formula]]:
        """For each branch of q's rule: (guard, q's block, next state, next block).

        The guard selects the branch on q's block; the second formula
        constrains del marks in q's block and the last one the new marks of
        the next block.  With ``exact_new`` an increment must show up as a
        new token; otherwise it may be dropped straight away.
        """
        rule = self.M.delta[q]
        ci = self.c[rule.counter]
        no_del = self.none_in_block(self.dele)
        no_new = self.none_in_block(self.new)
        if isinstance(rule, Inc):
            count = self.exactly_one_in_block if exact_new else self.at_most_one_in_block
            there = And(count(self.new), self.none_in_block(And(self.new, Not(ci))))
            return [(TRUE, no_del, rule.next, there)]
        zero = self.none_in_block(ci)
        one_del = And(self.exactly_one_in_block(self.dele), self.none_in_block(And(self.dele, Not(ci))))
        return [
            (zero, no_del, rule.if_zero, no_new),
            (Not(zero), one_del, rule.if_pos, no_new),
        ]


def aabb_conjuncts(M: CounterMachine) -> list[tuple[str, Formula]]:
    """Named conjuncts of the forward encoding (A, Abar, B, Bbar)."""
    v = _Vocab(M)
    out = v.common()
    init, halt = v.at[M.q_init], v.at[M.q_halt]
    out.append(
        (
            "start",
            Diamond(Rel.A, v.u(conj([init, v.none_in_block(v.C), v.none_in_block(v.new)]))),
        )
    )
    last_unit = v.u(Box(Rel.A, v.pi))
    out.append(("end-is-halt", box_g(implies(last_unit, halt))))
    out.append(("halt-is-end", box_g(implies(v.u(halt), Box(Rel.A, v.pi)))))
    for q in M.states:
        if q == M.q_halt:
            continue
        for k, (guard, here, target, there) in enumerate(v.rule_effects(q, exact_new=True)):
            nxt = v.next_block(And(v.at[target], there))
            out.append((f"step:{q}:{k}", box_g(implies(v.u(And(v.at[q], guard)), And(here, nxt)))))
    p = Prop(P)
    out.append(("p-source", box_g(implies(p, Diamond(Rel.ABAR, v.u(And(v.C, Not(v.dele))))))))
    out.append(("p-target", box_g(implies(p, Diamond(Rel.A, v.u(And(v.C, Not(v.new))))))))
    out.append(("p-next-block", box_g(implies(p, v.exactly_one_unit(v.S)))))
    out.append(("p-functional", box_g(implies(p, Box(Rel.BBAR, Not(p))))))
    out.append(("p-total", box_g(implies(v.u(And(v.C, Not(v.dele))), Diamond(Rel.A, p)))))
    for i, ci in v.c.items():
        out.append(
            (
                f"p-same-counter:{ci.name}",
                box_g(implies(v.u(ci), Box(Rel.A, implies(p, Diamond(Rel.A, v.u(ci)))))),
            )
        )
    names = [counter_letter(i) for i in range(1, M.k + 1)]
    out.append(("psi_sur", psi_sur(names, NEW, P)))
    out.append(("psi_inj", psi_inj(P, P_SP, S)))
    return out


def encode(M: CounterMachine) -> tuple[Formula, frozenset[str]]:
    """Forward encoding and the Spoiler letters of the synthesis instance."""
    return conj([f for _, f in aabb_conjuncts(M)]), frozenset({P_SP})


def abb_sim_conjuncts(M: CounterMachine) -> list[tuple[str, Formula]]:
    """Named conjuncts of the backward encoding (A, B, Bbar, ~)."""
    v = _Vocab(M)
    out = v.common()
    init, halt = v.at[M.q_init], v.at[M.q_halt]
    first_block_empty = Diamond(Rel.A, v.u(conj([halt, v.none_in_block(v.C)])))
    out.append(("start-is-halt", first_block_empty))
    has_next = v.next_block(TRUE)
    out.append(
        ("end-is-init", box_g(implies(v.u(And(v.S, Not(has_next))), And(init, v.none_in_block(v.C)))))
    )
    # Predecessor blocks follow each state block, except at the end.
    preds: dict[str, list[Formula]] = {q: [] for q in M.states}
    for q in M.states:
        if q == M.q_halt:
            continue
        for guard, here, target, there in v.rule_effects(q, exact_new=False):
            preds[target].append(And(there, v.next_block(conj([v.at[q], guard, here]))))
    for q in M.states:
        out.append(
            (
                f"pred:{q}",
                box_g(implies(v.u(And(v.at[q], has_next)), disj(preds[q]))),
            )
        )
    for i, ci in v.c.items():
        link = conj([SIM, v.exactly_one_unit(v.S), Diamond(Rel.A, v.u(And(ci, Not(v.dele))))])
        out.append(
            (
                f"transfer:{ci.name}",
                box_g(implies(v.u(And(ci, Not(v.new))), Diamond(Rel.BBAR, link))),
            )
        )
    out.append(("phi_sim_inj", phi_sim_inj([state_letter(q) for q in M.states])))
    return out


def encode_abb_sim(M: CounterMachine) -> Formula:
    return conj([f for _, f in abb_sim_conjuncts(M)])


# -- witness structures --------------------------------------------------------


@dataclass
class _Block:
    state: str
    tokens: list[tuple[int, int]] = field(default_factory=list)  # (counter, token id)
    new: set[int] = field(default_factory=set)
    dele: set[int] = field(default_factory=set)


def _token_blocks(M: CounterMachine, path: Sequence[Configuration]) -> list[_Block]:
    """Blocks for a computation whose steps are perfect transitions followed by
    drops of the freshly incremented token only."""
    fresh = iter(range(1, 1 << 30))
    cur = _Block(path[0].state)
    if any(path[0].counters):
        raise MachineError("computation must start with zero counters")
    blocks = [cur]
    for a, b in zip(path, path[1:]):
        rule = M.delta.get(a.state)
        if rule is None:
            raise MachineError(f"no transition from {a.state}")
        i = rule.counter
        nxt = _Block(b.state)
        carried = list(cur.tokens)
        if isinstance(rule, Inc):
            ok_state = b.state == rule.next
            want = list(a.counters)
            want[i - 1] += 1
            if tuple(want) == b.counters:
                t = next(fresh)
                carried.append((i, t))
                nxt.new.add(t)
            elif tuple(a.counters) != b.counters:
                raise MachineError(f"unsupported step {a} -> {b}")
        else:
            if a.counters[i - 1] == 0:
                ok_state = b.state == rule.if_zero
            else:
                ok_state = b.state == rule.if_pos
                victim = max(t for t in cur.tokens if t[0] == i)
                cur.dele.add(victim[1])
                carried.remove(victim)
            if tuple(_count(carried, M.k)) != b.counters:
                raise MachineError(f"unsupported step {a} -> {b}")
        if not ok_state:
            raise MachineError(f"step {a} -> {b} does not follow the rules")
        nxt.tokens = sorted(carried, key=lambda t: t[1])
        blocks.append(nxt)
        cur = nxt
    return blocks


def _count(tokens: Iterable[tuple[int, int]], k: int) -> list[int]:
    z = [0] * k
    for i, _ in tokens:
        z[i - 1] += 1
    return z


def normalize_lossy(M: CounterMachine, path: Sequence[Configuration]) -> list[Configuration]:
    """Equivalent computation whose steps are perfect transitions, except that
    an increment may be dropped at once.

    Each configuration is replaced by the least one that still reaches the
    next; earlier drops are thereby moved onto earlier steps.
    """
    if not path:
        raise MachineError("empty computation")
    if not is_computation(M, path, lossy=True):
        raise MachineError("not a lossy computation of the machine")
    out = [path[-1]]
    for a in reversed(path[:-1]):
        b = out[-1]
        rule = M.delta[a.state]
        i = rule.counter - 1
        options: list[tuple[int, ...]] = []
        if isinstance(rule, Inc):
            if b.state == rule.next:
                z = list(b.counters)
                z[i] = max(z[i] - 1, 0)
                options.append(tuple(z))
        else:
            if b.state == rule.if_zero and b.counters[i] == 0:
                options.append(b.counters)
            if b.state == rule.if_pos:
                z = list(b.counters)
                z[i] += 1
                options.append(tuple(z))
        for z in options:
            if all(x <= y for x, y in zip(z, a.counters)):
                out.append(Configuration(a.state, z))
                break
        else:
            raise MachineError(f"cannot normalize step {a} -> {b}")
    return out[::-1]


def _layout(
    blocks: Sequence[_Block],
) -> tuple[dict[tuple[int, int], set[str]], list[int], list[dict[int, int]], int]:
    """Valuation of the unit intervals, block start points and token starts."""
    val: dict[tuple[int, int], set[str]] = {}
    starts, where = [], []
    pos = 0
    for blk in blocks:
        starts.append(pos)
        val[(pos, pos + 1)] = {state_letter(blk.state)}
        pos += 1
        here = {}
        for i, t in blk.tokens:
            marks = {counter_letter(i)}
            if t in blk.new:
                marks.add(NEW)
            if t in blk.dele:
                marks.add(DEL)
            val[(pos, pos + 1)] = marks
            here[t] = pos
            pos += 1
        where.append(here)
    return val, starts, where, pos + 1


def encode_witness_structure(
    M: CounterMachine, computation: Sequence[Configuration], variant: str = "abbsim"
) -> IntervalStructure:
    """Structure encoding a 0-0 computation for either encoder.

    ``variant`` is ``"aabb"`` (perfect computations only) or ``"abbsim"``
    (lossy computations, normalized first).
    """
    path = list(computation)
    if not path or path[0] != M.initial() or path[-1] != M.final():
        raise MachineError("computation must go from (init, 0) to (halt, 0)")
    if variant == "aabb":
        if not is_computation(M, path, lossy=False):
            raise MachineError("the forward encoding needs a perfect computation")
        blocks = _token_blocks(M, path)
        val, _starts, where, n = _layout(blocks)
        for here, there in zip(where, where[1:]):
            for t, x in here.items():
                if t in there:
                    val.setdefault((x + 1, there[t]), set()).add(P)
        return IntervalStructure.build(n, val)
    if variant == "abbsim":
        blocks = _token_blocks(M, normalize_lossy(M, path))[::-1]
        val, _starts, where, n = _layout(blocks)
        classes = []
        for here, there in zip(where, where[1:]):
            for t, x in here.items():
                if t in there:
                    classes.append([x, there[t]])
        return IntervalStructure.build(n, val, classes)
    raise MachineError(f"unknown variant {variant!r}")


__all__ = [
    "BOUND_EXHAUSTED",
    "CLOSED",
    "FOUND",
    "Configuration",
    "CounterMachine",
    "Inc",
    "MachineError",
    "ReachResult",
    "Zdec",
    "aabb_conjuncts",
    "abb_sim_conjuncts",
    "dump_machine",
    "encode",
    "encode_abb_sim",
    "encode_witness_structure",
    "is_computation",
    "normalize_lossy",
    "parse_machine",
    "perfect_step",
    "reach_00",
    "state_letter",
    "step",
]
