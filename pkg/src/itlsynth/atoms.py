"""Atoms over an extended closure, their dependency relations, and compass grids.

An atom is a bitset over the items of a :class:`ClosureTable`: bit ``i`` set
means item ``i`` (an unsigned formula) belongs to the atom, bit clear means
its negation does.  Literal sets (requests, observables) are bitsets over
literal codes ``2 * id + (0 if positive else 1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .formula import ClosureTable, Diamond, Not, Or, Prop, Rel
from .structures import IntervalStructure, ModelChecker, intervals, type_bits


def lit_code(item: int, positive: bool) -> int:
    return 2 * item + (0 if positive else 1)


def lit_true(bits: int, code: int) -> bool:
    """Whether the literal with this code holds in the bitset."""
    return ((bits >> (code >> 1)) & 1) != (code & 1)


class AtomSpace:
    """Precomputed per-table data used by every atom operation."""

    def __init__(self, table: ClosureTable) -> None:
        self.table = table
        items = table.items
        self.n_items = len(items)
        self.closure = sorted(table.closure_ids)
        self.ors: list[tuple[int, int, int]] = []
        self.diamonds: dict[Rel, list[tuple[int, int]]] = {r: [] for r in Rel}
        self.diamond_of: dict[tuple[Rel, int], int] = {}
        self.arg_of: dict[int, tuple[Rel, int]] = {}
        for i, f in enumerate(items):
            if isinstance(f, Or):
                self.ors.append((i, self._code(f.left), self._code(f.right)))
            elif isinstance(f, Diamond):
                code = self._code(f.child)
                self.diamonds[f.rel].append((i, code))
                self.diamond_of[(f.rel, code)] = i
                self.arg_of[i] = (f.rel, code)
        self.false_id = table.false_id
        self.pi_id = table.pi_id
        self.sim_id = table.sim_id
        self.closure_mask = sum(1 << i for i in self.closure)
        self.sigma_t = sorted(table.sigma_t)
        self._req_cache: dict[tuple[int, Rel], int] = {}
        self._obs_cache: dict[int, int] = {}

    def _code(self, f) -> int:
        if isinstance(f, Not):
            return lit_code(self.table.index[f.child], False)
        return lit_code(self.table.index[f], True)

    def complete(self, bits: int) -> int:
        """Recompute every Or bit bottom-up from the other bits."""
        for i, a, b in self.ors:
            if lit_true(bits, a) or lit_true(bits, b):
                bits |= 1 << i
            else:
                bits &= ~(1 << i)
        return bits

    def req(self, bits: int, rel: Rel) -> int:
        key = (bits, rel)
        out = self._req_cache.get(key)
        if out is None:
            out = 0
            for i, code in self.diamonds[rel]:
                if (bits >> i) & 1:
                    out |= 1 << code
            if len(self._req_cache) < 200_000:
                self._req_cache[key] = out
        return out

    def obs(self, bits: int) -> int:
        out = self._obs_cache.get(bits)
        if out is None:
            out = 0
            for i in self.closure:
                out |= 1 << lit_code(i, bool((bits >> i) & 1))
            if len(self._obs_cache) < 200_000:
                self._obs_cache[bits] = out
        return out

    def is_pi(self, bits: int) -> bool:
        return not (bits >> self.pi_id) & 1

    def violations(self, bits: int) -> list[str]:
        """Reasons why ``bits`` is not an atom (empty list for atoms)."""
        out: list[str] = []
        if bits >> self.n_items:
            out.append("bits outside the extended closure")
        if (bits >> self.false_id) & 1:
            out.append("contains false")
        for i, a, b in self.ors:
            want = lit_true(bits, a) or lit_true(bits, b)
            if bool((bits >> i) & 1) != want:
                out.append(f"disjunction {self.table.name(i)} incoherent")
        if self.is_pi(bits):
            for i in self.closure:
                for positive in (True, False):
                    code = lit_code(i, positive)
                    a_id = self.diamond_of.get((Rel.A, code))
                    a_set = a_id is not None and (bits >> a_id) & 1
                    if lit_true(bits, code) and not a_set:
                        out.append(f"point atom misses <A> of a true literal of {self.table.name(i)}")
                    if a_set and not lit_true(bits, code):
                        b_id = self.diamond_of.get((Rel.BBAR, code))
                        if b_id is None or not (bits >> b_id) & 1:
                            out.append(f"point atom has <A> without <Bb> for {self.table.name(i)}")
            if self.sim_id is not None and not (bits >> self.sim_id) & 1:
                out.append("point atom without ~")
        return out

    def is_atom(self, bits: int) -> bool:
        return not self.violations(bits)


def space(table: ClosureTable) -> AtomSpace:
    """The cached :class:`AtomSpace` of a table."""
    sp = table.__dict__.get("_atom_space")
    if sp is None:
        sp = AtomSpace(table)
        object.__setattr__(table, "_atom_space", sp)
    return sp


@dataclass(frozen=True)
class Atom:
    bits: int
    is_pi: bool
    is_dummy: bool = False
    table: ClosureTable | None = field(default=None, compare=False, hash=False, repr=False)

    @staticmethod
    def of(bits: int, table: ClosureTable) -> Atom:
        return Atom(bits, space(table).is_pi(bits), False, table)

    def contains(self, item: int) -> bool:
        return bool((self.bits >> item) & 1)

    def ids(self) -> frozenset[int]:
        return frozenset(i for i in range(self.bits.bit_length()) if (self.bits >> i) & 1)


DUMMY = Atom(0, False, True)


def _codes(mask: int) -> frozenset[int]:
    return frozenset(i for i in range(mask.bit_length()) if (mask >> i) & 1)


def req_mask(F: Atom, rel: Rel) -> int:
    if F.is_dummy:
        return 0
    return space(F.table).req(F.bits, rel)


def obs_mask(F: Atom) -> int:
    if F.is_dummy:
        return 0
    return space(F.table).obs(F.bits)


def req(F: Atom, rel: Rel) -> frozenset[int]:
    """Literal codes psi of the closure with <rel> psi in F."""
    return _codes(req_mask(F, rel))


def obs(F: Atom) -> frozenset[int]:
    """Literal codes of the closure true in F."""
    return _codes(obs_mask(F))


def rel_bbar(F: Atom, G: Atom) -> bool:
    """Consistency of F with a cell G that extends it to the right."""
    rb_f, rb_g = req_mask(F, Rel.BBAR), req_mask(G, Rel.BBAR)
    ob_f, ob_g = obs_mask(F), obs_mask(G)
    rB_f, rB_g = req_mask(F, Rel.B), req_mask(G, Rel.B)
    return (ob_g | rb_g) & ~rb_f == 0 and (ob_f | rB_f) & ~rB_g == 0


def rel_a(F: Atom, G: Atom) -> bool:
    """Consistency of F with a cell G that meets it."""
    return req_mask(F, Rel.A) == obs_mask(G) | req_mask(G, Rel.B) | req_mask(G, Rel.BBAR)


def is_atom(bits: int, table: ClosureTable) -> bool:
    return space(table).is_atom(bits)


def f_phi(sigma: Iterable[int], table: ClosureTable) -> Atom | None:
    """The atom whose letters and diamonds are exactly ``sigma``, if any."""
    sp = space(table)
    sigma = frozenset(sigma)
    extra = sigma - table.sigma_t
    if extra:
        raise ValueError(f"ids {sorted(extra)} are not letters or requests")
    bits = 0
    for i in sigma:
        bits |= 1 << i
    bits = sp.complete(bits)
    if not sp.is_atom(bits):
        return None
    return Atom.of(bits, table)


class AtomList(list):
    """A list of atoms with a flag telling whether it is exhaustive."""

    complete: bool = True


def _point_layouts(sp: AtomSpace) -> Iterator[tuple[int, list, list[int]]]:
    """Propagated search space of point atoms.

    For every assignment of the closure-level variables that can be extended
    to a point atom, yield ``(bits, groups, others)``: ``groups`` lists, per
    closure literal, the admissible settings of its extra <A>/<Bb> diamonds,
    and ``others`` are extra diamonds left unconstrained.
    """
    table = sp.table
    closure_vars = [i for i in sp.sigma_t if i in table.closure_ids and i != sp.pi_id]
    extra_vars = [i for i in sp.sigma_t if i not in table.closure_ids]
    point_vars = [i for i in closure_vars if i != sp.sim_id]
    forced = 1 << sp.sim_id if sp.sim_id is not None else 0
    for combo in itertools.product((0, 1), repeat=len(point_vars)):
        bits = forced
        for var, v in zip(point_vars, combo):
            if v:
                bits |= 1 << var
        bits = sp.complete(bits)
        groups: list[list[list[int]]] = []
        used: set[int] = set()
        ok = True
        for i in sp.closure:
            for positive in (True, False):
                code = lit_code(i, positive)
                a_id = sp.diamond_of.get((Rel.A, code))
                b_id = sp.diamond_of.get((Rel.BBAR, code))
                options = []
                for a_val in (0, 1):
                    for b_val in (0, 1):
                        if a_id is None and a_val or b_id is None and b_val:
                            continue
                        if lit_true(bits, code) and not a_val:
                            continue
                        if a_val and not lit_true(bits, code) and not b_val:
                            continue
                        setting = [(a_id, a_val), (b_id, b_val)]
                        if any(
                            var is not None and var in table.closure_ids and ((bits >> var) & 1) != v
                            for var, v in setting
                        ):
                            continue
                        options.append(
                            [var for var, v in setting if var is not None and v and var not in table.closure_ids]
                        )
                if not options:
                    ok = False
                    break
                used.update(var for var in (a_id, b_id) if var is not None)
                unique = []
                for opt in options:
                    if opt not in unique:
                        unique.append(opt)
                groups.append(unique)
            if not ok:
                break
        if ok:
            yield bits, groups, [i for i in extra_vars if i not in used]


def iter_atom_bits(table: ClosureTable) -> Iterator[int]:
    """Yield every atom bitset by propagating the atom conditions."""
    sp = space(table)
    free = [i for i in sp.sigma_t if i != sp.pi_id]
    base = 1 << sp.pi_id
    # Atoms of non-point intervals: no constraint beyond the Boolean layer.
    for combo in itertools.product((0, 1), repeat=len(free)):
        bits = base
        for var, v in zip(free, combo):
            if v:
                bits |= 1 << var
        yield sp.complete(bits)
    for bits, groups, others in _point_layouts(sp):
        for opt in itertools.product((0, 1), repeat=len(others)):
            obits = bits
            for var, v in zip(others, opt):
                if v:
                    obits |= 1 << var
            for choice in itertools.product(*groups):
                cbits = obits
                for part in choice:
                    for var in part:
                        cbits |= 1 << var
                yield cbits


def count_atoms(table: ClosureTable) -> int:
    """Number of atoms, computed from the propagated layout without listing them."""
    sp = space(table)
    total = 2 ** (len(sp.sigma_t) - 1)
    for _bits, groups, others in _point_layouts(sp):
        n = 2 ** len(others)
        for g in groups:
            n *= len(g)
        total += n
    return total


def enumerate_atoms(table: ClosureTable, limit: int | None = None) -> AtomList:
    """All atoms of the table, or the first ``limit`` with ``complete=False``."""
    out = AtomList()
    for bits in iter_atom_bits(table):
        if limit is not None and len(out) >= limit:
            out.complete = False
            break
        out.append(Atom.of(bits, table))
    return out


# ---------------------------------------------------------------------------
# Compass structures


@dataclass(frozen=True)
class CompassStructure:
    n: int
    tau: dict  # (x, y) -> Atom for x <= y
    table: ClosureTable = field(compare=False, repr=False)

    def cell(self, x: int, y: int) -> Atom:
        if x > y:
            return DUMMY
        return self.tau[(x, y)]

    def sim(self, x: int, y: int) -> bool:
        sid = self.table.sim_id
        if sid is None:
            return x == y
        a, b = min(x, y), max(x, y)
        return self.cell(a, b).contains(sid)

    def with_cell(self, x: int, y: int, atom: Atom) -> CompassStructure:
        tau = dict(self.tau)
        tau[(x, y)] = atom
        return CompassStructure(self.n, tau, self.table)


def compass_from_structure(M: IntervalStructure, table: ClosureTable) -> CompassStructure:
    """Label every interval of ``M`` with the atom of its type."""
    types = type_bits(M, table)
    tau = {}
    for (x, y), bits in types.items():
        atom = f_phi([i for i in table.sigma_t if (bits >> i) & 1], table)
        if atom is None or atom.bits != bits:
            raise AssertionError(f"type of [{x},{y}] is not determined by its letters and requests")
        tau[(x, y)] = atom
    return CompassStructure(M.n, tau, table)


@dataclass(frozen=True)
class Violation:
    kind: str
    cell: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.cell}: {self.detail}"


def _raw_structure(G: CompassStructure) -> IntervalStructure:
    table = G.table
    letters = {i: table.items[i].name for i in table.letter_ids if isinstance(table.items[i], Prop)}
    val = {}
    for (x, y), atom in G.tau.items():
        names = [name for i, name in letters.items() if atom.contains(i)]
        if names:
            val[(x, y)] = names
    classes = [[x, y] for (x, y) in G.tau if x < y and G.sim(x, y)]
    return IntervalStructure.build(G.n, val, classes)


def validate_compass(G: CompassStructure, fulfillment: bool = True) -> list[Violation]:
    """Report every consistency (and optionally fulfillment) violation."""
    table = G.table
    sp = space(table)
    n = G.n
    out: list[Violation] = []
    for (x, y) in intervals(n):
        if (x, y) not in G.tau:
            out.append(Violation("missing", (x, y), "no atom"))
    if out:
        return out
    for (x, y), atom in G.tau.items():
        for reason in sp.violations(atom.bits):
            out.append(Violation("atom", (x, y), reason))
        if atom.is_pi != (x == y):
            out.append(Violation("pi", (x, y), "point atoms must sit exactly on the diagonal"))
    if table.sim_id is not None:
        for x in range(n):
            if not G.sim(x, x):
                out.append(Violation("sim-reflexive", (x, x), "x ~ x fails"))
        for x in range(n):
            for y in range(x + 1, n):
                for z in range(y + 1, n):
                    xy, yz, xz = G.sim(x, y), G.sim(y, z), G.sim(x, z)
                    if (xy and yz and not xz) or (xz and yz and not xy) or (xz and xy and not yz):
                        out.append(Violation("sim-transitive", (x, y, z), "equivalence broken"))
    for (x, y), F in G.tau.items():
        for z in range(y + 1, n):
            if not rel_bbar(F, G.cell(x, z)):
                out.append(Violation("bbar", (x, y, z), f"[{x},{y}] -> [{x},{z}] inconsistent"))
        for z in range(y, n):
            if not rel_a(F, G.cell(y, z)):
                out.append(Violation("a", (x, y, z), f"[{x},{y}] -> [{y},{z}] inconsistent"))
    if not fulfillment:
        return out
    for (x, y), F in G.tau.items():
        for rel in (Rel.A, Rel.B, Rel.BBAR):
            mask = req_mask(F, rel)
            for code in _codes(mask):
                if rel is Rel.A:
                    cands = [(y, z) for z in range(y, n)]
                elif rel is Rel.B:
                    cands = [(x, z) for z in range(x, y)]
                else:
                    cands = [(x, z) for z in range(y + 1, n)]
                if not any(lit_true(G.cell(*q).bits, code) for q in cands):
                    item = table.name(code >> 1)
                    text = item if not code & 1 else "!" + item
                    out.append(
                        Violation("fulfillment", (x, y), f"<{rel}> request {text} unfulfilled")
                    )
    if sp.diamonds[Rel.ABAR]:
        # No local rule exists for this direction; check it on the structure.
        mc = ModelChecker(_raw_structure(G))
        for i, _code in sp.diamonds[Rel.ABAR]:
            grid = mc.table(table.items[i])
            for (x, y), F in G.tau.items():
                if grid[x][y] != F.contains(i):
                    out.append(
                        Violation("fulfillment", (x, y), f"{table.name(i)} disagrees with the structure")
                    )
    return out


def structure_from_compass(G: CompassStructure) -> IntervalStructure:
    """Read an interval structure off a fulfilling compass."""
    report = validate_compass(G, fulfillment=True)
    if report:
        raise ValueError("compass is not consistent and fulfilling: " + "; ".join(map(str, report[:5])))
    return _raw_structure(G)


def dump_compass(G: CompassStructure) -> str:
    lines = []
    for x, y in intervals(G.n):
        atom = G.cell(x, y)
        lines.append(f"{x} {y} : " + ", ".join(G.table.names(atom.ids())))
    return "\n".join(lines) + "\n"


__all__ = [
    "Atom",
    "AtomList",
    "AtomSpace",
    "CompassStructure",
    "DUMMY",
    "Violation",
    "compass_from_structure",
    "count_atoms",
    "dump_compass",
    "enumerate_atoms",
    "f_phi",
    "is_atom",
    "iter_atom_bits",
    "lit_code",
    "lit_true",
    "obs",
    "obs_mask",
    "rel_a",
    "rel_bbar",
    "req",
    "req_mask",
    "space",
    "structure_from_compass",
    "validate_compass",
]
