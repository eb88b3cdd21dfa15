"""Formula syntax for the interval logics handled by this package.

Formulas are immutable dataclass trees.  ``normalize`` rewrites any formula
into the primitive basis ``{Prop, Sim, FalseConst, Not, Or, Diamond}``;
``closure`` indexes the subformulas of a normalized formula together with the
modal extensions used by atoms and by the synthesis game.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class Rel(enum.Enum):
    """Allen relations available as modalities."""

    A = "A"
    ABAR = "Ab"
    B = "B"
    BBAR = "Bb"

    def __str__(self) -> str:
        return self.value


REL_ORDER = (Rel.A, Rel.ABAR, Rel.B, Rel.BBAR)


class Formula:
    """Base class for formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Prop(Formula):
    name: str

    def __repr__(self) -> str:
        return f"Prop({self.name!r})"


@dataclass(frozen=True, repr=False)
class Sim(Formula):
    def __repr__(self) -> str:
        return "Sim()"


@dataclass(frozen=True, repr=False)
class TrueConst(Formula):
    def __repr__(self) -> str:
        return "TrueConst()"


@dataclass(frozen=True, repr=False)
class FalseConst(Formula):
    def __repr__(self) -> str:
        return "FalseConst()"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    child: Formula

    def __repr__(self) -> str:
        return f"Not({self.child!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Diamond(Formula):
    rel: Rel
    child: Formula

    def __repr__(self) -> str:
        return f"Diamond({self.rel.name}, {self.child!r})"


@dataclass(frozen=True, repr=False)
class Box(Formula):
    rel: Rel
    child: Formula

    def __repr__(self) -> str:
        return f"Box({self.rel.name}, {self.child!r})"


TRUE = TrueConst()
FALSE = FalseConst()
SIM = Sim()
KEYWORDS = frozenset({"true", "false"})
IDENT_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")


def is_identifier(name: str) -> bool:
    return bool(IDENT_RE.match(name)) and name not in KEYWORDS


# ---------------------------------------------------------------------------
# Parsing


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula text; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(r"\s+|->|[|&!<>\[\]()~]|[A-Za-z_][A-Za-z0-9_]*|.", re.S)


@dataclass
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    for match in _TOKEN_RE.finditer(text):
        chunk = match.group()
        if not chunk.isspace():
            tokens.append(_Token(chunk, line, col))
        for ch in chunk:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
    tokens.append(_Token("", line, col))
    return tokens


_MODALITIES = {"A": Rel.A, "Ab": Rel.ABAR, "B": Rel.B, "Bb": Rel.BBAR}


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(message, tok.line, tok.column)

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text:
            found = repr(tok.text) if tok.text else "end of input"
            raise self.fail(f"expected {text!r}, found {found}")
        return self.take()

    def parse(self) -> Formula:
        result = self.imp()
        if self.peek().text:
            raise self.fail(f"unexpected token {self.peek().text!r}")
        return result

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek().text == "->":
            self.take()
            return Or(Not(left), self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.peek().text == "|":
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.peek().text == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def modality(self, closer: str) -> Rel:
        tok = self.take()
        if tok.text not in _MODALITIES:
            raise self.fail(f"unknown modality {tok.text!r}", tok)
        self.expect(closer)
        return _MODALITIES[tok.text]

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.text == "<":
            self.take()
            rel = self.modality(">")
            return Diamond(rel, self.unary())
        if tok.text == "[":
            self.take()
            rel = self.modality("]")
            return Box(rel, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.take()
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        if tok.text == "~":
            return SIM
        if tok.text == "(":
            inner = self.imp()
            self.expect(")")
            return inner
        if is_identifier(tok.text):
            return Prop(tok.text)
        found = repr(tok.text) if tok.text else "end of input"
        raise self.fail(f"expected a formula, found {found}", tok)


def parse_formula(text: str) -> Formula:
    """Parse formula text into an AST (see README for the grammar)."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing

_LEVEL_OR, _LEVEL_AND, _LEVEL_UNARY = 1, 2, 3


def _level(f: Formula) -> int:
    if isinstance(f, Or):
        return _LEVEL_OR
    if isinstance(f, And):
        return _LEVEL_AND
    return _LEVEL_UNARY


def to_text(f: Formula) -> str:
    """Render a formula in the concrete grammar, with minimal parentheses."""
    return _render(f, 0)


def _render(f: Formula, need: int) -> str:
    if isinstance(f, Prop):
        text = f.name
    elif isinstance(f, Sim):
        text = "~"
    elif isinstance(f, TrueConst):
        text = "true"
    elif isinstance(f, FalseConst):
        text = "false"
    elif isinstance(f, Not):
        text = "!" + _render(f.child, _LEVEL_UNARY)
    elif isinstance(f, Diamond):
        text = f"<{f.rel}> " + _render(f.child, _LEVEL_UNARY)
    elif isinstance(f, Box):
        text = f"[{f.rel}] " + _render(f.child, _LEVEL_UNARY)
    elif isinstance(f, Or):
        text = _render(f.left, _LEVEL_OR) + " | " + _render(f.right, _LEVEL_AND)
    elif isinstance(f, And):
        text = _render(f.left, _LEVEL_AND) + " & " + _render(f.right, _LEVEL_UNARY)
    else:
        raise TypeError(f"not a formula: {f!r}")
    if _level(f) < need:
        return "(" + text + ")"
    return text


# ---------------------------------------------------------------------------
# Normalization and traversal


def neg(f: Formula) -> Formula:
    """Negate without stacking double negations."""
    return f.child if isinstance(f, Not) else Not(f)


def normalize(f: Formula) -> Formula:
    """Rewrite into the primitive basis; idempotent."""
    if isinstance(f, (Prop, Sim, FalseConst)):
        return f
    if isinstance(f, TrueConst):
        return Not(FALSE)
    if isinstance(f, Not):
        return neg(normalize(f.child))
    if isinstance(f, Or):
        return Or(normalize(f.left), normalize(f.right))
    if isinstance(f, And):
        return neg(Or(neg(normalize(f.left)), neg(normalize(f.right))))
    if isinstance(f, Diamond):
        return Diamond(f.rel, normalize(f.child))
    if isinstance(f, Box):
        return neg(Diamond(f.rel, neg(normalize(f.child))))
    raise TypeError(f"not a formula: {f!r}")


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Diamond, Box)):
        return (f.child,)
    if isinstance(f, (Or, And)):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """Post-order traversal, each distinct subformula once."""
    seen: set[Formula] = set()
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        node, expanded = stack.pop()
        if node in seen:
            continue
        if expanded:
            seen.add(node)
            yield node
            continue
        stack.append((node, True))
        for child in reversed(children(node)):
            if child not in seen:
                stack.append((child, False))


def letters(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Prop))


def uses_sim(f: Formula) -> bool:
    return any(isinstance(g, Sim) for g in subformulas(f))


def modalities(f: Formula) -> frozenset[Rel]:
    return frozenset(g.rel for g in subformulas(f) if isinstance(g, (Diamond, Box)))


def depth(f: Formula) -> int:
    kids = children(f)
    return 1 + max((depth(c) for c in kids), default=0)


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))


# ---------------------------------------------------------------------------
# Fragments


class FragmentError(ValueError):
    """A formula uses a modality or ∼ outside the requested fragment."""


@dataclass(frozen=True)
class Fragment:
    modalities: frozenset[Rel]
    sim_allowed: bool

    def __str__(self) -> str:
        mods = "".join(r.value for r in REL_ORDER if r in self.modalities)
        return mods + ("~" if self.sim_allowed else "")

    def conforms(self, f: Formula) -> bool:
        return modalities(f) <= self.modalities and (self.sim_allowed or not uses_sim(f))

    @staticmethod
    def default_for(f: Formula) -> Fragment:
        """Smallest named fragment containing ``f``."""
        mods = frozenset({Rel.A, Rel.B, Rel.BBAR}) | modalities(f)
        return Fragment(mods, uses_sim(f))


ABB = Fragment(frozenset({Rel.A, Rel.B, Rel.BBAR}), False)
ABB_SIM = Fragment(frozenset({Rel.A, Rel.B, Rel.BBAR}), True)
AABB = Fragment(frozenset(REL_ORDER), False)
AABB_SIM = Fragment(frozenset(REL_ORDER), True)


# ---------------------------------------------------------------------------
# Closure tables

SING = neg(Diamond(Rel.B, neg(FALSE)))  # normalized [B]false
PI_DIAMOND = Diamond(Rel.B, Not(FALSE))  # the unsigned form of [B]false


@dataclass(frozen=True)
class ClosureTable:
    """Indexed closure, extended closure and request sets of a formula.

    Items are unsigned representatives: no item is a ``Not``.  Item ids are
    ordered so that every item comes after the items its children refer to.
    A literal is an (item id, polarity) pair; its integer code is
    ``2 * id + (0 if positive else 1)``.
    """

    phi: Formula
    fragment: Fragment
    items: tuple[Formula, ...]
    closure_ids: frozenset[int]
    eclosure_ids: frozenset[int]
    teclosure_ids: frozenset[int]
    request_ids: frozenset[int]
    sigma: frozenset[str]
    letter_ids: frozenset[int]
    ext_modalities: frozenset[Rel]
    index: dict = field(compare=False, repr=False, hash=False)

    @property
    def sigma_t(self) -> frozenset[int]:
        """Letters plus all temporal requests, as item ids."""
        return self.letter_ids | self.teclosure_ids

    def game_alphabet(self, requests: str = "closure") -> frozenset[int]:
        """Item ids players may declare during a run.

        ``requests="closure"`` declares only the diamonds of the closure;
        ``"extended"`` declares every diamond of the extended closure.
        """
        if requests == "closure":
            return self.letter_ids | self.request_ids
        if requests == "extended":
            return self.sigma_t
        raise ValueError(f"unknown request mode {requests!r}")

    def literal(self, f: Formula) -> tuple[int, bool]:
        """(item id, polarity) of a normalized formula in the table."""
        if isinstance(f, Not):
            return self.index[f.child], False
        return self.index[f], True

    def id_of(self, f: Formula) -> int:
        """Item id of an unsigned normalized formula."""
        return self.index[f]

    def lookup(self, f: Formula) -> tuple[int, bool]:
        """Normalize ``f`` and return its literal."""
        return self.literal(normalize(f))

    @property
    def root(self) -> tuple[int, bool]:
        return self.literal(self.phi)

    @property
    def false_id(self) -> int:
        return self.index[FALSE]

    @property
    def pi_id(self) -> int:
        """Id of ``<B> !false``; an interval is a point iff this is false."""
        return self.index[PI_DIAMOND]

    @property
    def sim_id(self) -> int | None:
        return self.index.get(SIM)

    def name(self, i: int) -> str:
        return to_text(self.items[i])

    def names(self, ids: Iterable[int]) -> list[str]:
        return [self.name(i) for i in sorted(ids)]

    def parse_ids(self, text: str) -> frozenset[int]:
        """Parse a comma separated list of formulas into item ids."""
        out: set[int] = set()
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            f = normalize(parse_formula(chunk))
            if isinstance(f, Not) or f not in self.index:
                raise ValueError(f"{chunk!r} is not an item of the closure table")
            out.add(self.index[f])
        return frozenset(out)

    def __len__(self) -> int:
        return len(self.items)


def closure(phi: Formula, frag: Fragment | None = None) -> ClosureTable:
    """Build the closure table of ``phi`` within ``frag``.

    The closure is seeded with ``false`` and ``[B]false`` (and with ``~`` when
    the fragment allows it).  The extended closure adds ``<R>psi`` and
    ``<R>!psi`` for every closure member ``psi`` and every R in
    ``(frag ∩ {A, B, Bb}) ∪ modalities(phi)``.
    """
    if frag is None:
        frag = Fragment.default_for(phi)
    if not frag.conforms(phi):
        raise FragmentError(f"formula uses constructs outside fragment {frag}")
    nphi = normalize(phi)
    seeds: list[Formula] = [FALSE, PI_DIAMOND]
    if frag.sim_allowed:
        seeds.append(SIM)

    items: list[Formula] = []
    index: dict[Formula, int] = {}

    def add(f: Formula) -> None:
        for g in subformulas(f):
            if isinstance(g, Not) or g in index:
                continue
            index[g] = len(items)
            items.append(g)

    for s in seeds:
        add(s)
    add(nphi)
    closure_ids = frozenset(range(len(items)))

    ext = (frag.modalities & {Rel.A, Rel.B, Rel.BBAR}) | modalities(nphi)
    base = list(items)
    for rel in REL_ORDER:
        if rel not in ext:
            continue
        for g in base:
            for arg in (g, Not(g)):
                d = Diamond(rel, arg)
                if d not in index:
                    index[d] = len(items)
                    items.append(d)
    eclosure_ids = frozenset(range(len(items)))
    te = frozenset(i for i, g in enumerate(items) if isinstance(g, Diamond))
    req = frozenset(i for i in closure_ids if isinstance(items[i], Diamond))
    letter_ids = frozenset(i for i in closure_ids if isinstance(items[i], (Prop, Sim)))
    sigma = frozenset(
        "~" if isinstance(items[i], Sim) else items[i].name for i in letter_ids
    )
    return ClosureTable(
        phi=nphi,
        fragment=frag,
        items=tuple(items),
        closure_ids=closure_ids,
        eclosure_ids=eclosure_ids,
        teclosure_ids=te,
        request_ids=req,
        sigma=sigma,
        letter_ids=letter_ids,
        ext_modalities=frozenset(ext),
        index=index,
    )


# ---------------------------------------------------------------------------
# Derived operators


def conj(parts: Sequence[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Sequence[Formula]) -> Formula:
    """Left-nested disjunction; the empty disjunction is ``false``."""
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def _letter(name: str) -> Prop:
    if not is_identifier(name):
        raise ValueError(f"invalid letter name {name!r}")
    return Prop(name)


def sing() -> Formula:
    """Holds exactly on point intervals."""
    return Box(Rel.B, FALSE)


def unit() -> Formula:
    """Holds exactly on intervals [x, x+1]."""
    return Box(Rel.B, Box(Rel.B, FALSE))


def box_g(psi: Formula) -> Formula:
    """Evaluated at [0,0]: psi holds on every interval."""
    return Box(Rel.A, Box(Rel.A, psi))


def diamond_g(psi: Formula) -> Formula:
    return Diamond(Rel.A, Diamond(Rel.A, psi))


def box_cap(psi: Formula) -> Formula:
    """psi on every interval starting inside [x, y) other than [x, y] itself."""
    return And(Box(Rel.B, Box(Rel.A, psi)), Box(Rel.B, psi))


def diamond_cap(psi: Formula) -> Formula:
    return conj(
        [
            Box(Rel.B, Not(psi)),
            Diamond(Rel.B, Diamond(Rel.A, psi)),
            Box(Rel.B, implies(Diamond(Rel.A, psi), Box(Rel.B, Box(Rel.A, Not(psi))))),
        ]
    )


def psi_inj(p: str, p_sp: str, s: str) -> Formula:
    """Forces injectivity of the transfer letter against a Spoiler letter."""
    pf, spf, sf = _letter(p), _letter(p_sp), _letter(s)
    pi = sing()
    return box_g(
        And(
            implies(And(pf, spf), Box(Rel.A, implies(Not(pi), sf))),
            implies(And(pf, Not(spf)), Box(Rel.A, implies(Not(pi), Not(sf)))),
        )
    )


def psi_sur(counters: Sequence[str], new: str, p: str) -> Formula:
    """Every counter interval not marked new is the target of a transfer arc.

    One implication per counter letter, conjoined under a single box_g.
    """
    nf, pf = _letter(new), _letter(p)
    parts = [
        implies(And(_letter(c), Not(nf)), Diamond(Rel.ABAR, pf)) for c in counters
    ]
    return box_g(conj(parts))


def phi_sim_inj(states: Sequence[str]) -> Formula:
    """Distinct equivalent points are separated by a state interval."""
    cross = disj([Diamond(Rel.B, Diamond(Rel.A, _letter(q))) for q in states])
    return box_g(implies(And(SIM, Not(sing())), cross))


_BUILDERS = {
    "sing": sing,
    "unit": unit,
    "box_g": box_g,
    "diamond_g": diamond_g,
    "box_cap": box_cap,
    "diamond_cap": diamond_cap,
    "psi_inj": psi_inj,
    "psi_sur": psi_sur,
    "phi_sim_inj": phi_sim_inj,
}


def build_derived(kind: str, *args) -> Formula:
    """Dispatch to one of the derived-operator constructors by name."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown derived operator {kind!r}") from None
    return builder(*args)
