"""Query AST, the textual query DSL, duality normalization, and classification.

A query is a Boolean combination of atoms (AS|NZ) x (F|G) x state-set, where
AS means probability exactly one, NZ strictly positive, F reachability, and G
safety.  Set literals are resolved eagerly against a game's state universe,
so complements stay closed.  All functions here are pure over immutable ASTs.

Grammar (precedence ! > & > |)::

    query := or
    or    := and ('|' and)*
    and   := unary ('&' unary)*
    unary := '!' unary | '(' query ')' | atom
    atom  := ('AS'|'NZ') ('F'|'G') set
    set   := '{' id (',' id)* '}' | '~' '{' id (',' id)* '}' | '{}' | '~' '{}'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Union

from .errors import QueryFormatError, ResourceCapError
from .game import StateSet, StochasticGame

DEFAULT_DNF_CAP = 4096


class Mode(Enum):
    AS = "AS"
    NZ = "NZ"


class Shape(Enum):
    REACH = "F"
    SAFE = "G"


@dataclass(frozen=True)
class Atom:
    mode: Mode
    shape: Shape
    target: StateSet


@dataclass(frozen=True)
class Not:
    child: "Query"


@dataclass(frozen=True)
class And:
    children: tuple["Query", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Query", ...]


Query = Union[Atom, Not, And, Or]


class Fragment(Enum):
    SINGLE = "SingleObjective"
    CONJUNCTION = "ConjunctionASNZ"
    DISJUNCTION = "DisjunctionASNZ"
    POSITIVE_AS = "PositiveAS"
    POSITIVE_NZ = "PositiveNZ"
    GENERAL_NO_NZ_SAFE = "GeneralNoNZSafe"
    GENERAL = "General"


DETERMINED_FRAGMENTS = frozenset(
    {
        Fragment.SINGLE,
        Fragment.CONJUNCTION,
        Fragment.DISJUNCTION,
        Fragment.POSITIVE_AS,
        Fragment.POSITIVE_NZ,
    }
)


# identifiers first so that keyword-prefixed names lex as one token;
# AS/NZ/F/G are recognized positionally by the parser
_TOKEN_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|[!&|(){},~])")


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            rest = text[pos:].strip()
            if not rest:
                break
            raise QueryFormatError(f"unexpected character {rest[0]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], game: StochasticGame):
        self.tokens = tokens
        self.game = game
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            raise QueryFormatError("unexpected end of query")
        if expected is not None and tok != expected:
            raise QueryFormatError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def parse(self) -> Query:
        q = self.parse_or()
        if self.peek() is not None:
            raise QueryFormatError(f"trailing input at {self.peek()!r}")
        return q

    def parse_or(self) -> Query:
        items = [self.parse_and()]
        while self.peek() == "|":
            self.take()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> Query:
        items = [self.parse_unary()]
        while self.peek() == "&":
            self.take()
            items.append(self.parse_unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary(self) -> Query:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.parse_unary())
        if tok == "(":
            self.take()
            q = self.parse_or()
            self.take(")")
            return q
        return self.parse_atom()

    def parse_atom(self) -> Atom:
        tok = self.take()
        if tok not in ("AS", "NZ"):
            raise QueryFormatError(f"expected AS or NZ, found {tok!r}")
        mode = Mode(tok)
        tok = self.take()
        if tok not in ("F", "G"):
            raise QueryFormatError(f"expected F or G, found {tok!r}")
        shape = Shape.REACH if tok == "F" else Shape.SAFE
        return Atom(mode, shape, self.parse_set())

    def parse_set(self) -> StateSet:
        complemented = False
        if self.peek() == "~":
            self.take()
            complemented = True
        self.take("{")
        names: list[str] = []
        if self.peek() != "}":
            names.append(self.take())
            while self.peek() == ",":
                self.take()
                names.append(self.take())
        self.take("}")
        for name in names:
            if not re.match(r"[A-Za-z_][A-Za-z0-9_]*\Z", name):
                raise QueryFormatError(f"bad state identifier {name!r}")
            if name not in self.game.states:
                raise QueryFormatError(f"unknown state {name!r}")
        target = self.game.state_set(names)
        return target.complement() if complemented else target


def parse_query(text: str, game: StochasticGame) -> Query:
    """Parse a query, resolving set literals against the game's states."""
    tokens = _tokenize(text)
    if not tokens:
        raise QueryFormatError("empty query")
    return _Parser(tokens, game).parse()


def query_to_text(query: Query, game: StochasticGame) -> str:
    """Serialize a query; round-trips through parse_query for the same game."""

    def set_text(target: StateSet) -> str:
        return "{" + ",".join(target.names(game)) + "}"

    def render(q: Query, level: int) -> str:
        # level: 0 inside or, 1 inside and, 2 inside unary
        if isinstance(q, Atom):
            return f"{q.mode.value} {q.shape.value} {set_text(q.target)}"
        if isinstance(q, Not):
            return "!" + render(q.child, 2)
        if isinstance(q, And):
            body = " & ".join(render(c, 1) for c in q.children)
            return f"({body})" if level >= 2 else body
        body = " | ".join(render(c, 0) for c in q.children)
        return f"({body})" if level >= 1 else body

    return render(query, 0)


def iter_atoms(query: Query) -> Iterator[Atom]:
    """Atoms in left-to-right order, including those under negations."""
    if isinstance(query, Atom):
        yield query
    elif isinstance(query, Not):
        yield from iter_atoms(query.child)
    else:
        for child in query.children:
            yield from iter_atoms(child)


def is_positive(query: Query) -> bool:
    return not any(True for _ in _iter_nots(query))


def _iter_nots(query: Query) -> Iterator[Not]:
    if isinstance(query, Not):
        yield query
        yield from _iter_nots(query.child)
    elif isinstance(query, (And, Or)):
        for child in query.children:
            yield from _iter_nots(child)


def dual_atom(atom: Atom) -> Atom:
    """The negation of an atom, expressed positively over the complement set."""
    mode = Mode.NZ if atom.mode is Mode.AS else Mode.AS
    shape = Shape.SAFE if atom.shape is Shape.REACH else Shape.REACH
    return Atom(mode, shape, atom.target.complement())


def negate_normalize(query: Query) -> Query:
    """Push negations to the leaves and remove them via the mode/shape dualities.

    The result is positive-form and equivalent under the query semantics; a
    query that is already positive is returned unchanged.
    """

    def positive(q: Query) -> Query:
        if isinstance(q, Atom):
            return q
        if isinstance(q, And):
            return And(tuple(positive(c) for c in q.children))
        if isinstance(q, Or):
            return Or(tuple(positive(c) for c in q.children))
        return negative(q.child)

    def negative(q: Query) -> Query:
        if isinstance(q, Atom):
            return dual_atom(q)
        if isinstance(q, And):
            return Or(tuple(negative(c) for c in q.children))
        if isinstance(q, Or):
            return And(tuple(negative(c) for c in q.children))
        return positive(q.child)

    result = positive(query)
    return query if result == query else result


def dual_query(query: Query) -> Query:
    """Positive form of the query's negation."""
    return negate_normalize(Not(query))


def classify(query: Query) -> Fragment:
    """Most specific fragment of a positive-form query, driving solver dispatch."""
    if not is_positive(query):
        raise ValueError("classification needs a positive-form query")
    atoms = tuple(iter_atoms(query))
    if isinstance(query, Atom):
        return Fragment.SINGLE
    if _flat_junction(query, And):
        return Fragment.CONJUNCTION
    if _flat_junction(query, Or):
        return Fragment.DISJUNCTION
    if all(a.mode is Mode.AS for a in atoms):
        return Fragment.POSITIVE_AS
    if all(a.mode is Mode.NZ for a in atoms):
        return Fragment.POSITIVE_NZ
    if any(a.mode is Mode.NZ and a.shape is Shape.SAFE for a in atoms):
        return Fragment.GENERAL
    return Fragment.GENERAL_NO_NZ_SAFE


def _flat_junction(query: Query, node_type: type) -> bool:
    """True when the query is a (possibly nested) pure junction of atoms."""
    if isinstance(query, Atom):
        return True
    if not isinstance(query, node_type):
        return False
    return all(_flat_junction(c, node_type) for c in query.children)


def conjuncts(query: Query) -> tuple[Atom, ...]:
    """Atoms of a pure conjunction, flattened left to right."""
    if isinstance(query, Atom):
        return (query,)
    if not isinstance(query, And):
        raise ValueError("not a pure conjunction of atoms")
    out: list[Atom] = []
    for child in query.children:
        out.extend(conjuncts(child))
    return tuple(out)


def disjuncts(query: Query) -> tuple[Atom, ...]:
    """Atoms of a pure disjunction, flattened left to right."""
    if isinstance(query, Atom):
        return (query,)
    if not isinstance(query, Or):
        raise ValueError("not a pure disjunction of atoms")
    out: list[Atom] = []
    for child in query.children:
        out.extend(disjuncts(child))
    return tuple(out)


def _atom_key(atom: Atom) -> tuple[str, str, int]:
    return (atom.mode.value, atom.shape.value, atom.target.mask)


def to_dnf(query: Query, cap: int = DEFAULT_DNF_CAP) -> Query:
    """Disjunctive normal form of a positive-form query.

    Atoms within a term are deduplicated and ordered canonically; duplicate
    terms are removed.  Raises ResourceCapError when the number of terms
    exceeds `cap`.
    """
    if not is_positive(query):
        raise ValueError("DNF needs a positive-form query")

    def terms_of(q: Query) -> list[tuple[Atom, ...]]:
        if isinstance(q, Atom):
            return [(q,)]
        if isinstance(q, Or):
            out: list[tuple[Atom, ...]] = []
            for child in q.children:
                out.extend(terms_of(child))
            _cap_check(out)
            return out
        assert isinstance(q, And)
        acc: list[tuple[Atom, ...]] = [()]
        for child in q.children:
            child_terms = terms_of(child)
            acc = [left + right for left in acc for right in child_terms]
            _cap_check(acc)
        return acc

    def _cap_check(terms: list) -> None:
        if len(terms) > cap:
            raise ResourceCapError(f"DNF exceeds cap of {cap} terms")

    seen: set[tuple] = set()
    normal_terms: list[tuple[Atom, ...]] = []
    for term in terms_of(query):
        unique = sorted({_atom_key(a): a for a in term}.items())
        normal = tuple(atom for _, atom in unique)
        key = tuple(k for k, _ in unique)
        if key not in seen:
            seen.add(key)
            normal_terms.append(normal)

    def term_query(term: tuple[Atom, ...]) -> Query:
        return term[0] if len(term) == 1 else And(term)

    if len(normal_terms) == 1:
        return term_query(normal_terms[0])
    return Or(tuple(term_query(t) for t in normal_terms))
