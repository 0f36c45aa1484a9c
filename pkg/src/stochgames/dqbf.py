"""Dependency-quantified Boolean formulas: parsing, brute-force satisfiability,
and the reduction to a stochastic game with a positive reachability query.

A formula is in S-form: universal variables, then existential variables each
with an explicit dependency subset of the universals, then a propositional
matrix.  Satisfiability asks for one Skolem table per existential variable
making the matrix true under every universal assignment.

The reduction builds one branch per existential variable, entered uniformly
at random.  A branch walks one chooser module per variable; the module order
puts the dependencies of the branch's own variable first, then that variable,
then the remaining universals, then the remaining existentials.  The query
rewards player 1 for realizing a satisfying, branch-consistent assignment and
punishes player 2 for playing inconsistently across branches.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import DqbfFormatError, ResourceCapError
from .game import Owner, StochasticGame
from .query import And, Atom, Mode, Or, Query, Shape

DEFAULT_VAR_CAP = 4
DEFAULT_TUPLE_CAP = 1 << 20


@dataclass(frozen=True)
class BVar:
    name: str


@dataclass(frozen=True)
class BNot:
    child: "BoolExpr"


@dataclass(frozen=True)
class BAnd:
    children: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class BOr:
    children: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class BConst:
    value: bool


BoolExpr = Union[BVar, BNot, BAnd, BOr, BConst]


@dataclass(frozen=True)
class DqbfFormula:
    universals: tuple[str, ...]
    existentials: tuple[str, ...]
    dependencies: tuple[tuple[str, ...], ...]  # aligned with existentials
    matrix: BoolExpr

    def __post_init__(self) -> None:
        names = list(self.universals) + list(self.existentials)
        if len(set(names)) != len(names):
            raise DqbfFormatError("duplicate variable names")
        if len(self.dependencies) != len(self.existentials):
            raise DqbfFormatError("misaligned dependency table")
        universe = set(self.universals)
        for y, deps in zip(self.existentials, self.dependencies):
            for d in deps:
                if d not in universe:
                    raise DqbfFormatError(f"variable {y} depends on unknown {d!r}")
        for v in _matrix_vars(self.matrix):
            if v not in names:
                raise DqbfFormatError(f"matrix references unknown variable {v!r}")


def _matrix_vars(expr: BoolExpr) -> set[str]:
    if isinstance(expr, BVar):
        return {expr.name}
    if isinstance(expr, BNot):
        return _matrix_vars(expr.child)
    if isinstance(expr, (BAnd, BOr)):
        out: set[str] = set()
        for c in expr.children:
            out |= _matrix_vars(c)
        return out
    return set()


_BOOL_TOKEN_RE = re.compile(r"\s*(true|false|[A-Za-z_][A-Za-z0-9_]*|[!&|()])")


def _parse_bool_expr(text: str) -> BoolExpr:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _BOOL_TOKEN_RE.match(text, pos)
        if not m:
            rest = text[pos:].strip()
            if not rest:
                break
            raise DqbfFormatError(f"unexpected character {rest[0]!r} in matrix")
        tokens.append(m.group(1))
        pos = m.end()
    if not tokens:
        raise DqbfFormatError("empty matrix")

    index = 0

    def peek() -> Optional[str]:
        return tokens[index] if index < len(tokens) else None

    def take(expected: Optional[str] = None) -> str:
        nonlocal index
        tok = peek()
        if tok is None:
            raise DqbfFormatError("unexpected end of matrix")
        if expected is not None and tok != expected:
            raise DqbfFormatError(f"expected {expected!r}, found {tok!r}")
        index += 1
        return tok

    def parse_or() -> BoolExpr:
        items = [parse_and()]
        while peek() == "|":
            take()
            items.append(parse_and())
        return items[0] if len(items) == 1 else BOr(tuple(items))

    def parse_and() -> BoolExpr:
        items = [parse_unary()]
        while peek() == "&":
            take()
            items.append(parse_unary())
        return items[0] if len(items) == 1 else BAnd(tuple(items))

    def parse_unary() -> BoolExpr:
        tok = peek()
        if tok == "!":
            take()
            return BNot(parse_unary())
        if tok == "(":
            take()
            e = parse_or()
            take(")")
            return e
        name = take()
        if name == "true":
            return BConst(True)
        if name == "false":
            return BConst(False)
        if not re.match(r"[A-Za-z_]", name):
            raise DqbfFormatError(f"bad variable {name!r}")
        return BVar(name)

    expr = parse_or()
    if peek() is not None:
        raise DqbfFormatError(f"trailing input at {peek()!r}")
    return expr


def parse_dqbf(text: str) -> DqbfFormula:
    """Parse the line-based format (semicolons also separate directives)."""
    universals: list[str] = []
    existentials: list[str] = []
    dependencies: list[tuple[str, ...]] = []
    matrix: Optional[BoolExpr] = None

    for raw in text.replace(";", "\n").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("forall"):
            universals.extend(line[len("forall"):].split())
        elif line.startswith("exists"):
            m = re.match(r"exists\s+([A-Za-z_][A-Za-z0-9_]*)\s+deps\s*\{([^}]*)\}\s*\Z", line)
            if not m:
                raise DqbfFormatError(f"expected 'exists <id> deps {{...}}': {line!r}")
            existentials.append(m.group(1))
            deps = tuple(d.strip() for d in m.group(2).split(",") if d.strip())
            dependencies.append(deps)
        elif line.startswith("matrix"):
            if matrix is not None:
                raise DqbfFormatError("duplicate matrix line")
            matrix = _parse_bool_expr(line[len("matrix"):])
        else:
            raise DqbfFormatError(f"unknown directive in {line!r}")

    if matrix is None:
        raise DqbfFormatError("missing matrix")
    return DqbfFormula(
        universals=tuple(universals),
        existentials=tuple(existentials),
        dependencies=tuple(dependencies),
        matrix=matrix,
    )


def _eval_matrix(expr: BoolExpr, assignment: dict[str, bool]) -> bool:
    if isinstance(expr, BVar):
        return assignment[expr.name]
    if isinstance(expr, BNot):
        return not _eval_matrix(expr.child, assignment)
    if isinstance(expr, BAnd):
        return all(_eval_matrix(c, assignment) for c in expr.children)
    if isinstance(expr, BOr):
        return any(_eval_matrix(c, assignment) for c in expr.children)
    return expr.value


def dqbf_brute_sat(
    formula: DqbfFormula,
    var_cap: int = DEFAULT_VAR_CAP,
    tuple_cap: int = DEFAULT_TUPLE_CAP,
) -> bool:
    """Exhaustive satisfiability over all Skolem-table tuples.

    Each existential variable ranges over the 2^(2^|deps|) Boolean tables on
    its dependency set; the formula is satisfiable when some tuple makes the
    matrix true under all universal assignments.
    """
    n = len(formula.universals)
    m = len(formula.existentials)
    if n > var_cap or m > var_cap:
        raise ResourceCapError(f"formula exceeds the variable cap of {var_cap}")

    total = 1
    for deps in formula.dependencies:
        total *= 1 << (1 << len(deps))
        if total > tuple_cap:
            raise ResourceCapError(f"Skolem enumeration exceeds cap of {tuple_cap}")

    assignments = list(itertools.product((False, True), repeat=n))
    dep_positions = [
        tuple(formula.universals.index(d) for d in deps) for deps in formula.dependencies
    ]

    table_spaces = [range(1 << (1 << len(deps))) for deps in formula.dependencies]
    for tables in itertools.product(*table_spaces):
        ok = True
        for alpha in assignments:
            assignment = dict(zip(formula.universals, alpha))
            for j, y in enumerate(formula.existentials):
                cell = 0
                for bit, pos in enumerate(dep_positions[j]):
                    if alpha[pos]:
                        cell |= 1 << bit
                assignment[y] = bool(tables[j] >> cell & 1)
            if not _eval_matrix(formula.matrix, assignment):
                ok = False
                break
        if ok:
            return True
    return False


def _to_nnf(expr: BoolExpr, negate: bool = False) -> BoolExpr:
    """Push negations down to the variables."""
    if isinstance(expr, BVar):
        return BNot(expr) if negate else expr
    if isinstance(expr, BConst):
        return BConst(expr.value != negate)
    if isinstance(expr, BNot):
        return _to_nnf(expr.child, not negate)
    if isinstance(expr, BAnd):
        children = tuple(_to_nnf(c, negate) for c in expr.children)
        return BOr(children) if negate else BAnd(children)
    children = tuple(_to_nnf(c, negate) for c in expr.children)
    return BAnd(children) if negate else BOr(children)


def reduce_to_game(formula: DqbfFormula) -> tuple[StochasticGame, Query]:
    """Build the branch game and its positive reachability query.

    Raises when there is no existential variable: with no branches the
    construction is degenerate (the satisfiability question is then plain
    universal validity of the matrix and needs no game).
    """
    n = len(formula.universals)
    m = len(formula.existentials)
    if m == 0:
        raise DqbfFormatError("the reduction needs at least one existential variable")

    existential_set = set(formula.existentials)
    branch_orders: list[tuple[str, ...]] = []
    for j, yj in enumerate(formula.existentials):
        deps = formula.dependencies[j]
        dep_set = set(deps)
        order = [x for x in formula.universals if x in dep_set]
        order.append(yj)
        order.extend(x for x in formula.universals if x not in dep_set)
        order.extend(y for y in formula.existentials if y != yj)
        branch_orders.append(tuple(order))

    names: list[str] = ["s0"]
    owners: list[Owner] = [Owner.CHANCE]
    succ: list[Optional[tuple[int, ...]]] = [None]
    chance: list[Optional[tuple[tuple[int, Fraction], ...]]] = [None]

    def add_state(name: str, owner: Owner) -> int:
        names.append(name)
        owners.append(owner)
        succ.append(None)
        chance.append(None)
        return len(names) - 1

    top_states: dict[str, list[int]] = {v: [] for v in names_of_vars(formula)}
    bot_states: dict[str, list[int]] = {v: [] for v in names_of_vars(formula)}

    entry_of_branch: list[int] = []
    for j, order in enumerate(branch_orders, start=1):
        module_ids: list[tuple[int, int, int]] = []
        for v in order:
            owner = Owner.P1 if v in existential_set else Owner.P2
            chooser = add_state(f"{v}_b{j}", owner)
            top = add_state(f"{v}_b{j}_t", Owner.CHANCE)
            bot = add_state(f"{v}_b{j}_f", Owner.CHANCE)
            module_ids.append((chooser, top, bot))
            top_states[v].append(top)
            bot_states[v].append(bot)
        end = add_state(f"end_b{j}", Owner.CHANCE)
        entry_of_branch.append(module_ids[0][0])
        for k, (chooser, top, bot) in enumerate(module_ids):
            nxt = module_ids[k + 1][0] if k + 1 < len(module_ids) else end
            succ[chooser] = (top, bot)
            chance[top] = ((nxt, Fraction(1)),)
            chance[bot] = ((nxt, Fraction(1)),)
        chance[end] = ((end, Fraction(1)),)

    share = Fraction(1, m)
    chance[0] = tuple((entry, share) for entry in entry_of_branch)

    game = StochasticGame(
        name="reduction",
        states=tuple(names),
        owners=tuple(owners),
        init=0,
        succ=tuple(succ),
        chance=tuple(chance),
    )

    def top_set(v: str):
        return game.state_set(game.states[i] for i in top_states[v])

    def bot_set(v: str):
        return game.state_set(game.states[i] for i in bot_states[v])

    def literal_query(expr: BoolExpr) -> Query:
        if isinstance(expr, BVar):
            return Atom(Mode.AS, Shape.REACH, top_set(expr.name))
        if isinstance(expr, BNot):
            assert isinstance(expr.child, BVar)
            return Atom(Mode.AS, Shape.REACH, bot_set(expr.child.name))
        if isinstance(expr, BConst):
            # constants as trivially true/false atoms over the same game
            if expr.value:
                return Atom(Mode.AS, Shape.SAFE, game.full_set())
            return Atom(Mode.NZ, Shape.REACH, game.empty_set())
        if isinstance(expr, BAnd):
            return And(tuple(literal_query(c) for c in expr.children))
        return Or(tuple(literal_query(c) for c in expr.children))

    matrix_query = literal_query(_to_nnf(formula.matrix))

    consistency = And(
        tuple(
            Or((Atom(Mode.AS, Shape.REACH, top_set(y)), Atom(Mode.AS, Shape.REACH, bot_set(y))))
            for y in formula.existentials
        )
    )
    if n:
        defection = Or(
            tuple(
                And((Atom(Mode.NZ, Shape.REACH, top_set(x)), Atom(Mode.NZ, Shape.REACH, bot_set(x))))
                for x in formula.universals
            )
        )
    else:
        # the empty disjunction is false: an unreachable nonzero target
        defection = Atom(Mode.NZ, Shape.REACH, game.empty_set())

    query = Or((And((matrix_query, consistency)), defection))
    return game, query


def names_of_vars(formula: DqbfFormula) -> tuple[str, ...]:
    return tuple(formula.universals) + tuple(formula.existentials)
