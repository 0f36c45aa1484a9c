"""Built-in example games, their standard queries, and reference strategies.

These are the small games used throughout the test suite and exposed by the
CLI `examples` command.  Chance branches whose weights are not forced by
anything qualitative are uniform.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable

from .game import Owner, StochasticGame, parse_game
from .query import Query, parse_query
from .strategy import StrategyAutomaton, uniform

FIG1_TEXT = """\
game fig1
state s0 p1
state s1 p2
state s2 chance
state s3 chance
state s4 chance
init s0
edge s0 s1
edge s0 s2
edge s1 s3
edge s1 s4
"""

# One player-2 fork, two chance relays, and a player-1 fork whose correct
# choice depends on which relay was used.
FIG2_TEXT = """\
game fig2
state s0 p2
state s1 chance
state s2 chance
state A chance
state B chance
state s3 p1
state C chance
state D chance
init s0
edge s0 s1
edge s0 s2
prob s1 A 1/2
prob s1 s3 1/2
prob s2 B 1/2
prob s2 s3 1/2
edge s3 C
edge s3 D
"""

# A loop through a chance exit; the correct player-1 choice depends on the
# order in which A and B were seen, which the visited set does not record.
FIG3_TEXT = """\
game fig3
state s0 p2
state A chance
state B chance
state s1 p1
state C chance
state D chance
state E chance
state F chance
init s0
edge s0 A
edge s0 B
prob A s1 1/1
prob B s1 1/1
edge s1 C
edge s1 D
edge s1 E
prob E F 1/2
prob E s0 1/2
"""

# Stay-or-exit game: player 1 may stay at s0 forever or move to terminal s1.
TWO_STATE_TEXT = """\
game stayexit
state s0 p1
state s1 chance
init s0
edge s0 s0
edge s0 s1
"""

FIG1_QUERY = "AS F {s3} | (NZ F {s2} & NZ F {s4})"
FIG1_QUERY_AS_VARIANT = "AS F {s3} | (!AS F {s3,s4} & NZ F {s4})"
FIG1_QUERY_NZ_VARIANT = "!NZ F {s2,s4} | (NZ F {s2} & NZ F {s4})"

FIG2_QUERY = "(NZ F {A} & NZ F {B}) | (AS F {B,D} & NZ F {D}) | (AS F {A,C} & NZ F {C})"

FIG3_QUERY = (
    "(AS F {A} & NZ F {B} & NZ F {C} & AS G ~{D})"
    " | (NZ F {A} & AS F {B} & AS G ~{C} & NZ F {D})"
    " | (NZ G ~{A} & NZ G ~{B})"
    " | (AS F {F} & (AS G ~{A} | AS G ~{B}))"
)

GAME_TEXTS = {"fig1": FIG1_TEXT, "fig2": FIG2_TEXT, "fig3": FIG3_TEXT}
QUERY_TEXTS = {"fig1": FIG1_QUERY, "fig2": FIG2_QUERY, "fig3": FIG3_QUERY}


def fig1() -> StochasticGame:
    return parse_game(FIG1_TEXT)


def fig2() -> StochasticGame:
    return parse_game(FIG2_TEXT)


def fig3() -> StochasticGame:
    return parse_game(FIG3_TEXT)


def two_state() -> StochasticGame:
    return parse_game(TWO_STATE_TEXT)


def fig1_query(game: StochasticGame) -> Query:
    return parse_query(FIG1_QUERY, game)


def fig2_query(game: StochasticGame) -> Query:
    return parse_query(FIG2_QUERY, game)


def fig3_query(game: StochasticGame) -> Query:
    return parse_query(FIG3_QUERY, game)


def fig2_strategy(game: StochasticGame) -> StrategyAutomaton:
    """Visited-set strategy for fig2: play C after s1 was seen, D after s2."""
    s = {name: game.index(name) for name in game.states}
    memories: list[frozenset[int]] = []
    update: dict[tuple[Hashable, int], Hashable] = {}
    output = {}

    def note(memory: frozenset[int]) -> frozenset[int]:
        if memory not in memories:
            memories.append(memory)
        return memory

    start = note(frozenset())
    # closure over the pairs reachable against any adversary
    frontier = [(start, s["s0"])]
    seen = set(frontier)
    while frontier:
        memory, state = frontier.pop()
        nxt = note(memory | {state})
        update[(memory, state)] = nxt
        if game.owners[state] is Owner.P1:
            choice = s["C"] if s["s1"] in memory else s["D"]
            output[(memory, state)] = uniform((choice,))
            moves = (choice,)
        else:
            moves = game.successors(state)
        for j in moves:
            pair = (nxt, j)
            if pair not in seen:
                seen.add(pair)
                frontier.append(pair)
    sigma = StrategyAutomaton(
        player=Owner.P1,
        memories=tuple(memories),
        init_memory=start,
        update=update,
        output=output,
    )
    sigma.validate_for(game)
    return sigma


def fig3_strategy(game: StochasticGame) -> StrategyAutomaton:
    """Order-aware strategy for fig3: loop through E until both A and B were
    seen, then play C when A came first and D when B came first.

    The memory records the order of first sightings, which the set of visited
    states cannot express.
    """
    s = {name: game.index(name) for name in game.states}
    memories = ("none", "a", "b", "ab", "ba")
    order_after = {
        ("none", s["A"]): "a",
        ("none", s["B"]): "b",
        ("a", s["B"]): "ab",
        ("b", s["A"]): "ba",
    }
    update: dict[tuple[Hashable, int], Hashable] = {}
    for memory in memories:
        for state in range(game.n):
            update[(memory, state)] = order_after.get((memory, state), memory)
    output = {}
    for memory in memories:
        if memory in ("none", "a", "b"):
            choice = s["E"]
        elif memory == "ab":
            choice = s["C"]
        else:
            choice = s["D"]
        output[(memory, s["s1"])] = uniform((choice,))
    sigma = StrategyAutomaton(
        player=Owner.P1,
        memories=memories,
        init_memory="none",
        update=update,
        output=output,
    )
    sigma.validate_for(game)
    return sigma


def two_state_stay_strategy(game: StochasticGame, rounds: int = 2) -> StrategyAutomaton:
    """Randomize between staying and exiting for `rounds` steps, then stay.

    Wins nonzero safety of {s0}; its visited-set uniformization keeps
    randomizing forever and loses it (the exit becomes almost sure).
    """
    if rounds < 2:
        raise ValueError("needs at least two randomizing rounds to defeat the uniformization")
    s0, s1 = game.index("s0"), game.index("s1")
    memories = tuple(range(rounds + 1))
    update: dict[tuple[Hashable, int], Hashable] = {}
    output = {}
    for memory in memories:
        nxt = min(memory + 1, rounds)
        update[(memory, s0)] = nxt
        update[(memory, s1)] = nxt
        if memory < rounds:
            output[(memory, s0)] = uniform((s0, s1))
        else:
            output[(memory, s0)] = ((s0, Fraction(1)),)
    sigma = StrategyAutomaton(
        player=Owner.P1,
        memories=memories,
        init_memory=0,
        update=update,
        output=output,
    )
    sigma.validate_for(game)
    return sigma
