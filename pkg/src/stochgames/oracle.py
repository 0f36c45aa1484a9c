"""Ground-truth brute force at desk scale.

Strategies are enumerated over a memory class as assignments of successor
choices to the (memory, state) pairs actually reachable against arbitrary
opponent behavior, so choice points that a strategy's own earlier choices cut
off never multiply the space.  Outputs are either pure (one successor) or
uniform over a nonempty successor subset; for qualitative queries the
subset-uniform space is exhaustive over all randomized strategies with the
same memory skeleton, since satisfaction depends only on supports.

Verdicts are exhaustive within the declared classes and never claim more:
a NoWinnerInClass outcome is evidence, not a proof of nondeterminacy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Optional, Sequence, Union

from .errors import ResourceCapError
from .game import Owner, StateSet, StochasticGame
from .query import Atom, Mode, Query, Shape, iter_atoms
from .strategy import (
    InducedChain,
    StrategyAutomaton,
    eval_qualitative,
    induced_chain,
    uniform,
)


@dataclass(frozen=True)
class Memoryless:
    def label(self) -> str:
        return "memoryless"


@dataclass(frozen=True)
class TargetSetMemory:
    """Remember which of the given target sets have been visited so far."""

    targets: tuple[StateSet, ...]

    def label(self) -> str:
        return "targetset"


@dataclass(frozen=True)
class VisitedSetMemory:
    def label(self) -> str:
        return "visitedset"


@dataclass(frozen=True)
class ExplicitMemory:
    """All deterministic automata over an abstract memory set of a given size."""

    size: int

    def label(self) -> str:
        return f"explicit:{self.size}"


MemoryKind = Union[Memoryless, TargetSetMemory, VisitedSetMemory, ExplicitMemory]


@dataclass(frozen=True)
class OracleCaps:
    max_game_states: int = 6
    max_targets: int = 3
    max_memories: int = 64
    max_strategies: int = 200_000
    max_matrix: int = 24  # largest class rendered as a full matrix


DEFAULT_CAPS = OracleCaps()


def memory_kind_from_label(label: str, query: Optional[Query] = None) -> MemoryKind:
    """Parse a CLI memory-kind label; target-set memory tracks the query's atoms."""
    if label == "memoryless":
        return Memoryless()
    if label == "targetset":
        if query is None:
            raise ValueError("targetset memory needs a query to take targets from")
        targets: list[StateSet] = []
        for atom in iter_atoms(query):
            if atom.target not in targets:
                targets.append(atom.target)
        return TargetSetMemory(tuple(targets))
    if label == "visitedset":
        return VisitedSetMemory()
    if label.startswith("explicit:"):
        return ExplicitMemory(int(label.split(":", 1)[1]))
    raise ValueError(f"unknown memory kind {label!r}")


def _choice_options(successors: tuple[int, ...], outputs: str) -> tuple[tuple[int, ...], ...]:
    if outputs == "pure":
        return tuple((j,) for j in successors)
    if outputs == "subsets":
        options: list[tuple[int, ...]] = []
        for size in range(1, len(successors) + 1):
            options.extend(itertools.combinations(successors, size))
        return tuple(options)
    raise ValueError(f"unknown outputs mode {outputs!r}")


def _fixed_update(game: StochasticGame, kind: MemoryKind):
    """Initial memory and update function for the fixed-skeleton kinds."""
    if isinstance(kind, Memoryless):
        return "-", lambda memory, state: "-"
    if isinstance(kind, VisitedSetMemory):
        return frozenset(), lambda memory, state: memory | {state}
    if isinstance(kind, TargetSetMemory):
        bits = tuple(
            sum(1 << b for b, t in enumerate(kind.targets) if i in t)
            for i in range(game.n)
        )
        return 0, lambda memory, state: memory | bits[state]
    raise ValueError("not a fixed-update kind")


def enumerate_strategies(
    game: StochasticGame,
    player: Owner,
    kind: MemoryKind,
    outputs: str = "pure",
    caps: Optional[OracleCaps] = None,
) -> Iterator[StrategyAutomaton]:
    """Yield the strategies of the class in a canonical order, without duplicates.

    With a fixed memory skeleton the count is the product, over reachable
    (memory, owned state) pairs, of the number of output options.
    """
    caps = caps or DEFAULT_CAPS
    if player is Owner.CHANCE:
        raise ValueError("enumerate_strategies needs p1 or p2")
    produced = 0

    if isinstance(kind, ExplicitMemory):
        yield from _enumerate_explicit(game, player, kind, outputs, caps)
        return

    init_memory, update_fn = _fixed_update(game, kind)
    option_table = {
        state: tuple(
            (choice, uniform(choice))
            for choice in _choice_options(game.succ[state], outputs)
        )
        for state in range(game.n)
        if game.owners[state] is player
    }
    successor_table = [game.successors(state) for state in range(game.n)]
    next_memory_cache: dict[tuple[Hashable, int], Hashable] = {}

    def next_memory(memory: Hashable, state: int) -> Hashable:
        key = (memory, state)
        nxt = next_memory_cache.get(key)
        if nxt is None:
            nxt = update_fn(memory, state)
            next_memory_cache[key] = nxt
        return nxt

    # depth-first over choice assignments with explicit undo; `pending` only
    # ever grows at the tail, so backtracking truncates it.  Entries carry
    # the precomputed next memory.
    start = (init_memory, game.init, next_memory(init_memory, game.init))
    pending: list[tuple[Hashable, int, Hashable]] = [start]
    seen: set[tuple[Hashable, int]] = {(init_memory, game.init)}
    memory_count: dict[Hashable, int] = {init_memory: 1}
    assign: dict[tuple[Hashable, int], tuple] = {}

    def build() -> StrategyAutomaton:
        update = {}
        output = {}
        memories = dict.fromkeys(memory for memory, _, _ in pending)
        for memory, state, nxt in pending:
            update[(memory, state)] = nxt
            memories.setdefault(nxt)
            if game.owners[state] is player:
                output[(memory, state)] = assign[(memory, state)][1]
        return StrategyAutomaton(
            player=player,
            memories=tuple(memories),
            init_memory=init_memory,
            update=update,
            output=output,
        )

    def expand(nxt: Hashable, moves: Iterable[int]) -> int:
        added = 0
        for j in moves:
            pair = (nxt, j)
            if pair not in seen:
                seen.add(pair)
                pending.append((nxt, j, next_memory(nxt, j)))
                added += 1
                count = memory_count.get(nxt, 0)
                if count == 0 and len(memory_count) >= caps.max_memories:
                    raise ResourceCapError(
                        f"reachable memories exceed cap of {caps.max_memories}"
                    )
                memory_count[nxt] = count + 1
        return added

    def undo(added: int) -> None:
        for _ in range(added):
            memory, state, _ = pending.pop()
            seen.discard((memory, state))
            memory_count[memory] -= 1
            if memory_count[memory] == 0:
                del memory_count[memory]

    def rec(position: int) -> Iterator[StrategyAutomaton]:
        nonlocal produced
        if position == len(pending):
            if produced >= caps.max_strategies:
                raise ResourceCapError(
                    f"strategy class exceeds cap of {caps.max_strategies}"
                )
            produced += 1
            yield build()
            return
        memory, state, nxt = pending[position]
        if game.owners[state] is player:
            for option in option_table[state]:
                assign[(memory, state)] = option
                added = expand(nxt, option[0])
                yield from rec(position + 1)
                undo(added)
                del assign[(memory, state)]
        else:
            added = expand(nxt, successor_table[state])
            yield from rec(position + 1)
            undo(added)

    yield from rec(0)


def _enumerate_explicit(
    game: StochasticGame,
    player: Owner,
    kind: ExplicitMemory,
    outputs: str,
    caps: OracleCaps,
) -> Iterator[StrategyAutomaton]:
    """Explicit-size memory: branch over update targets as well as outputs."""
    if kind.size > caps.max_memories:
        raise ResourceCapError("explicit memory size exceeds the memory cap")
    produced = 0

    def build(upd: dict, assign: dict, pairs: list) -> StrategyAutomaton:
        output = {
            (m, s): uniform(assign[(m, s)])
            for (m, s) in pairs
            if game.owners[s] is player
        }
        return StrategyAutomaton(
            player=player,
            memories=tuple(range(kind.size)),
            init_memory=0,
            update={pair: upd[pair] for pair in pairs},
            output=output,
        )

    def rec(pending: tuple, seen: frozenset, upd: dict, assign: dict, done: tuple):
        nonlocal produced
        if not pending:
            if produced >= caps.max_strategies:
                raise ResourceCapError(
                    f"strategy class exceeds cap of {caps.max_strategies}"
                )
            produced += 1
            yield build(upd, assign, list(done))
            return
        (memory, state) = pending[0]
        rest = pending[1:]
        done2 = done + (pending[0],)
        owned = game.owners[state] is player
        choices = _choice_options(game.succ[state], outputs) if owned else (None,)
        for choice in choices:
            moves = choice if owned else game.successors(state)
            if owned:
                assign[(memory, state)] = choice
            for target in range(kind.size):
                upd[(memory, state)] = target
                fresh = []
                seen_set = set(seen)
                for j in moves:
                    pair = (target, j)
                    if pair not in seen_set:
                        seen_set.add(pair)
                        fresh.append(pair)
                yield from rec(
                    rest + tuple(fresh), frozenset(seen_set), upd, assign, done2
                )
                del upd[(memory, state)]
            if owned:
                del assign[(memory, state)]

    start = (0, game.init)
    yield from rec((start,), frozenset([start]), {}, {}, ())


class OracleOutcome(Enum):
    PLAYER1_WINS = "Player1WinsInClass"
    PLAYER2_WINS = "Player2WinsInClass"
    NO_WINNER = "NoWinnerInClass"


@dataclass
class OracleVerdict:
    """Exhaustive verdict within the declared strategy classes."""

    outcome: OracleOutcome
    kind1: MemoryKind
    kind2: MemoryKind
    sigmas: list[StrategyAutomaton]
    taus: list[StrategyAutomaton]
    witness: Optional[StrategyAutomaton] = None
    # per player-1 strategy index, the spoiling player-2 strategy index
    spoiler_of: dict[int, int] = field(default_factory=dict)
    # per player-2 strategy index, a player-1 strategy index beating it
    beater_of: dict[int, int] = field(default_factory=dict)
    matrix: Optional[tuple[tuple[bool, ...], ...]] = None

    def satisfaction(self, i: int, j: int) -> bool:
        if self.matrix is None:
            raise ValueError("matrix was not collected for this class size")
        return self.matrix[i][j]


def _check_caps(game: StochasticGame, query: Query, caps: OracleCaps) -> None:
    if game.n > caps.max_game_states:
        raise ResourceCapError(
            f"game has {game.n} states, oracle cap is {caps.max_game_states}"
        )
    targets = {a.target.mask for a in iter_atoms(query)}
    if len(targets) > 2 * caps.max_targets:
        raise ResourceCapError("query tracks more targets than the oracle cap allows")


def brute_force_winner(
    game: StochasticGame,
    query: Query,
    kind1: MemoryKind,
    kind2: MemoryKind,
    outputs: str = "subsets",
    caps: Optional[OracleCaps] = None,
    collect_matrix: bool = False,
) -> OracleVerdict:
    """Decide the winner within the two strategy classes by exhaustive play.

    Player 1 wins in class when some enumerated strategy satisfies the query
    against every enumerated adversary; player 2 symmetrically with the
    negated query.  Otherwise the verdict carries, per strategy, one spoiling
    opponent strategy.
    """
    caps = caps or DEFAULT_CAPS
    _check_caps(game, query, caps)
    sigmas = list(enumerate_strategies(game, Owner.P1, kind1, outputs, caps))
    taus = list(enumerate_strategies(game, Owner.P2, kind2, outputs, caps))

    cache: dict[tuple[int, int], bool] = {}

    def sat(i: int, j: int) -> bool:
        key = (i, j)
        if key not in cache:
            chain = induced_chain(game, sigmas[i], taus[j])
            cache[key] = eval_qualitative(chain, query)
        return cache[key]

    verdict = OracleVerdict(
        outcome=OracleOutcome.NO_WINNER,
        kind1=kind1,
        kind2=kind2,
        sigmas=sigmas,
        taus=taus,
    )

    hint = 0  # index of the last successful spoiler, tried first
    p1_winner = None
    for i in range(len(sigmas)):
        spoiler = None
        order = [hint] + [j for j in range(len(taus)) if j != hint] if taus else []
        for j in order:
            if not sat(i, j):
                spoiler = j
                hint = j
                break
        if spoiler is None:
            p1_winner = i
            break
        verdict.spoiler_of[i] = spoiler

    if p1_winner is not None:
        verdict.outcome = OracleOutcome.PLAYER1_WINS
        verdict.witness = sigmas[p1_winner]
    else:
        hint = 0
        p2_winner = None
        for j in range(len(taus)):
            beater = None
            order = [hint] + [i for i in range(len(sigmas)) if i != hint] if sigmas else []
            for i in order:
                if sat(i, j):
                    beater = i
                    hint = i
                    break
            if beater is None:
                p2_winner = j
                break
            verdict.beater_of[j] = beater
        if p2_winner is not None:
            verdict.outcome = OracleOutcome.PLAYER2_WINS
            verdict.witness = taus[p2_winner]

    if collect_matrix and len(sigmas) <= caps.max_matrix and len(taus) <= caps.max_matrix:
        verdict.matrix = tuple(
            tuple(sat(i, j) for j in range(len(taus))) for i in range(len(sigmas))
        )
    return verdict


@dataclass
class NondeterminacyReport:
    """Per-class verdicts with satisfaction matrices; evidence within the
    enumerated classes only, never a proof of nondeterminacy."""

    entries: list[tuple[str, OracleVerdict]]

    def no_winner_everywhere(self) -> bool:
        return all(
            v.outcome is OracleOutcome.NO_WINNER for _, v in self.entries
        )


def nondeterminacy_evidence(
    game: StochasticGame,
    query: Query,
    outputs: str = "subsets",
    caps: Optional[OracleCaps] = None,
) -> NondeterminacyReport:
    """Run the brute force at escalating memory classes and report matrices."""
    targets: list[StateSet] = []
    for atom in iter_atoms(query):
        if atom.target not in targets:
            targets.append(atom.target)
    kinds: list[tuple[str, MemoryKind]] = [
        ("memoryless", Memoryless()),
        ("targetset", TargetSetMemory(tuple(targets))),
        ("visitedset", VisitedSetMemory()),
    ]
    entries = []
    for label, kind in kinds:
        verdict = brute_force_winner(
            game, query, kind, kind, outputs=outputs, caps=caps, collect_matrix=True
        )
        entries.append((label, verdict))
    return NondeterminacyReport(entries)


def find_strategy_by_support(
    verdict: OracleVerdict,
    game: StochasticGame,
    side: str,
    supports: dict[str, Iterable[str]],
) -> Optional[int]:
    """Locate an enumerated memoryless strategy by its per-state support names."""
    wanted = {
        game.index(state): frozenset(game.index(s) for s in names)
        for state, names in supports.items()
    }
    pool = verdict.sigmas if side == "p1" else verdict.taus
    for idx, strategy in enumerate(pool):
        actual = {
            state: frozenset(j for j, _ in dist)
            for (memory, state), dist in strategy.output.items()
        }
        if actual == wanted:
            return idx
    return None
