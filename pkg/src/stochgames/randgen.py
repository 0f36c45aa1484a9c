"""Seeded random games and queries for the agreement experiments.

Generation is driven by `random.Random` instances so every corpus is fully
reproducible from its seed.  Games whose bounded strategy classes would be
too large to brute-force are rejected at generation time; the bound is an
overapproximation computed against an arbitrary opponent, so accepted games
are always safe to enumerate.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .game import Owner, StateSet, StochasticGame
from .oracle import MemoryKind, Memoryless, VisitedSetMemory, _choice_options, _fixed_update
from .query import And, Atom, Mode, Or, Query, Shape

_CHANCE_SPLITS = (
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 3), Fraction(2, 3)),
    (Fraction(1, 4), Fraction(3, 4)),
)


def random_game(
    rng: random.Random,
    max_states: int = 5,
    max_succ: int = 2,
    n_states: Optional[int] = None,
) -> StochasticGame:
    n = n_states if n_states is not None else rng.randint(2, max_states)
    owners = [rng.choice((Owner.P1, Owner.P2, Owner.CHANCE)) for _ in range(n)]
    succ: list = []
    chance: list = []
    for i in range(n):
        k = rng.randint(1, min(max_succ, n))
        targets = rng.sample(range(n), k)
        if owners[i] is Owner.CHANCE:
            if k == 1:
                dist = ((targets[0], Fraction(1)),)
            else:
                split = rng.choice(_CHANCE_SPLITS)
                dist = tuple(zip(targets, split))
            succ.append(None)
            chance.append(dist)
        else:
            succ.append(tuple(targets))
            chance.append(None)
    return StochasticGame(
        name=f"rnd{rng.randrange(10**6)}",
        states=tuple(f"s{i}" for i in range(n)),
        owners=tuple(owners),
        init=0,
        succ=tuple(succ),
        chance=tuple(chance),
    )


def random_target(rng: random.Random, game: StochasticGame, allow_empty: bool = False) -> StateSet:
    low = 0 if allow_empty else 1
    size = rng.randint(low, max(low, game.n - 1))
    return StateSet.from_indices(rng.sample(range(game.n), size), game.n)


def random_atom(
    rng: random.Random,
    game: StochasticGame,
    modes: Sequence[Mode] = (Mode.AS, Mode.NZ),
    shapes: Sequence[Shape] = (Shape.REACH, Shape.SAFE),
) -> Atom:
    return Atom(rng.choice(tuple(modes)), rng.choice(tuple(shapes)), random_target(rng, game))


def random_query(
    rng: random.Random,
    game: StochasticGame,
    fragment: str,
    max_atoms: int = 3,
    include_nz_safe: bool = True,
) -> Query:
    """Draw a query from one of the determined fragment families."""
    count = rng.randint(2, max_atoms)
    shapes = (Shape.REACH, Shape.SAFE)
    if fragment == "conjunction":
        atoms = []
        for _ in range(count):
            atom = random_atom(rng, game)
            if not include_nz_safe and atom.mode is Mode.NZ and atom.shape is Shape.SAFE:
                atom = Atom(Mode.NZ, Shape.REACH, atom.target)
            atoms.append(atom)
        return And(tuple(atoms))
    if fragment == "disjunction":
        atoms = []
        for _ in range(count):
            atom = random_atom(rng, game)
            if not include_nz_safe and atom.mode is Mode.NZ and atom.shape is Shape.SAFE:
                atom = Atom(Mode.NZ, Shape.REACH, atom.target)
            atoms.append(atom)
        return Or(tuple(atoms))
    if fragment == "positive_as":
        return _random_positive(rng, game, Mode.AS, count)
    if fragment == "positive_nz":
        return _random_positive(rng, game, Mode.NZ, count)
    raise ValueError(f"unknown fragment family {fragment!r}")


def _random_positive(rng: random.Random, game: StochasticGame, mode: Mode, count: int) -> Query:
    atoms = [random_atom(rng, game, modes=(mode,)) for _ in range(count)]
    if len(atoms) == 2:
        node = Or if rng.random() < 0.5 else And
        return node(tuple(atoms))
    inner = And(tuple(atoms[1:])) if rng.random() < 0.5 else Or(tuple(atoms[1:]))
    outer = Or if isinstance(inner, And) else And
    return outer((atoms[0], inner))


def strategy_space_bound(
    game: StochasticGame,
    player: Owner,
    kind: MemoryKind,
    outputs: str = "subsets",
    pair_cap: int = 512,
) -> int:
    """Overapproximate the class size: product of the option counts over the
    (memory, state) pairs reachable when both sides may move anywhere."""
    init_memory, update_fn = _fixed_update(game, kind)
    start = (init_memory, game.init)
    seen = {start}
    stack = [start]
    bound = 1
    while stack:
        memory, state = stack.pop()
        if game.owners[state] is player:
            bound *= len(_choice_options(game.succ[state], outputs))
        nxt = update_fn(memory, state)
        for j in game.successors(state):
            pair = (nxt, j)
            if pair not in seen:
                if len(seen) >= pair_cap:
                    return bound * 10**9  # effectively unbounded; reject
                seen.add(pair)
                stack.append(pair)
    return bound


@dataclass(frozen=True)
class CorpusInstance:
    seed: int
    game: StochasticGame
    fragment: str
    query: Query


def corpus(
    base_seed: int,
    count: int,
    fragments: Sequence[str] = ("conjunction", "disjunction", "positive_as", "positive_nz"),
    max_states: int = 5,
    max_succ: int = 2,
    max_atoms: int = 3,
    include_nz_safe: bool = True,
    max_class_size: int = 20_000,
) -> Iterator[CorpusInstance]:
    """Yield `count` games, each paired with one query per fragment family.

    Games are rejected when a visited-set strategy class would exceed
    `max_class_size`, keeping the brute-force cross-checks tractable.
    """
    produced = 0
    seed = base_seed
    while produced < count:
        rng = random.Random(seed)
        game = random_game(rng, max_states=max_states, max_succ=max_succ)
        ok = all(
            strategy_space_bound(game, player, VisitedSetMemory()) <= max_class_size
            for player in (Owner.P1, Owner.P2)
        )
        if ok:
            for fragment in fragments:
                query = random_query(
                    rng, game, fragment, max_atoms=max_atoms, include_nz_safe=include_nz_safe
                )
                yield CorpusInstance(seed, game, fragment, query)
            produced += 1
        seed += 1
