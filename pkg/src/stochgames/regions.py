"""Winning regions for single qualitative objectives, via graph fixpoints.

Only the support structure of the game matters here; probabilities never
enter the computations.  All functions are pure and safe to call in parallel
on shared games.
"""

from __future__ import annotations

from dataclasses import dataclass

from .game import Owner, StateSet, StochasticGame
from .query import Mode, Shape


@dataclass(frozen=True)
class Region:
    """Set of states from which player 1 wins one (mode, shape, target) atom."""

    game: StochasticGame
    mode: Mode
    shape: Shape
    target: StateSet
    states: StateSet


def swap_players(game: StochasticGame) -> StochasticGame:
    """Exchange the two players' states; chance states are untouched."""
    flip = {Owner.P1: Owner.P2, Owner.P2: Owner.P1, Owner.CHANCE: Owner.CHANCE}
    return StochasticGame(
        name=game.name,
        states=game.states,
        owners=tuple(flip[o] for o in game.owners),
        init=game.init,
        succ=game.succ,
        chance=game.chance,
        notes=game.notes,
    )


def _succ_masks(game: StochasticGame) -> list[int]:
    return [game.successor_mask(i) for i in range(game.n)]


def _positive_reach_mask(game: StochasticGame, target: int, within: int, succ: list[int]) -> int:
    """States in `within` from which player 1 reaches the target with positive
    probability while the play stays in `within`.

    Player 1 and chance need one successor already in the set; player 2 must
    have every successor inside it (a single escape out of `within` suffices
    to avoid the target here).
    """
    won = target & within
    changed = True
    while changed:
        changed = False
        for i in range(game.n):
            if won >> i & 1 or not within >> i & 1:
                continue
            outs = succ[i]
            if game.owners[i] is Owner.P2:
                ok = outs & ~won == 0
            else:
                ok = outs & won != 0
            if ok:
                won |= 1 << i
                changed = True
    return won


def _adversary_positive_mask(game: StochasticGame, bad: int, within: int, succ: list[int]) -> int:
    """States in `within` from which the adversary side forces positive
    probability of entering `bad` (everything outside `within` counts as bad).

    Player 2 and chance need one successor in the extended bad set; player 1
    joins only when all successors are in it.
    """
    extended = bad | ~within
    result = bad & within
    changed = True
    while changed:
        changed = False
        for i in range(game.n):
            if result >> i & 1 or not within >> i & 1:
                continue
            outs = succ[i]
            reach = extended | result
            if game.owners[i] is Owner.P1:
                ok = outs & ~reach == 0
            else:
                ok = outs & reach != 0
            if ok:
                result |= 1 << i
                changed = True
    return result


def _almost_sure_safe_mask(game: StochasticGame, target: int, succ: list[int]) -> int:
    """Greatest fixpoint inside the target: player 1 keeps one successor in the
    set, player 2 and chance must have all successors inside it."""
    keep = target
    changed = True
    while changed:
        changed = False
        for i in range(game.n):
            if not keep >> i & 1:
                continue
            outs = succ[i]
            if game.owners[i] is Owner.P1:
                ok = outs & keep != 0
            else:
                ok = outs & ~keep == 0
            if not ok:
                keep &= ~(1 << i)
                changed = True
    return keep


def _almost_sure_reach_mask(game: StochasticGame, target: int, succ: list[int]) -> int:
    """Iterative removal: repeatedly drop the adversary's positive attractor to
    the states that cannot even reach the target positively inside the current
    candidate set.  Terminates within |S| iterations."""
    candidate = (1 << game.n) - 1
    while candidate:
        positive = _positive_reach_mask(game, target, candidate, succ)
        blocked = candidate & ~positive
        if not blocked:
            return candidate
        removed = _adversary_positive_mask(game, blocked, candidate, succ)
        candidate &= ~removed
    return 0


def single_region(game: StochasticGame, mode: Mode, shape: Shape, target: StateSet) -> Region:
    """Exact winning region of player 1 for a single qualitative atom.

    Nonzero safety is decided through the complement duality: a state wins
    NZ-safe(T) exactly when the opponent does not win AS-reach of the
    complement, computed on the player-swapped game.
    """
    if target.size != game.n:
        raise ValueError("target does not match the game")
    succ = _succ_masks(game)
    full = (1 << game.n) - 1
    if mode is Mode.NZ and shape is Shape.REACH:
        mask = _positive_reach_mask(game, target.mask, full, succ)
    elif mode is Mode.AS and shape is Shape.SAFE:
        mask = _almost_sure_safe_mask(game, target.mask, succ)
    elif mode is Mode.AS and shape is Shape.REACH:
        mask = _almost_sure_reach_mask(game, target.mask, succ)
    else:
        swapped = swap_players(game)
        opponent = _almost_sure_reach_mask(swapped, target.complement().mask, succ)
        mask = full & ~opponent
    return Region(game, mode, shape, target, StateSet(mask, game.n))
