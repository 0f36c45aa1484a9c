"""Decision pipeline for the determined query fragments, plus dispatch.

Conjunctions are decided by merging almost-sure safety atoms into one
restriction, splitting on the nonzero atoms, converting nonzero safety to
nonzero reachability inside the goal unfolding, and searching the derived
reachability game.  Positive all-AS combinations go through DNF; pure
disjunctions and all-NZ combinations are solved on the player-swapped game
through the query duality.  Queries outside the determined fragments come
back as Unknown; the caller can fall back to the bounded-memory oracle.

Each solve call is pure; per-NZ subproblems share only immutable inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

from .errors import ResourceCapError
from .game import StateSet, StochasticGame, map_state_set, restrict
from .query import (
    Atom,
    Fragment,
    Mode,
    Or,
    Query,
    Shape,
    classify,
    conjuncts,
    dual_query,
    negate_normalize,
    query_to_text,
    to_dnf,
)
from .regions import single_region, swap_players
from .unfold import goal_unfold, to_reachability_game


class Winner:
    PLAYER1 = "Player1"
    PLAYER2 = "Player2"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SolverCaps:
    max_conjuncts: int = 12
    max_dnf_terms: int = 512
    max_product_nodes: int = 100_000


DEFAULT_CAPS = SolverCaps()


@dataclass
class SolveResult:
    winner: str
    fragment: Fragment
    evidence: dict = field(default_factory=dict)


def _verdict(won: bool) -> str:
    return Winner.PLAYER1 if won else Winner.PLAYER2


def solve_conj_nz(game: StochasticGame, atoms: Sequence[Atom]) -> SolveResult:
    """A conjunction of nonzero atoms is won exactly when each atom is won
    individually (mixing the per-atom strategies keeps every probability
    positive).  The empty conjunction is vacuously won."""
    per_atom = []
    for atom in atoms:
        if atom.mode is not Mode.NZ:
            raise ValueError("solve_conj_nz expects nonzero atoms only")
        region = single_region(game, atom.mode, atom.shape, atom.target)
        per_atom.append(game.init in region.states)
    return SolveResult(
        winner=_verdict(all(per_atom)),
        fragment=Fragment.CONJUNCTION,
        evidence={"per_atom": tuple(per_atom)},
    )


def _conj_as_reach_region(
    game: StochasticGame, targets: Sequence[StateSet], caps: SolverCaps
) -> tuple[StateSet, StateSet]:
    """Winning region of a conjunction of almost-sure reachability targets,
    together with the single merged target that carries it.

    The merged target keeps a state from target i exactly when the remaining
    conjunction over the other indices is still winnable from it; the region
    is then the almost-sure reachability region of that merged target.
    Memoized over index subsets, so the target count is capped.
    """
    n = len(targets)
    if n > caps.max_conjuncts:
        raise ResourceCapError(
            f"conjunction of {n} reachability targets exceeds cap of {caps.max_conjuncts}"
        )
    region_of: dict[int, StateSet] = {}
    merged_of: dict[int, StateSet] = {}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            subset = sum(1 << i for i in combo)
            if size == 1:
                merged = targets[combo[0]]
            else:
                merged = StateSet.empty(game.n)
                for i in combo:
                    merged = merged | (targets[i] & region_of[subset & ~(1 << i)])
            region_of[subset] = single_region(game, Mode.AS, Shape.REACH, merged).states
            merged_of[subset] = merged
    full = (1 << n) - 1
    return region_of[full], merged_of[full]


def solve_conj_as_reach(
    game: StochasticGame, targets: Sequence[StateSet], caps: SolverCaps = DEFAULT_CAPS
) -> SolveResult:
    """Conjunction of almost-sure reachability targets via the merged target."""
    if not targets:
        raise ValueError("solve_conj_as_reach needs at least one target")
    region, merged = _conj_as_reach_region(game, targets, caps)
    return SolveResult(
        winner=_verdict(game.init in region),
        fragment=Fragment.CONJUNCTION,
        evidence={
            "merged_target": merged.names(game),
            "region": region.names(game),
        },
    )


def nz_safe_to_reach(
    product: StochasticGame,
    nodes: Sequence,
    as_bits: Sequence[int],
) -> StateSet:
    """Convert the tracked nonzero-safety objective into a reachability target.

    The unfolding must track the safety complement as bit 0, so staying safe
    means keeping bit 0 at zero.  The returned set contains the product nodes
    from which nonzero safety is still winnable and whose almost-sure bits are
    all set; reaching it with positive probability and then playing the
    nonzero-safety strategy wins the original conjunction.
    """
    stay_safe = StateSet.from_indices(
        (i for i, u in enumerate(nodes) if not u.bits & 1), product.n
    )
    region = single_region(product, Mode.NZ, Shape.SAFE, stay_safe).states
    need = 0
    for b in as_bits:
        need |= 1 << b
    all_as = StateSet.from_indices(
        (i for i, u in enumerate(nodes) if u.bits & need == need), product.n
    )
    return region & all_as


def _decide_one_nz(
    game: StochasticGame,
    nz_atom: Atom,
    as_targets: Sequence[StateSet],
    caps: SolverCaps,
    literal_all_bits_leaf: bool = False,
) -> tuple[bool, dict]:
    """Decide one nonzero atom conjoined with almost-sure reachability targets.

    Builds the goal unfolding (tracking the safety complement for a nonzero
    safety atom), computes the region where the almost-sure part is winnable,
    restricts to it handing chance to the existential side, and searches for
    a universally branching tree whose leaves hit the nonzero goal.
    """
    if nz_atom.shape is Shape.REACH:
        tracked = [nz_atom.target, *as_targets]
    else:
        tracked = [nz_atom.target.complement(), *as_targets]
    unfolding = goal_unfold(game, tracked)
    product, nodes = unfolding.materialize(caps.max_product_nodes)
    as_bits = list(range(1, len(tracked)))
    all_as = unfolding.all_bits_target(product, nodes, as_bits)
    winnable = single_region(product, Mode.AS, Shape.REACH, all_as).states

    if nz_atom.shape is Shape.REACH:
        goal = unfolding.lifted_target(product, nodes, 0)
        if literal_all_bits_leaf:
            goal = unfolding.all_bits_target(product, nodes, range(len(tracked)))
    else:
        goal = nz_safe_to_reach(product, nodes, as_bits)

    reach_game = to_reachability_game(product, winnable, goal)
    won = reach_game.decide_dfs()
    details = {
        "product_nodes": product.n,
        "winnable_nodes": len(winnable),
        "goal_nodes": len(goal & winnable),
    }
    return won, details


def solve_conj_as_one_nz_reach(
    game: StochasticGame,
    nz_target: StateSet,
    as_targets: Sequence[StateSet],
    caps: SolverCaps = DEFAULT_CAPS,
    literal_all_bits_leaf: bool = False,
) -> SolveResult:
    """One nonzero reachability atom conjoined with almost-sure reachability."""
    won, details = _decide_one_nz(
        game,
        Atom(Mode.NZ, Shape.REACH, nz_target),
        as_targets,
        caps,
        literal_all_bits_leaf,
    )
    return SolveResult(
        winner=_verdict(won), fragment=Fragment.CONJUNCTION, evidence=details
    )


def solve_conjunction(
    game: StochasticGame,
    atoms: Sequence[Atom],
    caps: SolverCaps = DEFAULT_CAPS,
    literal_all_bits_leaf: bool = False,
) -> SolveResult:
    """Full conjunction pipeline over all four atom kinds.

    Almost-sure safety atoms merge into one intersection target and induce a
    restriction of the game; the remaining conjunction is won exactly when
    every per-nonzero subproblem (that atom plus all almost-sure reachability
    targets) is won in the restricted game.
    """
    evidence: dict = {}
    as_safe = [a for a in atoms if a.mode is Mode.AS and a.shape is Shape.SAFE]
    as_reach = [a for a in atoms if a.mode is Mode.AS and a.shape is Shape.REACH]
    nz_atoms = [a for a in atoms if a.mode is Mode.NZ]

    work_game = game
    if as_safe:
        safe_target = reduce(lambda x, y: x & y, (a.target for a in as_safe))
        safe_region = single_region(game, Mode.AS, Shape.SAFE, safe_target).states
        evidence["safe_region"] = safe_region.names(game)
        if game.init not in safe_region:
            return SolveResult(Winner.PLAYER2, Fragment.CONJUNCTION, evidence)
        work_game = restrict(game, safe_region)

    reach_targets = [map_state_set(game, work_game, a.target) for a in as_reach]

    if not nz_atoms:
        if not reach_targets:
            return SolveResult(Winner.PLAYER1, Fragment.CONJUNCTION, evidence)
        inner = solve_conj_as_reach(work_game, reach_targets, caps)
        evidence.update(inner.evidence)
        return SolveResult(inner.winner, Fragment.CONJUNCTION, evidence)

    per_nz = []
    for atom in nz_atoms:
        mapped = Atom(atom.mode, atom.shape, map_state_set(game, work_game, atom.target))
        won, details = _decide_one_nz(
            work_game, mapped, reach_targets, caps, literal_all_bits_leaf
        )
        per_nz.append(won)
    evidence["per_nz"] = tuple(per_nz)
    return SolveResult(_verdict(all(per_nz)), Fragment.CONJUNCTION, evidence)


def solve_positive_as(
    game: StochasticGame, query: Query, caps: SolverCaps = DEFAULT_CAPS
) -> SolveResult:
    """Positive Boolean combination of almost-sure atoms, term by DNF term.

    Each term is a conjunction of almost-sure atoms: safety targets intersect
    into one restriction, reachability targets go through the merged-target
    region.  The query is won exactly when some term is won.
    """
    dnf = to_dnf(query, caps.max_dnf_terms)
    term_list = dnf.children if isinstance(dnf, Or) else (dnf,)

    winning_term: Optional[str] = None
    for term in term_list:
        atoms = conjuncts(term)
        if any(a.mode is not Mode.AS for a in atoms):
            raise ValueError("solve_positive_as expects almost-sure atoms only")
        inner = solve_conjunction(game, atoms, caps)
        if inner.winner == Winner.PLAYER1:
            winning_term = query_to_text(term, game)
            break
    return SolveResult(
        winner=_verdict(winning_term is not None),
        fragment=Fragment.POSITIVE_AS,
        evidence={"winning_term": winning_term, "terms": len(term_list)},
    )


def _invert(winner: str) -> str:
    if winner == Winner.PLAYER1:
        return Winner.PLAYER2
    if winner == Winner.PLAYER2:
        return Winner.PLAYER1
    return winner


def solve(
    game: StochasticGame,
    query: Query,
    caps: SolverCaps = DEFAULT_CAPS,
) -> SolveResult:
    """Normalize, classify, and dispatch to the matching decision procedure.

    Pure disjunctions and all-NZ combinations are decided as the dual query on
    the player-swapped game with the winner inverted; this is sound because
    the dual class is determined.  Outside the determined fragments the winner
    is Unknown and the fragment tag tells the caller which class failed.
    """
    positive = negate_normalize(query)
    fragment = classify(positive)

    if fragment is Fragment.SINGLE:
        atom = positive
        region = single_region(game, atom.mode, atom.shape, atom.target)
        return SolveResult(
            winner=_verdict(game.init in region.states),
            fragment=fragment,
            evidence={"region": region.states.names(game)},
        )
    if fragment is Fragment.CONJUNCTION:
        result = solve_conjunction(game, conjuncts(positive), caps)
        return SolveResult(result.winner, fragment, result.evidence)
    if fragment is Fragment.POSITIVE_AS:
        result = solve_positive_as(game, positive, caps)
        return SolveResult(result.winner, fragment, result.evidence)
    if fragment in (Fragment.DISJUNCTION, Fragment.POSITIVE_NZ):
        dual = dual_query(positive)
        swapped = swap_players(game)
        inner = solve(swapped, dual, caps)
        return SolveResult(
            winner=_invert(inner.winner),
            fragment=fragment,
            evidence={"via_dual": True, **inner.evidence},
        )
    return SolveResult(
        winner=Winner.UNKNOWN,
        fragment=fragment,
        evidence={
            "note": "query is outside the determined fragments; "
            "the oracle can provide bounded-memory evidence"
        },
    )
