"""Goal unfolding and the derived two-player reachability game.

The unfolding pairs every state with a bit vector recording which tracked
target sets the play has already visited.  A bit flips to one when the play
*leaves* a state belonging to that target, so bit vectors are monotone along
every play and each lifted target is absorbing.

The full product is exponential in the number of tracked targets, so nodes
are materialized on demand from the initial node and memoized.  The memo is
not synchronized; confine one unfolding to a single worker or materialize it
up front and share the immutable result.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ResourceCapError
from .game import Owner, StateSet, StochasticGame

DEFAULT_PRODUCT_CAP = 100_000


@dataclass(frozen=True)
class UnfoldedState:
    """A base state together with the bit vector of targets already visited."""

    base: int
    bits: int


class GoalUnfolding:
    """Lazy product of a game with visited-target bit vectors."""

    def __init__(self, game: StochasticGame, targets: Sequence[StateSet]):
        if not targets:
            raise ValueError("goal unfolding needs at least one target")
        for t in targets:
            if t.size != game.n:
                raise ValueError("target does not match the game")
        self.game = game
        self.targets = tuple(targets)
        self.k = len(targets)
        # bits switched on when leaving state s
        self._leave_bits = tuple(
            sum(1 << b for b, t in enumerate(targets) if i in t) for i in range(game.n)
        )
        self._succ_memo: dict[UnfoldedState, tuple[tuple[UnfoldedState, Optional[Fraction]], ...]] = {}

    @property
    def initial(self) -> UnfoldedState:
        return UnfoldedState(self.game.init, 0)

    def successors(self, node: UnfoldedState) -> tuple[tuple[UnfoldedState, Optional[Fraction]], ...]:
        """Successor nodes, paired with probabilities for chance states (else None)."""
        cached = self._succ_memo.get(node)
        if cached is not None:
            return cached
        bits = node.bits | self._leave_bits[node.base]
        game = self.game
        if game.owners[node.base] is Owner.CHANCE:
            out = tuple((UnfoldedState(j, bits), p) for j, p in game.chance[node.base])
        else:
            out = tuple((UnfoldedState(j, bits), None) for j in game.succ[node.base])
        self._succ_memo[node] = out
        return out

    def node_name(self, node: UnfoldedState) -> str:
        tag = "".join("1" if node.bits >> b & 1 else "0" for b in range(self.k))
        return f"{self.game.states[node.base]}|{tag}"

    def materialize(self, cap: int = DEFAULT_PRODUCT_CAP) -> tuple[StochasticGame, tuple[UnfoldedState, ...]]:
        """Reachable part of the product as a plain game, in BFS discovery order."""
        game = self.game
        order: list[UnfoldedState] = [self.initial]
        index = {self.initial: 0}
        frontier = 0
        while frontier < len(order):
            node = order[frontier]
            frontier += 1
            for nxt, _ in self.successors(node):
                if nxt not in index:
                    if len(order) >= cap:
                        raise ResourceCapError(
                            f"unfolded product exceeds cap of {cap} nodes"
                        )
                    index[nxt] = len(order)
                    order.append(nxt)

        owners = tuple(game.owners[u.base] for u in order)
        succ: list[Optional[tuple[int, ...]]] = []
        chance: list[Optional[tuple[tuple[int, Fraction], ...]]] = []
        for u in order:
            outs = self.successors(u)
            if game.owners[u.base] is Owner.CHANCE:
                succ.append(None)
                chance.append(tuple((index[v], p) for v, p in outs))
            else:
                succ.append(tuple(index[v] for v, _ in outs))
                chance.append(None)
        product = StochasticGame(
            name=f"{game.name}_unfolded",
            states=tuple(self.node_name(u) for u in order),
            owners=owners,
            init=0,
            succ=tuple(succ),
            chance=tuple(chance),
        )
        return product, tuple(order)

    def lifted_target(self, product: StochasticGame, nodes: Sequence[UnfoldedState], bit: int) -> StateSet:
        """Nodes of the materialized product whose given bit is set."""
        return StateSet.from_indices(
            (i for i, u in enumerate(nodes) if u.bits >> bit & 1), product.n
        )

    def all_bits_target(
        self, product: StochasticGame, nodes: Sequence[UnfoldedState], bits: Sequence[int]
    ) -> StateSet:
        """Nodes whose bits are set for every index in `bits` (all nodes when empty)."""
        need = 0
        for b in bits:
            need |= 1 << b
        return StateSet.from_indices(
            (i for i, u in enumerate(nodes) if u.bits & need == need), product.n
        )


def goal_unfold(game: StochasticGame, targets: Sequence[StateSet]) -> GoalUnfolding:
    """Build the lazy goal unfolding of `game` for the given target sets."""
    return GoalUnfolding(game, targets)


@dataclass(frozen=True)
class ReachabilityGame:
    """Nonstochastic two-player reachability game over restricted product nodes.

    Existential nodes are the original player-1 and chance nodes; universal
    nodes belong to player 2.  The sink collects removed moves and is losing
    for the existential player.
    """

    states: tuple[str, ...]
    existential: int  # mask over states
    succ: tuple[tuple[int, ...], ...]
    init: int
    target: int  # mask
    sink: int

    @property
    def n(self) -> int:
        return len(self.states)

    def attractor(self, target: Optional[int] = None) -> int:
        """Least fixpoint of nodes from which the existential side forces the target."""
        goal = self.target if target is None else target
        won = goal
        changed = True
        while changed:
            changed = False
            for v in range(self.n):
                if won >> v & 1:
                    continue
                outs = self.succ[v]
                if self.existential >> v & 1:
                    ok = any(won >> w & 1 for w in outs)
                else:
                    ok = all(won >> w & 1 for w in outs)
                if ok:
                    won |= 1 << v
                    changed = True
        return won

    def decide_dfs(self, target: Optional[int] = None) -> bool:
        """Depth-first search for an existential winning tree from the initial node.

        Leaves are target nodes; a branch that revisits one of its own
        ancestors is abandoned.  Nodes proven winning are memoized (a proven
        tree is valid independently of the ancestors above it), so the search
        trades the minimal-space discipline for time.
        """
        goal = self.target if target is None else target
        proven: set[int] = set()
        on_path: set[int] = set()

        def win(v: int) -> bool:
            if goal >> v & 1:
                return True
            if v in proven:
                return True
            if v in on_path:
                return False
            on_path.add(v)
            try:
                if self.existential >> v & 1:
                    ok = any(win(w) for w in self.succ[v])
                else:
                    ok = all(win(w) for w in self.succ[v])
            finally:
                on_path.discard(v)
            if ok:
                proven.add(v)
            return ok

        return win(self.init)


def to_reachability_game(
    product: StochasticGame, allowed: StateSet, goal: StateSet
) -> ReachabilityGame:
    """Restrict a (product) game to `allowed`, hand chance to the existential side.

    The target becomes `goal` intersected with `allowed`; every move out of
    `allowed` funnels into a losing sink.
    """
    if allowed.size != product.n or goal.size != product.n:
        raise ValueError("state sets do not match the product game")
    old = [i for i in range(product.n) if i in allowed]
    remap = {i: k for k, i in enumerate(old)}
    sink = len(old)
    states = tuple(product.states[i] for i in old) + ("_bot",)

    succ: list[tuple[int, ...]] = []
    existential = 0
    target = 0
    for k, i in enumerate(old):
        if product.owners[i] is not Owner.P2:
            existential |= 1 << k
        if i in goal:
            target |= 1 << k
        outs = []
        dropped = False
        for j in product.successors(i):
            if j in allowed:
                outs.append(remap[j])
            else:
                dropped = True
        if dropped or not outs:
            outs.append(sink)
        succ.append(tuple(outs))
    succ.append((sink,))
    init = remap.get(product.init, sink)
    return ReachabilityGame(
        states=states,
        existential=existential,
        succ=tuple(succ),
        init=init,
        target=target,
        sink=sink,
    )
