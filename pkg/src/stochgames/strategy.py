"""Finite-memory strategy automata and qualitative evaluation of induced chains.

A strategy automaton observes the states of a play.  At step t it owns a
memory value m_t that has consumed the states strictly before the current
one; the output at the current state s uses (m_t, s) and the memory for the
next step is update(m_t, s).  With the visited-set memory this makes the
memory at state s exactly the set of states seen before s, matching the
uniform-response construction below.

Strategy-pair evaluation is embarrassingly parallel over immutable inputs;
every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Optional, Sequence

from .errors import InternalInvariantError, ResourceCapError, StrategyFormatError
from .game import Owner, StateSet, StochasticGame
from .query import And, Atom, Mode, Not, Or, Query, Shape, dual_query, iter_atoms

DEFAULT_CHAIN_CAP = 200_000
DEFAULT_MEMORY_CAP = 4096


@dataclass(frozen=True, eq=False)
class StrategyAutomaton:
    """Deterministic-update strategy automaton with randomized output.

    `update` maps (memory, observed state index) to the next memory value;
    `output` maps (memory, owned state index) to an exact distribution over
    successor indices.  Both maps need only cover the pairs reachable against
    arbitrary opponent behavior.
    """

    player: Owner
    memories: tuple[Hashable, ...]
    init_memory: Hashable
    update: dict[tuple[Hashable, int], Hashable]
    output: dict[tuple[Hashable, int], tuple[tuple[int, Fraction], ...]]

    def next_memory(self, memory: Hashable, state: int) -> Hashable:
        try:
            return self.update[(memory, state)]
        except KeyError:
            raise InternalInvariantError(
                f"strategy update undefined at memory {memory!r}, state {state}"
            ) from None

    def distribution(self, memory: Hashable, state: int) -> tuple[tuple[int, Fraction], ...]:
        try:
            return self.output[(memory, state)]
        except KeyError:
            raise InternalInvariantError(
                f"strategy output undefined at memory {memory!r}, state {state}"
            ) from None

    def validate_for(self, game: StochasticGame) -> None:
        if self.player is Owner.CHANCE:
            raise StrategyFormatError("strategy player must be p1 or p2")
        for (memory, state), dist in self.output.items():
            if game.owners[state] is not self.player:
                raise StrategyFormatError(
                    f"output declared at state {game.states[state]} not owned by {self.player.value}"
                )
            allowed = set(game.succ[state])
            total = Fraction(0)
            for target, p in dist:
                if target not in allowed:
                    raise StrategyFormatError(
                        f"output support at {game.states[state]} leaves the successor set"
                    )
                if p <= 0:
                    raise StrategyFormatError("output probabilities must be positive")
                total += p
            if total != 1:
                raise StrategyFormatError(
                    f"output at {game.states[state]} sums to {total}, not 1"
                )

    def describe(self, game: StochasticGame) -> str:
        """Canonical one-line description, for reports and matrices."""

        def memory_label(memory: Hashable) -> str:
            if isinstance(memory, frozenset):
                names = [game.states[i] for i in sorted(memory)]
                return "{" + ",".join(names) + "}"
            return str(memory)

        parts = []
        for (memory, state), dist in sorted(
            self.output.items(), key=lambda kv: (kv[0][1], self.memories.index(kv[0][0]))
        ):
            names = ",".join(game.states[j] for j, _ in dist)
            label = memory_label(memory)
            prefix = f"{game.states[state]}" if label in ("-", "") else f"{game.states[state]}[{label}]"
            parts.append(f"{prefix}->{{{names}}}")
        return "; ".join(parts) if parts else "(no decisions)"


_UNIFORM_WEIGHTS = [None] + [Fraction(1, k) for k in range(1, 17)]


def uniform(successors: Sequence[int]) -> tuple[tuple[int, Fraction], ...]:
    k = len(successors)
    p = _UNIFORM_WEIGHTS[k] if k < len(_UNIFORM_WEIGHTS) else Fraction(1, k)
    return tuple((j, p) for j in successors)


def memoryless(game: StochasticGame, player: Owner, choices: dict[int, Sequence[int]]) -> StrategyAutomaton:
    """Memoryless strategy playing uniformly over the chosen successors."""
    output = {}
    update = {}
    for state in range(game.n):
        update[("-", state)] = "-"
        if game.owners[state] is player:
            chosen = choices.get(state, game.succ[state][:1])
            output[("-", state)] = uniform(tuple(chosen))
    automaton = StrategyAutomaton(player, ("-",), "-", update, output)
    automaton.validate_for(game)
    return automaton


@dataclass(frozen=True)
class InducedChain:
    """Finite Markov chain induced by a strategy pair, pruned to reachable nodes."""

    nodes: tuple[tuple[int, Hashable, Hashable], ...]
    base: tuple[int, ...]
    trans: tuple[tuple[tuple[int, Fraction], ...], ...]
    init: int = 0

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(j for j, _ in row) for row in self.trans)


def induced_chain(
    game: StochasticGame,
    sigma: StrategyAutomaton,
    tau: StrategyAutomaton,
    cap: int = DEFAULT_CHAIN_CAP,
) -> InducedChain:
    """Product chain over (state, memory-1, memory-2) triples."""
    if sigma.player is not Owner.P1 or tau.player is not Owner.P2:
        raise ValueError("induced_chain expects a player-1 and a player-2 strategy")
    start = (game.init, sigma.init_memory, tau.init_memory)
    index = {start: 0}
    order = [start]
    rows: list[tuple[tuple[int, Fraction], ...]] = []
    frontier = 0
    while frontier < len(order):
        state, m1, m2 = order[frontier]
        frontier += 1
        owner = game.owners[state]
        if owner is Owner.P1:
            dist = sigma.distribution(m1, state)
        elif owner is Owner.P2:
            dist = tau.distribution(m2, state)
        else:
            dist = game.chance[state]
        n1 = sigma.next_memory(m1, state)
        n2 = tau.next_memory(m2, state)
        row = []
        for target, p in dist:
            node = (target, n1, n2)
            if node not in index:
                if len(order) >= cap:
                    raise ResourceCapError(f"induced chain exceeds cap of {cap} nodes")
                index[node] = len(order)
                order.append(node)
            row.append((index[node], p))
        rows.append(tuple(row))
    return InducedChain(
        nodes=tuple(order),
        base=tuple(node[0] for node in order),
        trans=tuple(rows),
    )


def _reachable(adj: Sequence[Sequence[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _almost_sure_reach_chain(adj: Sequence[Sequence[int]], init: int, hit: set[int]) -> bool:
    """Probability-one reachability on a finite chain: every node reachable
    while avoiding the target must still be able to reach the target.

    Equivalent to requiring every reachable bottom component of the stopped
    chain to intersect the target, but needs only two traversals.
    """
    if init in hit:
        return True
    stopped = [tuple() if v in hit else row for v, row in enumerate(adj)]
    avoiding = _reachable(stopped, init)
    can = set(hit)
    changed = True
    while changed:
        changed = False
        for v in avoiding:
            if v not in can and any(w in can for w in stopped[v]):
                can.add(v)
                changed = True
    return all(v in can for v in avoiding)


def eval_qualitative(chain: InducedChain, query: Query) -> bool:
    """Evaluate a query on the chain; atoms lift to nodes by base state."""

    adj = chain.adjacency()
    reachable = _reachable(adj, chain.init)

    def node_hits(target: StateSet) -> set[int]:
        return {v for v in range(chain.n) if chain.base[v] in target}

    def nz_reach(target: StateSet) -> bool:
        return any(chain.base[v] in target for v in reachable)

    def atom_value(atom: Atom) -> bool:
        if atom.mode is Mode.NZ and atom.shape is Shape.REACH:
            return nz_reach(atom.target)
        if atom.mode is Mode.AS and atom.shape is Shape.REACH:
            return _almost_sure_reach_chain(adj, chain.init, node_hits(atom.target))
        if atom.mode is Mode.AS and atom.shape is Shape.SAFE:
            return not nz_reach(atom.target.complement())
        return not _almost_sure_reach_chain(adj, chain.init, node_hits(atom.target.complement()))

    def value(q: Query) -> bool:
        if isinstance(q, Atom):
            return atom_value(q)
        if isinstance(q, Not):
            return not value(q.child)
        if isinstance(q, And):
            return all(value(c) for c in q.children)
        return any(value(c) for c in q.children)

    return value(query)


def reach_probability(chain: InducedChain, target: StateSet) -> Fraction:
    """Exact probability of eventually hitting the target from the initial node.

    Solves the absorption linear system with rational Gaussian elimination;
    used as the independent cross-check for the qualitative evaluator.
    """
    hits = {v for v in range(chain.n) if chain.base[v] in target}
    adj = [tuple() if v in hits else row for v, row in enumerate(chain.adjacency())]
    # nodes that can still reach the target
    can_reach = set(hits)
    changed = True
    while changed:
        changed = False
        for v in range(chain.n):
            if v in can_reach:
                continue
            if any(w in can_reach for w in adj[v]):
                can_reach.add(v)
                changed = True

    if chain.init in hits:
        return Fraction(1)
    if chain.init not in can_reach:
        return Fraction(0)

    unknown = sorted(can_reach - hits)
    pos = {v: k for k, v in enumerate(unknown)}
    size = len(unknown)
    matrix = [[Fraction(0)] * (size + 1) for _ in range(size)]
    for v in unknown:
        r = pos[v]
        matrix[r][r] = Fraction(1)
        for w, p in chain.trans[v]:
            if w in hits:
                matrix[r][size] += p
            elif w in pos:
                matrix[r][pos[w]] -= p
            # mass to nodes that cannot reach the target contributes zero

    for col in range(size):
        pivot = next(r for r in range(col, size) if matrix[r][col] != 0)
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        inv = 1 / matrix[col][col]
        matrix[col] = [x * inv for x in matrix[col]]
        for r in range(size):
            if r != col and matrix[r][col] != 0:
                factor = matrix[r][col]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[col])]
    return matrix[pos[chain.init]][size]


def _support_closure(
    game: StochasticGame, sigma: StrategyAutomaton, cap: int = DEFAULT_CHAIN_CAP
) -> dict[tuple[int, frozenset[int]], set[int]]:
    """Explore (state, strategy memory, visited-before set) triples against an
    arbitrary opponent; collect the union of output supports per (state,
    visited set) pair.  Decidable because the strategy is finite-memory."""
    start = (game.init, sigma.init_memory, frozenset())
    seen = {start}
    stack = [start]
    responses: dict[tuple[int, frozenset[int]], set[int]] = {}
    while stack:
        state, memory, visited = stack.pop()
        owner = game.owners[state]
        if owner is sigma.player:
            support = tuple(j for j, _ in sigma.distribution(memory, state))
            responses.setdefault((state, visited), set()).update(support)
            moves = support
        else:
            moves = game.successors(state)
        next_memory = sigma.next_memory(memory, state)
        next_visited = visited | {state}
        for j in moves:
            node = (j, next_memory, next_visited)
            if node not in seen:
                if len(seen) >= cap:
                    raise ResourceCapError(f"response exploration exceeds cap of {cap}")
                seen.add(node)
                stack.append(node)
    return responses


def response_set(
    sigma: StrategyAutomaton,
    state: int,
    visited: frozenset[int],
    game: StochasticGame,
) -> frozenset[int]:
    """Successors played with positive probability by `sigma` after some
    positive-probability history ending at `state` whose set of previously
    visited states is exactly `visited`.  Empty when no such history exists."""
    responses = _support_closure(game, sigma)
    return frozenset(responses.get((state, visited), frozenset()))


def visited_set_uniform(
    sigma: StrategyAutomaton,
    game: StochasticGame,
    cap: int = DEFAULT_MEMORY_CAP,
) -> StrategyAutomaton:
    """Derive the strategy that remembers only the set of visited states and
    plays uniformly over every response the original strategy could give at
    that set.  Well-defined at every history the derived strategy can reach."""
    responses = _support_closure(game, sigma)

    start = frozenset()
    memories: list[frozenset[int]] = [start]
    seen = {start}
    update: dict[tuple[Hashable, int], Hashable] = {}
    output: dict[tuple[Hashable, int], tuple[tuple[int, Fraction], ...]] = {}
    frontier = 0
    reachable_pairs: set[tuple[frozenset[int], int]] = set()

    # first find the (visited, state) pairs reachable under the derived play
    pair_start = (start, game.init)
    pair_seen = {pair_start}
    pair_stack = [pair_start]
    while pair_stack:
        visited, state = pair_stack.pop()
        reachable_pairs.add((visited, state))
        if game.owners[state] is sigma.player:
            support = responses.get((state, visited))
            if not support:
                raise InternalInvariantError(
                    "empty response set at a reachable history; "
                    "the input strategy does not cover this play"
                )
            moves: Iterable[int] = sorted(support)
        else:
            moves = game.successors(state)
        nxt = visited | {state}
        for j in moves:
            pair = (nxt, j)
            if pair not in pair_seen:
                if len(pair_seen) >= cap:
                    raise ResourceCapError(f"visited-set construction exceeds cap of {cap}")
                pair_seen.add(pair)
                pair_stack.append(pair)

    for visited, state in sorted(reachable_pairs, key=lambda p: (len(p[0]), sorted(p[0]), p[1])):
        nxt = visited | {state}
        if nxt not in seen:
            seen.add(nxt)
            memories.append(nxt)
        update[(visited, state)] = nxt
        if game.owners[state] is sigma.player:
            support = sorted(responses[(state, visited)])
            output[(visited, state)] = uniform(support)

    memories_sorted = tuple(sorted(set(memories), key=lambda m: (len(m), sorted(m))))
    derived = StrategyAutomaton(
        player=sigma.player,
        memories=memories_sorted,
        init_memory=start,
        update=update,
        output=output,
    )
    derived.validate_for(game)
    return derived


@dataclass(frozen=True)
class VerifyResult:
    """Outcome of checking a strategy against an enumerated adversary class.

    `evidence_only` marks results whose adversary class is not known to be
    exhaustive for the negated query, so success is bounded-adversary
    evidence rather than proof.
    """

    ok: bool
    adversaries_checked: int
    counterexample: Optional[StrategyAutomaton] = None
    evidence_only: bool = False

    def __bool__(self) -> bool:
        return self.ok


def verify_strategy(
    game: StochasticGame,
    sigma: StrategyAutomaton,
    query: Query,
    adversary_kind=None,
    adversary_outputs: str = "subsets",
    caps=None,
) -> VerifyResult:
    """Check that the query holds on the induced chain for every adversary
    automaton in the given memory class (visited-set memory by default)."""
    from . import oracle  # local import to avoid a cycle

    if adversary_kind is None:
        adversary_kind = oracle.VisitedSetMemory()
    opponent = Owner.P2 if sigma.player is Owner.P1 else Owner.P1
    negated = dual_query(query)
    caveat = any(
        a.mode is Mode.NZ and a.shape is Shape.SAFE for a in iter_atoms(negated)
    )
    checked = 0
    for tau in oracle.enumerate_strategies(
        game, opponent, adversary_kind, outputs=adversary_outputs, caps=caps
    ):
        checked += 1
        if sigma.player is Owner.P1:
            chain = induced_chain(game, sigma, tau)
        else:
            chain = induced_chain(game, tau, sigma)
        if not eval_qualitative(chain, query):
            return VerifyResult(False, checked, counterexample=tau, evidence_only=caveat)
    return VerifyResult(True, checked, evidence_only=caveat)


def parse_strategy(text: str, game: StochasticGame) -> StrategyAutomaton:
    """Parse the line-based strategy format."""
    player: Optional[Owner] = None
    memories: list[str] = []
    init_memory: Optional[str] = None
    update: dict[tuple[Hashable, int], Hashable] = {}
    output_acc: dict[tuple[str, int], list[tuple[int, Fraction]]] = {}

    for lineno, raw in enumerate(text.replace(";", "\n").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "strategy":
            if len(parts) != 2 or parts[1] not in ("p1", "p2"):
                raise StrategyFormatError(f"line {lineno}: expected 'strategy p1|p2'")
            player = Owner(parts[1])
        elif kind == "memory":
            if len(parts) < 2:
                raise StrategyFormatError(f"line {lineno}: expected 'memory <id>...'")
            memories.extend(parts[1:])
        elif kind == "initmem":
            if len(parts) != 2:
                raise StrategyFormatError(f"line {lineno}: expected 'initmem <id>'")
            init_memory = parts[1]
        elif kind == "update":
            if len(parts) != 4:
                raise StrategyFormatError(f"line {lineno}: expected 'update <mem> <state> <mem2>'")
            update[(parts[1], game.index(parts[2]))] = parts[3]
        elif kind == "out":
            if len(parts) != 5:
                raise StrategyFormatError(
                    f"line {lineno}: expected 'out <mem> <state> <succ> <num>/<den>'"
                )
            try:
                p = Fraction(parts[4])
            except (ValueError, ZeroDivisionError):
                raise StrategyFormatError(f"line {lineno}: bad probability {parts[4]!r}") from None
            key = (parts[1], game.index(parts[2]))
            output_acc.setdefault(key, []).append((game.index(parts[3]), p))
        else:
            raise StrategyFormatError(f"line {lineno}: unknown directive {kind!r}")

    if player is None:
        raise StrategyFormatError("missing strategy line")
    if not memories:
        raise StrategyFormatError("missing memory line")
    if init_memory is None or init_memory not in memories:
        raise StrategyFormatError("missing or unknown initmem")
    known = set(memories)
    for (m, _), m2 in update.items():
        if m not in known or m2 not in known:
            raise StrategyFormatError("update references unknown memory")
    output: dict[tuple[Hashable, int], tuple[tuple[int, Fraction], ...]] = {}
    for (m, state), dist in output_acc.items():
        if m not in known:
            raise StrategyFormatError("out references unknown memory")
        output[(m, state)] = tuple(dist)

    automaton = StrategyAutomaton(
        player=player,
        memories=tuple(memories),
        init_memory=init_memory,
        update=update,
        output=output,
    )
    automaton.validate_for(game)
    return automaton


def strategy_to_text(sigma: StrategyAutomaton, game: StochasticGame) -> str:
    """Serialize a strategy with string memory labels (round-trips via parse_strategy)."""
    labels = {m: (m if isinstance(m, str) else f"m{k}") for k, m in enumerate(sigma.memories)}
    lines = [f"strategy {sigma.player.value}"]
    lines.append("memory " + " ".join(labels[m] for m in sigma.memories))
    lines.append(f"initmem {labels[sigma.init_memory]}")
    for (m, s), m2 in sorted(
        sigma.update.items(), key=lambda kv: (sigma.memories.index(kv[0][0]), kv[0][1])
    ):
        lines.append(f"update {labels[m]} {game.states[s]} {labels[m2]}")
    for (m, s), dist in sorted(
        sigma.output.items(), key=lambda kv: (sigma.memories.index(kv[0][0]), kv[0][1])
    ):
        for j, p in dist:
            lines.append(
                f"out {labels[m]} {game.states[s]} {game.states[j]} {p.numerator}/{p.denominator}"
            )
    return "\n".join(lines) + "\n"
