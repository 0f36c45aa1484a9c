"""Turn-based stochastic game model, validation, and the text file format.

States are partitioned between player 1, player 2, and a chance player.
Player states carry a nonempty ordered successor set; chance states carry an
exact rational distribution that must sum to one.  All iteration follows the
declaration order of the states, so every derived object is deterministic.

Game values are immutable after construction and safe to share between
threads for concurrent reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .errors import GameFormatError


class Owner(Enum):
    P1 = "p1"
    P2 = "p2"
    CHANCE = "chance"


_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class StateSet:
    """Bitset over a game's ordered states.

    The complement is always taken relative to the owning game's state
    universe, so set arithmetic stays closed for one game.
    """

    mask: int
    size: int

    def _check(self, other: "StateSet") -> None:
        if self.size != other.size:
            raise ValueError("state sets belong to different universes")

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.size and bool(self.mask >> index & 1)

    def __or__(self, other: "StateSet") -> "StateSet":
        self._check(other)
        return StateSet(self.mask | other.mask, self.size)

    def __and__(self, other: "StateSet") -> "StateSet":
        self._check(other)
        return StateSet(self.mask & other.mask, self.size)

    def __sub__(self, other: "StateSet") -> "StateSet":
        self._check(other)
        return StateSet(self.mask & ~other.mask, self.size)

    def complement(self) -> "StateSet":
        return StateSet(~self.mask & (1 << self.size) - 1, self.size)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.size) if self.mask >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def issubset(self, other: "StateSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def names(self, game: "StochasticGame") -> tuple[str, ...]:
        return tuple(game.states[i] for i in self.indices())

    @classmethod
    def empty(cls, size: int) -> "StateSet":
        return cls(0, size)

    @classmethod
    def full(cls, size: int) -> "StateSet":
        return cls((1 << size) - 1, size)

    @classmethod
    def from_indices(cls, indices: Iterable[int], size: int) -> "StateSet":
        mask = 0
        for i in indices:
            if not 0 <= i < size:
                raise ValueError(f"state index {i} outside universe of size {size}")
            mask |= 1 << i
        return cls(mask, size)


@dataclass(frozen=True)
class StochasticGame:
    """A finite turn-based stochastic game.

    `succ[i]` is the ordered successor tuple for player states and None for
    chance states; `chance[i]` is the rational distribution for chance states
    and None otherwise.  `init` is a state index.
    """

    name: str
    states: tuple[str, ...]
    owners: tuple[Owner, ...]
    init: int
    succ: tuple[Optional[tuple[int, ...]], ...]
    chance: tuple[Optional[tuple[tuple[int, Fraction], ...]], ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.states)
        if n == 0:
            raise GameFormatError("game has no states")
        if len(set(self.states)) != n:
            raise GameFormatError("duplicate state declaration")
        if not (len(self.owners) == len(self.succ) == len(self.chance) == n):
            raise GameFormatError("misaligned state tables")
        if not 0 <= self.init < n:
            raise GameFormatError("missing or unknown init state")
        for i, owner in enumerate(self.owners):
            if owner is Owner.CHANCE:
                if self.succ[i] is not None or self.chance[i] is None:
                    raise GameFormatError(f"state {self.states[i]}: chance state needs a distribution")
                dist = self.chance[i]
                if not dist:
                    raise GameFormatError(f"state {self.states[i]}: empty distribution")
                total = Fraction(0)
                seen: set[int] = set()
                for j, p in dist:
                    if not 0 <= j < n:
                        raise GameFormatError(f"state {self.states[i]}: unknown successor index")
                    if j in seen:
                        raise GameFormatError(f"state {self.states[i]}: duplicate successor in distribution")
                    seen.add(j)
                    if p <= 0:
                        raise GameFormatError(f"state {self.states[i]}: nonpositive probability")
                    total += p
                if total != 1:
                    raise GameFormatError(f"state {self.states[i]}: chance mass {total} != 1")
            else:
                if self.chance[i] is not None or self.succ[i] is None:
                    raise GameFormatError(f"state {self.states[i]}: player state needs successors")
                if not self.succ[i]:
                    raise GameFormatError(f"state {self.states[i]}: empty successor set")
                if len(set(self.succ[i])) != len(self.succ[i]):
                    raise GameFormatError(f"state {self.states[i]}: duplicate successor")
                for j in self.succ[i]:
                    if not 0 <= j < n:
                        raise GameFormatError(f"state {self.states[i]}: unknown successor index")

    @property
    def n(self) -> int:
        return len(self.states)

    def index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise GameFormatError(f"unknown state {name!r}") from None

    def successors(self, i: int) -> tuple[int, ...]:
        """Ordered successor indices (support of the distribution at chance states)."""
        if self.owners[i] is Owner.CHANCE:
            return tuple(j for j, _ in self.chance[i])
        return self.succ[i]

    def state_set(self, names: Iterable[str]) -> StateSet:
        return StateSet.from_indices((self.index(s) for s in names), self.n)

    def full_set(self) -> StateSet:
        return StateSet.full(self.n)

    def empty_set(self) -> StateSet:
        return StateSet.empty(self.n)

    def successor_mask(self, i: int) -> int:
        mask = 0
        for j in self.successors(i):
            mask |= 1 << j
        return mask


def _fresh_sink_name(taken: Sequence[str]) -> str:
    name = "_bot"
    k = 0
    while name in taken:
        k += 1
        name = f"_bot{k}"
    return name


def restrict(game: StochasticGame, keep: StateSet) -> StochasticGame:
    """Cut the game to `keep`, absorbing every removed move in a fresh terminal sink.

    The sink is a chance state with a probability-one self loop.  Player moves
    that left `keep` are replaced by a single move to the sink; chance mass to
    removed states is redirected to the sink.  The initial state becomes the
    sink when it was removed.
    """
    if keep.size != game.n:
        raise ValueError("state set does not match the game")
    old = [i for i in range(game.n) if i in keep]
    sink_name = _fresh_sink_name([game.states[i] for i in old])
    names = tuple(game.states[i] for i in old) + (sink_name,)
    remap = {i: k for k, i in enumerate(old)}
    sink = len(old)

    owners: list[Owner] = []
    succ: list[Optional[tuple[int, ...]]] = []
    chance: list[Optional[tuple[tuple[int, Fraction], ...]]] = []
    for i in old:
        owner = game.owners[i]
        owners.append(owner)
        if owner is Owner.CHANCE:
            kept = [(remap[j], p) for j, p in game.chance[i] if j in keep]
            lost = sum((p for j, p in game.chance[i] if j not in keep), Fraction(0))
            if lost > 0:
                kept.append((sink, lost))
            succ.append(None)
            chance.append(tuple(kept))
        else:
            kept_succ = [remap[j] for j in game.succ[i] if j in keep]
            if len(kept_succ) != len(game.succ[i]):
                kept_succ.append(sink)
            succ.append(tuple(kept_succ))
            chance.append(None)
    owners.append(Owner.CHANCE)
    succ.append(None)
    chance.append(((sink, Fraction(1)),))

    init = remap.get(game.init, sink)
    return StochasticGame(
        name=game.name,
        states=names,
        owners=tuple(owners),
        init=init,
        succ=tuple(succ),
        chance=tuple(chance),
    )


def map_state_set(src: StochasticGame, dst: StochasticGame, members: StateSet) -> StateSet:
    """Carry a state set from one game to another by state name, dropping absentees."""
    names = set(members.names(src))
    return StateSet.from_indices(
        (i for i, s in enumerate(dst.states) if s in names), dst.n
    )


def parse_game(text: str) -> StochasticGame:
    """Parse the line-based game format.

    States with no declared outgoing transition are completed with a self
    loop and a diagnostic note is recorded on the returned game.
    """
    name: Optional[str] = None
    order: list[str] = []
    owner_of: dict[str, Owner] = {}
    init_name: Optional[str] = None
    edges: dict[str, list[str]] = {}
    probs: dict[str, list[tuple[str, Fraction]]] = {}

    def check_id(token: str, what: str) -> str:
        if not _ID_RE.match(token):
            raise GameFormatError(f"line {lineno}: bad {what} identifier {token!r}")
        return token

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "game":
            if len(parts) != 2:
                raise GameFormatError(f"line {lineno}: expected 'game <name>'")
            if name is not None:
                raise GameFormatError(f"line {lineno}: duplicate game line")
            name = check_id(parts[1], "game")
        elif kind == "state":
            if len(parts) != 3:
                raise GameFormatError(f"line {lineno}: expected 'state <id> <p1|p2|chance>'")
            sid = check_id(parts[1], "state")
            if sid in owner_of:
                raise GameFormatError(f"line {lineno}: duplicate state {sid!r}")
            try:
                owner = Owner(parts[2])
            except ValueError:
                raise GameFormatError(f"line {lineno}: unknown owner {parts[2]!r}") from None
            order.append(sid)
            owner_of[sid] = owner
        elif kind == "init":
            if len(parts) != 2:
                raise GameFormatError(f"line {lineno}: expected 'init <id>'")
            if init_name is not None:
                raise GameFormatError(f"line {lineno}: duplicate init line")
            init_name = parts[1]
        elif kind == "edge":
            if len(parts) != 3:
                raise GameFormatError(f"line {lineno}: expected 'edge <src> <dst>'")
            edges.setdefault(parts[1], []).append(parts[2])
        elif kind == "prob":
            if len(parts) != 4:
                raise GameFormatError(f"line {lineno}: expected 'prob <src> <dst> <num>/<den>'")
            try:
                p = Fraction(parts[3])
            except (ValueError, ZeroDivisionError):
                raise GameFormatError(f"line {lineno}: bad probability {parts[3]!r}") from None
            probs.setdefault(parts[1], []).append((parts[2], p))
        else:
            raise GameFormatError(f"line {lineno}: unknown directive {kind!r}")

    if name is None:
        raise GameFormatError("missing game line")
    if not order:
        raise GameFormatError("no states declared")
    if init_name is None:
        raise GameFormatError("missing init")
    if init_name not in owner_of:
        raise GameFormatError(f"unknown state {init_name!r} in init")

    for src in edges:
        if src not in owner_of:
            raise GameFormatError(f"unknown state {src!r} in edge")
        if owner_of[src] is Owner.CHANCE:
            raise GameFormatError(f"edge from chance state {src!r}; use prob")
    for src in probs:
        if src not in owner_of:
            raise GameFormatError(f"unknown state {src!r} in prob")
        if owner_of[src] is not Owner.CHANCE:
            raise GameFormatError(f"prob from player state {src!r}; use edge")

    idx = {s: i for i, s in enumerate(order)}
    notes: list[str] = []
    succ: list[Optional[tuple[int, ...]]] = []
    chance: list[Optional[tuple[tuple[int, Fraction], ...]]] = []
    for sid in order:
        owner = owner_of[sid]
        if owner is Owner.CHANCE:
            dist = probs.get(sid, [])
            for dst, _ in dist:
                if dst not in idx:
                    raise GameFormatError(f"unknown state {dst!r} in prob from {sid!r}")
            seen_dst = [d for d, _ in dist]
            if len(set(seen_dst)) != len(seen_dst):
                raise GameFormatError(f"duplicate prob entry from {sid!r}")
            if not dist:
                dist = [(sid, Fraction(1))]
                notes.append(f"added terminal self loop at {sid}")
            total = sum((p for _, p in dist), Fraction(0))
            if total != 1:
                raise GameFormatError(f"state {sid!r}: chance mass {total} != 1")
            succ.append(None)
            chance.append(tuple((idx[d], p) for d, p in dist))
        else:
            outs = edges.get(sid, [])
            for dst in outs:
                if dst not in idx:
                    raise GameFormatError(f"unknown state {dst!r} in edge from {sid!r}")
            if len(set(outs)) != len(outs):
                raise GameFormatError(f"duplicate edge from {sid!r}")
            if not outs:
                outs = [sid]
                notes.append(f"added terminal self loop at {sid}")
            succ.append(tuple(idx[d] for d in outs))
            chance.append(None)

    game = StochasticGame(
        name=name,
        states=tuple(order),
        owners=tuple(owner_of[s] for s in order),
        init=idx[init_name],
        succ=tuple(succ),
        chance=tuple(chance),
        notes=tuple(notes),
    )
    return game


def game_to_text(game: StochasticGame) -> str:
    """Serialize a game in the text format (round-trips through parse_game)."""
    lines = [f"game {game.name}"]
    for i, s in enumerate(game.states):
        lines.append(f"state {s} {game.owners[i].value}")
    lines.append(f"init {game.states[game.init]}")
    for i, s in enumerate(game.states):
        if game.owners[i] is Owner.CHANCE:
            for j, p in game.chance[i]:
                lines.append(f"prob {s} {game.states[j]} {p.numerator}/{p.denominator}")
        else:
            for j in game.succ[i]:
                lines.append(f"edge {s} {game.states[j]}")
    return "\n".join(lines) + "\n"
