from fractions import Fraction

import pytest

from stochgames.errors import GameFormatError
from stochgames.game import (
    Owner,
    StateSet,
    game_to_text,
    map_state_set,
    parse_game,
    restrict,
)
from stochgames import fixtures


def test_parse_fig1_auto_self_loops(fig1):
    assert fig1.states == ("s0", "s1", "s2", "s3", "s4")
    assert fig1.owners[0] is Owner.P1
    assert fig1.owners[1] is Owner.P2
    assert all(fig1.owners[i] is Owner.CHANCE for i in (2, 3, 4))
    for i in (2, 3, 4):
        assert fig1.chance[i] == ((i, Fraction(1)),)
    assert len(fig1.notes) == 3


def test_parse_single_state_self_loop():
    g = parse_game("game tiny\nstate a p1\ninit a\n")
    assert g.succ[0] == (0,)
    assert g.notes == ("added terminal self loop at a",)


def test_parse_chance_mass_error():
    text = "game bad\nstate c chance\nstate x chance\nstate y chance\ninit c\n" \
           "prob c x 1/3\nprob c y 1/3\n"
    with pytest.raises(GameFormatError, match="chance mass 2/3"):
        parse_game(text)


@pytest.mark.parametrize(
    "text,match",
    [
        ("game g\nstate a p1\nstate a p1\ninit a\n", "duplicate state"),
        ("game g\nstate a p1\ninit b\n", "unknown state"),
        ("game g\nstate a p1\nedge a b\ninit a\n", "unknown state"),
        ("game g\nstate a p1\n", "missing init"),
        ("game g\nstate a chance\ninit a\nedge a a\n", "edge from chance"),
        ("game g\nstate a p1\ninit a\nprob a a 1/1\n", "prob from player"),
        ("state a p1\ninit a\n", "missing game line"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(GameFormatError, match=match):
        parse_game(text)


def test_round_trip_preserves_fully_declared_games(fig2):
    text = game_to_text(fig2)
    again = parse_game(text)
    assert again.states == fig2.states
    assert again.owners == fig2.owners
    assert again.succ == fig2.succ
    assert again.chance == fig2.chance
    # a fully declared game gains no completion notes
    assert again.notes == ()


def test_state_set_operations(fig1):
    a = fig1.state_set(["s0", "s2"])
    b = fig1.state_set(["s2", "s3"])
    assert (a | b).names(fig1) == ("s0", "s2", "s3")
    assert (a & b).names(fig1) == ("s2",)
    assert (a - b).names(fig1) == ("s0",)
    assert a.complement().names(fig1) == ("s1", "s3", "s4")
    assert len(a) == 2 and 0 in a and 1 not in a
    with pytest.raises(ValueError):
        a | StateSet.empty(3)


def test_restrict_fig1_drops_s2(fig1):
    keep = fig1.state_set(["s0", "s1", "s3", "s4"])
    g = restrict(fig1, keep)
    assert g.states == ("s0", "s1", "s3", "s4", "_bot")
    s0 = g.index("s0")
    assert tuple(g.states[j] for j in g.succ[s0]) == ("s1", "_bot")
    # untouched player-2 state keeps its successors
    s1 = g.index("s1")
    assert tuple(g.states[j] for j in g.succ[s1]) == ("s3", "s4")
    bot = g.index("_bot")
    assert g.owners[bot] is Owner.CHANCE
    assert g.chance[bot] == ((bot, Fraction(1)),)


def test_restrict_full_set_keeps_behavior(fig1):
    g = restrict(fig1, fig1.full_set())
    # same states plus an unreachable sink
    assert g.states[:-1] == fig1.states
    assert g.succ[:-1] == fig1.succ
    assert g.init == fig1.init


def test_restrict_empty_set_gives_sink_only(fig1):
    g = restrict(fig1, fig1.empty_set())
    assert g.states == ("_bot",)
    assert g.init == 0


def test_restrict_redirects_chance_mass():
    text = (
        "game g\nstate c chance\nstate x chance\nstate y chance\ninit c\n"
        "prob c x 1/3\nprob c y 2/3\n"
    )
    g = parse_game(text)
    r = restrict(g, g.state_set(["c", "x"]))
    c = r.index("c")
    dist = {r.states[j]: p for j, p in r.chance[c]}
    assert dist == {"x": Fraction(1, 3), "_bot": Fraction(2, 3)}


def test_restrict_idempotent_modulo_sink(fig1):
    keep = fig1.state_set(["s0", "s1", "s3", "s4"])
    once = restrict(fig1, keep)
    keep_again = once.state_set(["s0", "s1", "s3", "s4"])
    twice = restrict(once, keep_again)
    # the old sink is dropped, a fresh one added: structure must match
    assert twice.states == ("s0", "s1", "s3", "s4", "_bot")
    rename = {twice.states[i]: i for i in range(twice.n)}
    for name in ("s0", "s1", "s3", "s4"):
        i_once, i_twice = once.index(name), twice.index(name)
        assert once.owners[i_once] is twice.owners[i_twice]
        if once.succ[i_once] is not None:
            assert tuple(once.states[j] for j in once.succ[i_once]) == tuple(
                twice.states[j] for j in twice.succ[i_twice]
            )


def test_map_state_set(fig1):
    keep = fig1.state_set(["s0", "s1", "s3", "s4"])
    g = restrict(fig1, keep)
    t = fig1.state_set(["s2", "s3"])
    assert map_state_set(fig1, g, t).names(g) == ("s3",)
