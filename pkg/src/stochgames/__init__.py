"""Qualitative multi-objective solving for turn-based stochastic games."""

from .errors import (
    DqbfFormatError,
    GameFormatError,
    InternalInvariantError,
    QueryFormatError,
    ResourceCapError,
    StrategyFormatError,
)
from .game import Owner, StateSet, StochasticGame, game_to_text, map_state_set, parse_game, restrict
from .query import (
    And,
    Atom,
    Fragment,
    Mode,
    Not,
    Or,
    Query,
    classify,
    dual_query,
    negate_normalize,
    parse_query,
    query_to_text,
    Shape,
    to_dnf,
)
from .regions import Region, single_region, swap_players
from .solver import SolveResult, SolverCaps, Winner, solve
from .strategy import (
    InducedChain,
    StrategyAutomaton,
    VerifyResult,
    eval_qualitative,
    induced_chain,
    parse_strategy,
    reach_probability,
    response_set,
    strategy_to_text,
    verify_strategy,
    visited_set_uniform,
)
from .unfold import GoalUnfolding, ReachabilityGame, UnfoldedState, goal_unfold, to_reachability_game

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
