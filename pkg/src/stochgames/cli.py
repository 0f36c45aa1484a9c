"""Command-line interface with deterministic plain-text and JSON reports.

Every subcommand prints a report of `key: value` lines (or one JSON object
with --json) whose content is a pure function of the inputs and flags, so
runs are byte-identical and diffable.  Diagnostics go to stderr.

Exit codes: 0 completed, 1 usage or parse error, 2 resource cap exceeded,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import fixtures
from .dqbf import dqbf_brute_sat, parse_dqbf, reduce_to_game
from .errors import (
    DqbfFormatError,
    GameFormatError,
    InternalInvariantError,
    QueryFormatError,
    ResourceCapError,
    StrategyFormatError,
)
from .game import StateSet, StochasticGame, game_to_text, parse_game
from .oracle import (
    OracleCaps,
    brute_force_winner,
    memory_kind_from_label,
    nondeterminacy_evidence,
)
from .query import Fragment, Mode, Shape, classify, negate_normalize, parse_query, query_to_text
from .regions import single_region
from .solver import SolverCaps, Winner, solve
from .strategy import parse_strategy, verify_strategy
from .unfold import goal_unfold

_FORMAT_ERRORS = (
    GameFormatError,
    QueryFormatError,
    StrategyFormatError,
    DqbfFormatError,
    ValueError,
)


def _load_game(path: str) -> StochasticGame:
    return parse_game(Path(path).read_text(encoding="utf-8"))


def _emit(report: list[tuple[str, object]], as_json: bool) -> None:
    if as_json:
        payload = {}
        for key, value in report:
            payload[key] = value
        sys.stdout.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    else:
        for key, value in report:
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            sys.stdout.write(f"{key}: {value}\n")


def _parse_set(text: str, game: StochasticGame) -> StateSet:
    # reuse the query grammar: wrap the set into a throwaway atom
    atom = parse_query(f"AS F {text}", game)
    return atom.target  # type: ignore[union-attr]


def _evidence_rows(evidence: dict) -> list[tuple[str, object]]:
    rows = []
    for key in sorted(evidence):
        rows.append((f"evidence.{key}", evidence[key]))
    return rows


def _cmd_validate(args, as_json: bool) -> int:
    game = _load_game(args.game)
    report: list[tuple[str, object]] = [
        ("command", "validate"),
        ("game", game.name),
        ("states", game.n),
        ("init", game.states[game.init]),
        ("notes", list(game.notes)),
        ("status", "ok"),
    ]
    _emit(report, as_json)
    return 0


def _cmd_region(args, as_json: bool) -> int:
    game = _load_game(args.game)
    mode_label, shape_label, set_text = args.atom
    try:
        mode = Mode(mode_label)
    except ValueError:
        raise QueryFormatError(f"bad mode {mode_label!r}; use AS or NZ") from None
    if shape_label not in ("F", "G"):
        raise QueryFormatError(f"bad shape {shape_label!r}; use F or G")
    shape = Shape.REACH if shape_label == "F" else Shape.SAFE
    target = _parse_set(set_text, game)
    region = single_region(game, mode, shape, target)
    _emit(
        [
            ("command", "region"),
            ("game", game.name),
            ("atom", f"{mode.value} {shape.value} {{{','.join(target.names(game))}}}"),
            ("region", list(region.states.names(game))),
            ("init_wins", game.init in region.states),
        ],
        as_json,
    )
    return 0


def _cmd_solve(args, as_json: bool) -> int:
    game = _load_game(args.game)
    query = parse_query(args.query, game)
    caps = SolverCaps(
        max_conjuncts=args.max_conjuncts,
        max_dnf_terms=args.max_dnf_terms,
        max_product_nodes=args.max_product_nodes,
    )
    result = solve(game, query, caps)
    report: list[tuple[str, object]] = [
        ("command", "solve"),
        ("game", game.name),
        ("query", query_to_text(query, game)),
        ("fragment", result.fragment.value),
        ("winner", result.winner),
    ]
    report.extend(_evidence_rows(result.evidence))
    if result.winner == Winner.UNKNOWN:
        report.append(("hint", "run 'oracle' for bounded-memory evidence"))
    _emit(report, as_json)
    return 0


def _cmd_classify(args, as_json: bool) -> int:
    if args.game:
        game = _load_game(args.game)
    else:
        # synthesize a universe from the states mentioned in the query text
        import re

        mentioned = []
        for token in re.findall(r"\{([^}]*)\}", args.query):
            for name in token.split(","):
                name = name.strip()
                if name and name not in mentioned:
                    mentioned.append(name)
        if not mentioned:
            mentioned = ["s0"]
        text = "game synthetic\n" + "\n".join(
            f"state {name} chance" for name in mentioned
        ) + f"\ninit {mentioned[0]}\n"
        game = parse_game(text)
    query = parse_query(args.query, game)
    positive = negate_normalize(query)
    _emit(
        [
            ("command", "classify"),
            ("query", query_to_text(query, game)),
            ("positive_form", query_to_text(positive, game)),
            ("fragment", classify(positive).value),
        ],
        as_json,
    )
    return 0


def _cmd_unfold(args, as_json: bool) -> int:
    game = _load_game(args.game)
    targets = [_parse_set(t, game) for t in args.targets]
    unfolding = goal_unfold(game, targets)
    product, nodes = unfolding.materialize(args.max_product_nodes)
    edges = sum(len(product.successors(i)) for i in range(product.n))
    _emit(
        [
            ("command", "unfold"),
            ("game", game.name),
            ("targets", len(targets)),
            ("reachable_nodes", product.n),
            ("edges", edges),
            ("full_product_size", game.n * (1 << len(targets))),
        ],
        as_json,
    )
    return 0


def _cmd_oracle(args, as_json: bool) -> int:
    game = _load_game(args.game)
    query = parse_query(args.query, game)
    caps = OracleCaps(
        max_game_states=args.max_game_states,
        max_memories=args.max_memories,
        max_strategies=args.max_strategies,
    )
    if args.mem1 == "escalate":
        report_obj = nondeterminacy_evidence(game, query, outputs=args.outputs, caps=caps)
        report: list[tuple[str, object]] = [
            ("command", "oracle"),
            ("game", game.name),
            ("query", query_to_text(query, game)),
            ("note", "evidence within enumerated classes"),
        ]
        for label, verdict in report_obj.entries:
            report.append((f"class.{label}.outcome", verdict.outcome.value))
            report.append((f"class.{label}.sigmas", len(verdict.sigmas)))
            report.append((f"class.{label}.taus", len(verdict.taus)))
            if verdict.matrix is not None:
                for i, row in enumerate(verdict.matrix):
                    desc = verdict.sigmas[i].describe(game)
                    cells = "".join("1" if cell else "0" for cell in row)
                    report.append((f"class.{label}.matrix.{i}", f"{desc} :: {cells}"))
        _emit(report, as_json)
        return 0
    kind1 = memory_kind_from_label(args.mem1, query)
    kind2 = memory_kind_from_label(args.mem2, query)
    verdict = brute_force_winner(
        game, query, kind1, kind2, outputs=args.outputs, caps=caps, collect_matrix=True
    )
    report = [
        ("command", "oracle"),
        ("game", game.name),
        ("query", query_to_text(query, game)),
        ("mem1", args.mem1),
        ("mem2", args.mem2),
        ("outputs", args.outputs),
        ("outcome", verdict.outcome.value),
        ("sigmas", len(verdict.sigmas)),
        ("taus", len(verdict.taus)),
        ("note", "evidence within enumerated classes"),
    ]
    if verdict.witness is not None:
        report.append(("witness", verdict.witness.describe(game)))
    _emit(report, as_json)
    return 0


def _cmd_verify(args, as_json: bool) -> int:
    game = _load_game(args.game)
    query = parse_query(args.query, game)
    sigma = parse_strategy(Path(args.strategy).read_text(encoding="utf-8"), game)
    kind = memory_kind_from_label(args.adversary, query)
    result = verify_strategy(game, sigma, query, kind, adversary_outputs=args.outputs)
    report: list[tuple[str, object]] = [
        ("command", "verify"),
        ("game", game.name),
        ("query", query_to_text(query, game)),
        ("adversary", args.adversary),
        ("adversaries_checked", result.adversaries_checked),
        ("holds", result.ok),
        (
            "confidence",
            "bounded-adversary evidence" if result.evidence_only else "proof within class",
        ),
    ]
    if result.counterexample is not None:
        report.append(("counterexample", result.counterexample.describe(game)))
    _emit(report, as_json)
    return 0


def _cmd_dqbf_sat(args, as_json: bool) -> int:
    formula = parse_dqbf(Path(args.file).read_text(encoding="utf-8"))
    sat = dqbf_brute_sat(formula, var_cap=args.var_cap)
    _emit(
        [
            ("command", "dqbf-sat"),
            ("universals", len(formula.universals)),
            ("existentials", len(formula.existentials)),
            ("result", "SAT" if sat else "UNSAT"),
        ],
        as_json,
    )
    return 0


def _cmd_dqbf_reduce(args, as_json: bool) -> int:
    formula = parse_dqbf(Path(args.file).read_text(encoding="utf-8"))
    game, query = reduce_to_game(formula)
    Path(args.output).write_text(game_to_text(game), encoding="utf-8")
    _emit(
        [
            ("command", "dqbf-reduce"),
            ("output", args.output),
            ("states", game.n),
            ("query", query_to_text(query, game)),
            ("fragment", classify(query).value),
        ],
        as_json,
    )
    return 0


def _cmd_examples(args, as_json: bool) -> int:
    name = args.name
    text = fixtures.GAME_TEXTS[name]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.game"
    path.write_text(text, encoding="utf-8")
    _emit(
        [
            ("command", "examples"),
            ("name", name),
            ("game_file", str(path)),
            ("query", fixtures.QUERY_TEXTS[name]),
        ],
        as_json,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochgames",
        description="Solve qualitative multi-objective queries on turn-based stochastic games.",
    )
    parser.add_argument("--json", action="store_true", help="emit one JSON object instead of text")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="parse and validate a game file")
    p.add_argument("game")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("region", help="winning region of a single atom")
    p.add_argument("game")
    p.add_argument("--atom", nargs=3, required=True, metavar=("MODE", "SHAPE", "SET"))
    p.set_defaults(func=_cmd_region)

    p = sub.add_parser("solve", help="decide a query on a game")
    p.add_argument("game")
    p.add_argument("--query", required=True)
    p.add_argument("--max-conjuncts", type=int, default=12)
    p.add_argument("--max-dnf-terms", type=int, default=512)
    p.add_argument("--max-product-nodes", type=int, default=100_000)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("classify", help="classify a query's fragment")
    p.add_argument("--query", required=True)
    p.add_argument("--game", default=None)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("unfold", help="materialize the goal unfolding and print stats")
    p.add_argument("game")
    p.add_argument("--targets", nargs="+", required=True)
    p.add_argument("--max-product-nodes", type=int, default=100_000)
    p.set_defaults(func=_cmd_unfold)

    p = sub.add_parser("oracle", help="bounded-memory brute force")
    p.add_argument("game")
    p.add_argument("--query", required=True)
    p.add_argument("--mem1", default="escalate", help="memoryless|targetset|visitedset|explicit:k|escalate")
    p.add_argument("--mem2", default="visitedset")
    p.add_argument("--outputs", default="subsets", choices=("pure", "subsets"))
    p.add_argument("--max-game-states", type=int, default=6)
    p.add_argument("--max-memories", type=int, default=64)
    p.add_argument("--max-strategies", type=int, default=200_000)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("verify", help="check a strategy file against an adversary class")
    p.add_argument("game")
    p.add_argument("--strategy", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--adversary", default="visitedset")
    p.add_argument("--outputs", default="subsets", choices=("pure", "subsets"))
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("dqbf-sat", help="brute-force satisfiability of an S-form formula")
    p.add_argument("file")
    p.add_argument("--var-cap", type=int, default=4)
    p.set_defaults(func=_cmd_dqbf_sat)

    p = sub.add_parser("dqbf-reduce", help="reduce a formula to a game plus query")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_dqbf_reduce)

    p = sub.add_parser("examples", help="write a built-in example game file")
    p.add_argument("name", choices=("fig1", "fig2", "fig3"))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_examples)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; remap to the documented code
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args, args.json)
    except _FORMAT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 2
    except InternalInvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
