import pytest

from stochgames.errors import QueryFormatError
from stochgames.query import (
    And,
    Atom,
    Fragment,
    Mode,
    Not,
    Or,
    Shape,
    classify,
    conjuncts,
    dual_query,
    negate_normalize,
    parse_query,
    query_to_text,
    to_dnf,
)


def atom(game, mode, shape, names, complement=False):
    target = game.state_set(names)
    if complement:
        target = target.complement()
    return Atom(mode, shape, target)


def test_parse_paper_example(fig1):
    q = parse_query("AS F {s3} | (NZ F {s2} & NZ F {s4})", fig1)
    assert q == Or(
        (
            atom(fig1, Mode.AS, Shape.REACH, ["s3"]),
            And(
                (
                    atom(fig1, Mode.NZ, Shape.REACH, ["s2"]),
                    atom(fig1, Mode.NZ, Shape.REACH, ["s4"]),
                )
            ),
        )
    )


def test_parse_complement_safety(fig3):
    q = parse_query("AS G ~{D}", fig3)
    assert q == atom(fig3, Mode.AS, Shape.SAFE, ["D"], complement=True)
    assert q.target.names(fig3) == ("s0", "A", "B", "s1", "C", "E", "F")


def test_parse_single_negation(fig1):
    q = parse_query("!(NZ F {s0})", fig1)
    assert q == Not(atom(fig1, Mode.NZ, Shape.REACH, ["s0"]))


def test_parse_empty_set(fig1):
    q = parse_query("NZ F {}", fig1)
    assert q.target.mask == 0
    full = parse_query("AS G ~{}", fig1)
    assert full.target == fig1.full_set()


@pytest.mark.parametrize(
    "text",
    ["", "AS F {zz}", "AS F {s0", "AS F s0", "AS X {s0}", "AS F {s0} &", "(AS F {s0}"],
)
def test_parse_errors(text, fig1):
    with pytest.raises(QueryFormatError):
        parse_query(text, fig1)


def test_round_trip_serialization(fig1):
    texts = [
        "AS F {s3} | (NZ F {s2} & NZ F {s4})",
        "!NZ F {s2,s4} | (NZ F {s2} & NZ F {s4})",
        "AS G {s0,s1} & (NZ F {s2} | AS F {s3})",
    ]
    for text in texts:
        q = parse_query(text, fig1)
        assert parse_query(query_to_text(q, fig1), fig1) == q


def test_negate_normalize_dualities(fig1):
    # !AS F T == NZ G comp(T)
    q = negate_normalize(Not(atom(fig1, Mode.AS, Shape.REACH, ["s3"])))
    assert q == Atom(Mode.NZ, Shape.SAFE, fig1.state_set(["s3"]).complement())
    assert q.target.names(fig1) == ("s0", "s1", "s2", "s4")
    # !AS G T == NZ F comp(T)
    q = negate_normalize(Not(atom(fig1, Mode.AS, Shape.SAFE, ["s3"])))
    assert q.mode is Mode.NZ and q.shape is Shape.REACH
    # !NZ F T == AS G comp(T)
    q = negate_normalize(Not(atom(fig1, Mode.NZ, Shape.REACH, ["s3"])))
    assert q.mode is Mode.AS and q.shape is Shape.SAFE
    # !NZ G T == AS F comp(T)
    q = negate_normalize(Not(atom(fig1, Mode.NZ, Shape.SAFE, ["s3"])))
    assert q.mode is Mode.AS and q.shape is Shape.REACH


def test_negate_normalize_positive_identity(fig1):
    q = parse_query("AS F {s3} | (NZ F {s2} & NZ F {s4})", fig1)
    assert negate_normalize(q) == q


def test_negate_normalize_de_morgan(fig1):
    a = atom(fig1, Mode.AS, Shape.REACH, ["s3"])
    b = atom(fig1, Mode.NZ, Shape.REACH, ["s2"])
    q = negate_normalize(Not(And((a, b))))
    assert q == Or(
        (
            Atom(Mode.NZ, Shape.SAFE, a.target.complement()),
            Atom(Mode.AS, Shape.SAFE, b.target.complement()),
        )
    )


def test_negate_normalize_involution(fig1):
    q = parse_query("!(AS F {s3} & !(NZ F {s2} | AS G {s0,s1}))", fig1)
    once = negate_normalize(q)
    assert negate_normalize(Not(Not(q))) == once


def test_classify_specificity(fig1):
    conj = parse_query("NZ F {s2} & NZ F {s4}", fig1)
    assert classify(conj) is Fragment.CONJUNCTION
    disj = parse_query("AS F {s3} | AS G {s0}", fig1)
    assert classify(disj) is Fragment.DISJUNCTION
    single = parse_query("AS F {s3}", fig1)
    assert classify(single) is Fragment.SINGLE
    pos_as = parse_query("AS F {s3} & (AS F {s2} | AS G {s0})", fig1)
    assert classify(pos_as) is Fragment.POSITIVE_AS
    pos_nz = parse_query("NZ F {s3} & (NZ F {s2} | NZ G {s0})", fig1)
    assert classify(pos_nz) is Fragment.POSITIVE_NZ
    mixed = parse_query("AS F {s3} | (NZ F {s2} & NZ F {s4})", fig1)
    assert classify(mixed) is Fragment.GENERAL_NO_NZ_SAFE


def test_classify_fig3_is_general(fig3):
    from stochgames import fixtures

    q = parse_query(fixtures.FIG3_QUERY, fig3)
    assert classify(q) is Fragment.GENERAL


def test_classify_dual_mapping(fig1):
    conj = parse_query("NZ F {s2} & AS F {s4}", fig1)
    assert classify(dual_query(conj)) is Fragment.DISJUNCTION
    disj = parse_query("NZ F {s2} | AS F {s4}", fig1)
    assert classify(dual_query(disj)) is Fragment.CONJUNCTION
    pos_as = parse_query("AS F {s3} & (AS F {s2} | AS G {s0})", fig1)
    assert classify(dual_query(pos_as)) is Fragment.POSITIVE_NZ
    pos_nz = parse_query("NZ F {s3} & (NZ F {s2} | NZ G {s0})", fig1)
    assert classify(dual_query(pos_nz)) is Fragment.POSITIVE_AS


def test_dnf_distribution(fig1):
    a = atom(fig1, Mode.AS, Shape.REACH, ["s2"])
    b = atom(fig1, Mode.AS, Shape.REACH, ["s3"])
    c = atom(fig1, Mode.AS, Shape.REACH, ["s4"])
    q = And((Or((a, b)), c))
    d = to_dnf(q)
    assert d == Or((And((a, c)), And((b, c))))


def test_dnf_single_atom(fig1):
    a = atom(fig1, Mode.NZ, Shape.SAFE, ["s0"])
    assert to_dnf(a) == a


def test_dnf_dedupes(fig1):
    a = atom(fig1, Mode.AS, Shape.REACH, ["s2"])
    q = And((a, a))
    assert to_dnf(q) == a


def test_dnf_fig3_last_disjunct(fig3):
    q = parse_query("AS F {F} & (AS G ~{A} | AS G ~{B})", fig3)
    d = to_dnf(q)
    assert isinstance(d, Or) and len(d.children) == 2
    for term in d.children:
        names = {a.shape for a in conjuncts(term)}
        assert names == {Shape.REACH, Shape.SAFE}


def test_dnf_preserves_pure_mode(fig1):
    pos_as = parse_query("AS F {s3} & (AS F {s2} | AS G {s0})", fig1)
    assert classify(to_dnf(pos_as)) in (Fragment.POSITIVE_AS, Fragment.DISJUNCTION)
    from stochgames.query import iter_atoms

    assert all(a.mode is Mode.AS for a in iter_atoms(to_dnf(pos_as)))
