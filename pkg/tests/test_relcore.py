import random

import numpy as np
import pytest

import oracles
from conftest import as_pairs, line_space, rel
from relcheck.errors import CapExceededError, ParseError, SpaceMismatchError, StateSpaceError
from relcheck.relcore import (
    Relation,
    StateSet,
    StateSpace,
    Variable,
    parse_relation,
    relation_space_name,
)


def test_state_index_round_trip():
    sp = StateSpace([("n", 0, 4), ("x", -2, 3), ("y", 1, 2)])
    assert sp.size == 5 * 6 * 2
    seen = set()
    for i in range(sp.size):
        vals = sp.values(i)
        assert sp.index(vals) == i
        seen.add(vals)
    assert len(seen) == sp.size
    # last variable varies fastest
    assert sp.values(0) == (0, -2, 1)
    assert sp.values(1) == (0, -2, 2)
    assert sp.values(2) == (0, -1, 1)


def test_vectorized_indexing_matches_scalar():
    sp = StateSpace([("a", 0, 3), ("b", 5, 9)])
    vals = sp.values_of(np.arange(sp.size))
    assert list(sp.indices_of(vals)) == list(range(sp.size))
    assert [tuple(r) for r in vals] == [sp.values(i) for i in range(sp.size)]


def test_state_access_and_replace():
    sp = StateSpace([("x", 0, 6), ("y", 0, 6)])
    s = sp.state(x=2, y=5)
    assert s["x"] == 2 and s["y"] == 5
    assert s.replace(y=0) == sp.state(2, 0)
    assert str(s) == "(2,5)"
    with pytest.raises(StateSpaceError):
        sp.state(7, 0)
    with pytest.raises(StateSpaceError):
        sp.state(x=1)


@pytest.mark.parametrize("bad", [
    [("x", 3, 1)],
    [("x", 0, 1), ("x", 0, 2)],
    [("1x", 0, 1)],
])
def test_malformed_spaces_are_rejected(bad):
    with pytest.raises(StateSpaceError):
        StateSpace(bad)


def test_space_equality_is_structural():
    a = StateSpace([Variable("s", 0, 3)], name="A")
    b = StateSpace([("s", 0, 3)], name="B")
    assert a == b and hash(a) == hash(b)
    assert a != StateSpace([("s", 0, 4)])


def test_extend_refuses_shadowing():
    sp = StateSpace([("x", 0, 3)])
    assert sp.extend([("r", 0, 2)]).names == ("x", "r")
    with pytest.raises(StateSpaceError):
        sp.extend([("x", 0, 1)])


def test_cap_error_mentions_oracle_mode():
    sp = StateSpace([("a", 0, 999), ("b", 0, 999)])
    with pytest.raises(CapExceededError, match="oracle mode") as e:
        sp.check_cap(1000)
    assert e.value.size == 1_000_000


def test_state_set_operations():
    sp = line_space(6)
    a = StateSet(sp, [1, 2, 3])
    b = StateSet(sp, [3, 4])
    assert list((a | b).indices) == [1, 2, 3, 4]
    assert list((a & b).indices) == [3]
    assert list((a - b).indices) == [1, 2]
    assert list(a.complement().indices) == [0, 4, 5]
    assert StateSet(sp, [2]) <= a and not b <= a
    assert StateSet(sp, [2]) < a and not a < a
    assert a.least() == sp.state(1)
    assert StateSet.empty(sp).least() is None
    assert StateSet.from_mask(sp, a.mask()) == a


def test_vector_and_monotype():
    sp = line_space(3)
    t = StateSet(sp, [1])
    assert as_pairs(t.vector()) == {(1, 0), (1, 1), (1, 2)}
    assert as_pairs(t.monotype()) == {(1, 1)}


@pytest.mark.parametrize("dense", [True, False])
def test_operations_match_set_definitions(dense):
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(1, 5)
        sp = line_space(n)
        a = oracles.random_relation(rng, n)
        b = oracles.random_relation(rng, n)
        ra, rb = rel(sp, a, dense), rel(sp, b, dense)
        assert as_pairs(ra | rb) == a | b
        assert as_pairs(ra & rb) == a & b
        assert as_pairs(ra - rb) == a - b
        full = {(i, j) for i in range(n) for j in range(n)}
        assert as_pairs(~ra) == full - a
        assert as_pairs(ra @ rb) == oracles.compose(a, b)
        assert as_pairs(ra.converse()) == oracles.converse(a)
        assert as_pairs(ra.rt_closure()) == oracles.rt_closure(a, n)
        assert set(ra.domain().indices) == oracles.domain(a)
        assert set(ra.range().indices) == oracles.domain(oracles.converse(a))
        assert ra.is_deterministic() == oracles.deterministic(a)
        assert (ra <= rb) == (a <= b)


def test_dense_and_sparse_backings_agree():
    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(1, 6)
        sp = line_space(n)
        a = oracles.random_relation(rng, n)
        b = oracles.random_relation(rng, n)
        d1, s1 = rel(sp, a, True), rel(sp, a, False)
        d2, s2 = rel(sp, b, True), rel(sp, b, False)
        assert d1.is_dense and not s1.is_dense
        assert d1 == s1
        assert (d1 @ d2) == (s1 @ s2) == (d1 @ s2)
        assert d1.rt_closure() == s1.rt_closure()
        assert (d1 | s2) == (s1 | d2)


def test_restrictions():
    sp = line_space(4)
    r = rel(sp, {(0, 1), (1, 2), (2, 3), (3, 0)})
    t = StateSet(sp, [1, 3])
    assert as_pairs(r.restrict_domain(t)) == {(1, 2), (3, 0)}
    assert as_pairs(r.restrict_range(t)) == {(0, 1), (2, 3)}
    # restriction is intersection with the vector / converse vector
    assert r.restrict_domain(t) == r & t.vector()
    assert r.restrict_range(t) == r & t.vector().converse()


def test_images_and_membership():
    sp = StateSpace([("x", 0, 2), ("y", 0, 1)])
    r = Relation.from_pairs(sp, [((0, 0), (1, 1)), ((0, 0), (2, 0))])
    assert [str(s) for s in map(sp.state_at, r.images(sp.state(0, 0)).indices)] == \
        ["(1,1)", "(2,0)"]
    assert ((0, 0), (2, 0)) in r
    assert ((0, 1), (2, 0)) not in r
    assert r.least_pair() == (0, sp.index((1, 1)))


def test_space_mismatch_is_an_error():
    with pytest.raises(SpaceMismatchError):
        rel(line_space(3), {(0, 1)}) | rel(line_space(4), {(0, 1)})


def test_identity_and_universal():
    sp = line_space(3)
    assert as_pairs(Relation.identity(sp)) == {(0, 0), (1, 1), (2, 2)}
    assert len(Relation.universal(sp)) == 9
    assert len(Relation.empty(sp)) == 0


def test_literal_round_trip():
    sp = StateSpace([("x", 0, 3), ("y", -1, 1)], name="T")
    rng = random.Random(3)
    keys = rng.sample(range(sp.size ** 2), 20)
    r = Relation.from_keys(sp, keys)
    text = r.to_literal()
    assert relation_space_name(text) == "T"
    assert parse_relation(text, sp) == r
    assert parse_relation(text, {"T": sp}) == r


def test_literal_accepts_bare_integers_and_comments():
    sp = line_space(4)
    text = "# a comment\nspace S\n1 -> 0\n(2) -> (3)  # trailing\n\n"
    assert as_pairs(parse_relation(text, sp)) == {(1, 0), (2, 3)}


@pytest.mark.parametrize("text, line", [
    ("(1) -> (0)\n", 1),
    ("space S\n(1) -> \n", 2),
    ("space S\n(9) -> (0)\n", 2),
    ("space Q\n(1) -> (0)\n", 1),
])
def test_literal_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as e:
        parse_relation(text, {"S": line_space(4)}, source="r.rel")
    assert e.value.line == line
    assert str(e.value).startswith("r.rel:")


def test_large_spaces_use_sparse_keys():
    sp = StateSpace([("a", 0, 9999)])
    assert not Relation.prefers_dense(sp)
    r = Relation.identity(sp)
    assert not r.is_dense and len(r) == 10000
    assert len(r @ r) == 10000
