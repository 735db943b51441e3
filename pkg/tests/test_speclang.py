import numpy as np
import pytest

import oracles
from conftest import CORPUS
from relcheck import speclang
from relcheck.derivation import Region
from relcheck.errors import CapExceededError, ParseError, ScopeError
from relcheck.relcore import StateSpace

ADD_SPACE = StateSpace([("x", 0, 6), ("y", 0, 6)])

BOUNDED_FERMAT = """
space fermat:
  nat n : 0..24;
  nat x : 0..10;
  nat y : 0..10;
spec: n == x'*x' - y'*y' && 0 <= y' && y' <= x';
"""


def test_parse_space_file():
    sp = speclang.parse_space((CORPUS / "add" / "s.space").read_text())
    assert sp == ADD_SPACE and sp.name == "S"
    assert speclang.parse_space(speclang.format_space(sp)) == sp


@pytest.mark.parametrize("text, msg", [
    ("space S:\n  nat x : 3..1;\n", "empty range"),
    ("space S:\n  nat x : -1..3;\n", "non-negative"),
    ("space S:\n  var x;\n", "range required"),
    ("space S:\n  var x : 0..1;\n  var x : 0..2;\n", "duplicate"),
])
def test_space_errors(text, msg):
    with pytest.raises(ParseError, match=msg) as e:
        speclang.parse_space(text, source="s.space")
    assert e.value.line is not None


def test_bare_predicate_binds_later():
    spec = speclang.parse_spec("x' == x + y")
    assert spec.space is None
    bound = spec.bind(ADD_SPACE)
    assert speclang.holds(bound, ADD_SPACE.state(2, 3), ADD_SPACE.state(5, 0))
    assert speclang.holds(bound, ADD_SPACE.state(2, 3), ADD_SPACE.state(5, 6))
    assert not speclang.holds(bound, ADD_SPACE.state(2, 3), ADD_SPACE.state(4, 0))


def test_undeclared_variable_is_a_scope_error():
    with pytest.raises(ScopeError):
        speclang.parse_spec("z' == x", space=ADD_SPACE)


def test_materialize_matches_enumeration():
    spec = speclang.parse_spec((CORPUS / "add" / "add.spec").read_text(), space=ADD_SPACE)
    r = speclang.materialize(spec, ADD_SPACE)
    expected = set()
    for s in ADD_SPACE.states():
        for t in ADD_SPACE.states():
            if t["x"] == s["x"] + s["y"]:
                expected.add((s.index, t.index))
    assert {p for p in r.pairs()} == expected
    assert len(r) == 28 * 7


def test_bounded_fermat_materializes_by_definition():
    spec = speclang.parse_spec(BOUNDED_FERMAT)
    sp = spec.space
    r = speclang.materialize(spec, cap=1 << 19)
    count = 0
    for n in range(25):
        finals = sum(1 for x in range(11) for y in range(11) if oracles.fermat_spec(n, x, y))
        count += finals * 11 * 11 * 25  # any initial x, y; any final n'
    assert len(r) == count == 96800
    # dense and sparse encodings agree
    assert speclang.materialize(spec, sp, cap=1 << 19, dense=False) == r


def test_materialize_respects_cap():
    spec = speclang.parse_spec(BOUNDED_FERMAT)
    with pytest.raises(CapExceededError):
        speclang.materialize(spec, cap=1000)


def test_holds_pairs_matches_scalar():
    spec = speclang.parse_spec(BOUNDED_FERMAT)
    sp = spec.space
    rng = np.random.default_rng(0)
    init = sp.values_of(rng.integers(0, sp.size, 300))
    fin = sp.values_of(rng.integers(0, sp.size, 300))
    got = speclang.holds_pairs(spec, sp, init, fin)
    for k in range(300):
        ref = speclang.holds(spec, sp.state(tuple(init[k])), sp.state(tuple(fin[k])))
        assert got[k] == ref


def test_fermat_domain_clause_agrees_with_witness_search():
    spec = speclang.parse_spec((CORPUS / "fermat" / "fermat.spec").read_text())
    region = Region(spec.space, {"n": range(1, 201)}, {"x": 0, "y": 0})
    report = speclang.validate_domain_clause(spec, region, {"x": (0, 200), "y": (0, 200)})
    assert report.checked == 200
    assert report.clean
    assert not report.complete_search


def test_domain_clause_matches_factor_oracle():
    spec = speclang.parse_spec((CORPUS / "fermat" / "fermat.spec").read_text())
    vals = np.array([[n, 0, 0] for n in range(0, 500)])
    clause = speclang.holds_initial_many(spec.domain, spec.space, vals)
    assert [bool(c) for c in clause] == [oracles.fermat_domain(n) for n in range(500)]


def test_clause_that_overstates_domain_is_caught():
    # with x' <= 10 the odd number 23 (= 12^2 - 11^2) has no witness
    spec = speclang.parse_spec(BOUNDED_FERMAT + "domain: n % 2 == 1 || n % 4 == 0;\n")
    report = speclang.validate_domain_clause(spec, Region.full(spec.space))
    assert report.complete_search
    bad = {s["n"] for s, clause, _ in report.violations}
    assert bad == {23}
    assert all(clause for _, clause, _ in report.violations)


def test_narrow_witness_bounds_are_inconclusive_not_violations():
    spec = speclang.parse_spec((CORPUS / "fermat" / "fermat.spec").read_text())
    region = Region(spec.space, {"n": range(90, 100)}, {"x": 0, "y": 0})
    report = speclang.validate_domain_clause(spec, region, {"x": (0, 10), "y": (0, 10)})
    assert not report.violations
    expected = {n for n in range(90, 100) if oracles.fermat_domain(n)
                and not any(oracles.fermat_spec(n, x, y) for x in range(11) for y in range(11))}
    assert expected == {92, 93, 95, 97}
    assert {s["n"] for s in report.inconclusive} == expected


def test_no_domain_clause_means_nothing_to_validate():
    spec = speclang.parse_spec(BOUNDED_FERMAT)
    report = speclang.validate_domain_clause(spec, Region.full(spec.space))
    assert report.nothing_to_validate and not report.ok


def test_witness_search_returns_least_witness():
    spec = speclang.parse_spec(BOUNDED_FERMAT)
    found, wit, complete = speclang.witness_search(spec, np.array([[15, 0, 0], [6, 0, 0]]))
    assert complete
    assert list(found) == [True, False]
    x, y = wit[0]
    assert oracles.fermat_spec(15, x, y) and (x, y) == (4, 1)
