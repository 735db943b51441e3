"""Algebraic laws and judgment properties on small random relations (|S| <= 4)."""

import itertools
import random
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import line_space, rel
from relcheck.correctness import (
    is_correct,
    more_correct_det,
    more_correct_nondet,
    refines,
)
from relcheck.derivation import reliability_from_masks
from relcheck.relcore import Relation

CASES = 500
SPECS_PER_PAIR = 40
SPACES = {n: line_space(n) for n in range(1, 5)}


@st.composite
def relations(draw, count=1, n=None):
    n = n if n is not None else draw(st.integers(1, 4))
    cells = [(a, b) for a in range(n) for b in range(n)]
    out = []
    for _ in range(count):
        out.append(draw(st.sets(st.sampled_from(cells))))
    return n, out


@st.composite
def functions(draw, count=1):
    n = draw(st.integers(1, 4))
    out = []
    for _ in range(count):
        images = draw(st.lists(st.one_of(st.none(), st.integers(0, n - 1)), min_size=n,
                               max_size=n))
        out.append({(a, b) for a, b in enumerate(images) if b is not None})
    return n, out


def R(n, pairs):
    return rel(SPACES[n], pairs)


# -- relational algebra ---------------------------------------------------------------


@settings(max_examples=CASES, deadline=None)
@given(relations(count=3))
def test_composition_is_associative(case):
    n, (a, b, c) = case
    ra, rb, rc = R(n, a), R(n, b), R(n, c)
    assert (ra @ rb) @ rc == ra @ (rb @ rc)


@settings(max_examples=CASES, deadline=None)
@given(relations())
def test_converse_is_an_involution(case):
    n, (a,) = case
    ra = R(n, a)
    assert ra.converse().converse() == ra


@settings(max_examples=CASES, deadline=None)
@given(relations())
def test_closure_is_idempotent(case):
    n, (a,) = case
    star = R(n, a).rt_closure()
    assert star.rt_closure() == star
    assert star @ star == star


def test_algebra_laws_on_seeded_cases_dense_and_sparse():
    rng = random.Random(701)
    for k in range(CASES):
        n = rng.randint(1, 4)
        dense = k % 2 == 0
        a, b, c = (oracles.random_relation(rng, n) for _ in range(3))
        ra, rb, rc = (rel(SPACES[n], x, dense) for x in (a, b, c))
        assert (ra @ rb) @ rc == ra @ (rb @ rc)
        assert (ra @ rb).converse() == rb.converse() @ ra.converse()
        assert ra.converse().converse() == ra
        assert ra.rt_closure().rt_closure() == ra.rt_closure()
        assert ra @ (rb | rc) == (ra @ rb) | (ra @ rc)


# -- judgments ---------------------------------------------------------------------


@settings(max_examples=CASES, deadline=None)
@given(functions(count=2), st.data())
def test_deterministic_and_general_relative_correctness_agree(case, data):
    n, (p1, p2) = case
    _, (r,) = data.draw(relations(n=n))
    a, b, rr = R(n, p1), R(n, p2), R(n, r)
    assert more_correct_det(b, a, rr).verdict == more_correct_nondet(b, a, rr).verdict


@settings(max_examples=CASES, deadline=None)
@given(relations(count=4))
def test_more_correct_is_reflexive_and_transitive(case):
    n, (p1, p2, p3, r) = case
    a, b, c, rr = (R(n, x) for x in (p1, p2, p3, r))
    assert more_correct_nondet(a, a, rr)
    if more_correct_nondet(b, a, rr) and more_correct_nondet(c, b, rr):
        assert more_correct_nondet(c, a, rr)


def _fix_one(rng, p, r):
    """``p`` with one more state of dom(r) sent to an acceptable outcome."""
    todo = sorted(oracles.domain(r) - oracles.competence(p, r))
    if not todo:
        return set(p)
    a = rng.choice(todo)
    out = {(x, y) for x, y in p if x != a}
    out.add((a, rng.choice(sorted(b for x, b in r if x == a))))
    return out


def test_more_correct_transitivity_on_chained_cases():
    # random triples rarely chain, so build chains by construction
    rng = random.Random(702)
    for _ in range(CASES):
        n = rng.randint(1, 4)
        r = oracles.random_relation(rng, n)
        p1 = oracles.random_function(rng, n)
        p2 = _fix_one(rng, p1, r)
        p3 = _fix_one(rng, p2, r)
        a, b, c, rr = (R(n, x) for x in (p1, p2, p3, r))
        assert more_correct_det(b, a, rr) and more_correct_det(c, b, rr)
        assert more_correct_det(c, a, rr)
        assert more_correct_nondet(c, a, rr)


def _random_refinement(rng, p, n):
    """Defined at least where ``p`` is, with a non-empty subset of its outcomes there."""
    q = set()
    for a in range(n):
        outs = sorted(b for x, b in p if x == a)
        if outs:
            q |= {(a, b) for b in rng.sample(outs, rng.randint(1, len(outs)))}
        elif rng.random() < 0.5:
            q.add((a, rng.randrange(n)))
    return q


def test_refinement_implies_relative_correctness_for_deterministic_programs():
    rng = random.Random(705)
    for _ in range(CASES):
        n = rng.randint(1, 4)
        p = oracles.random_function(rng, n)
        q = _random_refinement(rng, p, n)
        pp, qq = R(n, p), R(n, q)
        assert refines(qq, pp)
        for _ in range(SPECS_PER_PAIR):
            r = R(n, oracles.random_relation(rng, n))
            assert more_correct_det(qq, pp, r)
            assert more_correct_nondet(qq, pp, r)


def test_refinement_implies_relative_correctness_for_relations():
    # the general claim, over arbitrary (non-deterministic) relations
    rng = random.Random(706)
    violations = []
    for _ in range(CASES):
        n = rng.randint(1, 4)
        p = oracles.random_relation(rng, n)
        q = _random_refinement(rng, p, n)
        pp, qq = R(n, p), R(n, q)
        assert refines(qq, pp)
        for _ in range(SPECS_PER_PAIR):
            r = oracles.random_relation(rng, n)
            if not more_correct_nondet(qq, pp, R(n, r)):
                violations.append((sorted(q), sorted(p), sorted(r)))
                break
    assert not violations, (f"{len(violations)} refinements are not more correct; "
                            f"first (refining, refined, spec): {violations[0]}")


def test_non_refinement_has_a_witness_specification():
    rng = random.Random(703)
    specs = {n: [R(n, r) for r in oracles.all_relations(n)] for n in (1, 2)}
    cases = 0
    while cases < CASES:
        n = rng.randint(1, 3)
        p, q = oracles.random_relation(rng, n), oracles.random_relation(rng, n)
        pp, qq = R(n, p), R(n, q)
        if refines(qq, pp):
            continue
        cases += 1
        if n in specs:
            # every specification on the space
            pool = specs[n]
        else:
            # every spec made of p's pairs plus at most one other pair, then random ones
            cells = [(a, b) for a in range(n) for b in range(n)]
            pool = [R(n, set(p))] + [R(n, set(p) | {c}) for c in cells] + \
                   [R(n, set(p) - {c}) for c in cells] + \
                   [R(n, s) for s in itertools.islice(oracles.all_relations(n), 512)]
        assert any(not more_correct_nondet(qq, pp, r) for r in pool), (p, q)


def test_correct_program_is_more_correct_than_any_candidate():
    rng = random.Random(704)
    cases = 0
    while cases < CASES:
        n = rng.randint(1, 4)
        r = oracles.random_relation(rng, n)
        p = oracles.random_function(rng, n)
        rr, pp = R(n, r), R(n, p)
        if not is_correct(pp, rr):
            # repair p on dom(r) to get a correct program
            fixed = {(a, b) for a, b in p if a not in oracles.domain(r)}
            for a in sorted(oracles.domain(r)):
                fixed.add((a, rng.choice(sorted(b for x, b in r if x == a))))
            pp = R(n, fixed)
            assert is_correct(pp, rr)
        cases += 1
        for _ in range(10):
            q = R(n, oracles.random_function(rng, n))
            assert more_correct_det(pp, q, rr)


@settings(max_examples=CASES, deadline=None)
@given(relations(count=2), st.lists(st.integers(0, 5), min_size=4, max_size=4))
def test_reliability_is_monotone_along_verified_chains(case, weights):
    n, (r, seed_rel) = case
    if not r:
        return
    rng = random.Random(hash((frozenset(r), frozenset(seed_rel))) & 0xFFFF)
    w = [Fraction(x) for x in weights[:n]]
    if sum(wi for a, wi in enumerate(w) if a in oracles.domain(r)) == 0:
        w = [Fraction(1)] * n
    rr = R(n, r)
    dom = np.array([a in oracles.domain(r) for a in range(n)])
    chain = [Relation.empty(SPACES[n])]
    for _ in range(4):
        chain.append(R(n, oracles.random_relation(rng, n)))
    probs = []
    prev = None
    for p in chain:
        if prev is not None and not more_correct_nondet(p, prev, rr):
            continue  # only verified links extend the chain
        comp = np.array([a in set((p & rr).domain().indices.tolist()) for a in range(n)])
        probs.append(reliability_from_masks(w, comp, dom).probability)
        prev = p
    assert probs == sorted(probs)
