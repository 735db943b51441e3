"""Judgments between programs and specifications, all given as relations.

Every judgment returns a :class:`Judgment` carrying enough evidence to
re-check the verdict by hand: the competence domains involved, and on a
negative verdict the least offending state or pair in canonical order.

Relative correctness here always means "more correct than or as correct
as"; strictness is the separate :func:`strictly_more_correct_det`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InconsistencyError, NonDeterministicError, SpaceMismatchError
from .relcore import Relation, StateSet, StateSpace

REFINES = "refines"
CORRECT = "correct"
PARTIALLY_CORRECT = "partially-correct"
MORE_CORRECT_DET = "more-correct-det"
STRICTLY_MORE_CORRECT_DET = "strictly-more-correct-det"
MORE_CORRECT_NONDET = "more-correct-nondet"


@dataclass
class Judgment:
    kind: str
    verdict: bool
    space: StateSpace
    domains: dict = field(default_factory=dict)  # label -> StateSet
    pairs: list = field(default_factory=list)  # (i, j) index pairs
    states: list = field(default_factory=list)  # state indices
    sets: dict = field(default_factory=dict)  # label -> Relation (intermediate results)
    clauses: dict = field(default_factory=dict)  # label -> bool
    reason: str = ""

    def __bool__(self):
        return self.verdict

    def format_pair(self, pair) -> str:
        sp = self.space
        return f"{sp.format_values(sp.values(pair[0]))} -> {sp.format_values(sp.values(pair[1]))}"

    def format_state(self, i) -> str:
        return self.space.format_values(self.space.values(i))

    def to_record(self) -> dict:
        """Plain, canonically ordered data for JSON output."""
        rec = {
            "kind": self.kind,
            "verdict": self.verdict,
            "space": self.space.describe(),
            "competence": {k: len(v) for k, v in sorted(self.domains.items())},
        }
        if self.clauses:
            rec["clauses"] = dict(sorted(self.clauses.items()))
        if self.reason:
            rec["reason"] = self.reason
        rec["evidence"] = {
            "pairs": [self.format_pair(p) for p in self.pairs],
            "states": [self.format_state(i) for i in self.states],
        }
        return rec

    def lines(self) -> list:
        out = [f"{self.kind}: {'true' if self.verdict else 'false'}"]
        for k, v in sorted(self.domains.items()):
            out.append(f"  {k}: {len(v)} states {v.describe(limit=12)}")
        for k, v in sorted(self.clauses.items()):
            out.append(f"  clause {k}: {'holds' if v else 'fails'}")
        if self.reason:
            out.append(f"  {self.reason}")
        for p in self.pairs:
            out.append(f"  evidence pair {self.format_pair(p)}")
        for i in self.states:
            out.append(f"  evidence state {self.format_state(i)}")
        return out


def _same(*rels):
    first = rels[0]
    for r in rels[1:]:
        if r.space != first.space:
            raise SpaceMismatchError(first.space, r.space)
    return first.space


def _least_state(states: StateSet):
    return [int(states.indices[0])] if len(states) else []


def _least_pair(rel: Relation):
    p = rel.least_pair()
    return [p] if p is not None else []


def refinement_lhs(r2: Relation, r1: Relation) -> Relation:
    """``r1 L & r2 L & (r1 | r2)``, with the vectors applied as domain restrictions."""
    both = r1.domain() & r2.domain()
    return (r1 | r2).restrict_domain(both)


def refines(r2: Relation, r1: Relation) -> Judgment:
    """Does ``r2`` refine ``r1``?

    True when ``r1 L & r2 L & (r1 | r2) == r1``: ``r2`` is defined wherever
    ``r1`` is and, there, every outcome of ``r2`` is allowed by ``r1``.
    """
    space = _same(r1, r2)
    lhs = refinement_lhs(r2, r1)
    verdict = lhs == r1
    j = Judgment(REFINES, verdict, space)
    if not verdict:
        missing = r1 - lhs  # r1 pairs on states where r2 has no outcome
        extra = lhs - r1  # r2 outcomes that r1 forbids
        cands = [p for p in (missing.least_pair(), extra.least_pair()) if p is not None]
        pair = min(cands)
        j.pairs = [pair]
        if extra.least_pair() == pair:
            j.reason = "the refining relation produces an outcome the refined one forbids"
        else:
            j.reason = "the refining relation has no outcome where the refined one has"
    return j


def competence_domain(p: Relation, r: Relation) -> StateSet:
    """``dom(r & p)``: the states on which ``p`` satisfies ``r``."""
    _same(p, r)
    return (r & p).domain()


def is_correct(p: Relation, r: Relation) -> Judgment:
    """Absolute correctness: ``p`` refines ``r``.

    For a deterministic ``p`` the verdict is computed as ``dom(p & r) == dom(r)``
    and must agree with refinement.  A non-deterministic ``p`` may have one
    outcome inside ``r`` and another outside, so there the competence form is
    only necessary and refinement decides.
    """
    space = _same(p, r)
    comp = competence_domain(p, r)
    dom_r = r.domain()
    by_competence = comp == dom_r
    via_refinement = refines(p, r)
    if p.is_deterministic():
        if via_refinement.verdict != by_competence:
            raise InconsistencyError(
                f"correctness via competence domain ({by_competence}) disagrees with "
                f"refinement ({via_refinement.verdict})"
            )
    elif via_refinement.verdict and not by_competence:
        raise InconsistencyError("refinement holds but the competence domain falls short")
    verdict = via_refinement.verdict
    j = Judgment(CORRECT, verdict, space, domains={"competence": comp, "dom(R)": dom_r})
    if not verdict:
        lost = dom_r - comp
        if len(lost):
            s = int(lost.indices[0])
            bad = p.restrict_domain(StateSet(space, [s])) - r
            j.pairs = _least_pair(bad)
        else:
            # every state of dom(R) has a good outcome, but some state also has a bad one
            bad = (p - r).restrict_domain(dom_r)
            j.pairs = _least_pair(bad)
            s = j.pairs[0][0]
        j.states = [s]
        j.reason = ("the program has no outcome on a state of dom(R)" if not j.pairs
                    else "the program produces an outcome R forbids")
    return j


def is_partially_correct(p: Relation, r: Relation) -> Judgment:
    """Correct wherever ``p`` terminates: ``p`` refines ``r & p L``."""
    space = _same(p, r)
    dom_p = p.domain()
    restricted = r.restrict_domain(dom_p)
    inner = refines(p, restricted)
    j = Judgment(PARTIALLY_CORRECT, inner.verdict, space,
                 domains={"competence": competence_domain(p, r), "dom(P)": dom_p})
    j.pairs = inner.pairs
    if not inner.verdict:
        if inner.pairs and inner.pairs[0] not in r:
            j.reason = "the program terminates in a state R forbids"
        else:
            j.reason = inner.reason
    return j


def _require_deterministic(**rels):
    for name, rel in rels.items():
        if not rel.is_deterministic():
            raise NonDeterministicError(
                f"{name} is not deterministic; use the non-deterministic judgment "
                f"(more_correct_nondet) instead"
            )


def more_correct_det(p2: Relation, p1: Relation, r: Relation) -> Judgment:
    """Is ``p2`` more correct than ``p1`` with respect to ``r``?

    For deterministic programs this is competence-domain inclusion.
    """
    space = _same(p1, p2, r)
    _require_deterministic(candidate=p2, baseline=p1)
    c1 = competence_domain(p1, r)
    c2 = competence_domain(p2, r)
    verdict = c1 <= c2
    j = Judgment(MORE_CORRECT_DET, verdict, space,
                 domains={"baseline": c1, "candidate": c2})
    if not verdict:
        j.states = _least_state(c1 - c2)
        j.reason = "a state of the baseline's competence domain is outside the candidate's"
    return j


def strictly_more_correct_det(p2: Relation, p1: Relation, r: Relation) -> Judgment:
    j = more_correct_det(p2, p1, r)
    c1, c2 = j.domains["baseline"], j.domains["candidate"]
    j.kind = STRICTLY_MORE_CORRECT_DET
    if j.verdict and c1 == c2:
        j.verdict = False
        j.reason = "the competence domains are equal"
    elif j.verdict:
        j.states = _least_state(c2 - c1)
        j.reason = "least state gained by the candidate"
    return j


def more_correct_nondet(p2: Relation, p1: Relation, r: Relation) -> Judgment:
    """Relative correctness for arbitrary relations.

    Clause 1: the candidate's competence domain contains the baseline's.
    Clause 2: on the baseline's competence domain, every outcome of the
    candidate that violates ``r`` is also an outcome of the baseline.
    """
    space = _same(p1, p2, r)
    c1 = competence_domain(p1, r)
    c2 = competence_domain(p2, r)
    clause1 = c1 <= c2
    new_violations = (p2 - r).restrict_domain(c1)
    clause2 = new_violations <= p1
    j = Judgment(MORE_CORRECT_NONDET, clause1 and clause2, space,
                 domains={"baseline": c1, "candidate": c2},
                 sets={"clause2": new_violations},
                 clauses={"1": clause1, "2": clause2})
    if not clause1:
        j.states = _least_state(c1 - c2)
        j.reason = "clause 1: a state of the baseline's competence domain is outside the candidate's"
    elif not clause2:
        j.pairs = _least_pair(new_violations - p1)
        j.reason = "clause 2: the candidate adds a violating outcome on the baseline's domain"
    return j


__all__ = [
    "Judgment", "refines", "refinement_lhs", "competence_domain", "is_correct",
    "is_partially_correct", "more_correct_det", "strictly_more_correct_det",
    "more_correct_nondet",
]
