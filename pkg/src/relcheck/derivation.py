"""Derivation chains: sequences of ever more correct programs, and reliability.

A chain starts (conventionally) from ``abort`` and each step must be more
correct than the one before it with respect to one specification.  Two modes:

``exhaustive``
    materialize ``R`` and denote every program over the whole
    state space, then apply the relational judgments;
``oracle``
    run each program on the states of an initial region and compare final
    states against ``R`` pointwise.  This works on spaces far
    too large to enumerate.

Reliability of a program is the probability that an initial state drawn
from ``dom(R)`` (restricted to the region) lies in its competence domain.
It is computed exactly as a fraction and printed to four decimals.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import exprs, speclang
from .correctness import (
    Judgment,
    competence_domain,
    is_correct,
    more_correct_det,
    more_correct_nondet,
)
from .errors import InconclusiveError, ParseError, RelcheckError, StateSpaceError
from .proglang import Abort, BoundProgram, Program, batch_runner, bind_program, denote
from .proglang.compiled import NOFUEL, OK
from .proglang.interp import sufficient_fuel
from .relcore import DEFAULT_CAP, Relation, StateSet, StateSpace

log = logging.getLogger(__name__)

EXHAUSTIVE = "exhaustive"
ORACLE = "oracle"


# -- regions ------------------------------------------------------------------


class Region:
    """Initial states to examine: some variables enumerated, the rest pinned.

    ``values`` maps each enumerated variable to an increasing sequence of
    values; ``fixed`` maps every other variable to one value.  States come
    out in canonical index order.
    """

    def __init__(self, space: StateSpace, values: dict | None = None, fixed: dict | None = None):
        values = {k: sorted(set(int(x) for x in v)) for k, v in (values or {}).items()}
        fixed = {k: int(v) for k, v in (fixed or {}).items()}
        for name in list(values) + list(fixed):
            space.var(name)
        both = set(values) & set(fixed)
        if both:
            raise StateSpaceError(f"variables both enumerated and pinned: {sorted(both)}")
        missing = [n for n in space.names if n not in values and n not in fixed]
        if missing:
            raise StateSpaceError(f"region leaves {missing} neither enumerated nor pinned")
        for name, vals in values.items():
            v = space.var(name)
            if not vals:
                raise StateSpaceError(f"region enumerates no values for {name!r}")
            if vals[0] < v.lo or vals[-1] > v.hi:
                raise StateSpaceError(f"region values for {name!r} leave {v}")
        for name, x in fixed.items():
            v = space.var(name)
            if not v.lo <= x <= v.hi:
                raise StateSpaceError(f"pinned value {x} for {name!r} outside {v}")
        self.space = space
        self.values = values
        self.fixed = fixed

    @classmethod
    def full(cls, space: StateSpace) -> "Region":
        return cls(space, {v.name: range(v.lo, v.hi + 1) for v in space.variables})

    @property
    def size(self) -> int:
        return math.prod(len(v) for v in self.values.values())

    def __len__(self):
        return self.size

    def columns(self) -> list:
        return [self.values.get(n, [self.fixed.get(n)]) for n in self.space.names]

    def values_array(self) -> np.ndarray:
        cols = [np.asarray(c, dtype=np.int64) for c in self.columns()]
        grids = np.meshgrid(*cols, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def indices(self) -> np.ndarray:
        return self.space.indices_of(self.values_array())

    def state_set(self) -> StateSet:
        return StateSet(self.space, self.indices())

    def repin(self, fixed: dict) -> "Region":
        return Region(self.space, self.values, fixed)

    def describe(self) -> str:
        parts = []
        for name in self.space.names:
            if name in self.values:
                vals = self.values[name]
                if vals == list(range(vals[0], vals[-1] + 1)):
                    parts.append(f"{name}={vals[0]}..{vals[-1]}")
                else:
                    parts.append(f"{name}={{{','.join(map(str, vals))}}}")
            else:
                parts.append(f"{name}={self.fixed[name]} (pinned)")
        return ", ".join(parts)


def parse_values(text) -> list:
    """``"1..10000"``, ``"1,4,9"``, an int, or a list of ints."""
    if isinstance(text, bool):
        raise ValueError("boolean is not a value list")
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        out = []
        for t in text:
            out.extend(parse_values(t))
        return out
    out = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if not piece:
            continue
        if ".." in piece:
            lo, hi = (int(t) for t in piece.split("..", 1))
            if lo > hi:
                raise ValueError(f"empty range {piece!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(piece))
    return out


def region_from_mapping(space: StateSpace, mapping: dict) -> Region:
    """Single values pin a variable, anything else enumerates it."""
    values, fixed = {}, {}
    for name, spec in mapping.items():
        if isinstance(spec, int) and not isinstance(spec, bool):
            fixed[name] = spec
        else:
            values[name] = parse_values(spec)
    return Region(space, values, fixed)


# -- reliability models -------------------------------------------------------


@dataclass(frozen=True)
class ReliabilityModel:
    """Distribution of initial states, up to normalization over ``dom(R)``.

    ``kind`` is ``"uniform"``, ``"expression"`` (an integer weight expression
    over the space's variables) or ``"function"`` (a callable taking a
    :class:`State` and returning a non-negative number).
    """

    kind: str = "uniform"
    expression: object = None
    function: Callable | None = None
    text: str = ""

    @classmethod
    def uniform(cls):
        return cls()

    @classmethod
    def from_expression(cls, text: str):
        return cls("expression", exprs.parse_expression(text, kind="int"), text=text)

    @classmethod
    def from_function(cls, fn: Callable):
        return cls("function", function=fn, text=getattr(fn, "__name__", "function"))

    def describe(self) -> str:
        return "uniform" if self.kind == "uniform" else f"{self.kind} {self.text}".strip()

    def weights(self, space: StateSpace, values: np.ndarray) -> list:
        """Exact non-negative weights, one per row of ``values``."""
        if self.kind == "uniform":
            return [1] * values.shape[0]
        if self.kind == "expression":
            exprs.check_scope(self.expression, set(space.names), allow_primed=False)
            env = {n: values[:, j].astype(object) for j, n in enumerate(space.names)}
            v, d = exprs.vevaluate(self.expression, env, strict=True)
            v = np.broadcast_to(np.asarray(v, dtype=object), (values.shape[0],))
            d = np.broadcast_to(np.asarray(d, dtype=bool), (values.shape[0],))
            if not d.all():
                raise RelcheckError("weight expression is undefined on some region state")
            out = [int(x) for x in v]
        elif self.kind == "function":
            out = [Fraction(self.function(space.state(tuple(int(x) for x in row))))
                   for row in values]
        else:
            raise RelcheckError(f"unknown distribution kind {self.kind!r}")
        if any(w < 0 for w in out):
            raise RelcheckError("distribution weights must be non-negative")
        return out


@dataclass
class Reliability:
    probability: Fraction
    competent: int  # states of dom(R) & region in the competence domain
    domain: int  # states of dom(R) & region
    competent_weight: Fraction
    domain_weight: Fraction

    def render(self) -> str:
        return format_probability(self.probability)

    def to_record(self) -> dict:
        return {
            "reliability": self.render(),
            "exact": f"{self.probability.numerator}/{self.probability.denominator}",
            "competent": self.competent,
            "domain": self.domain,
        }


def format_probability(p, places: int = 4) -> str:
    """Round half up to a fixed number of places: 996/7500 -> ``0.1328``."""
    p = Fraction(p)
    q = Decimal(p.numerator) / Decimal(p.denominator)
    return str(q.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def reliability_from_masks(weights, competent: np.ndarray, in_domain: np.ndarray) -> Reliability:
    total = sum((w for w, d in zip(weights, in_domain) if d), Fraction(0))
    if total <= 0:
        raise RelcheckError("dom(R) has zero weight on the region; reliability is undefined")
    good_mask = competent & in_domain
    good = sum((w for w, g in zip(weights, good_mask) if g), Fraction(0))
    return Reliability(Fraction(good) / total, int(good_mask.sum()), int(in_domain.sum()),
                       Fraction(good), Fraction(total))


# -- dom(R) on a region -------------------------------------------------------


def domain_mask(spec: speclang.SpecFile, region: Region, values: np.ndarray | None = None):
    """Which region states lie in ``dom(R)``.

    Uses the ``domain:`` clause when present, otherwise a witness search over
    the full ranges of the primed variables the predicate mentions.
    """
    values = region.values_array() if values is None else values
    if spec.domain is not None:
        return speclang.holds_initial_many(spec.domain, spec.require_space(), values)
    found, _, complete = speclang.witness_search(spec, values)
    assert complete
    return found


# -- oracle mode ----------------------------------------------------------------


@dataclass
class OracleCompetence:
    """Competence-domain membership over a region, computed by execution."""

    region: Region
    indices: np.ndarray  # sorted state indices of competent region states
    evaluated: int  # states actually executed
    fuel_exhausted: list = field(default_factory=list)  # State list
    inconclusive: bool = False
    status_counts: dict = field(default_factory=dict)

    def state_set(self) -> StateSet:
        return StateSet(self.region.space, self.indices)

    def __len__(self):
        return int(self.indices.size)


def _program_space(prog):
    if isinstance(prog, BoundProgram):
        return prog.space
    return None


def run_on_values(prog, space, values: np.ndarray, fuel: int):
    """Execute ``prog`` on each row; returns ``(status, finals)``."""
    return batch_runner(prog, space).run(values, fuel)


def oracle_competence_domain(prog, spec: speclang.SpecFile, region: Region, fuel: int,
                             in_domain: np.ndarray | None = None) -> OracleCompetence:
    """``{s in region | prog run from s ends in s' with holds(spec, s, s')}``.

    Only states of ``dom(R)`` are executed: any other state has no acceptable
    final state, so it cannot be in the competence domain.  Fuel exhaustion
    counts as divergence when ``fuel`` reaches the sufficient-fuel bound and
    marks the result inconclusive otherwise.
    """
    space = spec.require_space()
    if region.space != space:
        raise StateSpaceError("region and specification live on different spaces")
    values = region.values_array()
    if in_domain is None:
        in_domain = domain_mask(spec, region, values)
    todo = values[in_domain]
    result = OracleCompetence(region, np.empty(0, dtype=np.int64), int(todo.shape[0]))
    if isinstance(prog, Relation):
        comp = _relation_competence(prog, spec, todo)
        result.indices = np.sort(space.indices_of(todo[comp]))
        return result
    status, finals = run_on_values(prog, space, todo, fuel)
    ok = status == OK
    good = np.zeros(todo.shape[0], dtype=bool)
    if ok.any():
        good[ok] = speclang.holds_pairs(spec, space, todo[ok], finals[ok])
    result.indices = np.sort(space.indices_of(todo[good]))
    result.status_counts = {int(k): int(v) for k, v in zip(*np.unique(status, return_counts=True))}
    exhausted = np.flatnonzero(status == NOFUEL)
    if exhausted.size:
        result.fuel_exhausted = [space.state(tuple(int(x) for x in todo[i])) for i in exhausted]
        bound = sufficient_fuel(prog, space)
        result.inconclusive = fuel < bound
    return result


def _relation_competence(rel: Relation, spec, todo):
    space = rel.space
    idx = space.indices_of(todo)
    keys = rel.keys()
    n = space.size
    rows = keys // n
    out = np.zeros(todo.shape[0], dtype=bool)
    for k, i in enumerate(idx):
        lo, hi = np.searchsorted(rows, [i, i + 1])
        if hi > lo:
            finals = space.values_of(keys[lo:hi] % n)
            initial = np.repeat(todo[k:k + 1], hi - lo, axis=0)
            out[k] = speclang.holds_pairs(spec, space, initial, finals).any()
    return out


def reliability(prog, spec: speclang.SpecFile, model: ReliabilityModel | None, region: Region,
                fuel: int) -> Reliability:
    """Oracle-mode reliability of ``prog`` over ``dom(R) & region``."""
    model = model or ReliabilityModel.uniform()
    values = region.values_array()
    dom = domain_mask(spec, region, values)
    comp = oracle_competence_domain(prog, spec, region, fuel, in_domain=dom)
    if comp.inconclusive:
        raise InconclusiveError(
            f"{len(comp.fuel_exhausted)} states ran out of fuel {fuel}, below the "
            f"sufficient bound; raise the fuel"
        )
    member = np.isin(region.space.indices_of(values), comp.indices)
    return reliability_from_masks(model.weights(region.space, values), member, dom)


# -- chains -----------------------------------------------------------------------


@dataclass
class ChainStep:
    name: str
    program: object  # Program, BoundProgram or Relation
    source: str | None = None


@dataclass
class DerivationChain:
    spec: speclang.SpecFile
    steps: list  # ChainStep
    mode: str = EXHAUSTIVE
    region: Region | None = None
    fuel: int = 10_000
    threshold: Fraction | None = None
    model: ReliabilityModel = field(default_factory=ReliabilityModel.uniform)
    cap: int = DEFAULT_CAP
    redraws: int = 5
    spot_samples: int = 200
    seed: int = 0
    domain_check: dict | None = None  # {"region": Region, "witness": {name: (lo, hi)}}
    source: str | None = None

    @property
    def space(self) -> StateSpace:
        return self.spec.require_space()


@dataclass
class StepReport:
    index: int
    name: str
    verdict: bool | None  # relative correctness vs the previous step; None for step 0
    competence: int  # competence-domain states within dom(R) & region
    reliability: Reliability | None
    correct: bool  # absolutely correct (exhaustive) / correct on the region (oracle)
    correct_on_region: bool
    evidence: list = field(default_factory=list)  # formatted states / pairs
    judgment: Judgment | None = None
    inconclusive: bool = False

    def to_record(self) -> dict:
        rec = {
            "index": self.index,
            "name": self.name,
            "more_correct_than_previous": self.verdict,
            "competence": self.competence,
            "correct": self.correct,
            "correct_on_region": self.correct_on_region,
        }
        if self.reliability is not None:
            rec.update(self.reliability.to_record())
        if self.evidence:
            rec["evidence"] = list(self.evidence)
        if self.inconclusive:
            rec["inconclusive"] = True
        return rec


@dataclass
class ChainReport:
    chain: DerivationChain
    steps: list = field(default_factory=list)
    verified: bool = True
    inconclusive: bool = False
    termination: str = "neither"  # correct | threshold | neither
    failure: str = ""
    warnings: list = field(default_factory=list)
    region_size: int = 0
    domain_size: int = 0
    independence: list = field(default_factory=list)  # per redraw: {step name: changes}
    domain_report: speclang.DomainReport | None = None

    def independence_totals(self) -> dict:
        out = {s.name: 0 for s in self.steps}
        for d in self.independence:
            for k, v in d.items():
                out[k] = out.get(k, 0) + v
        return out

    def reliability_table(self) -> list:
        return [(s.name, s.reliability.render() if s.reliability else "n/a") for s in self.steps]

    def to_record(self) -> dict:
        rec = {
            "kind": "verify-chain",
            "mode": self.chain.mode,
            "space": self.chain.space.describe(),
            "region": self.chain.region.describe() if self.chain.region else "all states",
            "region_states": self.region_size,
            "domain_states": self.domain_size,
            "distribution": self.chain.model.describe(),
            "verified": self.verified,
            "inconclusive": self.inconclusive,
            "termination": self.termination,
            "steps": [s.to_record() for s in self.steps],
            "table": [{"program": n, "reliability": r} for n, r in self.reliability_table()],
        }
        if self.chain.threshold is not None:
            rec["threshold"] = format_probability(self.chain.threshold)
        if self.failure:
            rec["failure"] = self.failure
        if self.independence:
            rec["independence_changes"] = [dict(d) for d in self.independence]
        if self.domain_report is not None:
            rec["domain_check"] = self.domain_report.summary()
        if self.warnings:
            rec["warnings"] = list(self.warnings)
        return rec

    def render(self) -> str:
        head = f"{'Step':<5} {'Program':<10} {'More-correct':<13} {'Competence':>10} " \
               f"{'Correct':<8} {'Reliability':>11}"
        lines = [
            f"mode: {self.chain.mode}; space {self.chain.space.describe()}",
            f"region: {self.chain.region.describe() if self.chain.region else 'all states'} "
            f"({self.region_size} states, {self.domain_size} in dom(R))",
            head,
        ]
        for s in self.steps:
            verdict = "-" if s.verdict is None else ("yes" if s.verdict else "NO")
            rel = s.reliability.render() if s.reliability else "n/a"
            lines.append(f"{s.index:<5} {s.name:<10} {verdict:<13} {s.competence:>10} "
                         f"{'yes' if s.correct else 'no':<8} {rel:>11}")
            for e in s.evidence:
                lines.append(f"      evidence: {e}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        if self.domain_report is not None:
            lines.append(f"domain clause: {self.domain_report.summary()}")
        if self.independence:
            totals = self.independence_totals()
            changed = ", ".join(f"{k} {v}" for k, v in totals.items() if v) or "none"
            lines.append(f"independence spot-check ({len(self.independence)} redraws): "
                         f"membership changes {changed}")
        if self.failure:
            lines.append(f"FAILED: {self.failure}")
        if self.inconclusive:
            lines.append("INCONCLUSIVE: fuel below the sufficient bound was exhausted")
        lines.append(f"termination: {self.termination}")
        lines.append("")
        lines.append("Program Reliability")
        for name, rel in self.reliability_table():
            lines.append(f"{name} {rel}")
        return "\n".join(lines) + "\n"


def _is_abort(prog) -> bool:
    if isinstance(prog, Relation):
        return len(prog) == 0
    return isinstance(prog.body, Abort)


def verify_chain(chain: DerivationChain) -> ChainReport:
    """Check every adjacent pair of the chain and compute per-step reliability.

    Verification stops at the first step that is not more correct than its
    predecessor; the report names the least offending state.
    """
    report = ChainReport(chain)
    if not chain.steps:
        raise RelcheckError("derivation chain has no steps")
    if not _is_abort(chain.steps[0].program):
        report.warnings.append(f"step 0 ({chain.steps[0].name}) is not abort")
    for st in chain.steps:
        if not isinstance(st.program, Relation):
            for w in bind_program(st.program, chain.space).warnings:
                report.warnings.append(f"{st.name}: {w}")
    if chain.mode == EXHAUSTIVE:
        _verify_exhaustive(chain, report)
    elif chain.mode == ORACLE:
        _verify_oracle(chain, report)
    else:
        raise RelcheckError(f"unknown chain mode {chain.mode!r}")
    if report.verified and report.steps and not report.inconclusive:
        last = report.steps[-1]
        if last.correct_on_region and (chain.mode == ORACLE or last.correct):
            report.termination = "correct"
        elif (chain.threshold is not None and last.reliability is not None
              and last.reliability.probability >= chain.threshold):
            report.termination = "threshold"
    # the failure itself stops the chain; nothing terminates it
    return report


def _region_arrays(chain):
    region = chain.region or Region.full(chain.space)
    values = region.values_array()
    return region, values, chain.space.indices_of(values)


def _verify_exhaustive(chain, report):
    space = chain.space
    space.check_cap(chain.cap, "specification space " + space.describe())
    R = speclang.materialize(chain.spec, space, cap=chain.cap)
    region, values, idx = _region_arrays(chain)
    dom_r = R.domain()
    in_dom = np.isin(idx, dom_r.indices)
    weights = chain.model.weights(space, values)
    report.region_size = int(idx.size)
    report.domain_size = int(in_dom.sum())
    prev = None
    for k, st in enumerate(chain.steps):
        rel = st.program if isinstance(st.program, Relation) else denote(st.program, space,
                                                                           chain.cap)
        comp = competence_domain(rel, R)
        member = np.isin(idx, comp.indices)
        rel_est = reliability_from_masks(weights, member, in_dom) if in_dom.any() else None
        correct = is_correct(rel, R).verdict
        on_region = bool((member | ~in_dom).all())
        step = StepReport(k, st.name, None, int((member & in_dom).sum()), rel_est, correct,
                          on_region)
        if prev is not None:
            p_rel = prev
            if rel.is_deterministic() and p_rel.is_deterministic():
                j = more_correct_det(rel, p_rel, R)
            else:
                j = more_correct_nondet(rel, p_rel, R)
            step.verdict = j.verdict
            step.judgment = j
            if not j.verdict:
                step.evidence = [f"state {j.format_state(i)}" for i in j.states] + \
                                [f"pair {j.format_pair(p)}" for p in j.pairs]
                report.steps.append(step)
                report.verified = False
                report.failure = (f"step {k} ({st.name}) is not more correct than step {k - 1} "
                                  f"({chain.steps[k - 1].name}): {j.reason}; "
                                  + "; ".join(step.evidence))
                return
        report.steps.append(step)
        prev = rel


def _verify_oracle(chain, report):
    space = chain.space
    if chain.region is None:
        raise RelcheckError("oracle mode needs an initial region")
    for st in chain.steps:
        if isinstance(st.program, Relation):
            raise RelcheckError(
                f"step {st.name} is a relation literal; relation steps need exhaustive mode"
            )
    region = chain.region
    values = region.values_array()
    idx = space.indices_of(values)
    if chain.domain_check is not None and chain.spec.domain is not None:
        dc = chain.domain_check
        report.domain_report = speclang.validate_domain_clause(
            chain.spec, dc["region"].values_array(), dc.get("witness"))
        if report.domain_report.violations:
            report.verified = False
            s = report.domain_report.violations[0][0]
            report.failure = f"domain clause disagrees with witness search at {s}"
            return
    in_dom = domain_mask(chain.spec, region, values)
    weights = chain.model.weights(space, values)
    report.region_size = int(idx.size)
    report.domain_size = int(in_dom.sum())
    dom_count = report.domain_size
    prev_idx = None
    prev_comp = None
    for k, st in enumerate(chain.steps):
        comp = oracle_competence_domain(st.program, chain.spec, region, chain.fuel, in_dom)
        member = np.isin(idx, comp.indices)
        rel_est = reliability_from_masks(weights, member, in_dom) if dom_count else None
        on_region = len(comp) == dom_count
        step = StepReport(k, st.name, None, len(comp), rel_est, on_region, on_region)
        if comp.inconclusive:
            step.inconclusive = True
            report.inconclusive = True
            step.evidence = [f"fuel exhausted at {s}" for s in comp.fuel_exhausted[:3]]
        if prev_comp is not None:
            lost = np.setdiff1d(prev_idx, comp.indices, assume_unique=True)
            step.verdict = lost.size == 0
            if lost.size:
                s = space.state_at(int(lost[0]))
                step.evidence = [f"state {s}"]
                report.steps.append(step)
                report.verified = False
                report.failure = (f"step {k} ({st.name}) is not more correct than step {k - 1} "
                                  f"({chain.steps[k - 1].name}): state {s} is in the "
                                  f"competence domain of the former step only")
                return
        report.steps.append(step)
        prev_comp, prev_idx = comp, comp.indices
    if chain.redraws:
        report.independence = independence_check(chain)
        sensitive = [k for k, v in report.independence_totals().items() if v]
        if sensitive:
            report.warnings.append(
                f"competence of {', '.join(sensitive)} depends on the pinned variables "
                f"{', '.join(sorted(chain.region.fixed))}; results hold for the pinned values only"
            )


def independence_check(chain: DerivationChain) -> list:
    """Re-run every step with random values for the pinned variables.

    Samples up to ``spot_samples`` region states in ``dom(R)`` per redraw and
    counts how many change competence membership.  Returns, per redraw, a
    mapping from step name to the number of sampled states that changed.
    """
    space = chain.space
    region = chain.region
    if not region.fixed:
        return []
    rng = random.Random(chain.seed)
    values = region.values_array()
    in_dom = domain_mask(chain.spec, region, values)
    base = values[in_dom]
    if not base.shape[0]:
        return []
    n = min(chain.spot_samples, base.shape[0])
    rows = sorted(rng.sample(range(base.shape[0]), n))
    sample = base[rows]
    pos = {name: space.position(name) for name in region.fixed}
    changes = []
    reference = [_member(st.program, chain, sample) for st in chain.steps]
    for _ in range(chain.redraws):
        redrawn = sample.copy()
        for name, j in pos.items():
            v = space.var(name)
            redrawn[:, j] = [rng.randint(v.lo, v.hi) for _ in range(n)]
        changes.append({st.name: int((_member(st.program, chain, redrawn) != ref).sum())
                        for st, ref in zip(chain.steps, reference)})
    return changes


def _member(prog, chain, values):
    space = chain.space
    status, finals = run_on_values(prog, space, values, chain.fuel)
    ok = status == OK
    good = np.zeros(values.shape[0], dtype=bool)
    if ok.any():
        good[ok] = speclang.holds_pairs(chain.spec, space, values[ok], finals[ok])
    return good


# -- manifests -------------------------------------------------------------------


def _load_toml(path: Path) -> dict:
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ParseError(str(e), source=str(path)) from None


def load_step(path: Path, space: StateSpace, default_range=None):
    """A ``.prog`` file or a ``.rel`` relation literal."""
    from .proglang import parse_program
    from .relcore import parse_relation

    text = path.read_text(encoding="utf-8")
    if path.suffix == ".rel":
        return parse_relation(text, space, source=str(path))
    prog = parse_program(text, source=str(path), default_range=default_range)
    if prog.space_name is not None and prog.space_name != space.name:
        raise ParseError(f"program is over space {prog.space_name!r} but its specification "
                         f"declares {space.name!r}", 1, 1, str(path))
    return bind_program(prog, space)


def load_chain(path, cap: int | None = None, default_range=None) -> DerivationChain:
    """Read a chain manifest (TOML).

    Keys: ``spec``, ``programs`` (list of paths), optional ``names``, ``mode``,
    ``fuel``, ``threshold``, ``distribution`` (``"uniform"`` or
    ``{expression = "..."}``), ``cap``, ``default_range``, a ``[region]``
    table, an ``[independence]`` table (``redraws``, ``samples``, ``seed``) and
    a ``[domain_check]`` table (region entries plus a ``witness`` table).
    """
    path = Path(path)
    data = _load_toml(path)
    base = path.parent
    src = str(path)

    def need(key):
        if key not in data:
            raise ParseError(f"chain manifest is missing {key!r}", source=src)
        return data[key]

    if default_range is None and "default_range" in data:
        default_range = tuple(parse_values(data["default_range"])[i] for i in (0, -1))
    spec_path = base / need("spec")
    spec = speclang.parse_spec(spec_path.read_text(encoding="utf-8"), source=str(spec_path))
    if spec.space is None:
        raise ParseError("the chain's specification must declare its space", source=str(spec_path))
    space = spec.space
    programs = need("programs")
    names = data.get("names") or []
    steps = []
    for k, rel in enumerate(programs):
        p = base / rel
        prog = load_step(p, space, default_range)
        if k < len(names):
            name = names[k]
        elif isinstance(prog, BoundProgram) and prog.name:
            name = prog.name
        else:
            name = p.stem
        steps.append(ChainStep(name, prog, str(p)))
    mode = data.get("mode", EXHAUSTIVE)
    if mode not in (EXHAUSTIVE, ORACLE):
        raise ParseError(f"unknown mode {mode!r}", source=src)
    region = region_from_mapping(space, data["region"]) if "region" in data else None
    threshold = data.get("threshold")
    dist = data.get("distribution", "uniform")
    if dist == "uniform":
        model = ReliabilityModel.uniform()
    elif isinstance(dist, dict) and "expression" in dist:
        model = ReliabilityModel.from_expression(dist["expression"])
    else:
        raise ParseError(f"unsupported distribution {dist!r}", source=src)
    ind = data.get("independence", {})
    dc = None
    if "domain_check" in data:
        d = dict(data["domain_check"])
        witness = {k: tuple(parse_values(v)[i] for i in (0, -1))
                   for k, v in d.pop("witness", {}).items()}
        dc = {"region": region_from_mapping(space, d), "witness": witness}
    return DerivationChain(
        spec=spec,
        steps=steps,
        mode=mode,
        region=region,
        fuel=int(data.get("fuel", 10_000)),
        threshold=None if threshold is None else Fraction(str(threshold)),
        model=model,
        cap=int(cap if cap is not None else data.get("cap", DEFAULT_CAP)),
        redraws=int(ind.get("redraws", 5)),
        spot_samples=int(ind.get("samples", 200)),
        seed=int(ind.get("seed", 0)),
        domain_check=dc,
        source=src,
    )
