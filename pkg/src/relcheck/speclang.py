"""Specifications: predicates over initial (``x``) and final (``x'``) values.

A spec file looks like::

    space fermat:
      var n : 0..24;
      var x : 0..10;
      var y : 0..10;
    spec: n == x'*x' - y'*y' && 0 <= y' && y' <= x';
    domain: n % 2 == 1 || n % 4 == 0;

The ``space`` block uses the same syntax as a ``.space`` file.  Variables a
predicate does not mention are unconstrained.  A bare predicate such as
``x' == x + y`` is also accepted and yields an unbound :class:`SpecFile`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import exprs
from .errors import CapExceededError, ParseError, RelcheckError, ScopeError
from .exprs import TokenStream, tokenize
from .relcore import DEFAULT_CAP, MAX_PAIRS, Relation, State, StateSet, StateSpace, Variable

# grid cells evaluated per vectorized chunk
_CHUNK = 1 << 22

DECL_KEYWORDS = ("var", "nat", "int")


def parse_decl_items(ts: TokenStream, terminators=()) -> list:
    """``(var|nat|int) a, b [: lo..hi] ;`` repeated.

    Returns ``(name_token, keyword, (lo, hi) or None)`` triples; callers
    decide whether a missing range is acceptable.
    """
    out = []
    while ts.peek.kind == "kw" and ts.peek.text in DECL_KEYWORDS:
        kw = ts.next()
        names = [ts.expect_ident("variable name")]
        while ts.accept(","):
            names.append(ts.expect_ident("variable name"))
        rng = None
        if ts.accept(":"):
            lo = ts.signed_int()
            ts.expect("..")
            hi = ts.signed_int()
            if lo > hi:
                raise ParseError(f"empty range {lo}..{hi}", kw.line, kw.col, ts.source)
            if kw.text == "nat" and lo < 0:
                raise ParseError("nat variables need a non-negative range", kw.line, kw.col,
                                 ts.source)
            rng = (lo, hi)
        for t in names:
            out.append((t, kw.text, rng))
        if not ts.accept(";") and not (ts.peek.kind == "eof" or ts.peek.text in terminators):
            ts.error("expected ';'")
    return out


def parse_decls(ts: TokenStream, terminators, default_range=None) -> list:
    """Declarations that must carry a range (or fall back to ``default_range``)."""
    out = []
    for t, _, rng in parse_decl_items(ts, terminators):
        if rng is None:
            if default_range is None:
                raise ParseError(f"range required for {t.text!r} (e.g. ': 0..24')",
                                 t.line, t.col, ts.source)
            rng = tuple(default_range)
        out.append((Variable(t.text, *rng), t))
    return out


def _space_from_decls(decls, name, ts, tok):
    seen = set()
    for v, t in decls:
        if v.name in seen:
            raise ScopeError(f"duplicate variable {v.name!r}", t.line, t.col, ts.source)
        seen.add(v.name)
    try:
        return StateSpace([v for v, _ in decls], name=name)
    except RelcheckError as e:
        raise ParseError(str(e), tok.line, tok.col, ts.source) from None


def _parse_space_block(ts, default_name):
    head = ts.expect("space", "kw")
    name = default_name
    if ts.peek.kind == "ident":
        name = ts.next().text
    ts.expect(":")
    decls = parse_decls(ts, ("spec", "domain", "space"))
    if not decls:
        ts.error("space declares no variables")
    return _space_from_decls(decls, name, ts, head)


def parse_space(text: str, source: str | None = None, default_name: str = "S") -> StateSpace:
    """Parse a ``.space`` file: ``space <name>:`` followed by declarations."""
    ts = TokenStream(tokenize(text, source), source)
    space = _parse_space_block(ts, default_name)
    if ts.peek.kind != "eof":
        ts.error("unexpected input after space declarations")
    return space


def format_space(space: StateSpace) -> str:
    lines = [f"space {space.name}:"]
    lines.extend(f"  var {v};" for v in space.variables)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SpecExpr:
    """A parsed boolean predicate over ``x`` and ``x'`` names."""

    ast: object
    text: str = field(default="", compare=False)

    @property
    def unprimed(self) -> list:
        return sorted(n for n, p in exprs.variables(self.ast) if not p)

    @property
    def primed(self) -> list:
        return sorted(n for n, p in exprs.variables(self.ast) if p)

    def pretty(self) -> str:
        return exprs.pretty(self.ast)

    def __str__(self):
        return self.pretty()


@dataclass(frozen=True)
class SpecFile:
    predicate: SpecExpr
    space: StateSpace | None = None
    domain: SpecExpr | None = None
    source: str | None = field(default=None, compare=False)

    @property
    def name(self) -> str:
        return self.space.name if self.space is not None else "S"

    def bind(self, space: StateSpace) -> "SpecFile":
        names = set(space.names)
        exprs.check_scope(self.predicate.ast, names, allow_primed=True, source=self.source)
        if self.domain is not None:
            exprs.check_scope(self.domain.ast, names, allow_primed=False, source=self.source)
        return replace(self, space=space)

    def require_space(self) -> StateSpace:
        if self.space is None:
            raise RelcheckError("specification is not bound to a state space")
        return self.space

    def pretty(self) -> str:
        out = format_space(self.space) if self.space is not None else ""
        out += f"spec: {self.predicate.pretty()};\n"
        if self.domain is not None:
            out += f"domain: {self.domain.pretty()};\n"
        return out


def parse_spec(text: str, source: str | None = None, space: StateSpace | None = None) -> SpecFile:
    """Parse a spec file or a bare predicate.

    A ``space`` block in the text takes precedence over the ``space``
    argument; either way the predicate is bound and scope-checked.
    """
    ts = TokenStream(tokenize(text, source), source)
    own_space = None
    if ts.at("space", "kw"):
        own_space = _parse_space_block(ts, "S")
    if ts.at("spec", "kw"):
        ts.next()
        ts.expect(":")
        pred = exprs.parse_bool(ts)
        if not ts.accept(";") and ts.peek.kind != "eof" and not ts.at("domain", "kw"):
            ts.error("expected ';'")
    elif own_space is None:
        pred = exprs.parse_bool(ts)
        ts.accept(";")
    else:
        ts.error("expected 'spec:'")
    domain = None
    if ts.at("domain", "kw"):
        ts.next()
        ts.expect(":")
        domain = SpecExpr(exprs.parse_bool(ts))
        ts.accept(";")
    if ts.peek.kind != "eof":
        ts.error("unexpected trailing input")
    spec = SpecFile(SpecExpr(pred, text), None, domain, source)
    bound = own_space or space
    if bound is not None:
        spec = spec.bind(bound)
    elif domain is not None:
        exprs.check_scope(domain.ast, {n for n, _ in exprs.variables(domain.ast)}, False, source)
    return spec


def _as_expr(spec):
    if isinstance(spec, SpecFile):
        return spec.predicate
    if isinstance(spec, SpecExpr):
        return spec
    raise TypeError(f"expected SpecFile or SpecExpr, got {type(spec).__name__}")


def holds(spec, s: State, s2: State) -> bool:
    """Truth of the predicate on the pair ``(s, s2)``, with unbounded ints."""
    expr = _as_expr(spec)
    if s.space != s2.space:
        raise RelcheckError("states belong to different spaces")
    env = dict(zip(s.space.names, s.values))
    env.update((n + "'", v) for n, v in zip(s2.space.names, s2.values))
    try:
        return exprs.eval_bool(expr.ast, env, strict=False)
    except KeyError as e:
        raise ScopeError(f"unknown variable {e.args[0]!r}") from None


def holds_initial(expr: SpecExpr, s: State) -> bool:
    """Truth of a predicate over unprimed names only (domain clauses)."""
    return exprs.eval_bool(expr.ast, s.as_dict(), strict=False)


# -- vectorized machinery ---------------------------------------------------


def _env_dtype(expr_ast, ranges):
    return np.int64 if exprs.int64_safe(expr_ast, ranges) else object


def _ranges_for(space, witness_bounds=None):
    ranges = {}
    for v in space.variables:
        ranges[v.name] = (v.lo, v.hi)
        lo, hi = (witness_bounds or {}).get(v.name, (v.lo, v.hi))
        ranges[v.name + "'"] = (min(lo, v.lo), max(hi, v.hi))
    return ranges


def holds_pairs(spec, space: StateSpace, initial: np.ndarray, final: np.ndarray) -> np.ndarray:
    """Vectorized ``holds`` over row-aligned ``(M, k)`` value arrays."""
    expr = _as_expr(spec)
    dtype = _env_dtype(expr.ast, _ranges_for(space))
    env = {}
    for j, name in enumerate(space.names):
        env[name] = np.asarray(initial[:, j]).astype(dtype)
        env[name + "'"] = np.asarray(final[:, j]).astype(dtype)
    v, _ = exprs.vevaluate(expr.ast, env, strict=False)
    return np.broadcast_to(np.asarray(v, dtype=bool), (initial.shape[0],)).copy()


def holds_initial_many(expr: SpecExpr, space: StateSpace, values: np.ndarray) -> np.ndarray:
    dtype = _env_dtype(expr.ast, _ranges_for(space))
    env = {n: np.asarray(values[:, j]).astype(dtype) for j, n in enumerate(space.names)}
    v, _ = exprs.vevaluate(expr.ast, env, strict=False)
    return np.broadcast_to(np.asarray(v, dtype=bool), (values.shape[0],)).copy()


class _Grid:
    """Mixed-radix grid over a subset of variables with given bounds."""

    def __init__(self, names, bounds):
        self.names = list(names)
        self.bounds = [bounds[n] for n in self.names]
        self.radices = [hi - lo + 1 for lo, hi in self.bounds]
        self.size = math.prod(self.radices)

    def columns(self, idx: np.ndarray) -> dict:
        out = {}
        stride = self.size
        for name, (lo, _), r in zip(self.names, self.bounds, self.radices):
            stride //= r
            out[name] = lo + (idx // stride) % r
        return out

    def index_of(self, cols: dict) -> np.ndarray:
        idx = None
        for name, (lo, _), r in zip(self.names, self.bounds, self.radices):
            part = np.asarray(cols[name], dtype=np.int64) - lo
            idx = part if idx is None else idx * r + part
        if idx is None:
            n = len(next(iter(cols.values()))) if cols else 1
            return np.zeros(n, dtype=np.int64)
        return idx


def _predicate_grid(expr, ugrid: _Grid, vgrid: _Grid, ranges, urows=None) -> np.ndarray:
    """Boolean table ``G[u, v]``: predicate on initial-grid row u, final-grid column v."""
    dtype = _env_dtype(expr.ast, ranges)
    urows = np.arange(ugrid.size, dtype=np.int64) if urows is None else urows
    vidx = np.arange(vgrid.size, dtype=np.int64)
    vcols = {n + "'": c.astype(dtype)[None, :] for n, c in vgrid.columns(vidx).items()}
    out = np.zeros((urows.size, vgrid.size), dtype=bool)
    step = max(1, _CHUNK // max(vgrid.size, 1))
    for start in range(0, urows.size, step):
        chunk = urows[start:start + step]
        env = {n: c.astype(dtype)[:, None] for n, c in ugrid.columns(chunk).items()}
        env.update(vcols)
        v, _ = exprs.vevaluate(expr.ast, env, strict=False)
        out[start:start + chunk.size] = np.broadcast_to(np.asarray(v, dtype=bool),
                                                        (chunk.size, vgrid.size))
    return out


def materialize(spec, space: StateSpace | None = None, cap: int = DEFAULT_CAP,
                dense=None) -> Relation:
    """The relation ``{(s, s') | holds(spec, s, s')}``.

    The predicate is evaluated once per combination of the variables it
    actually mentions, then expanded over the unmentioned ones.
    """
    if isinstance(spec, SpecFile):
        if space is None:
            space = spec.require_space()
        elif spec.space is None:
            spec = spec.bind(space)
    if space is None:
        raise RelcheckError("materialize needs a state space")
    expr = _as_expr(spec)
    exprs.check_scope(expr.ast, set(space.names), allow_primed=True)
    space.check_cap(cap, "specification space " + space.describe())
    ranges = _ranges_for(space)
    bounds_map = {v.name: (v.lo, v.hi) for v in space.variables}
    ugrid = _Grid(expr.unprimed, bounds_map)
    vgrid = _Grid(expr.primed, bounds_map)
    if ugrid.size * vgrid.size > (1 << 32):
        raise CapExceededError("predicate grid too large to evaluate exhaustively")
    table = _predicate_grid(expr, ugrid, vgrid, ranges)
    arrays = space.value_arrays()
    uidx = ugrid.index_of({n: arrays[n] for n in ugrid.names}) if ugrid.names else \
        np.zeros(space.size, dtype=np.int64)
    vidx = vgrid.index_of({n: arrays[n] for n in vgrid.names}) if vgrid.names else \
        np.zeros(space.size, dtype=np.int64)
    if dense is None:
        dense = Relation.prefers_dense(space)
    if dense:
        return Relation(space, dense=table[uidx[:, None], vidx[None, :]])
    n = space.size
    order = np.argsort(uidx, kind="stable")
    bounds_u = np.searchsorted(uidx[order], np.arange(ugrid.size + 1))
    chunks = []
    total = 0
    for u in range(ugrid.size):
        rows = order[bounds_u[u]:bounds_u[u + 1]]
        if not rows.size:
            continue
        cols = np.flatnonzero(table[u][vidx])
        if not cols.size:
            continue
        total += rows.size * cols.size
        if total > MAX_PAIRS:
            raise CapExceededError(f"specification relation exceeds {MAX_PAIRS} pairs")
        chunks.append((rows[:, None] * n + cols[None, :]).ravel())
    keys = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, dtype=np.int64)
    return Relation(space, keys=keys)


def domain_states(spec: SpecFile, space: StateSpace | None = None) -> StateSet:
    """States satisfying the ``domain:`` clause."""
    space = space or spec.require_space()
    if spec.domain is None:
        raise RelcheckError("specification has no domain clause")
    space.check_cap(1 << 31, "domain clause evaluation")
    arrays = space.value_arrays()
    values = np.stack([arrays[n] for n in space.names], axis=1) if space.names else \
        np.zeros((space.size, 0), dtype=np.int64)
    return StateSet.from_mask(space, holds_initial_many(spec.domain, space, values))


# -- domain clause validation ---------------------------------------------


@dataclass
class DomainReport:
    checked: int = 0
    violations: list = field(default_factory=list)  # (State, clause_value, witness or None)
    inconclusive: list = field(default_factory=list)  # States
    nothing_to_validate: bool = False
    complete_search: bool = True

    @property
    def ok(self) -> bool:
        return not self.nothing_to_validate and not self.violations

    @property
    def clean(self) -> bool:
        return self.ok and not self.inconclusive

    def summary(self) -> str:
        if self.nothing_to_validate:
            return "nothing to validate: specification has no domain clause"
        return (
            f"checked {self.checked} states: {len(self.violations)} violations, "
            f"{len(self.inconclusive)} inconclusive"
        )


def witness_search(spec: SpecFile, values: np.ndarray, witness_bounds=None):
    """For each row of initial values, find the least witness (in final-grid
    order) satisfying the predicate, searching the mentioned primed variables
    over ``witness_bounds`` (default: their space ranges).

    Returns ``(found_mask, witness_rows, complete)`` where ``witness_rows``
    holds final values for the mentioned primed variables, and ``complete``
    says whether the bounds covered every value the space allows.
    """
    space = spec.require_space()
    expr = spec.predicate
    witness_bounds = dict(witness_bounds or {})
    vb = {}
    complete = True
    for name in expr.primed:
        v = space.var(name)
        lo, hi = witness_bounds.get(name, (v.lo, v.hi))
        lo, hi = max(lo, v.lo), min(hi, v.hi)
        if lo > v.lo or hi < v.hi:
            complete = False
        vb[name] = (lo, hi)
    vgrid = _Grid(expr.primed, vb)
    ugrid_names = expr.unprimed
    ub = {v.name: (v.lo, v.hi) for v in space.variables}
    ugrid = _Grid(ugrid_names, ub)
    cols = {n: values[:, space.position(n)] for n in ugrid_names}
    uidx = ugrid.index_of(cols) if ugrid_names else np.zeros(values.shape[0], dtype=np.int64)
    uniq, inverse = np.unique(uidx, return_inverse=True)
    ranges = _ranges_for(space, vb)
    table = _predicate_grid(expr, ugrid, vgrid, ranges, urows=uniq)
    found_u = table.any(axis=1)
    first_u = np.where(found_u, table.argmax(axis=1), -1)
    found = found_u[inverse]
    first = first_u[inverse]
    wcols = vgrid.columns(np.maximum(first, 0))
    witnesses = np.stack([wcols[n] for n in vgrid.names], axis=1) if vgrid.names else \
        np.zeros((values.shape[0], 0), dtype=np.int64)
    return found, witnesses, complete


def validate_domain_clause(spec: SpecFile, region, witness_bounds=None) -> DomainReport:
    """Check the ``domain:`` clause against bounded witness search on ``region``.

    ``region`` is a :class:`StateSet` or anything with a ``values()`` method
    returning an ``(M, k)`` array.  A state the clause admits but for which
    no witness is found counts as inconclusive when the witness bounds are
    narrower than the space; otherwise it is a violation.
    """
    report = DomainReport()
    if spec.domain is None:
        report.nothing_to_validate = True
        return report
    space = spec.require_space()
    values = _region_values(space, region)
    report.checked = values.shape[0]
    if not report.checked:
        return report
    clause = holds_initial_many(spec.domain, space, values)
    found, witnesses, complete = witness_search(spec, values, witness_bounds)
    report.complete_search = complete
    primed = spec.predicate.primed
    for i in np.flatnonzero(clause != found):
        s = space.state(tuple(int(x) for x in values[i]))
        if found[i]:
            report.violations.append((s, False, dict(zip(primed, map(int, witnesses[i])))))
        elif complete:
            report.violations.append((s, True, None))
        else:
            report.inconclusive.append(s)
    return report


def _region_values(space, region) -> np.ndarray:
    if isinstance(region, StateSet):
        return space.values_of(region.indices)
    if hasattr(region, "values_array"):
        return region.values_array()
    return np.asarray(region, dtype=np.int64).reshape(-1, len(space.variables))
