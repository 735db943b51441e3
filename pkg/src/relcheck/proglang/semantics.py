"""Denotational semantics: every program is a relation on its state space.

The rules, by construct:

* ``abort`` is the empty relation and ``skip`` the identity;
* an assignment relates ``s`` to ``s[v := E(s)]`` when ``E`` is defined at
  ``s`` and the value lies in ``v``'s range, and relates ``s`` to nothing
  otherwise;
* a sequence is relational composition;
* ``if (t) {p}`` is ``T & [p]  |  ~T & I`` and ``if/else`` is
  ``T & [p]  |  ~T & [q]``, where ``T`` is the vector of states on which
  ``t`` holds;
* ``while (t) {b}`` is ``(T & [b])*`` with final states restricted to ``~t``;
* a block computes its body on the space extended by its locals, then
  forgets the locals on both sides.

A condition whose evaluation is undefined (division by zero) is in neither
``T`` nor its complement, so such states have no image.
"""

from __future__ import annotations

import math

import numpy as np

from .. import exprs
from ..errors import CapExceededError
from ..relcore import DEFAULT_CAP, Relation, StateSet, StateSpace
from .syntax import Abort, Assign, Block, BoundProgram, If, IfElse, Seq, Skip, While, bind_program


def denote(prog, space: StateSpace, cap: int = DEFAULT_CAP) -> Relation:
    """The relation computed by ``prog`` on ``space``.

    ``cap`` bounds the size of every space the computation touches, including
    spaces extended by block locals.
    """
    bound = bind_program(prog, space)
    space.check_cap(cap, f"program space {space.describe()}")
    return _Denoter(cap).run(bound.body, space)


def extended_size(prog, space: StateSpace) -> int:
    """States of the largest space the program's blocks reach."""
    bound = bind_program(prog, space)
    return space.size * _local_product(bound.body)


def _local_product(node) -> int:
    if isinstance(node, Block):
        return math.prod(v.size for v in node.decls) * _local_product(node.body)
    if isinstance(node, Seq):
        return max((_local_product(s) for s in node.stmts), default=1)
    if isinstance(node, If):
        return _local_product(node.body)
    if isinstance(node, IfElse):
        return max(_local_product(node.then), _local_product(node.orelse))
    if isinstance(node, While):
        return _local_product(node.body)
    return 1


def condition_sets(cond, space: StateSpace):
    """``(T, F)``: states where ``cond`` is defined and true, defined and false."""
    v, d = _eval_on_space(cond, space)
    v = np.broadcast_to(v, (space.size,))
    d = np.broadcast_to(d, (space.size,))
    return StateSet.from_mask(space, v & d), StateSet.from_mask(space, ~v & d)


def _ranges(space):
    return {v.name: (v.lo, v.hi) for v in space.variables}


def _eval_on_space(expr, space):
    arrays = space.value_arrays()
    dtype = np.int64 if exprs.int64_safe(expr, _ranges(space)) else object
    env = {n: arrays[n].astype(dtype) if dtype is object else arrays[n] for n in space.names}
    return exprs.vevaluate(expr, env, strict=True)


class _Denoter:
    def __init__(self, cap):
        self.cap = cap

    def run(self, node, space):
        method = getattr(self, "_" + type(node).__name__)
        return method(node, space)

    def _Abort(self, node, space):
        return Relation.empty(space)

    def _Skip(self, node, space):
        return Relation.identity(space)

    def _Assign(self, node, space):
        v, d = _eval_on_space(node.expr, space)
        n = space.size
        v = np.broadcast_to(v, (n,))
        d = np.broadcast_to(d, (n,))
        target = space.var(node.var)
        ok = d & (v >= target.lo) & (v <= target.hi)
        src = np.flatnonzero(ok).astype(np.int64)
        current = space.value_arrays()[node.var][src]
        new = np.asarray(v[src]).astype(np.int64)
        dst = src + (new - current) * space.strides[space.position(node.var)]
        return Relation.from_keys(space, src * n + dst)

    def _Seq(self, node, space):
        rel = self.run(node.stmts[0], space)
        for s in node.stmts[1:]:
            rel = rel.compose(self.run(s, space))
        return rel

    def _If(self, node, space):
        t, f = condition_sets(node.cond, space)
        return self.run(node.body, space).restrict_domain(t) | Relation.monotype(f)

    def _IfElse(self, node, space):
        t, f = condition_sets(node.cond, space)
        return (self.run(node.then, space).restrict_domain(t)
                | self.run(node.orelse, space).restrict_domain(f))

    def _While(self, node, space):
        t, f = condition_sets(node.cond, space)
        step = self.run(node.body, space).restrict_domain(t)
        return step.rt_closure().restrict_range(f)

    def _Block(self, node, space):
        ext = space.extend(node.decls)
        names = ", ".join(str(v) for v in node.decls)
        if ext.size > self.cap:
            line = f" at line {node.pos[0]}" if node.pos else ""
            raise CapExceededError(
                f"block{line} declaring {names} extends {space.describe()} to {ext.size} "
                f"states, above the exhaustive cap of {self.cap}; raise the cap or use oracle mode",
                size=ext.size,
                cap=self.cap,
            )
        inner = self.run(node.body, ext)
        m = ext.size // space.size
        n_ext = ext.size
        keys = inner.keys()
        i = keys // n_ext
        j = keys % n_ext
        # locals are the trailing, fastest-varying components
        return Relation.from_keys(space, (i // m) * space.size + (j // m))


__all__ = ["denote", "extended_size", "condition_sets", "BoundProgram"]
