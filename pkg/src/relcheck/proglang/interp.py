"""Operational semantics: run a program on one state with a fuel budget."""

from __future__ import annotations

from dataclasses import dataclass

from .. import exprs
from ..relcore import State, StateSpace
from .syntax import Abort, Assign, Block, If, IfElse, Seq, Skip, While, bind_program

ABORTED = "aborted"
UNDEFINED = "expression-undefined"
FUEL = "fuel-exhausted"


@dataclass(frozen=True)
class Final:
    state: State

    def __str__(self):
        return f"final {self.state}"


@dataclass(frozen=True)
class NoOutcome:
    reason: str  # aborted | expression-undefined | fuel-exhausted

    def __str__(self):
        return self.reason


class _Stop(Exception):
    def __init__(self, reason):
        self.reason = reason


class _Machine:
    def __init__(self, ranges, fuel):
        self.ranges = dict(ranges)
        self.fuel = fuel

    def run(self, node, env):
        if isinstance(node, Assign):
            try:
                v = exprs.eval_int(node.expr, env)
            except exprs.Undefined:
                raise _Stop(UNDEFINED) from None
            lo, hi = self.ranges[node.var]
            if not lo <= v <= hi:
                raise _Stop(UNDEFINED)
            env[node.var] = v
        elif isinstance(node, Seq):
            for s in node.stmts:
                self.run(s, env)
        elif isinstance(node, While):
            while self.test(node.cond, env):
                if self.fuel <= 0:
                    raise _Stop(FUEL)
                self.fuel -= 1
                self.run(node.body, env)
        elif isinstance(node, If):
            if self.test(node.cond, env):
                self.run(node.body, env)
        elif isinstance(node, IfElse):
            self.run(node.then if self.test(node.cond, env) else node.orelse, env)
        elif isinstance(node, Block):
            for v in node.decls:
                env[v.name] = v.lo
                self.ranges[v.name] = (v.lo, v.hi)
            try:
                self.run(node.body, env)
            finally:
                for v in node.decls:
                    env.pop(v.name, None)
        elif isinstance(node, Abort):
            raise _Stop(ABORTED)
        elif not isinstance(node, Skip):
            raise TypeError(f"not a statement: {node!r}")

    def test(self, cond, env) -> bool:
        try:
            return exprs.eval_bool(cond, env, strict=True)
        except exprs.Undefined:
            raise _Stop(UNDEFINED) from None


def interpret(prog, s: State, fuel: int = 10_000):
    """Big-step evaluation of ``prog`` from ``s``.

    Every loop iteration consumes one unit of fuel.  Locals start at the low
    end of their range.  Returns :class:`Final` or :class:`NoOutcome`.
    """
    space = s.space
    bound = bind_program(prog, space)
    env = dict(zip(space.names, s.values))
    m = _Machine({v.name: (v.lo, v.hi) for v in space.variables}, fuel)
    try:
        m.run(bound.body, env)
    except _Stop as stop:
        return NoOutcome(stop.reason)
    return Final(State(space, tuple(env[n] for n in space.names)))


def sufficient_fuel(prog, space: StateSpace) -> int:
    """Fuel beyond which exhaustion proves divergence.

    The language is deterministic and structured, so the future of a run is
    fixed by the loop being entered and the values of the variables in scope.
    A terminating run therefore visits each (loop, extended state) pair at
    most once, giving at most ``loops * |extended space|`` iterations.
    """
    from .semantics import extended_size

    bound = bind_program(prog, space)
    return max(bound.loop_count(), 1) * extended_size(bound, space) + 1
