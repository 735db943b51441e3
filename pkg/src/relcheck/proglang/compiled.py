"""Batch execution: the interpreter's semantics, compiled once per program.

The program is translated to Python source for a function that runs one
state and returns ``(status, v1, ..., vk)``.  When every intermediate value
provably fits in 64 bits the source is compiled with numba; otherwise (or
without numba) the same source runs as plain Python on unbounded ints.

Status codes: 0 final, 1 aborted, 2 expression undefined, 3 fuel exhausted.
The tree-walking :func:`~relcheck.proglang.interp.interpret` stays the
reference; tests check the two agree.
"""

from __future__ import annotations

import functools
import logging

import numpy as np

from .. import exprs
from ..relcore import StateSpace
from .interp import ABORTED, FUEL, UNDEFINED, Final, NoOutcome
from .syntax import Abort, Assign, Block, If, IfElse, Seq, Skip, While, bind_program

log = logging.getLogger(__name__)

OK, ABORT, UNDEF, NOFUEL = 0, 1, 2, 3
REASONS = {ABORT: ABORTED, UNDEF: UNDEFINED, NOFUEL: FUEL}

try:  # optional accelerator
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


# -- runtime helpers (plain Python; numba compiles them too) ------------------


def _ediv(a, b):
    if b > 0:
        return a // b
    return -(a // -b)


def _emod(a, b):
    return a - b * _ediv(a, b)


def _isqrt(v):
    # integer Newton iteration, exact for every non-negative v
    if v < 2:
        return v
    x = v
    y = (x + 1) // 2
    while y < x:
        x = y
        y = (x + v // x) // 2
    return x


def _ceil_sqrt(v):
    r = _isqrt(v)
    if r * r == v:
        return r
    return r + 1


def _is_square(v):
    if v < 0:
        return False
    r = _isqrt(v)
    return r * r == v


_HELPERS = {"_ediv": _ediv, "_emod": _emod, "_isqrt": _isqrt, "_ceil_sqrt": _ceil_sqrt,
            "_is_square": _is_square}


# -- code generation ----------------------------------------------------------


class _Gen:
    def __init__(self, space: StateSpace, body):
        self.space = space
        self.body = body
        self.lines = []
        self.tmp = 0
        self.ranges = {v.name: (v.lo, v.hi) for v in space.variables}
        self.names = {n: f"v_{n}" for n in space.names}

    def fresh(self):
        self.tmp += 1
        return f"t{self.tmp}"

    def emit(self, ind, text):
        self.lines.append("    " * ind + text)

    def fail(self, ind, status):
        outs = ", ".join("0" for _ in self.space.names)
        self.emit(ind, f"return ({status}, {outs})")

    # integer expressions: emit checks, return a Python expression string
    def int_expr(self, node, ind):
        if isinstance(node, exprs.Num):
            return f"({node.value})"
        if isinstance(node, exprs.Var):
            return self.names[node.name]
        if isinstance(node, exprs.Neg):
            return f"(-{self.int_expr(node.operand, ind)})"
        if isinstance(node, exprs.Call):
            a = self.int_expr(node.arg, ind)
            t = self.fresh()
            self.emit(ind, f"{t} = {a}")
            self.emit(ind, f"if {t} < 0:")
            self.fail(ind + 1, UNDEF)
            return f"_ceil_sqrt({t})"
        a = self.int_expr(node.left, ind)
        b = self.int_expr(node.right, ind)
        if node.op in "+-*":
            return f"({a} {node.op} {b})"
        ta, tb = self.fresh(), self.fresh()
        self.emit(ind, f"{ta} = {a}")
        self.emit(ind, f"{tb} = {b}")
        self.emit(ind, f"if {tb} == 0:")
        self.fail(ind + 1, UNDEF)
        fn = "_ediv" if node.op == "/" else "_emod"
        return f"{fn}({ta}, {tb})"

    # boolean expressions: strict, short-circuit; returns a variable name
    def bool_expr(self, node, ind):
        t = self.fresh()
        if isinstance(node, exprs.BoolConst):
            self.emit(ind, f"{t} = {node.value}")
        elif isinstance(node, exprs.Not):
            inner = self.bool_expr(node.operand, ind)
            self.emit(ind, f"{t} = not {inner}")
        elif isinstance(node, exprs.And):
            left = self.bool_expr(node.left, ind)
            self.emit(ind, f"{t} = False")
            self.emit(ind, f"if {left}:")
            right = self.bool_expr(node.right, ind + 1)
            self.emit(ind + 1, f"{t} = {right}")
        elif isinstance(node, exprs.Or):
            left = self.bool_expr(node.left, ind)
            self.emit(ind, f"{t} = True")
            self.emit(ind, f"if not {left}:")
            right = self.bool_expr(node.right, ind + 1)
            self.emit(ind + 1, f"{t} = {right}")
        elif isinstance(node, exprs.Compare):
            a = self.int_expr(node.left, ind)
            b = self.int_expr(node.right, ind)
            self.emit(ind, f"{t} = {a} {node.op} {b}")
        elif isinstance(node, exprs.Call):
            a = self.int_expr(node.arg, ind)
            self.emit(ind, f"{t} = _is_square({a})")
        else:
            raise TypeError(f"not a boolean expression: {node!r}")
        return t

    def stmt(self, node, ind):
        if isinstance(node, Skip):
            self.emit(ind, "pass")
        elif isinstance(node, Abort):
            self.fail(ind, ABORT)
        elif isinstance(node, Assign):
            val = self.int_expr(node.expr, ind)
            t = self.fresh()
            lo, hi = self.ranges[node.var]
            self.emit(ind, f"{t} = {val}")
            self.emit(ind, f"if {t} < {lo} or {t} > {hi}:")
            self.fail(ind + 1, UNDEF)
            self.emit(ind, f"{self.names[node.var]} = {t}")
        elif isinstance(node, Seq):
            for s in node.stmts:
                self.stmt(s, ind)
        elif isinstance(node, If):
            c = self.bool_expr(node.cond, ind)
            self.emit(ind, f"if {c}:")
            self.stmt(node.body, ind + 1)
        elif isinstance(node, IfElse):
            c = self.bool_expr(node.cond, ind)
            self.emit(ind, f"if {c}:")
            self.stmt(node.then, ind + 1)
            self.emit(ind, "else:")
            self.stmt(node.orelse, ind + 1)
        elif isinstance(node, While):
            self.emit(ind, "while True:")
            c = self.bool_expr(node.cond, ind + 1)
            self.emit(ind + 1, f"if not {c}:")
            self.emit(ind + 2, "break")
            self.emit(ind + 1, "if fuel <= 0:")
            self.fail(ind + 2, NOFUEL)
            self.emit(ind + 1, "fuel -= 1")
            self.stmt(node.body, ind + 1)
        elif isinstance(node, Block):
            for v in node.decls:
                self.names[v.name] = f"l_{v.name}"
                self.ranges[v.name] = (v.lo, v.hi)
                self.emit(ind, f"l_{v.name} = {v.lo}")
            self.stmt(node.body, ind)
        else:
            raise TypeError(f"not a statement: {node!r}")

    def source(self):
        args = ", ".join(self.names[n] for n in self.space.names)
        self.emit(0, f"def run_one({args}, fuel):")
        self.stmt(self.body, 1)
        outs = ", ".join(f"{self.names[n]}" for n in self.space.names)
        self.emit(1, f"return (0, {outs})")
        return "\n".join(self.lines) + "\n"


def _value_ranges(space, body):
    out = {v.name: (v.lo, v.hi) for v in space.variables}
    stack = [body]
    exprs_ = []
    while stack:
        n = stack.pop()
        if isinstance(n, Block):
            out.update({v.name: (v.lo, v.hi) for v in n.decls})
            stack.append(n.body)
        elif isinstance(n, Seq):
            stack.extend(n.stmts)
        elif isinstance(n, If):
            exprs_.append(n.cond)
            stack.append(n.body)
        elif isinstance(n, IfElse):
            exprs_.append(n.cond)
            stack.extend((n.then, n.orelse))
        elif isinstance(n, While):
            exprs_.append(n.cond)
            stack.append(n.body)
        elif isinstance(n, Assign):
            exprs_.append(n.expr)
    return out, exprs_


def int64_safe_program(space, body) -> bool:
    ranges, es = _value_ranges(space, body)
    if any(max(abs(lo), abs(hi)) >= exprs.INT64_SAFE for lo, hi in ranges.values()):
        return False
    return all(exprs.int64_safe(e, ranges) for e in es)


class BatchRunner:
    """Run one bound program over many initial states."""

    def __init__(self, prog, space: StateSpace, use_numba: bool | None = None):
        bound = bind_program(prog, space)
        self.space = space
        self.source = _Gen(space, bound.body).source()
        safe = int64_safe_program(space, bound.body)
        if use_numba is None:
            use_numba = numba is not None and safe
        if use_numba and (numba is None or not safe):
            raise ValueError("numba execution needs numba and 64-bit-safe arithmetic")
        self.compiled = use_numba
        self._one = self._build(use_numba)
        self._kernel = _make_kernel(self._one, len(space.names), use_numba)

    def _build(self, use_numba):
        ns = {}
        if use_numba:
            jit = functools.partial(numba.njit, cache=False)
            for name, fn in _HELPERS.items():
                ns[name] = _jitted_helpers()[name]
            exec(compile(self.source, "<relcheck-program>", "exec"), ns)
            return jit(ns["run_one"])
        ns.update(_HELPERS)
        exec(compile(self.source, "<relcheck-program>", "exec"), ns)
        return ns["run_one"]

    def run(self, values: np.ndarray, fuel: int):
        """Run each row of ``values`` (shape ``(M, k)``).

        Returns ``(status, finals)``: an int8 status per row and the final
        values (meaningful where status is 0).
        """
        values = np.ascontiguousarray(values, dtype=np.int64).reshape(-1, len(self.space.names))
        status = np.zeros(values.shape[0], dtype=np.int8)
        finals = np.zeros_like(values)
        if values.shape[0]:
            self._kernel(values, int(fuel), finals, status)
        return status, finals

    def outcome(self, values, fuel: int):
        status, finals = self.run(np.asarray([values]), fuel)
        if status[0] == OK:
            return Final(self.space.state(tuple(int(x) for x in finals[0])))
        return NoOutcome(REASONS[int(status[0])])


@functools.lru_cache(maxsize=1)
def _jitted_helpers():
    jit = numba.njit
    out = {}
    ediv = out["_ediv"] = jit(_ediv)

    @jit
    def emod(a, b):
        return a - b * ediv(a, b)

    isqrt = jit(_isqrt)

    @jit
    def ceil_sqrt(v):
        r = isqrt(v)
        if r * r == v:
            return r
        return r + 1

    @jit
    def is_square(v):
        if v < 0:
            return False
        r = isqrt(v)
        return r * r == v

    out.update(_emod=emod, _isqrt=isqrt, _ceil_sqrt=ceil_sqrt, _is_square=is_square)
    return out


def _make_kernel(one, k, use_numba):
    ns = {"one": one}
    # plain Python must see unbounded ints, not numpy scalars
    conv = "{}" if use_numba else "int({})"
    args = ", ".join(conv.format(f"values[i, {j}]") for j in range(k))
    outs = "\n".join(f"        finals[i, {j}] = res[{j + 1}]" for j in range(k))
    src = (
        "def kernel(values, fuel, finals, status):\n"
        "    for i in range(values.shape[0]):\n"
        f"        res = one({args}, fuel)\n"
        "        status[i] = res[0]\n"
        f"{outs}\n"
    )
    exec(compile(src, "<relcheck-kernel>", "exec"), ns)
    kernel = ns["kernel"]
    if use_numba:
        return numba.njit(kernel)
    return kernel


_CACHE: dict = {}


def batch_runner(prog, space: StateSpace, use_numba: bool | None = None) -> BatchRunner:
    """Cached :class:`BatchRunner` keyed by program text and space."""
    bound = bind_program(prog, space)
    key = (repr(bound.body), space, use_numba)
    runner = _CACHE.get(key)
    if runner is None:
        runner = BatchRunner(bound, space, use_numba)
        if len(_CACHE) > 64:
            _CACHE.clear()
        _CACHE[key] = runner
    return runner
