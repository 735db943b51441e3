"""Integer/boolean expressions shared by specifications and programs.

Three evaluators live here and must agree:

* :func:`evaluate` works on one environment with unbounded Python ints;
* :func:`vevaluate` works on numpy arrays (one entry per state or pair);
* :func:`bounds` does interval arithmetic so callers can tell whether int64
  arithmetic is safe for a given set of variable ranges.

Undefinedness (division or modulus by zero, ``ceil_sqrt`` of a negative) is
tracked explicitly.  ``strict=True`` propagates it to the whole expression,
which is what programs need; ``strict=False`` makes the enclosing atomic
predicate false instead, which is what specifications need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ParseError, ScopeError

# -- tokens -------------------------------------------------------------------

KEYWORDS = {
    "true", "false", "abort", "skip", "if", "else", "while", "program", "over",
    "space", "spec", "domain", "var", "nat", "int",
}
BUILTINS = {"ceil_sqrt": "int", "perfect_square": "bool"}
_SYMBOLS = [
    "..", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "+", "-", "*", "/", "%",
    "!", "(", ")", "{", "}", ";", ",", ":", "=",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'sym', 'kw', 'eof'
    text: str
    line: int
    col: int
    primed: bool = False

    @property
    def value(self):
        return int(self.text) if self.kind == "int" else self.text


def tokenize(text: str, source: str | None = None) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#" or text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            primed = j < n and text[j] == "'"
            kind = "kw" if word in KEYWORDS and not primed else "ident"
            toks.append(Token(kind, word, line, col, primed))
            end = j + (1 if primed else 0)
            col += end - i
            i = end
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col, source)
    toks.append(Token("eof", "", line, col))
    return toks


# -- AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    primed: bool = False
    pos: tuple = field(default=None, compare=False, repr=False)

    @property
    def key(self):
        return self.name + "'" if self.primed else self.name


@dataclass(frozen=True)
class Neg:
    operand: "IntExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / %
    left: "IntExpr"
    right: "IntExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "IntExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolConst:
    value: bool
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Compare:
    op: str  # == != < <= > >=
    left: "IntExpr"
    right: "IntExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"
    pos: tuple = field(default=None, compare=False, repr=False)


IntExpr = Union[Num, Var, Neg, BinOp, Call]
BoolExpr = Union[BoolConst, Compare, And, Or, Not, Call]
INT_NODES = (Num, Var, Neg, BinOp)
ATOMS = (Compare, BoolConst)


def is_bool(node) -> bool:
    if isinstance(node, Call):
        return BUILTINS[node.func] == "bool"
    return isinstance(node, (BoolConst, Compare, And, Or, Not))


def variables(node) -> set:
    """All ``Var`` nodes mentioned, as (name, primed) pairs."""
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add((n.name, n.primed))
        elif isinstance(n, (Neg, Not)):
            stack.append(n.operand)
        elif isinstance(n, Call):
            stack.append(n.arg)
        elif isinstance(n, (BinOp, Compare, And, Or)):
            stack.extend((n.left, n.right))
    return out


def check_scope(node, names, allow_primed: bool, source=None):
    for n in _walk(node):
        if isinstance(n, Var):
            line, col = n.pos or (None, None)
            if n.primed and not allow_primed:
                raise ScopeError(f"primed variable {n.key} not allowed here", line, col, source)
            if n.name not in names:
                raise ScopeError(f"unknown variable {n.key!r}", line, col, source)


def _walk(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, (Neg, Not)):
            stack.append(n.operand)
        elif isinstance(n, Call):
            stack.append(n.arg)
        elif isinstance(n, (BinOp, Compare, And, Or)):
            stack.extend((n.right, n.left))


# -- parser -------------------------------------------------------------------


class TokenStream:
    def __init__(self, tokens, source=None):
        self.toks = tokens
        self.i = 0
        self.source = source

    @property
    def peek(self) -> Token:
        return self.toks[self.i]

    def peek_at(self, k) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text, kind=None) -> bool:
        t = self.peek
        return t.text == text and t.kind in ((kind,) if kind else ("sym", "kw"))

    def accept(self, text, kind=None):
        if self.at(text, kind):
            return self.next()
        return None

    def expect(self, text, kind=None) -> Token:
        if not self.at(text, kind):
            self.error(f"expected {text!r}")
        return self.next()

    def expect_ident(self, what="identifier") -> Token:
        t = self.peek
        if t.kind != "ident" or t.primed:
            self.error(f"expected {what}")
        return self.next()

    def error(self, message, tok=None):
        t = tok or self.peek
        found = "end of input" if t.kind == "eof" else repr(t.text + ("'" if t.primed else ""))
        raise ParseError(f"{message}, found {found}", t.line, t.col, self.source)

    def signed_int(self) -> int:
        neg = self.accept("-")
        t = self.peek
        if t.kind != "int":
            self.error("expected integer")
        self.next()
        return -t.value if neg else t.value


_CMP = ("==", "!=", "<=", ">=", "<", ">")


def parse_bool(ts: TokenStream):
    return _parse_or(ts)


def _parse_or(ts):
    left = _parse_and(ts)
    while ts.at("||"):
        t = ts.next()
        left = Or(left, _parse_and(ts), pos=(t.line, t.col))
    return left


def _parse_and(ts):
    left = _parse_not(ts)
    while ts.at("&&"):
        t = ts.next()
        left = And(left, _parse_not(ts), pos=(t.line, t.col))
    return left


def _parse_not(ts):
    if ts.at("!"):
        t = ts.next()
        return Not(_parse_not(ts), pos=(t.line, t.col))
    return _parse_atom(ts)


def _parse_atom(ts):
    t = ts.peek
    if t.kind == "kw" and t.text in ("true", "false"):
        ts.next()
        return BoolConst(t.text == "true", pos=(t.line, t.col))
    if t.kind == "ident" and not t.primed and BUILTINS.get(t.text) == "bool":
        return _parse_call(ts)
    if t.text == "(" and _paren_is_bool(ts):
        ts.next()
        inner = parse_bool(ts)
        ts.expect(")")
        return inner
    left = parse_int(ts)
    op = ts.peek
    if op.kind == "sym" and op.text in _CMP:
        ts.next()
        right = parse_int(ts)
        return Compare(op.text, left, right, pos=(op.line, op.col))
    ts.error("expected comparison operator")


def _paren_is_bool(ts) -> bool:
    """Decide whether the '(' at the cursor opens a boolean group.

    Integer expressions never contain boolean operators, so any comparison,
    connective or boolean literal inside the group makes it boolean.
    """
    depth = 0
    k = 0
    while True:
        t = ts.peek_at(k)
        if t.kind == "eof":
            return False
        if t.text == "(" and t.kind == "sym":
            depth += 1
        elif t.text == ")" and t.kind == "sym":
            depth -= 1
            if depth == 0:
                break
        elif depth >= 1 and (
            (t.kind == "sym" and t.text in _CMP + ("&&", "||", "!"))
            or (t.kind == "kw" and t.text in ("true", "false"))
            or (t.kind == "ident" and BUILTINS.get(t.text) == "bool")
        ):
            return True
        k += 1
    return False


def parse_int(ts: TokenStream):
    left = _parse_term(ts)
    while ts.peek.kind == "sym" and ts.peek.text in ("+", "-"):
        t = ts.next()
        left = BinOp(t.text, left, _parse_term(ts), pos=(t.line, t.col))
    return left


def _parse_term(ts):
    left = _parse_unary(ts)
    while ts.peek.kind == "sym" and ts.peek.text in ("*", "/", "%"):
        t = ts.next()
        left = BinOp(t.text, left, _parse_unary(ts), pos=(t.line, t.col))
    return left


def _parse_unary(ts):
    if ts.at("-"):
        t = ts.next()
        return Neg(_parse_unary(ts), pos=(t.line, t.col))
    return _parse_primary(ts)


def _parse_primary(ts):
    t = ts.peek
    if t.kind == "int":
        ts.next()
        return Num(t.value, pos=(t.line, t.col))
    if t.kind == "ident":
        if not t.primed and t.text in BUILTINS:
            if BUILTINS[t.text] != "int":
                ts.error("boolean built-in used where an integer is expected")
            return _parse_call(ts)
        ts.next()
        return Var(t.text, t.primed, pos=(t.line, t.col))
    if ts.accept("("):
        inner = parse_int(ts)
        ts.expect(")")
        return inner
    ts.error("expected integer expression")


def _parse_call(ts):
    t = ts.next()
    ts.expect("(")
    arg = parse_int(ts)
    ts.expect(")")
    return Call(t.text, arg, pos=(t.line, t.col))


def parse_expression(text: str, source=None, kind: str = "bool"):
    ts = TokenStream(tokenize(text, source), source)
    node = parse_bool(ts) if kind == "bool" else parse_int(ts)
    ts.accept(";")
    if ts.peek.kind != "eof":
        ts.error("unexpected trailing input")
    return node


# -- printing -----------------------------------------------------------------

_INT_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2}


def pretty(node) -> str:
    """Canonical text; ``parse_expression(pretty(e)) == e`` for every AST."""
    if isinstance(node, Num):
        return str(node.value) if node.value >= 0 else f"({node.value})"
    if isinstance(node, Var):
        return node.key
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        if isinstance(node.operand, BinOp):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        p = _INT_PREC[node.op]
        left = pretty(node.left)
        if isinstance(node.left, BinOp) and _INT_PREC[node.left.op] < p:
            left = f"({left})"
        right = pretty(node.right)
        if isinstance(node.right, BinOp) and _INT_PREC[node.right.op] <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, Compare):
        return f"{pretty(node.left)} {node.op} {pretty(node.right)}"
    if isinstance(node, Not):
        inner = pretty(node.operand)
        if isinstance(node.operand, (And, Or, Compare)):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(node, And):
        left = pretty(node.left)
        if isinstance(node.left, Or):
            left = f"({left})"
        right = pretty(node.right)
        if isinstance(node.right, (And, Or)):
            right = f"({right})"
        return f"{left} && {right}"
    if isinstance(node, Or):
        right = pretty(node.right)
        if isinstance(node.right, Or):
            right = f"({right})"
        return f"{pretty(node.left)} || {right}"
    raise TypeError(f"not an expression node: {node!r}")


# -- arithmetic helpers ---------------------------------------------------------


def ediv(a: int, b: int) -> int:
    """Euclidean quotient: the remainder ``a - b*q`` is always in ``[0, |b|)``."""
    return a // b if b > 0 else -(a // -b)


def emod(a: int, b: int) -> int:
    return a - b * ediv(a, b)


def ceil_sqrt(v: int) -> int:
    r = math.isqrt(v)
    return r if r * r == v else r + 1


def is_perfect_square(v: int) -> bool:
    return v >= 0 and math.isqrt(v) ** 2 == v


# -- scalar evaluation --------------------------------------------------------


class Undefined(Exception):
    """Raised internally when an integer subexpression has no value."""


def eval_int(node, env) -> int:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.key]
    if isinstance(node, Neg):
        return -eval_int(node.operand, env)
    if isinstance(node, BinOp):
        a = eval_int(node.left, env)
        b = eval_int(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            raise Undefined(node)
        return ediv(a, b) if op == "/" else emod(a, b)
    if isinstance(node, Call) and node.func == "ceil_sqrt":
        v = eval_int(node.arg, env)
        if v < 0:
            raise Undefined(node)
        return ceil_sqrt(v)
    raise TypeError(f"not an integer expression: {node!r}")


def eval_bool(node, env, strict: bool = True) -> bool:
    """Truth value; raises :class:`Undefined` only when ``strict``.

    Boolean connectives short-circuit left to right.
    """
    if isinstance(node, BoolConst):
        return node.value
    if isinstance(node, Not):
        return not eval_bool(node.operand, env, strict)
    if isinstance(node, And):
        return eval_bool(node.left, env, strict) and eval_bool(node.right, env, strict)
    if isinstance(node, Or):
        return eval_bool(node.left, env, strict) or eval_bool(node.right, env, strict)
    try:
        if isinstance(node, Compare):
            a = eval_int(node.left, env)
            b = eval_int(node.right, env)
            return _CMP_FUN[node.op](a, b)
        if isinstance(node, Call) and node.func == "perfect_square":
            return is_perfect_square(eval_int(node.arg, env))
    except Undefined:
        if strict:
            raise
        return False
    raise TypeError(f"not a boolean expression: {node!r}")


_CMP_FUN = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def evaluate(node, env, strict: bool = True):
    """Value of ``node`` or ``None`` if undefined."""
    try:
        if is_bool(node):
            return eval_bool(node, env, strict)
        return eval_int(node, env)
    except Undefined:
        return None


# -- interval bounds ------------------------------------------------------------

INT64_SAFE = 1 << 62


def bounds(node, ranges) -> tuple:
    """Interval enclosing every value an integer expression (or any of its
    subexpressions) can take, given ``ranges[key] = (lo, hi)``.

    Returns ``(lo, hi, peak)`` where ``peak`` bounds the magnitude of every
    intermediate value.
    """
    if isinstance(node, Num):
        return node.value, node.value, abs(node.value)
    if isinstance(node, Var):
        lo, hi = ranges[node.key]
        return lo, hi, max(abs(lo), abs(hi))
    if isinstance(node, Neg):
        lo, hi, pk = bounds(node.operand, ranges)
        return -hi, -lo, pk
    if isinstance(node, Call):
        lo, hi, pk = bounds(node.arg, ranges)
        top = ceil_sqrt(max(hi, 0))
        return 0, top, max(pk, top)
    if isinstance(node, BinOp):
        al, ah, ap = bounds(node.left, ranges)
        bl, bh, bp = bounds(node.right, ranges)
        if node.op == "+":
            lo, hi = al + bl, ah + bh
        elif node.op == "-":
            lo, hi = al - bh, ah - bl
        elif node.op == "*":
            cands = (al * bl, al * bh, ah * bl, ah * bh)
            lo, hi = min(cands), max(cands)
        elif node.op == "/":
            m = max(abs(al), abs(ah))
            lo, hi = -m, m
        else:
            m = max(abs(bl), abs(bh))
            lo, hi = 0, max(m - 1, 0)
        return lo, hi, max(ap, bp, abs(lo), abs(hi))
    if isinstance(node, (Compare, And, Or)):
        _, _, lp = bounds(node.left, ranges)
        _, _, rp = bounds(node.right, ranges)
        return 0, 1, max(lp, rp)
    if isinstance(node, Not):
        return bounds(node.operand, ranges)
    if isinstance(node, BoolConst):
        return 0, 1, 1
    raise TypeError(f"not an expression node: {node!r}")


def int64_safe(node, ranges) -> bool:
    return bounds(node, ranges)[2] < INT64_SAFE


# -- vectorized evaluation ------------------------------------------------------


def _vceil_sqrt(v: np.ndarray) -> np.ndarray:
    """Exact ceil(sqrt(v)) for non-negative int64 entries, by integer bisection."""
    if v.dtype == object:
        return np.frompyfunc(lambda x: ceil_sqrt(int(x)), 1, 1)(v)
    v = np.maximum(v, 0)
    lo = np.zeros_like(v)  # lo*lo < v  or lo == 0
    hi = np.minimum(v, np.int64(3037000499))  # hi*hi >= v
    while True:
        active = hi - lo > 1
        if not active.any():
            break
        mid = (lo + hi) // 2
        big = mid * mid >= v
        hi = np.where(active & big, mid, hi)
        lo = np.where(active & ~big, mid, lo)
    # v == 0 -> 0, v == 1 -> 1
    return np.where(v <= 1, v, hi)


def _vsquare(v):
    if v.dtype == object:
        return np.frompyfunc(lambda x: is_perfect_square(int(x)), 1, 1)(v).astype(bool)
    r = _vceil_sqrt(v)
    return (v >= 0) & (r * r == v)


def vevaluate(node, env, strict: bool = True):
    """Vectorized evaluation.

    ``env`` maps variable keys to equally-shaped (or broadcastable) arrays.
    Returns ``(values, defined)``.  For boolean nodes with ``strict=False``
    ``defined`` is all-true and undefined atoms read as false.
    """
    if is_bool(node):
        return _vbool(node, env, strict)
    return _vint(node, env)


def _vint(node, env):
    if isinstance(node, Num):
        return np.asarray(node.value, dtype=np.int64), np.asarray(True)
    if isinstance(node, Var):
        a = env[node.key]
        return a, np.asarray(True)
    if isinstance(node, Neg):
        v, d = _vint(node.operand, env)
        return -v, d
    if isinstance(node, Call):
        v, d = _vint(node.arg, env)
        ok = d & (v >= 0)
        return _vceil_sqrt(np.where(ok, v, 0)), ok
    a, da = _vint(node.left, env)
    b, db = _vint(node.right, env)
    d = da & db
    op = node.op
    if op == "+":
        return a + b, d
    if op == "-":
        return a - b, d
    if op == "*":
        return a * b, d
    nz = b != 0
    safe_b = np.where(nz, b, 1)
    q = np.where(safe_b > 0, a // safe_b, -(a // -safe_b))
    if op == "/":
        return q, d & nz
    return a - safe_b * q, d & nz


def _vbool(node, env, strict):
    if isinstance(node, BoolConst):
        return np.asarray(node.value), np.asarray(True)
    if isinstance(node, Not):
        v, d = _vbool(node.operand, env, strict)
        return ~v & d, d
    if isinstance(node, (And, Or)):
        lv, ld = _vbool(node.left, env, strict)
        rv, rd = _vbool(node.right, env, strict)
        if isinstance(node, And):
            # left false decides without looking right
            value = lv & rv
            defined = ld & (~lv | rd)
        else:
            value = lv | rv
            defined = ld & (lv | rd)
        return value & defined, defined
    if isinstance(node, Compare):
        a, da = _vint(node.left, env)
        b, db = _vint(node.right, env)
        v = np.asarray(_CMP_FUN[node.op](a, b)).astype(bool)
        d = da & db
    else:  # perfect_square
        a, d = _vint(node.arg, env)
        v = _vsquare(np.where(d, a, 0))
    if strict:
        return v & d, d
    return v & d, np.asarray(True)
