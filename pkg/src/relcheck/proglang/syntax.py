"""Abstract syntax, parser and printer for the C-like program language.

A program file looks like::

    program p1 over fermat {
      nat n, x, y;                 // the space's own variables, optional
      {nat r : 0..10302;           // work variable
       x=0; y=0; r=0; while (r<n) {r=r+2*x+1; x=x+1;}}
    }

The header is optional; bare statements such as ``x=x+y; y=0;`` parse too.
Locals are declared at the top of a ``{ }`` block and need a range unless the
caller supplies ``default_range``.  Declarations at the very top of the
program body that merely restate space variables are accepted and dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import exprs
from ..errors import ParseError, ScopeError
from ..exprs import TokenStream, tokenize
from ..relcore import StateSpace, Variable
from ..speclang import parse_decl_items

_POS = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Abort:
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Skip:
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Assign:
    var: str
    expr: object
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Seq:
    stmts: tuple
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class If:
    cond: object
    body: object
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class IfElse:
    cond: object
    then: object
    orelse: object
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class While:
    cond: object
    body: object
    pos: tuple = field(**_POS)


@dataclass(frozen=True)
class Block:
    decls: tuple  # of relcore.Variable
    body: object
    pos: tuple = field(**_POS)


STATEMENTS = (Abort, Skip, Assign, Seq, If, IfElse, While, Block)


@dataclass(frozen=True)
class Program:
    body: object
    name: str | None = None
    space_name: str | None = None
    source: str | None = field(default=None, compare=False)

    def pretty(self) -> str:
        return pretty_program(self)

    def __str__(self):
        return self.pretty()


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, text, source, default_range):
        self.ts = TokenStream(tokenize(text, source), source)
        self.source = source
        self.default_range = default_range

    def program(self) -> Program:
        ts = self.ts
        name = space_name = None
        if ts.at("program", "kw"):
            ts.next()
            name = ts.expect_ident("program name").text
            if ts.accept("over", "kw"):
                space_name = ts.expect_ident("space name").text
            ts.expect("{")
            body = self.body("}", top=True)
            ts.expect("}")
        else:
            body = self.body("eof", top=True)
        if ts.peek.kind != "eof":
            ts.error("unexpected input after program")
        return Program(body, name, space_name, self.source)

    def _at_end(self, closer):
        t = self.ts.peek
        return t.kind == "eof" if closer == "eof" else (t.kind == "sym" and t.text == closer)

    def body(self, closer, top=False):
        """Declarations then statements, up to (not including) ``closer``."""
        start = self.ts.peek
        pos = (start.line, start.col)
        items = parse_decl_items(self.ts, ("}",))
        if top and not items and self._single_group(closer):
            # a listing may wrap everything in one more pair of braces
            self.ts.expect("{")
            inner = self.body("}", top=True)
            self.ts.expect("}")
            return inner
        stmt = self.statements(closer)
        if not items:
            return stmt
        if top:
            # leading declarations at the top level restate the space
            return _Echo(tuple(t.text for t, _, _ in items), tuple(items), stmt,
                         self.default_range, pos=pos)
        decls = []
        seen = set()
        for tok, _, rng in items:
            if rng is None:
                if self.default_range is None:
                    raise ParseError(f"range required for local {tok.text!r} (e.g. ': 0..24')",
                                     tok.line, tok.col, self.source)
                rng = tuple(self.default_range)
            if tok.text in seen:
                raise ScopeError(f"duplicate local {tok.text!r}", tok.line, tok.col, self.source)
            seen.add(tok.text)
            decls.append(Variable(tok.text, *rng))
        return Block(tuple(decls), stmt, pos=pos)

    def _single_group(self, closer) -> bool:
        """Is the rest of the body one ``{ ... }`` group?"""
        if not self.ts.at("{"):
            return False
        depth = 0
        k = 0
        while True:
            t = self.ts.peek_at(k)
            if t.kind == "eof":
                return False
            if t.kind == "sym" and t.text == "{":
                depth += 1
            elif t.kind == "sym" and t.text == "}":
                depth -= 1
                if depth == 0:
                    break
            k += 1
        after = self.ts.peek_at(k + 1)
        if closer == "eof":
            return after.kind == "eof"
        return after.kind == "sym" and after.text == closer

    def statements(self, closer):
        out = []
        while not self._at_end(closer):
            if self.ts.accept(";"):
                continue
            out.append(self.statement(closer))
        if len(out) == 1:
            return out[0]
        t = self.ts.peek
        return Seq(tuple(out), pos=(t.line, t.col))

    def _end_simple(self, closer):
        if not self.ts.accept(";") and not self._at_end(closer):
            self.ts.error("expected ';'")

    def statement(self, closer):
        ts = self.ts
        t = ts.peek
        pos = (t.line, t.col)
        if ts.accept("abort", "kw"):
            self._end_simple(closer)
            return Abort(pos=pos)
        if ts.accept("skip", "kw"):
            self._end_simple(closer)
            return Skip(pos=pos)
        if ts.accept("if", "kw"):
            cond = self.condition()
            then = self.branch()
            if ts.accept("else", "kw"):
                return IfElse(cond, then, self.branch(), pos=pos)
            return If(cond, then, pos=pos)
        if ts.accept("while", "kw"):
            cond = self.condition()
            return While(cond, self.branch(), pos=pos)
        if ts.at("{"):
            return self.braced()
        if t.kind == "ident" and not t.primed:
            ts.next()
            ts.expect("=")
            rhs = exprs.parse_int(ts)
            self._end_simple(closer)
            return Assign(t.text, rhs, pos=pos)
        if t.kind == "kw" and t.text in ("nat", "int", "var"):
            ts.error("declarations must come first in a block")
        ts.error("expected statement")

    def condition(self):
        self.ts.expect("(")
        cond = exprs.parse_bool(self.ts)
        self.ts.expect(")")
        return cond

    def branch(self):
        if self.ts.at("{"):
            return self.braced()
        return self.statement("}")

    def braced(self):
        self.ts.expect("{")
        if self.ts.at("}"):
            t = self.ts.next()
            return Skip(pos=(t.line, t.col))
        inner = self.body("}")
        self.ts.expect("}")
        return inner


@dataclass(frozen=True)
class _Echo:
    """Top-level declarations restating space variables (checked at bind time)."""

    names: tuple
    items: tuple = field(compare=False)
    body: object = None
    default_range: tuple | None = field(default=None, compare=False)
    pos: tuple = field(**_POS)


def parse_program(text: str, source: str | None = None, default_range=None) -> Program:
    """Parse program text; scope is checked later by :func:`bind_program`."""
    prog = _Parser(text, source, default_range).program()
    return prog


def _strip_echo(prog: Program, space: StateSpace):
    """Resolve top-level declarations: restated space variables are dropped,
    fresh names make the body an ordinary block."""
    body = prog.body
    if not isinstance(body, _Echo):
        return body
    fresh = [item for item in body.items if item[0].text not in space]
    if fresh and len(fresh) != len(body.items):
        tok = fresh[0][0]
        raise ScopeError(
            f"{tok.text!r} is not a variable of space {space.name}; declare locals in an "
            f"inner block", tok.line, tok.col, prog.source)
    if fresh:
        decls = []
        for tok, _, rng in fresh:
            rng = rng or body.default_range
            if rng is None:
                raise ParseError(f"range required for local {tok.text!r} (e.g. ': 0..24')",
                                 tok.line, tok.col, prog.source)
            decls.append(Variable(tok.text, *rng))
        return Block(tuple(decls), body.body, pos=body.pos)
    for tok, _, rng in body.items:
        v = space.var(tok.text)
        if rng is not None and rng != (v.lo, v.hi):
            raise ScopeError(
                f"range {rng[0]}..{rng[1]} for {tok.text!r} disagrees with space "
                f"{space.name} ({v.lo}..{v.hi})", tok.line, tok.col, prog.source)
    return body.body


@dataclass(frozen=True)
class BoundProgram:
    """A program checked against a concrete space."""

    program: Program
    space: StateSpace
    body: object
    warnings: tuple = ()

    @property
    def name(self):
        return self.program.name

    def locals(self) -> list:
        return list(iter_locals(self.body))

    def loop_count(self) -> int:
        return sum(1 for n in walk(self.body) if isinstance(n, While))


def bind_program(prog, space: StateSpace) -> BoundProgram:
    """Resolve names against ``space``: no unknown names, no shadowing."""
    if isinstance(prog, BoundProgram):
        if prog.space != space:
            return bind_program(prog.program, space)
        return prog
    if not isinstance(prog, Program):
        prog = Program(prog)
    body = _strip_echo(prog, space)
    _check(body, set(space.names), prog.source)
    warnings = tuple(uninitialized_reads(body, prog.source))
    return BoundProgram(prog, space, body, warnings)


def _check(node, scope, source):
    def expr(e):
        exprs.check_scope(e, scope, allow_primed=False, source=source)

    if isinstance(node, (Abort, Skip)):
        return
    if isinstance(node, Assign):
        if node.var not in scope:
            line, col = node.pos or (None, None)
            raise ScopeError(f"assignment to undeclared variable {node.var!r}", line, col, source)
        expr(node.expr)
    elif isinstance(node, Seq):
        for s in node.stmts:
            _check(s, scope, source)
    elif isinstance(node, If):
        expr(node.cond)
        _check(node.body, scope, source)
    elif isinstance(node, IfElse):
        expr(node.cond)
        _check(node.then, scope, source)
        _check(node.orelse, scope, source)
    elif isinstance(node, While):
        expr(node.cond)
        _check(node.body, scope, source)
    elif isinstance(node, Block):
        line, col = node.pos or (None, None)
        for v in node.decls:
            if v.name in scope:
                raise ScopeError(f"local {v.name!r} shadows an enclosing variable", line, col,
                                 source)
        _check(node.body, scope | {v.name for v in node.decls}, source)
    elif isinstance(node, _Echo):
        line, col = node.pos or (None, None)
        raise ScopeError("variable declarations at the top level must precede statements",
                         line, col, source)
    else:
        raise TypeError(f"not a statement: {node!r}")


def walk(node):
    """Every statement node, preorder."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Seq):
            stack.extend(reversed(n.stmts))
        elif isinstance(n, If):
            stack.append(n.body)
        elif isinstance(n, IfElse):
            stack.extend((n.orelse, n.then))
        elif isinstance(n, (While, Block)):
            stack.append(n.body)


def iter_locals(node):
    for n in walk(node):
        if isinstance(n, Block):
            yield from n.decls


# -- static warnings --------------------------------------------------------

_ALL = None  # "every local is assigned" (after abort: unreachable code)


def uninitialized_reads(body, source=None) -> list:
    """Messages for reads of block locals that may not have been assigned.

    Block locals are existentially quantified in the relational semantics, so
    a read before assignment makes the denotation depend on an arbitrary
    initial value while the interpreter picks the range's lower bound.
    """
    out = []
    _flow(body, frozenset(), frozenset(), out, source)
    return out


def _union(a, b):
    if a is _ALL or b is _ALL:
        return _ALL
    return a | b


def _meet(a, b):
    if a is _ALL:
        return b
    if b is _ALL:
        return a
    return a & b


def _reads(e, locals_, assigned, out, source, where):
    if assigned is _ALL:
        return
    for name, _ in sorted(exprs.variables(e)):
        if name in locals_ and name not in assigned:
            line, col = where or (None, None)
            loc = ":".join(str(p) for p in (source, line, col) if p is not None)
            msg = f"local {name!r} may be read before it is assigned"
            out.append(f"{loc}: warning: {msg}" if loc else f"warning: {msg}")


def _flow(node, locals_, assigned, out, source):
    if isinstance(node, Abort):
        return _ALL
    if isinstance(node, Skip):
        return assigned
    if isinstance(node, Assign):
        _reads(node.expr, locals_, assigned, out, source, node.pos)
        return _union(assigned, frozenset([node.var]))
    if isinstance(node, Seq):
        for s in node.stmts:
            assigned = _flow(s, locals_, assigned, out, source)
        return assigned
    if isinstance(node, If):
        _reads(node.cond, locals_, assigned, out, source, node.pos)
        return _meet(_flow(node.body, locals_, assigned, out, source), assigned)
    if isinstance(node, IfElse):
        _reads(node.cond, locals_, assigned, out, source, node.pos)
        a = _flow(node.then, locals_, assigned, out, source)
        b = _flow(node.orelse, locals_, assigned, out, source)
        return _meet(a, b)
    if isinstance(node, While):
        _reads(node.cond, locals_, assigned, out, source, node.pos)
        _flow(node.body, locals_, assigned, out, source)
        return assigned
    if isinstance(node, Block):
        names = frozenset(v.name for v in node.decls)
        inner = assigned if assigned is _ALL else assigned - names
        after = _flow(node.body, locals_ | names, inner, out, source)
        return after if after is _ALL else after - names
    raise TypeError(f"not a statement: {node!r}")


# -- printing -------------------------------------------------------------------


def pretty_statement(node, indent: int = 0) -> str:
    return "\n".join(_lines(node, indent))


def _lines(node, ind):
    pad = "  " * ind
    if isinstance(node, Abort):
        return [pad + "abort;"]
    if isinstance(node, Skip):
        return [pad + "skip;"]
    if isinstance(node, Assign):
        return [f"{pad}{node.var} = {exprs.pretty(node.expr)};"]
    if isinstance(node, Seq):
        out = []
        for s in node.stmts:
            # a nested Seq would flatten on reparse; keep it grouped
            out.extend(_braced(s, ind) if isinstance(s, Seq) else _lines(s, ind))
        return out
    if isinstance(node, If):
        return [f"{pad}if ({exprs.pretty(node.cond)}) {{"] + _inner(node.body, ind) + [pad + "}"]
    if isinstance(node, IfElse):
        return ([f"{pad}if ({exprs.pretty(node.cond)}) {{"] + _inner(node.then, ind)
                + [pad + "} else {"] + _inner(node.orelse, ind) + [pad + "}"])
    if isinstance(node, While):
        return [f"{pad}while ({exprs.pretty(node.cond)}) {{"] + _inner(node.body, ind) + [pad + "}"]
    if isinstance(node, Block):
        return _braced(node, ind)
    raise TypeError(f"not a statement: {node!r}")


def _decl_lines(block, ind):
    pad = "  " * ind
    return [f"{pad}{'nat' if v.lo >= 0 else 'int'} {v.name} : {v.lo}..{v.hi};"
            for v in block.decls]


def _inner(node, ind):
    # a body that is itself a block keeps its own braces
    if isinstance(node, Block):
        return _braced(node, ind + 1)
    return _lines(node, ind + 1)


def _braced(node, ind):
    pad = "  " * ind
    if isinstance(node, Block):
        return [pad + "{"] + _decl_lines(node, ind + 1) + _lines(node.body, ind + 1) + [pad + "}"]
    return [pad + "{"] + _lines(node, ind + 1) + [pad + "}"]


def pretty_program(prog: Program) -> str:
    body = prog.body
    head_lines = []
    if isinstance(body, _Echo):
        for tok, kw, rng in body.items:
            suffix = f" : {rng[0]}..{rng[1]}" if rng else ""
            head_lines.append(f"{kw} {tok.text}{suffix};")
        body = body.body
    if prog.name is None:
        return "\n".join(head_lines + [pretty_statement(body)]) + "\n"
    head = f"program {prog.name}" + (f" over {prog.space_name}" if prog.space_name else "")
    lines = [head + " {"] + ["  " + h for h in head_lines] + _inner(body, 0) + ["}"]
    return "\n".join(lines) + "\n"
