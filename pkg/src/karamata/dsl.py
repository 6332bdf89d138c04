"""Text form of expressions.

Grammar (whitespace-insensitive)::

    expr := "one" | "const(" num ")" | "logp" | "loglogp" | "expsqrtlog"
          | "pow(" expr "," num ")" | "add(" expr "," expr ")"
          | "mul(" expr "," expr ")" | "div(" expr "," expr ")"
          | "recip(" expr ")" | "truncl(" expr ")" | "truncr(" expr ")"
          | "shift(" expr "," num ")" | "tilde(" expr ")" | "hat(" expr ")"
          | "tildesup(" expr ")" | "hatsup(" expr ")" | "witness(" expr "," num ")"

``to_text`` prints the canonical form, and ``parse(to_text(e)) == e``.
"""

from __future__ import annotations

import re

from . import core
from .errors import ParseError

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),])
    """,
    re.VERBOSE,
)

ATOMS = {
    "one": lambda: core.Const(1.0),
    "logp": core.LogP,
    "loglogp": core.LogLogP,
    "expsqrtlog": core.ExpSqrtLog,
}
# name -> argument kinds
CALLS = {
    "const": ("num",),
    "pow": ("expr", "num"),
    "add": ("expr", "expr"),
    "mul": ("expr", "expr"),
    "div": ("expr", "expr"),
    "recip": ("expr",),
    "truncl": ("expr",),
    "truncr": ("expr",),
    "shift": ("expr", "num"),
    "tilde": ("expr",),
    "hat": ("expr",),
    "tildesup": ("expr",),
    "hatsup": ("expr",),
    "witness": ("expr", "num"),
}
_BUILD = {
    "const": core.Const,
    "pow": core.Pow,
    "add": core.Add,
    "mul": core.Mul,
    "div": core.Div,
    "recip": core.RecipArg,
    "truncl": core.TruncLeft,
    "truncr": core.TruncRight,
    "shift": core.ShiftArg,
    "tilde": core.Tilde,
    "hat": core.Hat,
    "tildesup": core.TildeSup,
    "hatsup": core.HatSup,
    "witness": core.Witness,
}
EXPR_START = tuple(sorted(ATOMS)) + tuple(sorted(CALLS))


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col


def _tokenize(src):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.line, tok.col, expected)

    def expect(self, text):
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            self.fail((repr(text),))
        self.i += 1

    def number(self):
        tok = self.peek()
        if tok.kind != "num":
            self.fail(("number",))
        self.i += 1
        return float(tok.text)

    def expr(self):
        tok = self.peek()
        name = tok.text.lower() if tok.kind == "name" else None
        if name in ATOMS:
            self.i += 1
            return ATOMS[name]()
        if name not in CALLS:
            self.fail(EXPR_START)
        self.i += 1
        self.expect("(")
        args = []
        for j, kind in enumerate(CALLS[name]):
            if j:
                self.expect(",")
            args.append(self.expr() if kind == "expr" else self.number())
        self.expect(")")
        try:
            return _BUILD[name](*args)
        except ValueError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from exc

    def parse(self):
        e = self.expr()
        if self.peek().kind != "eof":
            self.fail(("end of input",))
        return e


def parse(src):
    """Parse DSL text into an expression tree."""
    return _Parser(src).parse()


def _num(x):
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def to_text(e):
    """Canonical DSL rendering of ``e``."""
    match e:
        case core.Const(k=k):
            return "one" if k == 1.0 else f"const({_num(k)})"
        case core.LogP():
            return "logp"
        case core.LogLogP():
            return "loglogp"
        case core.ExpSqrtLog():
            return "expsqrtlog"
        case core.Pow(child=c, r=r):
            return f"pow({to_text(c)},{_num(r)})"
        case core.Add(left=a, right=b):
            return f"add({to_text(a)},{to_text(b)})"
        case core.Mul(left=a, right=b):
            return f"mul({to_text(a)},{to_text(b)})"
        case core.Div(left=a, right=b):
            return f"div({to_text(a)},{to_text(b)})"
        case core.RecipArg(child=c):
            return f"recip({to_text(c)})"
        case core.TruncLeft(child=c):
            return f"truncl({to_text(c)})"
        case core.TruncRight(child=c):
            return f"truncr({to_text(c)})"
        case core.ShiftArg(child=c, t1=t1):
            return f"shift({to_text(c)},{_num(t1)})"
        case core.Tilde(child=c):
            return f"tilde({to_text(c)})"
        case core.Hat(child=c):
            return f"hat({to_text(c)})"
        case core.TildeSup(child=c):
            return f"tildesup({to_text(c)})"
        case core.HatSup(child=c):
            return f"hatsup({to_text(c)})"
        case core.Witness(child=c, eps=eps):
            return f"witness({to_text(c)},{_num(eps)})"
    raise TypeError(f"not an expression node: {e!r}")
