"""Reader for ProbLog source text.

Supported items::

    0.8::edge(a,c).
    path(X,Y) :- edge(X,Z), path(Z,Y).
    lenpath(N,X,Y,A,P) :- X \\== Y, N > 0, edge(X,Z), NN is N-1, lenpath(NN,Z,Y,[Z|A],P).

Lists desugar to ``'.'/2`` cells ending in ``[]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LoadError, ParseError, SourceSpan
from .program import Program
from .terms import NIL, Atom, Compound, Var, deref, is_callable, make_list

__all__ = ["parse_program", "parse_query", "parse_term"]

COMPARISON_OPS = ("\\==", "==", "=<", ">=", "=:=", "=\\=", "\\=", "<", ">", "=", "is")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.|'')*')
  | (?P<end>\.(?=\s|%|\Z))
  | (?P<op>::|:-|\\==|=\\=|=:=|==|=<|>=|\\=|<|>|=|\+|-|\*)
  | (?P<punct>[()\[\],|])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Token:
    kind: str
    text: str
    start: int
    end: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[_Token] = []
        pos = 0
        n = len(text)
        while pos < n:
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", self.span(pos, pos + 1))
            kind = m.lastgroup
            if kind != "ws":
                self.tokens.append(_Token(kind, m.group(), pos, m.end()))
            pos = m.end()
        self.tokens.append(_Token("eof", "", n, n))

    def span(self, start: int, end: int) -> SourceSpan:
        line = self.text.count("\n", 0, start) + 1
        line_start = self.text.rfind("\n", 0, start) + 1
        byte_start = len(self.text[:start].encode("utf-8"))
        byte_end = byte_start + len(self.text[start:end].encode("utf-8"))
        return SourceSpan(byte_start, byte_end, line, start - line_start + 1)


def _unquote(text: str) -> str:
    body = text[1:-1].replace("''", "'")
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


class _Parser:
    def __init__(self, text: str):
        self.lexer = _Lexer(text)
        self.tokens = self.lexer.tokens
        self.pos = 0
        self.varmap: dict[str, Var] = {}

    # -- token helpers
    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", self.lexer.span(tok.start, tok.end))

    def expect(self, kind: str, text: str | None = None) -> _Token:
        if not self.at(kind, text):
            self.error(f"expected {text or kind}")
        return self.advance()

    # -- grammar
    def goal(self):
        left = self.expr()
        tok = self.tok
        if (tok.kind == "op" and tok.text in COMPARISON_OPS) or (tok.kind == "atom" and tok.text == "is"):
            self.advance()
            right = self.expr()
            return Compound(tok.text, (left, right))
        return left

    def body(self) -> list:
        goals = [self.goal()]
        while self.at("punct", ","):
            self.advance()
            goals.append(self.goal())
        return goals

    def expr(self):
        left = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = Compound(op, (left, self.product()))
        return left

    def product(self):
        left = self.unary()
        while self.at("op", "*"):
            self.advance()
            left = Compound("*", (left, self.unary()))
        return left

    def unary(self):
        if self.at("op", "-"):
            minus = self.advance()
            if self.at("int") and self.tok.start == minus.end:
                return -int(self.advance().text)
            return Compound("-", (self.unary(),))
        return self.primary()

    def primary(self):
        tok = self.tok
        kind = tok.kind
        if kind == "int":
            self.advance()
            return int(tok.text)
        if kind == "var":
            self.advance()
            if tok.text == "_":
                return Var("_")
            var = self.varmap.get(tok.text)
            if var is None:
                var = self.varmap[tok.text] = Var(tok.text)
            return var
        if kind in ("atom", "qatom"):
            self.advance()
            name = tok.text if kind == "atom" else _unquote(tok.text)
            if self.at("punct", "(") and self.tok.start == tok.end:
                self.advance()
                args = [self.expr()]
                while self.at("punct", ","):
                    self.advance()
                    args.append(self.expr())
                self.expect("punct", ")")
                return Compound(name, args)
            return Atom(name)
        if kind == "punct" and tok.text == "[":
            self.advance()
            if self.at("punct", "]"):
                self.advance()
                return NIL
            items = [self.expr()]
            while self.at("punct", ","):
                self.advance()
                items.append(self.expr())
            tail = NIL
            if self.at("punct", "|"):
                self.advance()
                tail = self.expr()
            self.expect("punct", "]")
            return make_list(items, tail)
        if kind == "punct" and tok.text == "(":
            self.advance()
            inner = self.goal()
            self.expect("punct", ")")
            return inner
        if kind == "float":
            self.error("floating point numbers are only allowed as probability labels")
        self.error("expected a term")

    def item(self, program: Program):
        self.varmap = {}
        first = self.tok
        label = None
        if first.kind in ("float", "int") and self.tokens[self.pos + 1].text == "::":
            self.advance()
            self.advance()
            label = first
        head_tok = self.tok
        head = self.primary()
        if not is_callable(head):
            self.error("clause head must be an atom or compound term", head_tok)
        if label is not None:
            if self.at("op", ":-"):
                self.error("probability labels cannot be attached to rules")
            self.expect("end")
            try:
                program.add_fact(float(label.text), head)
            except LoadError as exc:
                raise ParseError(str(exc), self.lexer.span(label.start, label.end)) from None
            return
        body = []
        if self.at("op", ":-"):
            self.advance()
            body = self.body()
        self.expect("end")
        try:
            program.add_clause(head, body)
        except LoadError as exc:
            raise ParseError(str(exc), self.lexer.span(head_tok.start, head_tok.end)) from None


def parse_program(text: str, program: Program | None = None) -> Program:
    """Parse ``text`` into a new Program, or append to ``program``."""
    parser = _Parser(text)
    program = Program() if program is None else program
    while not parser.at("eof"):
        parser.item(program)
    return program


def parse_query(text: str):
    """Parse one query goal; a trailing full stop is optional."""
    parser = _Parser(text)
    goal = parser.goal()
    if not is_callable(goal):
        raise ParseError("query must be an atom or compound term", parser.lexer.span(0, len(text)))
    if parser.at("end"):
        parser.advance()
    if not parser.at("eof"):
        parser.error("unexpected input after query")
    return goal


def parse_term(text: str):
    parser = _Parser(text)
    term = parser.expr()
    if not parser.at("eof"):
        parser.error("unexpected input after term")
    return deref(term)
