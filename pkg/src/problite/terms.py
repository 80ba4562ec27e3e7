"""Prolog terms: variables, atoms, integers and compounds.

Integers are plain Python ``int`` values.  Atoms are interned, so identity
comparison is equality.  Variables carry a mutable ``ref`` binding that the
resolution engine sets and undoes through a trail.
"""

from __future__ import annotations

import re
import sys
from typing import Iterable, Iterator, Union

__all__ = [
    "Var",
    "Atom",
    "Compound",
    "Term",
    "NIL",
    "CONS",
    "deref",
    "resolve",
    "is_ground",
    "is_callable",
    "make_list",
    "list_items",
    "term_key",
    "variables",
    "structurally_equal",
    "format_term",
]


class Var:
    __slots__ = ("name", "ref")

    def __init__(self, name: str = "_"):
        self.name = name
        self.ref = None

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


class Atom:
    __slots__ = ("name",)
    _table: dict = {}

    def __new__(cls, name: str):
        atom = cls._table.get(name)
        if atom is None:
            atom = object.__new__(cls)
            atom.name = sys.intern(name)
            cls._table[name] = atom
        return atom

    def __reduce__(self):
        return (Atom, (self.name,))

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"


class Compound:
    """A functor applied to a tuple of arguments.

    Equality and hashing are structural, which is only meaningful for
    fully resolved terms (see :func:`resolve`).
    """

    __slots__ = ("functor", "args", "_hash")

    def __init__(self, functor: str, args: Iterable[Term]):
        self.functor = sys.intern(functor)
        self.args = tuple(args)
        if not self.args:
            raise ValueError("compound terms need at least one argument")
        self._hash = None

    @property
    def arity(self) -> int:
        return len(self.args)

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not Compound:
            return NotImplemented
        return self.functor == other.functor and self.args == other.args

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.functor, self.args))
        return self._hash

    @classmethod
    def make(cls, functor: str, args: tuple):
        """Fast constructor for an already-interned functor and args tuple."""
        t = object.__new__(cls)
        t.functor = functor
        t.args = args
        t._hash = None
        return t

    def __repr__(self) -> str:
        return f"Compound({self.functor!r}, {list(self.args)!r})"


Term = Union[Var, Atom, int, Compound]

NIL = Atom("[]")
CONS = "."


def deref(t):
    while type(t) is Var:
        ref = t.ref
        if ref is None:
            return t
        t = ref
    return t


def resolve(t):
    """Return a copy of ``t`` with every bound variable replaced by its value.

    Iterative so that long lists do not hit the recursion limit.
    """
    t = deref(t)
    if type(t) is not Compound:
        return t
    stack = [[t, 0, []]]
    while True:
        frame = stack[-1]
        node, i, acc = frame
        if i == len(node.args):
            stack.pop()
            if all(a is b for a, b in zip(acc, node.args)):
                done = node
            else:
                done = Compound(node.functor, acc)
            if not stack:
                return done
            stack[-1][2].append(done)
            continue
        frame[1] = i + 1
        a = deref(node.args[i])
        if type(a) is Compound:
            stack.append([a, 0, []])
        else:
            acc.append(a)


def is_ground(t) -> bool:
    stack = [t]
    while stack:
        x = deref(stack.pop())
        tx = type(x)
        if tx is Var:
            return False
        if tx is Compound:
            stack.extend(x.args)
    return True


def is_callable(t) -> bool:
    t = deref(t)
    return type(t) is Atom or type(t) is Compound


def variables(t) -> list[Var]:
    """Unbound variables of ``t`` in depth-first left-to-right order."""
    seen = []
    ids = set()
    stack = [t]
    while stack:
        x = deref(stack.pop())
        tx = type(x)
        if tx is Var:
            if id(x) not in ids:
                ids.add(id(x))
                seen.append(x)
        elif tx is Compound:
            stack.extend(reversed(x.args))
    return seen


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(CONS, (item, result))
    return result


def list_items(t) -> Iterator[Term]:
    t = deref(t)
    while type(t) is Compound and t.functor == CONS and len(t.args) == 2:
        yield t.args[0]
        t = deref(t.args[1])


def term_key(t):
    """Indexing key of a (dereferenced) term; ``None`` for variables."""
    tt = type(t)
    if tt is Compound:
        return (t.functor, len(t.args))
    if tt is Var:
        return None
    return t


def structurally_equal(a, b) -> bool:
    """Equality up to consistent variable renaming (variant check)."""
    mapping: dict[int, int] = {}
    reverse: dict[int, int] = {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = deref(x), deref(y)
        tx, ty = type(x), type(y)
        if tx is Var or ty is Var:
            if tx is not ty:
                return False
            if mapping.setdefault(id(x), id(y)) != id(y):
                return False
            if reverse.setdefault(id(y), id(x)) != id(x):
                return False
        elif tx is Compound:
            if ty is not Compound or x.functor != y.functor or len(x.args) != len(y.args):
                return False
            stack.extend(zip(x.args, y.args))
        elif tx is not ty or x != y:
            return False
    return True


# ---------------------------------------------------------------------------
# Formatting

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

INFIX_OPERATORS = {
    "==": 700, "\\==": 700, "=": 700, "\\=": 700, "is": 700,
    "<": 700, ">": 700, "=<": 700, ">=": 700, "=:=": 700, "=\\=": 700,
    "+": 500, "-": 500, "*": 400,
}


def format_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) or name == "[]":
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _format_var(v: Var, names: dict) -> str:
    name = names.get(id(v))
    if name is None:
        if v.name and v.name != "_" and v.name not in names.values():
            name = v.name
        else:
            name = f"_G{len(names)}"
        names[id(v)] = name
    return name


def format_term(t, names: dict | None = None) -> str:
    if names is None:
        names = {}
    return _fmt(t, names, 1200)


def _fmt(t, names: dict, max_prec: int) -> str:
    t = deref(t)
    tt = type(t)
    if tt is Var:
        return _format_var(t, names)
    if tt is Atom:
        return format_atom(t.name)
    if tt is int:
        return str(t)
    if t.functor == CONS and len(t.args) == 2:
        parts = []
        cur = t
        while type(cur) is Compound and cur.functor == CONS and len(cur.args) == 2:
            parts.append(_fmt(cur.args[0], names, 999))
            cur = deref(cur.args[1])
        if cur is NIL:
            return "[" + ",".join(parts) + "]"
        return "[" + ",".join(parts) + "|" + _fmt(cur, names, 999) + "]"
    prec = INFIX_OPERATORS.get(t.functor) if len(t.args) == 2 else None
    if prec is not None:
        # xfx for comparisons, yfx for arithmetic
        left_max = prec if prec < 700 else prec - 1
        text = f"{_fmt(t.args[0], names, left_max)} {t.functor} {_fmt(t.args[1], names, prec - 1)}"
        return f"({text})" if prec > max_prec else text
    if t.functor == "-" and len(t.args) == 1:
        return f"-({_fmt(t.args[0], names, 1200)})"
    args = ",".join(_fmt(a, names, 999) for a in t.args)
    return f"{format_atom(t.functor)}({args})"

