"""Program representation: probabilistic facts, background clauses, groundings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import LoadError, NonGroundProbabilisticCall
from .terms import Atom, Compound, Var, deref, format_term, is_callable, is_ground, term_key

__all__ = [
    "Probability",
    "ProbabilisticFact",
    "GroundFactId",
    "Clause",
    "Program",
    "GroundingTable",
    "Slot",
    "Pattern",
    "subprogram_probability",
]


@dataclass(frozen=True)
class Probability:
    value: float
    log_value: float = field(init=False)

    def __post_init__(self):
        value = float(self.value)
        if not (0.0 <= value <= 1.0):
            raise LoadError(f"probability {self.value} out of range [0, 1]")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "log_value", math.log(value) if value > 0.0 else -math.inf)

    def __float__(self) -> float:
        return self.value


class GroundFactId(NamedTuple):
    fact_id: int
    grounding_index: int = 0

    def __str__(self) -> str:
        if self.grounding_index:
            return f"{self.fact_id}_{self.grounding_index}"
        return str(self.fact_id)


class Slot:
    """Placeholder for the i-th variable of a compiled clause or fact."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index

    def __repr__(self) -> str:
        return f"Slot({self.index})"


class Pattern(Compound):
    """Compound inside a compiled clause that still contains Slots.

    Ground subterms stay plain Compounds and are shared, not copied.
    """

    __slots__ = ()


def _compile(term, slots: dict):
    """Replace variables by Slots, numbering them in order of appearance."""
    term = deref(term)
    tt = type(term)
    if tt is Var:
        slot = slots.get(id(term))
        if slot is None:
            slot = slots[id(term)] = Slot(len(slots))
        return slot
    if tt is Compound:
        args = tuple(_compile(a, slots) for a in term.args)
        if any(type(a) is Slot or type(a) is Pattern for a in args):
            return Pattern.make(term.functor, args)
        if all(a is b for a, b in zip(args, term.args)):
            return term
        return Compound.make(term.functor, args)
    return term


def _key_of_pattern(arg):
    if type(arg) is Slot:
        return None
    if isinstance(arg, Compound):
        return (arg.functor, len(arg.args))
    return term_key(arg)


def _indicator(term) -> tuple[str, int]:
    term = deref(term)
    if type(term) is Atom:
        return term.name, 0
    return term.functor, len(term.args)


class ProbabilisticFact:
    __slots__ = ("fact_id", "head", "prob", "ground", "gid", "args", "nvars", "arg_keys")

    def __init__(self, fact_id: int, head, prob: Probability):
        self.fact_id = fact_id
        self.head = head
        self.prob = prob
        self.ground = is_ground(head)
        self.gid = GroundFactId(fact_id, 0)
        slots: dict = {}
        compiled = _compile(head, slots)
        self.args = compiled.args if isinstance(compiled, Compound) else ()
        self.nvars = len(slots)
        self.arg_keys = tuple(_key_of_pattern(a) for a in self.args)

    @property
    def log_prob(self) -> float:
        return self.prob.log_value

    def __repr__(self) -> str:
        return f"{self.prob.value}::{format_term(self.head)}"


class Clause:
    """A definite clause compiled for resolution.

    ``head`` and ``body`` keep the source terms; ``head_args`` and
    ``body_goals`` hold the slot-compiled copies the engine instantiates.
    """

    __slots__ = ("head", "body", "head_args", "body_goals", "nvars", "arg_keys")

    def __init__(self, head, body: Iterable = ()):
        if not is_callable(head):
            raise LoadError(f"clause head {format_term(head)} is not callable")
        self.head = head
        self.body = tuple(body)
        slots: dict = {}
        compiled_head = _compile(head, slots)
        self.head_args = compiled_head.args if isinstance(compiled_head, Compound) else ()
        self.body_goals = tuple(_compile(g, slots) for g in self.body)
        self.nvars = len(slots)
        self.arg_keys = tuple(_key_of_pattern(a) for a in self.head_args)

    @property
    def indicator(self) -> tuple[str, int]:
        return _indicator(self.head)

    def __repr__(self) -> str:
        if not self.body:
            return f"{format_term(self.head)}."
        names: dict = {}
        head = format_term(self.head, names)
        body = ", ".join(format_term(g, names) for g in self.body)
        return f"{head} :- {body}."


class _Index:
    """Items of one predicate, indexed on every argument position.

    Per position, items with a variable there are appended to every keyed
    bucket so each candidate list stays in declaration order.  A call is
    dispatched on its first bound argument at a position where some item
    has a non-variable argument.
    """

    __slots__ = ("items", "_by_key", "_open", "_keyed")

    def __init__(self):
        self.items = []
        self._by_key: list[dict] = []
        self._open: list[list] = []
        self._keyed: list[int] = []

    def add(self, item):
        keys = item.arg_keys
        if not self.items:
            self._by_key = [{} for _ in keys]
            self._open = [[] for _ in keys]
        self.items.append(item)
        for pos, key in enumerate(keys):
            by_key = self._by_key[pos]
            if key is None:
                self._open[pos].append(item)
                for bucket in by_key.values():
                    bucket.append(item)
            else:
                bucket = by_key.get(key)
                if bucket is None:
                    bucket = by_key[key] = list(self._open[pos])
                bucket.append(item)
        self._keyed = [pos for pos, by_key in enumerate(self._by_key) if by_key]

    def candidates(self, key, position: int = 0):
        if key is None or position >= len(self._by_key):
            return self.items
        return self._by_key[position].get(key, self._open[position])

    def select(self, args):
        """Candidates for a call with arguments ``args``."""
        for pos in self._keyed:
            key = term_key(deref(args[pos]))
            if key is not None:
                return self._by_key[pos].get(key, self._open[pos])
        return self.items


class Program:
    """Probabilistic facts plus background-knowledge clauses.

    Facts get dense identifiers in declaration order.  Duplicate
    declarations of the same fact are distinct random variables.
    """

    def __init__(self):
        self.facts: list[ProbabilisticFact] = []
        self.clauses: list[Clause] = []
        self._fact_index: dict[tuple[str, int], _Index] = {}
        self._clause_index: dict[tuple[str, int], _Index] = {}

    def add_fact(self, prob, head) -> int:
        if not isinstance(prob, Probability):
            prob = Probability(prob)
        head = deref(head)
        if not is_callable(head):
            raise LoadError(f"probabilistic fact head {format_term(head)} is not callable")
        key = _indicator(head)
        if key in self._clause_index:
            raise LoadError(f"{key[0]}/{key[1]} is already defined by background clauses")
        fact = ProbabilisticFact(len(self.facts), head, prob)
        self.facts.append(fact)
        self._fact_index.setdefault(key, _Index()).add(fact)
        return fact.fact_id

    def add_clause(self, head, body: Iterable = ()) -> Clause:
        clause = head if isinstance(head, Clause) else Clause(head, body)
        key = clause.indicator
        if key in self._fact_index:
            raise LoadError(f"{key[0]}/{key[1]} is already defined by probabilistic facts")
        self.clauses.append(clause)
        self._clause_index.setdefault(key, _Index()).add(clause)
        return clause

    def extend(self, other: Program) -> Program:
        for fact in other.facts:
            self.add_fact(fact.prob, fact.head)
        for clause in other.clauses:
            self.add_clause(clause)
        return self

    def is_probabilistic(self, name: str, arity: int) -> bool:
        return (name, arity) in self._fact_index

    def defines(self, name: str, arity: int) -> bool:
        return (name, arity) in self._fact_index or (name, arity) in self._clause_index

    def facts_for(self, name: str, arity: int) -> list[ProbabilisticFact]:
        index = self._fact_index.get((name, arity))
        return list(index.items) if index else []

    def clauses_for(self, name: str, arity: int) -> list[Clause]:
        index = self._clause_index.get((name, arity))
        return list(index.items) if index else []

    def fact_candidates(self, key: tuple[str, int], first_arg_key):
        index = self._fact_index.get(key)
        return index.candidates(first_arg_key) if index else None

    def clause_candidates(self, key: tuple[str, int], first_arg_key):
        index = self._clause_index.get(key)
        return index.candidates(first_arg_key) if index else None

    def fact_probability(self, gid: GroundFactId) -> float:
        return self.facts[gid.fact_id].prob.value

    def new_grounding_table(self) -> GroundingTable:
        return GroundingTable(self)

    def __repr__(self) -> str:
        return f"<Program: {len(self.facts)} facts, {len(self.clauses)} clauses>"

    def to_text(self) -> str:
        lines = [f"{f.prob.value!r}::{format_term(f.head)}." for f in self.facts]
        lines += [repr(c) for c in self.clauses]
        return "\n".join(lines) + ("\n" if lines else "")


class GroundingTable:
    """Per-query map from ground instances of non-ground facts to identifiers."""

    def __init__(self, program: Program):
        self.program = program
        self._ids: dict = {}
        self._instances: dict[GroundFactId, object] = {}
        self._counts: dict[int, int] = {}

    def ground_id(self, fact_id: int, instance) -> GroundFactId:
        fact = self.program.facts[fact_id]
        if fact.ground:
            return fact.gid
        if not is_ground(instance):
            raise NonGroundProbabilisticCall(
                f"non-ground probabilistic call {format_term(instance)}"
            )
        key = (fact_id, instance)
        gid = self._ids.get(key)
        if gid is None:
            n = self._counts.get(fact_id, 0) + 1
            self._counts[fact_id] = n
            gid = self._ids[key] = GroundFactId(fact_id, n)
            self._instances[gid] = instance
        return gid

    def instance(self, gid: GroundFactId):
        if gid.grounding_index == 0:
            return self.program.facts[gid.fact_id].head
        return self._instances[gid]

    def clear(self) -> None:
        self._ids.clear()
        self._instances.clear()
        self._counts.clear()

    def __len__(self) -> int:
        return len(self._ids)


def subprogram_probability(program: Program, subset, universe) -> float:
    """Probability of sampling exactly ``subset`` out of ``universe``."""
    subset = set(subset)
    universe = set(universe)
    if not subset <= universe:
        raise ValueError("subset must be contained in universe")
    result = 1.0
    for gid in universe:
        p = program.fact_probability(gid)
        result *= p if gid in subset else 1.0 - p
    return result
