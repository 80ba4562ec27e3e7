"""SLD resolution with proof instrumentation.

Every call to a probabilistic fact goes through a hook.  In proof mode the
hook appends the ground fact identifier to the current proof prefix (an
undo stack restored on backtracking) and consults an optional pruner.  In
sampling mode the hook checks the fact against a :class:`SampleState`.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .errors import DepthLimitExceeded, InstantiationError, QueryError
from .program import Clause, GroundFactId, GroundingTable, Pattern, ProbabilisticFact, Program, Slot, _compile
from .sampling import SampleState
from .terms import Atom, Compound, Var, deref, format_term, is_ground, resolve, variables

__all__ = [
    "Proof",
    "Engine",
    "SolveStatus",
    "CONTINUE",
    "RECORD",
    "DISCARD",
    "threshold_pruner",
    "solve",
    "collect_proofs",
    "best_proof",
    "k_best_proofs",
    "solve_in_sample",
]

# pruner actions
CONTINUE, RECORD, DISCARD = 0, 1, 2

# log-space slack so that rounding never prunes a proof tied with the bound
_LOG_SLACK = 1e-12

_FAIL = object()

Pruner = Callable[[list, float], int]


class SolveStatus(enum.Enum):
    EXHAUSTED = "exhausted"
    PRUNED = "pruned"


@dataclass(frozen=True)
class Proof:
    facts: tuple[GroundFactId, ...]
    log_prob: float
    answer: dict = field(default_factory=dict, compare=False)
    stopped: bool = False
    terms: tuple = field(default=(), compare=False, repr=False)

    @property
    def probability(self) -> float:
        return math.exp(self.log_prob)

    def __len__(self) -> int:
        return len(self.facts)


class _ChoicePoint:
    __slots__ = ("is_fact", "goal", "args", "depth", "nxt", "alts", "idx", "trail_mark", "proof_len", "log_prob")


class Engine:
    """One resolution thread over an immutable :class:`Program`.

    The engine owns the trail, the proof prefix, the grounding table and
    the recorded-database sets; none of them are shared between engines.
    """

    def __init__(
        self,
        program: Program,
        *,
        max_depth: int | None = None,
        grounding: GroundingTable | None = None,
        allow_recorded_db: bool = False,
    ):
        self.program = program
        self.max_depth = max_depth
        self.grounding = grounding if grounding is not None else GroundingTable(program)
        self.allow_recorded_db = allow_recorded_db
        self.trail: list[Var] = []
        self.proof: list[GroundFactId] = []
        self.proof_set: set[GroundFactId] = set()
        self.log_prob = 0.0
        self.recorded: dict = {}
        self.pruner: Pruner | None = None
        self.on_partial: Callable[[], None] | None = None
        self.pruned = False
        self.sample: SampleState | None = None
        self._cps: list[_ChoicePoint] = []
        self._dispatch: dict = {}
        self.fact_hook = self._add_to_proof

    # ------------------------------------------------------------------
    # proof instrumentation

    def _add_to_proof(self, fact: ProbabilisticFact, gid: GroundFactId) -> bool:
        if gid in self.proof_set:
            return True
        self.proof.append(gid)
        self.proof_set.add(gid)
        self.log_prob += fact.prob.log_value
        pruner = self.pruner
        if pruner is None:
            return True
        action = pruner(self.proof, self.log_prob)
        if action == CONTINUE:
            return True
        self.pruned = True
        if action == RECORD and self.on_partial is not None:
            self.on_partial()
        return False

    def _in_sample(self, fact: ProbabilisticFact, gid: GroundFactId) -> bool:
        return self.sample.holds(gid)

    def use_sample(self, sample: SampleState | None) -> None:
        """Switch between proof recording (``None``) and sample checking."""
        self.sample = sample
        self.fact_hook = self._add_to_proof if sample is None else self._in_sample

    def current_proof(self, stopped: bool = False, answer: dict | None = None) -> Proof:
        facts = tuple(self.proof)
        facts_table = self.program.facts
        log_prob = math.fsum(facts_table[g[0]].prob.log_value for g in facts)
        instance = self.grounding.instance
        return Proof(facts, log_prob, answer or {}, stopped, tuple(instance(g) for g in facts))

    # ------------------------------------------------------------------
    # unification

    def unify(self, a, b) -> bool:
        trail = self.trail
        stack = [(a, b)]
        while stack:
            a, b = stack.pop()
            a = deref(a)
            b = deref(b)
            if a is b:
                continue
            ta = type(a)
            tb = type(b)
            if ta is Var:
                a.ref = b
                trail.append(a)
            elif tb is Var:
                b.ref = a
                trail.append(b)
            elif ta is Compound:
                if tb is not Compound or a.functor != b.functor or len(a.args) != len(b.args):
                    return False
                stack.extend(zip(a.args, b.args))
            elif ta is not tb or a != b:
                return False
        return True

    def _build(self, p, frame):
        tp = type(p)
        if tp is Slot:
            v = frame[p.index]
            if v is None:
                v = frame[p.index] = Var()
            return v
        if tp is Pattern:
            build = self._build
            return Compound.make(p.functor, tuple([build(a, frame) for a in p.args]))
        return p

    def _unify_pattern(self, p, t, frame) -> bool:
        tp = type(p)
        if tp is Slot:
            v = frame[p.index]
            if v is None:
                frame[p.index] = t
                return True
            return self.unify(v, t)
        t = deref(t)
        tt = type(t)
        if tt is Var:
            t.ref = self._build(p, frame)
            self.trail.append(t)
            return True
        if tp is Pattern:
            if tt is not Compound or p.functor != t.functor or len(p.args) != len(t.args):
                return False
            unify_pattern = self._unify_pattern
            for pa, ta in zip(p.args, t.args):
                if not unify_pattern(pa, ta, frame):
                    return False
            return True
        if tp is Compound:
            return self.unify(p, t)
        return p is t or (tp is tt and p == t)

    def _undo(self, trail_mark: int, proof_len: int, log_prob: float) -> None:
        trail = self.trail
        while len(trail) > trail_mark:
            trail.pop().ref = None
        proof = self.proof
        if len(proof) > proof_len:
            proof_set = self.proof_set
            while len(proof) > proof_len:
                proof_set.discard(proof.pop())
        self.log_prob = log_prob

    # ------------------------------------------------------------------
    # resolution

    @staticmethod
    def prepare(goal) -> tuple:
        """Compile ``goal`` once for repeated :meth:`run` calls."""
        slots: dict = {}
        compiled = _compile(goal, slots)
        names = [(v.name, slots[id(v)].index) for v in variables(goal) if not v.name.startswith("_")]
        return compiled, len(slots), names

    def run(self, goal, prepared: tuple | None = None) -> Iterator[dict]:
        """Yield once per successful derivation of ``goal``.

        While suspended at a yield the engine state (bindings, proof
        prefix) describes that derivation; the yielded dict maps query
        variable names to their variables.  Resuming backtracks.
        """
        compiled, nslots, names = prepared or self.prepare(goal)
        if nslots:
            frame: list = [None] * nslots
            fresh = self._build(compiled, frame)
            answer_vars = {name: frame[i] for name, i in names}
        else:
            fresh, answer_vars = compiled, {}
        return self._run(fresh, answer_vars)

    def _run(self, goal, answer_vars: dict) -> Iterator[dict]:
        self._cps = []
        self.pruned = False
        self.recorded = {}
        base = (len(self.trail), len(self.proof), self.log_prob)
        cont = (goal, 0, None)
        try:
            while True:
                if cont is None:
                    yield answer_vars
                    cont = self._backtrack()
                    if cont is _FAIL:
                        return
                    continue
                if cont is _FAIL:
                    cont = self._backtrack()
                    if cont is _FAIL:
                        return
                    continue
                cont = self._step(cont)
        finally:
            self._cps = []
            self._undo(*base)

    def _step(self, cont):
        goal, depth, nxt = cont
        goal = deref(goal)
        tg = type(goal)
        if tg is Compound:
            key = (goal.functor, len(goal.args))
            args = goal.args
        elif tg is Atom:
            key = (goal.name, 0)
            args = ()
        elif tg is Var:
            raise InstantiationError("unbound goal")
        else:
            raise QueryError(f"goal {format_term(goal)} is not callable")
        entry = self._dispatch.get(key)
        if entry is None:
            entry = self._dispatch[key] = self._lookup(key)
        kind, data = entry
        if kind == 0:  # builtin
            return nxt if data(self, args) else _FAIL
        if kind == 3:
            return _FAIL
        alts = data.select(args) if args else data.items
        if not alts:
            return _FAIL
        if len(alts) == 1:
            # deterministic call: a failure backtracks to the previous choicepoint
            if kind == 1:
                return self._try_fact(alts[0], goal, args, nxt)
            return self._try_clause(alts[0], args, depth, nxt)
        cp = _ChoicePoint()
        cp.is_fact = kind == 1
        cp.goal = goal
        cp.args = args
        cp.depth = depth
        cp.nxt = nxt
        cp.alts = alts
        cp.idx = 0
        cp.trail_mark = len(self.trail)
        cp.proof_len = len(self.proof)
        cp.log_prob = self.log_prob
        self._cps.append(cp)
        return self._backtrack()

    def _lookup(self, key):
        builtin = BUILTINS.get(key)
        if builtin is not None:
            return 0, builtin
        program = self.program
        index = program._fact_index.get(key)
        if index is not None:
            return 1, index
        index = program._clause_index.get(key)
        if index is not None:
            return 2, index
        return 3, None

    def _backtrack(self):
        cps = self._cps
        while cps:
            cp = cps[-1]
            i = cp.idx
            alts = cp.alts
            cp.idx = i + 1
            if i + 1 >= len(alts):
                cps.pop()
            self._undo(cp.trail_mark, cp.proof_len, cp.log_prob)
            if cp.is_fact:
                cont = self._try_fact(alts[i], cp.goal, cp.args, cp.nxt)
            else:
                cont = self._try_clause(alts[i], cp.args, cp.depth, cp.nxt)
            if cont is not _FAIL:
                return cont
        return _FAIL

    def _try_fact(self, fact: ProbabilisticFact, goal, args, nxt):
        if fact.nvars == 0:
            trail = self.trail
            for p, a in zip(fact.args, args):
                a = deref(a)
                if a is p:
                    continue
                if type(a) is Var:
                    a.ref = p
                    trail.append(a)
                elif not self.unify(p, a):
                    return _FAIL
        else:
            frame = [None] * fact.nvars
            unify_pattern = self._unify_pattern
            for p, a in zip(fact.args, args):
                if not unify_pattern(p, a, frame):
                    return _FAIL
        if fact.ground:
            gid = fact.gid
        else:
            gid = self.grounding.ground_id(fact.fact_id, resolve(goal))
        if self.fact_hook(fact, gid):
            return nxt
        return _FAIL

    def _try_clause(self, clause: Clause, args, depth: int, nxt):
        frame = [None] * clause.nvars
        unify_pattern = self._unify_pattern
        for p, a in zip(clause.head_args, args):
            if not unify_pattern(p, a, frame):
                return _FAIL
        cont = nxt
        goals = clause.body_goals
        if goals:
            depth += 1
            if self.max_depth is not None and depth > self.max_depth:
                raise DepthLimitExceeded(f"resolution depth exceeded {self.max_depth}")
            build = self._build
            for g in reversed(goals):
                cont = (build(g, frame), depth, cont)
        return cont

    # ------------------------------------------------------------------
    # builtin support

    def eval(self, t) -> int:
        t = deref(t)
        tt = type(t)
        if tt is int:
            return t
        if tt is Var:
            raise InstantiationError("unbound variable in arithmetic")
        if tt is Compound:
            op = t.functor
            if len(t.args) == 2:
                a = self.eval(t.args[0])
                b = self.eval(t.args[1])
                if op == "+":
                    return a + b
                if op == "-":
                    return a - b
                if op == "*":
                    return a * b
            elif op == "-":
                return -self.eval(t.args[0])
        raise QueryError(f"cannot evaluate {format_term(t)}")

    def identical(self, a, b) -> bool:
        stack = [(a, b)]
        while stack:
            a, b = stack.pop()
            a = deref(a)
            b = deref(b)
            if a is b:
                continue
            ta = type(a)
            if ta is not type(b) or ta is Var or ta is Atom:
                return False
            if ta is Compound:
                if a.functor != b.functor or len(a.args) != len(b.args):
                    return False
                stack.extend(zip(a.args, b.args))
            elif a != b:
                return False
        return True



# ----------------------------------------------------------------------
# builtins


def _b_true(engine, args):
    return True


def _b_fail(engine, args):
    return False


def _b_unify(engine, args):
    return engine.unify(args[0], args[1])


def _b_not_unify(engine, args):
    mark = len(engine.trail)
    ok = engine.unify(args[0], args[1])
    trail = engine.trail
    while len(trail) > mark:
        trail.pop().ref = None
    return not ok


def _b_identical(engine, args):
    return engine.identical(args[0], args[1])


def _b_not_identical(engine, args):
    return not engine.identical(args[0], args[1])


def _b_is(engine, args):
    return engine.unify(args[0], engine.eval(args[1]))


def _comparison(op):
    def compare(engine, args):
        return op(engine.eval(args[0]), engine.eval(args[1]))

    return compare


def _recorded_db(engine):
    if not engine.allow_recorded_db:
        raise QueryError(
            "eraseall/recordzifnot are only supported under Monte Carlo inference"
        )
    return engine.recorded


def _db_key(engine, key):
    key = resolve(key)
    if not is_ground(key):
        raise InstantiationError("recorded-database key must be ground")
    return key


def _b_eraseall(engine, args):
    _recorded_db(engine).pop(_db_key(engine, args[0]), None)
    return True


def _b_recordzifnot(engine, args):
    db = _recorded_db(engine)
    term = resolve(args[1])
    if not is_ground(term):
        raise InstantiationError("recordzifnot/3 needs a ground term")
    records = db.setdefault(_db_key(engine, args[0]), set())
    if term in records:
        return False
    records.add(term)
    if len(args) == 3:
        return engine.unify(args[2], len(records))
    return True


BUILTINS = {
    ("true", 0): _b_true,
    ("fail", 0): _b_fail,
    ("false", 0): _b_fail,
    ("=", 2): _b_unify,
    ("\\=", 2): _b_not_unify,
    ("==", 2): _b_identical,
    ("\\==", 2): _b_not_identical,
    ("is", 2): _b_is,
    ("<", 2): _comparison(lambda a, b: a < b),
    (">", 2): _comparison(lambda a, b: a > b),
    ("=<", 2): _comparison(lambda a, b: a <= b),
    (">=", 2): _comparison(lambda a, b: a >= b),
    ("=:=", 2): _comparison(lambda a, b: a == b),
    ("=\\=", 2): _comparison(lambda a, b: a != b),
    ("eraseall", 1): _b_eraseall,
    ("recordzifnot", 2): _b_recordzifnot,
    ("recordzifnot", 3): _b_recordzifnot,
}


# ----------------------------------------------------------------------
# search procedures


def _answer(answer_vars: dict) -> dict:
    return {name: resolve(v) for name, v in answer_vars.items()}


def threshold_pruner(threshold: float) -> Pruner:
    """Stop and record any prefix whose probability drops below ``threshold``."""
    log_threshold = math.log(threshold) if threshold > 0 else -math.inf

    def prune(prefix, log_prob):
        return RECORD if log_prob < log_threshold else CONTINUE

    return prune


def solve(
    program: Program,
    goal,
    pruner: Pruner | None = None,
    on_proof: Callable[[Proof], Optional[bool]] | None = None,
    *,
    max_depth: int | None = None,
    engine: Engine | None = None,
) -> SolveStatus:
    """Explore the SLD tree of ``goal`` left to right.

    ``on_proof`` receives every successful derivation and every partial
    proof stopped by a RECORD decision of the pruner (``stopped=True``).
    Returning ``False`` from it ends the search early.
    """
    engine = engine or Engine(program, max_depth=max_depth)
    engine.pruner = pruner
    stop = False

    def partial():
        nonlocal stop
        if on_proof is not None and on_proof(engine.current_proof(stopped=True)) is False:
            stop = True

    engine.on_partial = partial
    try:
        for answer_vars in engine.run(goal):
            if on_proof is not None:
                if on_proof(engine.current_proof(answer=_answer(answer_vars))) is False:
                    break
            if stop:
                break
    finally:
        engine.pruner = None
        engine.on_partial = None
    return SolveStatus.PRUNED if engine.pruned else SolveStatus.EXHAUSTED


def collect_proofs(program: Program, goal, *, max_depth: int | None = None) -> list[Proof]:
    proofs: list[Proof] = []
    solve(program, goal, on_proof=proofs.append, max_depth=max_depth)
    return proofs


def best_proof(program: Program, goal, *, max_depth: int | None = None) -> Proof | None:
    """Most likely proof by branch and bound; the first one found wins ties."""
    best: Proof | None = None
    bound = -math.inf

    def prune(prefix, log_prob):
        return DISCARD if log_prob < bound - _LOG_SLACK or log_prob == -math.inf else CONTINUE

    def found(proof: Proof):
        nonlocal best, bound
        if proof.log_prob > bound:
            best = proof
            bound = proof.log_prob

    solve(program, goal, prune, found, max_depth=max_depth)
    return best


def k_best_proofs(
    program: Program,
    goal,
    k: int,
    *,
    max_depth: int | None = None,
    initial_threshold: float = 0.5,
    shrink: float = 0.1,
) -> list[Proof]:
    """The k most likely distinct proofs, plus any tied with the k-th.

    Proofs are returned in the order the SLD search found them.

    Branch and bound prunes prefixes below the k-th best probability
    found so far.  Before k proofs are known the search is additionally
    capped by a probability threshold that shrinks between passes, which
    keeps depth-first search from wandering through long unlikely paths.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    threshold = initial_threshold
    while True:
        log_threshold = math.log(threshold) if threshold > 0 else -math.inf
        found: dict[frozenset, Proof] = {}
        heap: list[float] = []
        bound = -math.inf
        cut_by_threshold = False

        def prune(prefix, log_prob):
            nonlocal cut_by_threshold
            if log_prob < bound - _LOG_SLACK:
                return DISCARD
            if log_prob < log_threshold - _LOG_SLACK:
                cut_by_threshold = True
                return DISCARD
            return CONTINUE

        def collect(proof: Proof):
            nonlocal bound
            key = frozenset(proof.facts)
            if key in found:
                return
            found[key] = proof
            if len(heap) < k:
                heapq.heappush(heap, proof.log_prob)
            elif proof.log_prob > heap[0]:
                heapq.heapreplace(heap, proof.log_prob)
            if len(heap) == k:
                bound = heap[0]

        solve(program, goal, prune, collect, max_depth=max_depth)
        ranked = sorted(found.values(), key=lambda p: -p.log_prob)
        complete = not cut_by_threshold
        if len(ranked) >= k and ranked[k - 1].log_prob >= log_threshold:
            complete = True
        if complete or threshold == 0.0:
            if not ranked:
                return []
            cutoff = ranked[min(k, len(ranked)) - 1].log_prob
            # SLD discovery order keeps proofs with shared prefixes together,
            # which gives a much better BDD variable order than rank order
            return [p for p in found.values() if p.log_prob >= cutoff]
        threshold *= shrink
        if threshold < 1e-300:
            threshold = 0.0


def solve_in_sample(
    program: Program,
    goal,
    sample: SampleState,
    *,
    max_depth: int | None = None,
    engine: Engine | None = None,
) -> bool:
    """Whether ``goal`` is provable in the (lazily realized) sampled program."""
    if engine is None:
        engine = Engine(program, max_depth=max_depth, grounding=sample.grounding, allow_recorded_db=True)
    engine.use_sample(sample)
    try:
        for _ in engine.run(goal):
            return True
        return False
    finally:
        engine.use_sample(None)
