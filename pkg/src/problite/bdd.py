"""Reduced ordered binary decision diagrams and proof-trie compilation.

Node references are plain integers owned by a :class:`BddManager`;
``FALSE`` (0) and ``TRUE`` (1) are the terminals.  There are no complement
edges.  Variables start in registration order; a manager may then sift
them (dynamic reordering) while diagrams are being built.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple, Sequence, Union

from .errors import ProbLogError
from .trie import END, ProofTrie

__all__ = [
    "FALSE",
    "TRUE",
    "BddError",
    "BddManager",
    "Ref",
    "Statement",
    "BddScript",
    "export_script",
    "translate_trie",
    "evaluate_script",
    "parse_script",
    "probability",
    "to_dot",
]

FALSE = 0
TRUE = 1
_TERMINAL_LEVEL = sys.maxsize
_FREE = -2
_GC_MINIMUM = 4096
_CACHE_LIMIT = 1 << 19

AND = "and"
OR = "or"
_SYMBOLS = {AND: "∧", OR: "∨"}
_FROM_SYMBOL = {"∧": AND, "*": AND, "&": AND, "∨": OR, "+": OR, "|": OR}


class BddError(ProbLogError):
    pass


class BddManager:
    """Unique table, computed cache and variable order for one set of BDDs.

    Variables keep their registration order unless ``reorder`` is enabled,
    in which case the manager sifts variables whenever the live diagrams
    outgrow ``reorder_threshold``.  Garbage is collected at safe points
    either way.  Level swaps rewrite nodes in place, so node ids held by
    callers keep denoting the same function.  Collection only keeps nodes
    reachable from :attr:`protected` and from the roots handed to
    :meth:`safe_point`; results of :func:`translate_trie` are protected
    automatically.
    """

    def __init__(
        self,
        order: Iterable[Hashable] = (),
        *,
        reorder: bool = False,
        reorder_threshold: int = 4000,
        max_growth: float = 1.2,
    ):
        self._var = [-1, -1]  # variable index per node, _FREE for recycled slots
        self._level = [_TERMINAL_LEVEL, _TERMINAL_LEVEL]
        self._low = [-1, -1]
        self._high = [-1, -1]
        self._unique: dict[int, int] = {}
        self._free: list[int] = []
        self._caches: dict[str, dict[int, int]] = {AND: {}, OR: {}}
        self.variables: list[Hashable] = []
        self.order: list[Hashable] = []
        self.position: dict[Hashable, int] = {}
        self._level_var: list[int] = []
        self._var_level: list[int] = []
        self.protected: set[int] = set()
        self.reorder_enabled = reorder
        self.reorder_threshold = reorder_threshold
        self.max_growth = max_growth
        self.reorderings = 0
        self._next_check = max(reorder_threshold, _GC_MINIMUM)
        self._ref: list[int] | None = None
        self._nodes: list[set] | None = None
        for v in order:
            self.add_variable(v)

    # -- variables and nodes
    def add_variable(self, v: Hashable) -> int:
        """Append ``v`` at the bottom of the order (no-op if present)."""
        level = self.position.get(v)
        if level is None:
            level = self.position[v] = len(self.order)
            self.order.append(v)
            self._level_var.append(len(self.variables))
            self._var_level.append(level)
            self.variables.append(v)
        return level

    def var_node(self, v: Hashable) -> int:
        level = self.position.get(v)
        if level is None:
            raise BddError(f"variable {v!r} is not registered with this manager")
        return self.mk(level, FALSE, TRUE)

    def _alloc(self, vi: int, level: int, low: int, high: int) -> int:
        if self._free:
            n = self._free.pop()
            self._var[n] = vi
            self._level[n] = level
            self._low[n] = low
            self._high[n] = high
        else:
            n = len(self._var)
            self._var.append(vi)
            self._level.append(level)
            self._low.append(low)
            self._high.append(high)
        return n

    def mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        vi = self._level_var[level]
        key = (vi << 64) | (low << 32) | high
        node = self._unique.get(key)
        if node is None:
            node = self._unique[key] = self._alloc(vi, level, low, high)
        return node

    def var(self, node: int) -> Hashable:
        return self.variables[self._var[node]]

    def low(self, node: int) -> int:
        return self._low[node]

    def high(self, node: int) -> int:
        return self._high[node]

    def is_terminal(self, node: int) -> bool:
        return node < 2

    def __len__(self) -> int:
        """Number of internal nodes currently stored, garbage included."""
        return len(self._var) - 2 - len(self._free)

    # -- apply
    def apply_and(self, a: int, b: int) -> int:
        return self._apply(AND, a, b)

    def apply_or(self, a: int, b: int) -> int:
        return self._apply(OR, a, b)

    @staticmethod
    def _shortcut(op: str, a: int, b: int):
        if a == b:
            return a
        if op == AND:
            if a == FALSE or b == FALSE:
                return FALSE
            if a == TRUE:
                return b
            if b == TRUE:
                return a
        else:
            if a == TRUE or b == TRUE:
                return TRUE
            if a == FALSE:
                return b
            if b == FALSE:
                return a
        return None

    def _apply(self, op: str, a: int, b: int) -> int:
        shortcut = self._shortcut
        r = shortcut(op, a, b)
        if r is not None:
            return r
        cache = self._caches[op]
        top_key = (a << 32) | b if a < b else (b << 32) | a
        r = cache.get(top_key)
        if r is not None:
            return r
        if len(cache) > _CACHE_LIMIT:
            # a lossy computed table: only the current operation needs its entries
            cache.clear()
        level, low, high, mk = self._level, self._low, self._high, self.mk
        stack = [(a, b)]
        while stack:
            a, b = stack[-1]
            key = (a << 32) | b if a < b else (b << 32) | a
            if key in cache:
                stack.pop()
                continue
            la, lb = level[a], level[b]
            top = la if la < lb else lb
            a0, a1 = (low[a], high[a]) if la == top else (a, a)
            b0, b1 = (low[b], high[b]) if lb == top else (b, b)
            r0 = shortcut(op, a0, b0)
            if r0 is None:
                r0 = cache.get((a0 << 32) | b0 if a0 < b0 else (b0 << 32) | a0)
            r1 = shortcut(op, a1, b1)
            if r1 is None:
                r1 = cache.get((a1 << 32) | b1 if a1 < b1 else (b1 << 32) | a1)
            if r0 is None or r1 is None:
                if r0 is None:
                    stack.append((a0, b0))
                if r1 is None:
                    stack.append((a1, b1))
                continue
            stack.pop()
            cache[key] = mk(top, r0, r1)
        return cache[top_key]

    def conjoin(self, nodes: Iterable[int]) -> int:
        result = TRUE
        for n in nodes:
            result = self.apply_and(result, n)
        return result

    def disjoin(self, nodes: Iterable[int]) -> int:
        result = FALSE
        for n in nodes:
            result = self.apply_or(result, n)
        return result

    # -- garbage collection and reordering
    def safe_point(self, roots: Callable[[], Iterable[int]]) -> None:
        """Maybe collect garbage and reorder; ``roots()`` lists the live results.

        Only call this between apply operations.  Protected nodes survive
        regardless of ``roots``.
        """
        if len(self) <= self._next_check:
            return
        live = list(roots())
        size = self.collect_garbage(live)
        if self.reorder_enabled and size > self.reorder_threshold:
            size = self.reorder(live)
            self.reorder_threshold = max(self.reorder_threshold, 2 * size)
        self._next_check = max(_GC_MINIMUM, self.reorder_threshold, 2 * size)

    def collect_garbage(self, roots: Iterable[int] = ()) -> int:
        """Free nodes unreachable from ``roots`` and :attr:`protected`; returns the live count."""
        var, low, high = self._var, self._low, self._high
        marked = bytearray(len(var))
        stack = [r for r in self.protected if r >= 2]
        stack.extend(r for r in roots if r >= 2)
        while stack:
            n = stack.pop()
            if marked[n]:
                continue
            marked[n] = 1
            if low[n] >= 2:
                stack.append(low[n])
            if high[n] >= 2:
                stack.append(high[n])
        unique, free = self._unique, self._free
        for n in range(2, len(var)):
            if not marked[n] and var[n] != _FREE:
                del unique[(var[n] << 64) | (low[n] << 32) | high[n]]
                var[n] = _FREE
                free.append(n)
        for cache in self._caches.values():
            cache.clear()
        return len(self)

    def reorder(self, roots: Iterable[int] = ()) -> int:
        """Sift every variable to its locally best level; returns the new live count."""
        roots = list(roots)
        self.collect_garbage(roots)
        var, low, high = self._var, self._low, self._high
        ref = [0] * len(var)
        nodes: list[set] = [set() for _ in self.variables]
        for n in range(2, len(var)):
            if var[n] != _FREE:
                nodes[var[n]].add(n)
                ref[low[n]] += 1
                ref[high[n]] += 1
        for r in (*self.protected, *roots):
            ref[r] += 1
        self._ref, self._nodes = ref, nodes
        try:
            for vi in sorted(range(len(nodes)), key=lambda v: -len(nodes[v])):
                if nodes[vi]:
                    self._sift(vi)
        finally:
            self._ref = self._nodes = None
        self.reorderings += 1
        for cache in self._caches.values():
            cache.clear()
        return len(self)

    def _sift(self, vi: int) -> None:
        last = len(self._level_var) - 1
        level = self._var_level[vi]
        best, best_level = len(self), level
        limit = best * self.max_growth
        # head for the nearer end first, then sweep to the other one
        for step in ((-1, 1) if level < last - level else (1, -1)):
            while 0 <= level + step <= last:
                self._swap(min(level, level + step))
                level += step
                size = len(self)
                if size < best:
                    best, best_level = size, level
                if size > limit:
                    break
        while level < best_level:
            self._swap(level)
            level += 1
        while level > best_level:
            self._swap(level - 1)
            level -= 1

    def _mk_ref(self, vi: int, level: int, low: int, high: int) -> int:
        ref = self._ref
        if low == high:
            ref[low] += 1
            return low
        key = (vi << 64) | (low << 32) | high
        n = self._unique.get(key)
        if n is not None:
            ref[n] += 1
            return n
        n = self._unique[key] = self._alloc(vi, level, low, high)
        if n == len(ref):
            ref.append(1)
        else:
            ref[n] = 1
        ref[low] += 1
        ref[high] += 1
        self._nodes[vi].add(n)
        return n

    def _deref(self, n: int) -> None:
        ref = self._ref
        stack = [n]
        var, low, high = self._var, self._low, self._high
        while stack:
            n = stack.pop()
            if n < 2:
                continue
            ref[n] -= 1
            if ref[n] == 0:
                vi = var[n]
                del self._unique[(vi << 64) | (low[n] << 32) | high[n]]
                self._nodes[vi].discard(n)
                stack.append(low[n])
                stack.append(high[n])
                var[n] = _FREE
                self._free.append(n)

    def _swap(self, i: int) -> None:
        """Exchange the variables at levels ``i`` and ``i + 1``."""
        x, y = self._level_var[i], self._level_var[i + 1]
        var, level, low, high = self._var, self._level, self._low, self._high
        unique = self._unique
        xs, ys = self._nodes[x], self._nodes[y]
        if xs and ys:
            mk_ref, deref = self._mk_ref, self._deref
            for n in list(xs):
                f0, f1 = low[n], high[n]
                y0 = var[f0] == y and f0 >= 2
                y1 = var[f1] == y and f1 >= 2
                if not (y0 or y1):
                    continue
                f00, f01 = (low[f0], high[f0]) if y0 else (f0, f0)
                f10, f11 = (low[f1], high[f1]) if y1 else (f1, f1)
                new_low = mk_ref(x, i + 1, f00, f10)
                new_high = mk_ref(x, i + 1, f01, f11)
                del unique[(x << 64) | (f0 << 32) | f1]
                xs.discard(n)
                var[n] = y
                low[n] = new_low
                high[n] = new_high
                unique[(y << 64) | (new_low << 32) | new_high] = n
                ys.add(n)
                deref(f0)
                deref(f1)
        for n in xs:
            level[n] = i + 1
        for n in ys:
            level[n] = i
        self._level_var[i], self._level_var[i + 1] = y, x
        self._var_level[x], self._var_level[y] = i + 1, i
        order = self.order
        order[i], order[i + 1] = order[i + 1], order[i]
        self.position[order[i]] = i
        self.position[order[i + 1]] = i + 1

    # -- inspection
    def reachable(self, root: int) -> list[int]:
        """Internal nodes reachable from ``root`` (children before parents)."""
        seen: set[int] = set()
        order: list[int] = []
        stack = [(root, False)]
        while stack:
            n, expanded = stack.pop()
            if n < 2:
                continue
            if expanded:
                order.append(n)
                continue
            if n in seen:
                continue
            seen.add(n)
            stack.append((n, True))
            stack.append((self._high[n], False))
            stack.append((self._low[n], False))
        return order

    def size(self, root: int) -> int:
        return len(self.reachable(root))

    def check(self) -> None:
        """Assert reducedness, orderedness and canonicity of every stored node."""
        var, level, low, high = self._var, self._level, self._low, self._high
        live = 0
        for n in range(2, len(level)):
            if var[n] == _FREE:
                continue
            live += 1
            if low[n] == high[n]:
                raise BddError(f"node {n} is redundant")
            if level[n] != self._var_level[var[n]]:
                raise BddError(f"node {n} has a stale level")
            for child in (low[n], high[n]):
                if child >= 2 and var[child] == _FREE:
                    raise BddError(f"node {n} points to a freed node")
            if not (level[n] < level[low[n]] and level[n] < level[high[n]]):
                raise BddError(f"node {n} violates the variable order")
            other = self._unique.get((var[n] << 64) | (low[n] << 32) | high[n])
            if other != n:
                if other is not None:
                    raise BddError(f"nodes {other} and {n} are isomorphic")
                raise BddError(f"node {n} missing from the unique table")
        if live != len(self._unique):
            raise BddError("unique table holds entries for freed nodes")

    def evaluate(self, root: int, assignment: Mapping[Hashable, bool]) -> bool:
        n = root
        while n >= 2:
            n = self._high[n] if assignment[self.var(n)] else self._low[n]
        return n == TRUE

    # -- probability
    def probability(self, root: int, prob_of: Union[Mapping, Callable[[Hashable], float]]) -> float:
        """Weighted model count of ``root`` with independent variables.

        One memoized bottom-up pass: each internal node gets
        ``p * P(high) + (1 - p) * P(low)``.
        """
        lookup = prob_of.__getitem__ if isinstance(prob_of, Mapping) else prob_of
        memo = {FALSE: 0.0, TRUE: 1.0}
        var, low, high, variables = self._var, self._low, self._high, self.variables
        var_prob: dict[int, float] = {}
        for n in self.reachable(root):
            vi = var[n]
            p = var_prob.get(vi)
            if p is None:
                try:
                    p = var_prob[vi] = float(lookup(variables[vi]))
                except (KeyError, IndexError):
                    raise BddError(f"no probability for variable {variables[vi]!r}") from None
            memo[n] = p * memo[high[n]] + (1.0 - p) * memo[low[n]]
        return memo[root]


def probability(mgr: BddManager, root: int, prob_of) -> float:
    return mgr.probability(root, prob_of)


# ----------------------------------------------------------------------
# trie translation


class Ref(NamedTuple):
    """Reference to the result of the ``index``-th script statement."""

    index: int

    def __str__(self) -> str:
        return f"n{self.index}"


@dataclass(frozen=True)
class Statement:
    target: Ref
    op: str
    operands: tuple

    def format(self, name: Callable[[Hashable], str] = str) -> str:
        sym = f" {_SYMBOLS[self.op]} "
        return f"{self.target} = " + sym.join(_operand_text(o, name) for o in self.operands)


def _operand_text(operand, name) -> str:
    if isinstance(operand, Ref):
        return str(operand)
    if operand is True or operand is False:
        return "TRUE" if operand else "FALSE"
    return name(operand)


@dataclass
class BddScript:
    """Straight-line program of conjunctions and disjunctions.

    Operands are variable tokens or :class:`Ref` to earlier statements;
    ``top`` names the final result (``False`` for an empty trie).
    """

    statements: list
    top: object

    def to_text(self, name: Callable[[Hashable], str] = str) -> str:
        lines = [s.format(name) for s in self.statements]
        lines.append(f"top = {_operand_text(self.top, name)}")
        return "\n".join(lines) + "\n"

    def variables(self) -> list:
        seen: dict = {}
        for s in self.statements:
            for o in s.operands:
                if not isinstance(o, Ref):
                    seen.setdefault(o, None)
        if not isinstance(self.top, (Ref, bool)):
            seen.setdefault(self.top, None)
        return list(seen)


class _Work:
    __slots__ = ("label", "children")

    def __init__(self, label, children: list):
        self.label = label
        self.children = children


def _working_tree(trie: ProofTrie) -> _Work:
    """Copy of the trie without end markers; nodes that end a proof become leaves."""
    made: dict[int, _Work] = {}

    def visit(node):
        if node.token is END:
            return
        kids = [made.pop(id(k)) for k in node.children() if k.token is not END]
        ends_proof = node.find_child(END) is not None
        made[id(node)] = _Work(node.token, [] if ends_proof else kids)

    trie.iterate_bottom_up(visit)
    return made[id(trie.root)]


def _preorder(root: _Work):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def export_script(trie: ProofTrie) -> BddScript:
    """Translate the DNF stored in ``trie`` into a BDD generation script.

    Repeats two rewrite phases until the trie is reduced to a single
    leaf under the root: a leaf that is the only child of its parent is
    conjoined with it, then the children of any node whose children are
    all leaves are disjoined.  Identical subtrees yield identical
    statements, which are emitted once and reused.
    """
    root = _working_tree(trie)
    statements: list[Statement] = []
    emitted: dict[tuple, Ref] = {}

    def emit(op: str, operands: tuple) -> Ref:
        key = (op, operands)
        ref = emitted.get(key)
        if ref is None:
            ref = Ref(len(statements) + 1)
            statements.append(Statement(ref, op, operands))
            emitted[key] = ref
        return ref

    if not root.children:
        return BddScript(statements, False)
    while not (len(root.children) == 1 and not root.children[0].children):
        conjoin = [
            node
            for node in _preorder(root)
            if node is not root and len(node.children) == 1 and not node.children[0].children
        ]
        for node in conjoin:
            node.label = emit(AND, (node.label, node.children[0].label))
            node.children = []
        disjoin = [
            node
            for node in _preorder(root)
            if len(node.children) > 1 and all(not c.children for c in node.children)
        ]
        for node in disjoin:
            ref = emit(OR, tuple(c.label for c in node.children))
            node.children = [_Work(ref, [])]
    return BddScript(statements, root.children[0].label)


def evaluate_script(mgr: BddManager, script: BddScript, node_of: Callable[[Hashable], int] | None = None) -> int:
    """Build the script's statements with apply, left-folding n-ary operations.

    Intermediate results are dropped after their last use, and the
    manager gets a chance to collect garbage or reorder after every apply.
    """
    node_of = node_of or mgr.var_node
    last_use: dict[Ref, int] = {}
    for i, s in enumerate(script.statements):
        for o in s.operands:
            if isinstance(o, Ref):
                last_use[o] = i
    values: dict[Ref, int] = {}

    def operand(o):
        if isinstance(o, Ref):
            return values[o]
        if o is True:
            return TRUE
        if o is False:
            return FALSE
        return node_of(o)

    for i, s in enumerate(script.statements):
        nodes = [operand(o) for o in s.operands]
        apply = mgr.apply_and if s.op == AND else mgr.apply_or
        result = TRUE if s.op == AND else FALSE
        for j, n in enumerate(nodes):
            result = apply(result, n)
            mgr.safe_point(lambda: [*values.values(), *nodes[j + 1:], result])
        values[s.target] = result
        for o in s.operands:
            if isinstance(o, Ref) and last_use[o] == i and o != script.top:
                values.pop(o, None)
    return operand(script.top)


def translate_trie(mgr: BddManager, trie: ProofTrie) -> int:
    """BDD of the DNF stored in ``trie``, protected from garbage collection.

    Variables not yet known to ``mgr`` are appended to its order by first
    appearance across proofs in insertion order.
    """
    for token in trie.tokens_in_order():
        mgr.add_variable(token)
    root = evaluate_script(mgr, export_script(trie))
    mgr.protected.add(root)
    return root


def parse_script(text: str) -> BddScript:
    """Read the textual script format back; variable operands stay strings."""
    statements: list[Statement] = []
    names: dict[str, Ref] = {}
    top = None

    def operand(tok: str):
        if tok in names:
            return names[tok]
        if tok == "TRUE":
            return True
        if tok == "FALSE":
            return False
        return tok

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        lhs, sep, rhs = line.partition("=")
        if not sep:
            raise BddError(f"line {lineno}: expected 'name = expression'")
        lhs = lhs.strip()
        tokens = rhs.split()
        if lhs == "top":
            if len(tokens) != 1:
                raise BddError(f"line {lineno}: top takes a single operand")
            top = operand(tokens[0])
            continue
        operands = [operand(t) for t in tokens[0::2]]
        ops = {_FROM_SYMBOL.get(t) for t in tokens[1::2]}
        if None in ops or len(ops) > 1:
            raise BddError(f"line {lineno}: mixed or unknown operators")
        op = ops.pop() if ops else AND
        ref = Ref(len(statements) + 1)
        names[lhs] = ref
        statements.append(Statement(ref, op, tuple(operands)))
    if top is None:
        raise BddError("script has no 'top' line")
    return BddScript(statements, top)


def to_dot(mgr: BddManager, root: int, name: Callable[[Hashable], str] = str, prob_of=None) -> str:
    """Graphviz rendering: solid edges for true, dashed for false."""
    lines = ["digraph bdd {", "  node [shape=circle];"]
    lines.append('  0 [shape=box,label="0"];')
    lines.append('  1 [shape=box,label="1"];')
    lookup = None
    if prob_of is not None:
        lookup = prob_of.__getitem__ if isinstance(prob_of, Mapping) else prob_of
    for n in mgr.reachable(root):
        v = mgr.var(n)
        lines.append(f'  {n} [label="{name(v)}"];')
        hi_label = lo_label = ""
        if lookup is not None:
            p = float(lookup(v))
            hi_label = f' label="{p:g}"'
            lo_label = f' label="{1 - p:g}"'
        lines.append(f"  {n} -> {mgr.high(n)} [style=solid{',' if hi_label else ''}{hi_label.strip()}];")
        lines.append(f"  {n} -> {mgr.low(n)} [style=dashed{',' if lo_label else ''}{lo_label.strip()}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
