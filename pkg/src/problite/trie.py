"""Prefix-sharing trie of proofs.

Nodes follow the classic four-field layout (token, first child, parent,
next sibling).  A node whose sibling list grows past eight children gets
a hash index over its children in addition to the list.
"""

from __future__ import annotations

from typing import Callable, Hashable, Iterable, Iterator, Sequence

__all__ = ["END", "TrieNode", "ProofTrie", "HASH_THRESHOLD"]

HASH_THRESHOLD = 8


class _Marker:
    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label

    def __repr__(self) -> str:
        return self.label


END = _Marker("<end>")
ROOT = _Marker("<root>")


class TrieNode:
    __slots__ = ("token", "first_child", "parent", "next_sibling", "last_child", "n_children", "index")

    def __init__(self, token, parent: TrieNode | None):
        self.token = token
        self.parent = parent
        self.first_child: TrieNode | None = None
        self.next_sibling: TrieNode | None = None
        self.last_child: TrieNode | None = None
        self.n_children = 0
        self.index: dict | None = None

    def children(self) -> Iterator[TrieNode]:
        child = self.first_child
        while child is not None:
            yield child
            child = child.next_sibling

    def find_child(self, token) -> TrieNode | None:
        if self.index is not None:
            return self.index.get(token)
        child = self.first_child
        while child is not None:
            if child.token == token:
                return child
            child = child.next_sibling
        return None

    def add_child(self, token) -> TrieNode:
        node = TrieNode(token, self)
        if self.last_child is None:
            self.first_child = node
        else:
            self.last_child.next_sibling = node
        self.last_child = node
        self.n_children += 1
        if self.index is not None:
            self.index[token] = node
        elif self.n_children > HASH_THRESHOLD:
            self.promote_to_hash()
        return node

    def promote_to_hash(self) -> None:
        # dict grows its table as needed, which covers dynamic expansion
        self.index = {child.token: child for child in self.children()}

    @property
    def is_end(self) -> bool:
        return self.token is END

    def __repr__(self) -> str:
        return f"TrieNode({self.token!r})"


class ProofTrie:
    """Set of proofs (token sequences) stored with shared prefixes.

    Every stored proof ends in an END marker node, so a proof that is a
    prefix of another stored proof is still distinguishable.
    """

    def __init__(self, proofs: Iterable[Sequence[Hashable]] = ()):
        self.root = TrieNode(ROOT, None)
        self.leaves: list[TrieNode] = []
        self.node_count = 0
        for proof in proofs:
            self.insert(proof)

    @property
    def proof_count(self) -> int:
        return len(self.leaves)

    def __len__(self) -> int:
        return len(self.leaves)

    def insert(self, proof: Sequence[Hashable]) -> bool:
        """Store ``proof``; returns False when it was already present."""
        if not proof:
            raise ValueError("cannot store an empty proof")
        node = self.root
        for token in proof:
            child = node.find_child(token)
            if child is None:
                child = node.add_child(token)
                self.node_count += 1
            node = child
        if node.find_child(END) is not None:
            return False
        self.leaves.append(node.add_child(END))
        self.node_count += 1
        return True

    def __contains__(self, proof: Sequence[Hashable]) -> bool:
        node = self.root
        for token in proof:
            node = node.find_child(token)
            if node is None:
                return False
        return node.find_child(END) is not None

    @staticmethod
    def path(leaf: TrieNode) -> tuple:
        tokens = []
        node = leaf.parent
        while node is not None and node.token is not ROOT:
            tokens.append(node.token)
            node = node.parent
        return tuple(reversed(tokens))

    def proofs(self) -> Iterator[tuple]:
        """Stored proofs in insertion order."""
        for leaf in self.leaves:
            yield self.path(leaf)

    def tokens_in_order(self) -> list:
        """Distinct tokens by first appearance across proofs in insertion order."""
        seen: dict = {}
        for proof in self.proofs():
            for token in proof:
                if token not in seen:
                    seen[token] = None
        return list(seen)

    def iterate_bottom_up(self, visitor: Callable[[TrieNode], None]) -> None:
        """Visit every node after all of its children (root last)."""
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                visitor(node)
                continue
            stack.append((node, True))
            children = list(node.children())
            for child in reversed(children):
                stack.append((child, False))

    def dump(self, name: Callable[[object], str] = str) -> str:
        """Indented text rendering, one token per line."""
        lines = ["root"]
        stack = [(child, 1) for child in reversed(list(self.root.children()))]
        while stack:
            node, depth = stack.pop()
            label = "." if node.token is END else name(node.token)
            lines.append("  " * depth + label)
            stack.extend((child, depth + 1) for child in reversed(list(node.children())))
        return "\n".join(lines)
