import random

import pytest

from problite.trie import END, HASH_THRESHOLD, ProofTrie, TrieNode


def prefix_counts(proofs):
    """Distinct non-empty prefixes of a proof set, plus one end marker per proof."""
    prefixes = {tuple(p[:i]) for p in proofs for i in range(1, len(p) + 1)}
    return len(prefixes) + len(set(map(tuple, proofs)))


def random_proofs(rng, n_vars=12, max_len=6, n=20):
    return [tuple(rng.sample(range(n_vars), rng.randint(1, max_len))) for _ in range(n)]


def test_insert_and_duplicates():
    trie = ProofTrie()
    assert trie.insert(("ab", "bc"))
    assert not trie.insert(("ab", "bc"))
    assert trie.insert(("ab",))
    assert ("ab",) in trie and ("ab", "bc") in trie and ("bc",) not in trie
    assert len(trie) == 2
    with pytest.raises(ValueError):
        trie.insert(())


def test_node_count_matches_prefix_oracle():
    rng = random.Random(7)
    for _ in range(200):
        proofs = random_proofs(rng)
        trie = ProofTrie(proofs)
        assert trie.node_count == prefix_counts(proofs)
        assert list(trie.proofs()) == list(dict.fromkeys(proofs))


def test_membership_against_set():
    rng = random.Random(11)
    for _ in range(500):
        proofs = random_proofs(rng, n_vars=6, max_len=4, n=rng.randint(0, 15))
        trie = ProofTrie(proofs)
        stored = set(proofs)
        for probe in random_proofs(rng, n_vars=6, max_len=4, n=10) + proofs:
            assert (probe in trie) == (probe in stored)


def test_ninth_child_promotes_to_hash():
    node = TrieNode("r", None)
    for i in range(HASH_THRESHOLD):
        node.add_child(i)
        assert node.index is None
    node.add_child(HASH_THRESHOLD)
    assert node.index is not None and len(node.index) == HASH_THRESHOLD + 1
    assert [c.token for c in node.children()] == list(range(HASH_THRESHOLD + 1))
    for i in range(HASH_THRESHOLD + 1):
        assert node.find_child(i).token == i
    assert node.find_child("missing") is None


def test_promotion_preserves_lookup_results():
    rng = random.Random(3)
    for _ in range(50):
        tokens = rng.sample(range(1000), rng.randint(1, 40))
        node = TrieNode("r", None)
        before = {}
        for i, t in enumerate(tokens):
            child = node.add_child(t)
            before[t] = child
            if i == HASH_THRESHOLD - 1:
                linear = {t2: node.find_child(t2) for t2 in before}
        for t, child in before.items():
            assert node.find_child(t) is child
        if len(tokens) > HASH_THRESHOLD:
            assert node.index is not None
            for t, child in linear.items():
                assert node.find_child(t) is child


def test_thousand_children():
    trie = ProofTrie((i,) for i in range(1000))
    assert trie.root.n_children == 1000
    assert all((i,) in trie for i in range(1000))
    assert (1000,) not in trie


def test_bottom_up_visits_children_first():
    trie = ProofTrie([("a", "b"), ("a", "c"), ("d",)])
    seen = []
    trie.iterate_bottom_up(seen.append)
    position = {id(n): i for i, n in enumerate(seen)}
    for node in seen:
        for child in node.children():
            assert position[id(child)] < position[id(node)]
    assert seen[-1] is trie.root
    assert sum(1 for n in seen if n.token is END) == 3


def test_first_appearance_order_and_dump():
    trie = ProofTrie([("ac", "cd"), ("ab", "bc", "cd"), ("ac", "ce", "ed")])
    assert trie.tokens_in_order() == ["ac", "cd", "ab", "bc", "ce", "ed"]
    assert trie.dump() == "\n".join(
        ["root", "  ac", "    cd", "      .", "    ce", "      ed", "        .", "  ab", "    bc", "      cd", "        ."]
    )
