import random

import pytest
from hypothesis import given, settings, strategies as st

from fmtk.config import TREE_CAPS
from fmtk.classes import builtin_oracle, str_unordered, str_word
from fmtk.equivalence import equivalent, rank_type
from fmtk.errors import OracleError, ParseError, StructureError
from fmtk.sampling import random_chain, random_tree
from fmtk.structures import find_embedding
from fmtk.treerep import (
    EMPTY_TREE,
    RepresentationOracle,
    build_tree,
    chain_tree,
    degree_reduce,
    delete_subtree,
    height_reduce,
    join_below,
    join_left,
    join_right,
    merge,
    parse_tree,
    reduce,
    reduce_with_report,
    replace,
    serialize_tree,
    splice_degree,
    splice_height,
    subtree_at,
)

UNORDERED = builtin_oracle("unordered")
WORDS = builtin_oracle("words")


def star(n, leaf="a"):
    return build_tree(("r", [leaf] * n))


class TestBasics:
    def test_build_and_accessors(self):
        t = build_tree(("r", [("x", ["y"]), "z"]))
        assert len(t) == 4 and t.root == 0
        assert t.children[0] == (1, 3)
        assert t.height == 2 and t.degree == 2
        assert t.leaves() == [2, 3]
        assert t.ancestors(2) == [1, 0]

    def test_empty(self):
        assert EMPTY_TREE.is_empty() and len(EMPTY_TREE) == 0 and EMPTY_TREE.height == -1

    def test_invalid(self):
        with pytest.raises(StructureError):
            build_tree(("has space", []))
        from fmtk.treerep import LabeledOrderedTree

        with pytest.raises(StructureError):
            LabeledOrderedTree(0, {0: (1,), 1: (0,)}, {0: "a", 1: "b"})
        with pytest.raises(StructureError):
            LabeledOrderedTree(0, {0: ()}, {0: "a", 5: "b"})


class TestText:
    def test_round_trip(self):
        t = build_tree(("r", [("x", ["y", "w"]), "z"]))
        text = serialize_tree(t)
        assert text == "r\n  x\n    y\n    w\n  z\n"
        assert parse_tree(text) == t

    @pytest.mark.parametrize("text,line", [("r\n a\n", 2), ("r\n    a\n", 2), ("r\ns\n", 2), ("  r\n", 1)])
    def test_errors(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_tree(text)
        assert exc.value.line == line

    def test_empty(self):
        assert parse_tree("") is EMPTY_TREE

    @given(st.integers(1, 30), st.integers(0, 10**6))
    def test_property(self, n, seed):
        t = random_tree(random.Random(seed), n)
        assert parse_tree(serialize_tree(t)).shape() == t.shape()


class TestSurgery:
    def test_subtree_at(self):
        t = chain_tree(["a", "b", "c"])
        assert subtree_at(t, 0) == t
        assert len(subtree_at(t, 2)) == 1
        assert subtree_at(t, 1).shape() == ("b", (("c", ()),))
        with pytest.raises(StructureError):
            subtree_at(t, 9)

    def test_delete(self):
        t = build_tree(("r", ["x"]))
        assert delete_subtree(t, 1).is_leaf(0)
        t = build_tree(("r", ["x", "y", "z"]))
        assert delete_subtree(t, 2).children[0] == (1, 3)
        assert delete_subtree(chain_tree("abc"), 2).shape() == chain_tree("ab").shape()
        with pytest.raises(StructureError):
            delete_subtree(t, 0)

    def test_replace(self):
        t = build_tree(("r", ["x", "y", "z"]))
        same = replace(t, 2, subtree_at(t, 2))
        assert same.shape() == t.shape()
        grown = replace(t, 2, chain_tree("pq"))
        assert grown.height == 2
        assert [grown.labels[c] for c in grown.children[0]] == ["x", "p", "z"]
        with pytest.raises(StructureError):
            replace(t, 0, chain_tree("p"))

    def test_merge(self):
        t = build_tree(("r", ["x"]))
        s = build_tree(("r", ["y", "z"]))
        m = merge(t, s)
        assert [m.labels[c] for c in m.children[m.root]] == ["x", "y", "z"]
        with pytest.raises(StructureError):
            merge(t, build_tree("r"))
        with pytest.raises(StructureError):
            merge(t, build_tree(("q", ["y"])))
        with pytest.raises(StructureError):
            merge(EMPTY_TREE, s)

    @given(st.integers(0, 10**6))
    def test_merge_associative(self, seed):
        rng = random.Random(seed)
        parts = []
        for _ in range(3):
            t = random_tree(rng, rng.randint(2, 6))
            parts.append(build_tree(("r", [t.shape(c) for c in t.children[t.root]] or ["a"])))
        t, s1, s2 = parts
        assert merge(merge(t, s1), s2).shape() == merge(t, merge(s1, s2)).shape()

    def test_joins(self):
        t = build_tree(("r", ["x", "y"]))
        s = build_tree("s")
        right = join_right(t, 1, s)
        left = join_left(t, 1, s)
        assert [right.labels[c] for c in right.children[0]] == ["x", "s", "y"]
        assert [left.labels[c] for c in left.children[0]] == ["s", "x", "y"]
        inserted = [c for c in right.children[0] if right.labels[c] == "s"][0]
        assert delete_subtree(right, inserted) == t
        below = join_below(build_tree("r"), 0, s)
        assert below.shape() == ("r", (("s", ()),))
        with pytest.raises(StructureError):
            join_below(t, 0, s)
        with pytest.raises(StructureError):
            join_right(t, 0, s)

    def test_splices_keep_ids(self):
        t = chain_tree("abcd")
        s = splice_height(t, 1, 3)
        assert s.nodes == {0, 3} and s.children[0] == (3,)
        assert splice_height(t, 0, 2).root == 2
        u = star(5)
        assert splice_degree(u, 0, 1, 3).children[0] == (1, 4, 5)
        with pytest.raises(StructureError):
            splice_degree(u, 0, 2, 2)


class TestReduction:
    def test_small_tree_unchanged(self):
        t = build_tree(("r", ["a", "b"]))
        assert reduce(t, [(UNORDERED, 2)]) == t
        assert degree_reduce(t, [(UNORDERED, 1)]) == t

    def test_star(self):
        t = star(20)
        s = degree_reduce(t, [(UNORDERED, 1)])
        assert len(s) < len(t)
        assert s.nodes <= t.nodes
        assert equivalent(str_unordered(s), str_unordered(t), 1, caps=TREE_CAPS)

    def test_chain_height(self):
        ranked = builtin_oracle("ranked")
        t = chain_tree(["a"] * 30)
        s = height_reduce(t, [(ranked, 2)])
        assert s.height < t.height
        assert equivalent(str_unordered(s, ["a"]), str_unordered(t, ["a"]), 2, caps=TREE_CAPS)

    def test_word_length_threshold(self):
        t = chain_tree(["a"] * 30)
        s = height_reduce(t, [(WORDS, 2)])
        # linear orders of length >= 2^m - 1 agree at rank m
        assert len(s) == 3
        assert equivalent(str_word(s), str_word(t), 2, caps=TREE_CAPS)
        assert not equivalent(str_word(chain_tree("aa")), str_word(t), 2, caps=TREE_CAPS)

    def test_two_oracles(self):
        t = random_chain(random.Random(5), 40)
        s = reduce(t, [(WORDS, 2), (UNORDERED, 1)])
        assert equivalent(str_word(s, ["a", "b"]), str_word(t, ["a", "b"]), 2, caps=TREE_CAPS)
        assert equivalent(str_unordered(s, ["a", "b"]), str_unordered(t, ["a", "b"]), 1, caps=TREE_CAPS)

    def test_rejections(self):
        ordered = builtin_oracle("ordered")
        with pytest.raises(OracleError):
            degree_reduce(star(3), [(ordered, 2)])
        with pytest.raises(OracleError):
            height_reduce(star(3), [(ordered, 1)])
        with pytest.raises(OracleError):
            reduce(build_tree(("r", ["a"])), [(WORDS, 1)] * 0)
        with pytest.raises(OracleError):
            reduce(star(3), [(WORDS, 1)])
        with pytest.raises(StructureError):
            reduce(EMPTY_TREE, [(UNORDERED, 1)])

    def test_report(self):
        t = random_tree(random.Random(11), 80)
        rep = reduce_with_report(t, [(UNORDERED, 2)])
        sizes = rep.size_history
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        assert len(rep.splices) == len(sizes) - 1
        d = rep.as_dict()
        assert d["input_size"] == 80 and d["output_size"] == len(rep.tree)
        assert rep.tree.height <= rep.height_vectors

    def test_idempotent(self):
        t = random_tree(random.Random(3), 60)
        s = reduce(t, [(UNORDERED, 2)])
        assert reduce(s, [(UNORDERED, 2)]) == s

    @settings(max_examples=25)
    @given(st.integers(1, 60), st.integers(0, 10**6))
    def test_postconditions(self, n, seed):
        t = random_tree(random.Random(seed), n)
        rep = reduce_with_report(t, [(UNORDERED, 2)], verify=False)
        s = rep.tree
        small, big = str_unordered(s, ["a", "b"]), str_unordered(t, ["a", "b"])
        assert s.nodes <= t.nodes
        assert find_embedding(small, big) is not None
        assert rank_type(small, 2, caps=TREE_CAPS) == rank_type(big, 2, caps=TREE_CAPS)
        assert s.height <= rep.height_vectors
        assert s.degree <= max(1, rep.degree_vectors)

    def test_custom_oracle_flags(self):
        lazy = RepresentationOracle("plain", str_unordered)
        with pytest.raises(OracleError):
            height_reduce(star(3), [(lazy, 0)])
