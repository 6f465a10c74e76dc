import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fmtk.classes import (
    EMPTY_NESTED_WORD,
    NestedWord,
    builtin_oracle,
    check_ranked,
    cotree_to_graph,
    format_nested_word,
    function_label,
    label_relation_names,
    leaf_label,
    nested_word_concat,
    nested_word_insert,
    nested_word_to_structure,
    nested_word_to_tree,
    parse_nested_word,
    str_nested,
    str_ordered,
    str_unordered,
    tree_to_nested_word,
    word_to_structure,
)
from fmtk.config import TREE_CAPS
from fmtk.equivalence import equivalent
from fmtk.errors import OracleError, ParseError, StructureError
from fmtk.sampling import random_cotree, random_nested_word, random_tree
from fmtk.structures import isomorphic
from fmtk.treerep import EMPTY_TREE, build_tree, chain_tree, merge, parse_tree, serialize_tree

from composition import cograph_merge_suite, nested_word_suite, tree_join_suite

FIXTURE = NestedWord.of("abaabba", [(2, 6), (4, 5)])


def all_nested_words(n, alphabet="ab"):
    """Every nested word of length n: letters times every valid matching."""

    def matchings(lo, hi):
        if lo > hi:
            yield ()
            return
        yield from matchings(lo + 1, hi)
        for j in range(lo + 1, hi + 1):
            for inner in matchings(lo + 1, j - 1):
                for rest in matchings(j + 1, hi):
                    yield ((lo, j),) + inner + rest

    for letters in itertools.product(alphabet, repeat=n):
        for edges in matchings(1, n):
            yield NestedWord(letters, edges)


class TestWords:
    def test_empty(self):
        A = word_to_structure("")
        assert len(A) == 0

    def test_ab(self):
        A = word_to_structure("ab")
        assert A.universe == {1, 2}
        assert len(A.rel("le")) == 3
        assert A.rel("a") == {(1,)} and A.rel("b") == {(2,)}

    def test_alphabet_fixes_vocabulary(self):
        assert word_to_structure("a", "ab").vocab == word_to_structure("ab").vocab

    @pytest.mark.parametrize("m", range(4))
    def test_same_word(self, m):
        assert equivalent(word_to_structure("aa"), word_to_structure("aa"), m)


class TestLabelNames:
    def test_reserved_and_odd(self):
        names = label_relation_names(["a", "le", "(a,b)", "leaf:1:a"])
        assert names["a"] == "a"
        assert names["le"].startswith("L_")
        assert len(set(names.values())) == 4

    def test_deterministic(self):
        assert label_relation_names(["x y", "x_y"]) == label_relation_names(["x_y", "x y"])


class TestTrees:
    def test_singleton(self):
        A = str_unordered(build_tree("a"))
        assert len(A) == 1 and A.rel("le") == {(0, 0)}

    def test_order_forgotten(self):
        t1 = build_tree(("r", ["a", ("b", ["a"])]))
        t2 = build_tree(("r", [("b", ["a"]), "a"]))
        assert isomorphic(str_unordered(t1), str_unordered(t2))
        assert not isomorphic(str_ordered(t1), str_ordered(t2))

    def test_chain_is_linear(self):
        A = str_unordered(chain_tree("abc"))
        assert len(A.rel("le")) == 6

    def test_ordered_leaves(self):
        t = build_tree(("r", ["a", "b", ("c", ["d"])]))
        A = str_ordered(t)
        assert len(A) == len(t)
        assert (1, 2) in A.rel("sib") and (2, 1) not in A.rel("sib")

    def test_ranked(self):
        full = build_tree(("f", [("f", ["x", "x"]), "x"]))
        assert check_ranked(full, {"f": 2})
        assert not check_ranked(build_tree(("f", ["x"])), {"f": 2})
        assert check_ranked(build_tree("x"), {})

    @given(st.integers(1, 15), st.integers(0, 10**6))
    def test_relabel_invariance(self, n, seed):
        from fmtk.treerep import relabel_tree

        t = random_tree(random.Random(seed), n)
        assert isomorphic(str_ordered(t), str_ordered(relabel_tree(t, 50)))


class TestNestedWords:
    def test_invariants(self):
        with pytest.raises(StructureError):
            NestedWord.of("ab", [(2, 1)])
        with pytest.raises(StructureError):
            NestedWord.of("abc", [(1, 2), (2, 3)])
        with pytest.raises(StructureError):
            NestedWord.of("abcd", [(1, 3), (2, 4)])

    def test_text_format(self):
        text = format_nested_word(FIXTURE)
        assert text == "letters: abaabba\nedges: (2,6) (4,5)\n"
        assert parse_nested_word(text) == FIXTURE
        assert parse_nested_word("letters: ab\nedges:\n") == NestedWord.of("ab")
        with pytest.raises(ParseError):
            parse_nested_word("letters: ab\nedges: (1,x)\n")
        with pytest.raises(ParseError):
            parse_nested_word("letters: abcd\nedges: (1,3) (2,4)\n")

    def test_insert(self):
        u = NestedWord.of("ab", [(1, 2)])
        assert nested_word_insert(u, 1, EMPTY_NESTED_WORD) == u
        assert nested_word_insert(u, 1, NestedWord.of("c")) == NestedWord.of("acb", [(1, 3)])
        v = NestedWord.of("cd", [(1, 2)])
        assert nested_word_insert(u, 2, v) == nested_word_concat(u, v) == NestedWord.of("abcd", [(1, 2), (3, 4)])
        with pytest.raises(StructureError):
            nested_word_insert(u, 3, v)

    def test_encoding_cases(self):
        assert nested_word_to_tree(EMPTY_NESTED_WORD) is EMPTY_TREE
        assert nested_word_to_tree(NestedWord.of("a")).shape() == ("a", ())
        assert nested_word_to_tree(NestedWord.of("ab", [(1, 2)])).shape() == ("(a,b)", ())

    def test_fixture_tree(self):
        t = nested_word_to_tree(FIXTURE)
        expected = parse_tree("∘\n  a\n  (b,b)\n    ∘\n      a\n      (a,b)\n  a\n")
        assert t.shape() == expected.shape()
        assert tree_to_nested_word(t) == FIXTURE
        assert serialize_tree(t).count("\n") == 7

    def test_decode(self):
        assert tree_to_nested_word(EMPTY_TREE) == EMPTY_NESTED_WORD
        assert tree_to_nested_word(build_tree("(a,b)")) == NestedWord.of("ab", [(1, 2)])
        assert tree_to_nested_word(build_tree(("<>", ["a", "b"]))) == NestedWord.of("ab")
        with pytest.raises(StructureError):
            tree_to_nested_word(build_tree(("a", ["b"])))
        with pytest.raises(StructureError):
            tree_to_nested_word(build_tree("∘"))
        with pytest.raises(StructureError):
            tree_to_nested_word(build_tree("xy"))

    @pytest.mark.parametrize("n", range(7))
    def test_round_trip_exhaustive(self, n):
        for w in all_nested_words(n):
            assert tree_to_nested_word(nested_word_to_tree(w)) == w

    def test_structure(self):
        assert len(nested_word_to_structure(EMPTY_NESTED_WORD)) == 0
        A = nested_word_to_structure(FIXTURE)
        assert len(A.rel("nest")) == 2
        assert A.rel("a") | A.rel("b") == {(i,) for i in range(1, 8)}
        assert not A.rel("a") & A.rel("b")

    @given(st.integers(0, 12), st.integers(0, 10**6))
    def test_tree_structure_matches_word(self, n, seed):
        w = random_nested_word(random.Random(seed), n)
        t = nested_word_to_tree(w)
        labels = sorted({"a", "b"} | set(t.labels.values()))
        assert isomorphic(str_nested(t, labels), nested_word_to_structure(w, "ab"))


class TestCographs:
    def test_single_leaf(self):
        G = cotree_to_graph(build_tree(leaf_label(1, "a")))
        assert len(G) == 1 and not G.rel("E")

    def test_k2(self):
        t = build_tree((function_label([[1, 1], [1, 1]]), [leaf_label(1, "a"), leaf_label(2, "a")]))
        G = cotree_to_graph(t)
        assert G.rel("E") == {(1, 2), (2, 1)}

    def test_edgeless(self):
        t = build_tree((function_label([[0, 0], [0, 0]]), [leaf_label(1, "a"), leaf_label(2, "a")]))
        assert not cotree_to_graph(t).rel("E")

    def test_bad_labels(self):
        with pytest.raises(StructureError):
            function_label([[0, 1], [0, 0]])
        with pytest.raises(StructureError):
            cotree_to_graph(build_tree(("fn:0110", ["leaf:0:a"])))
        with pytest.raises(StructureError):
            cotree_to_graph(build_tree(("fn:011", ["leaf:1:a"])))
        with pytest.raises(StructureError):
            cotree_to_graph(build_tree(("fn:1", ["leaf:1:a", "leaf:2:a"])))

    def test_parts(self):
        t = build_tree((function_label([[0, 1], [1, 0]]), [leaf_label(1, "a"), leaf_label(2, "b")]))
        G = cotree_to_graph(t, parts=True)
        assert G.rel("part1") == {(1,)} and G.rel("b") == {(2,)}

    @settings(max_examples=40)
    @given(st.integers(1, 12), st.integers(1, 3), st.integers(0, 10**6))
    def test_gca_brute_force(self, leaves, parts, seed):
        t = random_cotree(random.Random(seed), leaves, parts, ("a", "b"))
        G = cotree_to_graph(t)
        leaf_ids = t.leaves()
        for x in leaf_ids:
            for y in leaf_ids:
                if x == y:
                    continue
                ancestors_x = [x] + t.ancestors(x)
                gca = next(a for a in [y] + t.ancestors(y) if a in ancestors_x)
                bits = t.labels[gca][3:]
                n = int(len(bits) ** 0.5)
                i, j = int(t.labels[x].split(":")[1]), int(t.labels[y].split(":")[1])
                assert ((x, y) in G.rel("E")) == (bits[(i - 1) * n + j - 1] == "1")

    def test_merge_needs_parts(self):
        # without the part predicates merge does not respect equivalence
        zero = function_label([[0, 1], [1, 0]])
        t1 = build_tree((zero, [leaf_label(1, "a"), leaf_label(1, "a")]))
        t2 = build_tree((zero, [leaf_label(2, "a"), leaf_label(2, "a")]))
        s = build_tree((zero, [leaf_label(1, "a")]))
        plain = lambda t: cotree_to_graph(t, labels=[leaf_label(2, "a")])  # noqa: E731
        assert equivalent(plain(t1), plain(t2), 2)
        assert not equivalent(plain(merge(t1, s)), plain(merge(t2, s)), 2)
        with_parts = lambda t: cotree_to_graph(t, parts=True, labels=[leaf_label(2, "a")])  # noqa: E731
        assert not equivalent(with_parts(t1), with_parts(t2), 1)


class TestOracles:
    def test_flags(self):
        assert builtin_oracle("unordered").min_rank == 0
        assert builtin_oracle("ordered").min_rank == 2
        assert not builtin_oracle("ranked").degree_favourable
        nested = builtin_oracle("nested")
        assert nested.height_favourable and nested.degree_favourable and nested.min_rank == 2
        cograph = builtin_oracle("cograph")
        assert cograph.degree_favourable and cograph.min_rank == 0
        with pytest.raises(OracleError):
            builtin_oracle("forest")

    def test_feasibility(self):
        assert builtin_oracle("nested").feasible(nested_word_to_tree(FIXTURE))
        assert not builtin_oracle("nested").feasible(build_tree(("a", ["b"])))
        assert not builtin_oracle("words").feasible(build_tree(("a", ["b", "c"])))
        assert builtin_oracle("cograph").feasible(random_cotree(random.Random(0), 5))
        assert not builtin_oracle("ranked", {"f": 2}).feasible(build_tree(("f", ["x"])))

    @given(st.integers(1, 10), st.integers(0, 10**6))
    def test_isomorphic_trees_give_isomorphic_structures(self, n, seed):
        from fmtk.treerep import relabel_tree

        rng = random.Random(seed)
        t = random_tree(rng, n)
        for name in ("unordered", "ordered"):
            oracle = builtin_oracle(name)
            assert isomorphic(oracle.structure(t), oracle.structure(relabel_tree(t, 40)))


class TestComposition:
    def test_ordered_joins(self):
        out = tree_join_suite(random.Random(1), 30, 2, ordered=True)
        assert not out.failures

    def test_ordered_joins_fail_below_min_rank(self):
        out = tree_join_suite(random.Random(1), 60, 1, ordered=True)
        assert out.failures

    @pytest.mark.parametrize("m", range(3))
    def test_unordered_joins(self, m):
        assert not tree_join_suite(random.Random(m), 30, m, ordered=False).failures

    @pytest.mark.parametrize("m", range(3))
    def test_nested_words(self, m):
        assert not nested_word_suite(random.Random(m), 30, m).failures

    @pytest.mark.parametrize("m", range(3))
    def test_cograph_merge(self, m):
        assert not cograph_merge_suite(random.Random(m), 30, m).failures

    def test_nested_word_reduction(self):
        w = random_nested_word(random.Random(4), 60)
        t = nested_word_to_tree(w)
        from fmtk.treerep import reduce

        s = reduce(t, [(builtin_oracle("nested"), 2)])
        labels = sorted(set(t.labels.values()))
        small, big = str_nested(s, labels), str_nested(t, labels)
        assert equivalent(small, big, 2, caps=TREE_CAPS)
        assert len(s) <= len(t)
