"""Timed acceptance gate: one PASS/FAIL line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
`python3 tests/test_acceptance.py`.
"""

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from composition import cograph_merge_suite, nested_word_suite, tree_join_suite
from oracles import naive_homomorphism_exists
from strategies import CONST_VOCAB, MIXED_VOCAB
from test_classes import FIXTURE, all_nested_words
from test_preservation import duality_instance
from test_transl import QF_SCHEMES, WIDE, fundamental_property

from fmtk.classes import builtin_oracle, nested_word_to_tree, str_unordered, str_word, tree_to_nested_word
from fmtk.config import TREE_CAPS, Caps
from fmtk.ebsp import decide_bounded_theory, ebsp_condition, unary_witness_bound
from fmtk.equivalence import ef_game_decide, equivalent, rank_type
from fmtk.families import FamilySpec, Unary, Words
from fmtk.logic import Not, canonical_conjunctive_query, evaluate, parse_formula, rank, relativize
from fmtk.preservation import check_pce_k, check_psc_k, glt_counterexample, glt_translate, is_partial_isomorphism
from fmtk.sampling import random_chain, random_formula, random_structure, random_tree, random_tuple
from fmtk.structures import PointedStructure, find_embedding, induced_substructure, path
from fmtk.transl import SCHEME_NAMES, apply_structure, builtin_scheme, default_width
from fmtk.treerep import parse_tree, reduce_with_report

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []


def gate(number: int, title: str, limit: float, check):
    """Run check() -> (ok, detail) under a time limit and record one line."""
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < limit
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    RESULTS.append(line)
    print(line)
    assert passed, line


def failures_of(items):
    bad = [i for i, ok in enumerate(items) if not ok]
    return not bad, bad


# ---------------------------------------------------------------- 1


def relativization_cases(count=200):
    rng = random.Random(101)
    for i in range(count):
        with_constant = i % 2 == 1
        vocab = CONST_VOCAB if with_constant else MIXED_VOCAB
        A = random_structure(rng, vocab, rng.randint(1, 6))
        psi = random_formula(rng, vocab, rng.randint(0, 3), ())
        if with_constant:
            tup = random_tuple(rng, A, rng.randint(0, 2)) + (A.const("c"),)
        else:
            tup = random_tuple(rng, A, rng.randint(0, 3))
        xs = [f"u{j}" for j in range(len(tup))]
        yield evaluate(A, relativize(psi, xs), dict(zip(xs, tup))) == evaluate(induced_substructure(A, set(tup)), psi)


def test_relativization():
    def check():
        ok, bad = failures_of(relativization_cases())
        return ok, f"200 cases, mismatches {bad}"

    gate(1, "relativization oracle", 10, check)


# ---------------------------------------------------------------- 2


def test_types_agree_with_games():
    def check():
        rng = random.Random(202)
        results, mso_pairs = [], 0
        for i in range(100):
            if i % 2 == 0:
                A, B = (random_structure(rng, CONST_VOCAB, rng.randint(1, 5)) for _ in range(2))
                k = rng.randint(0, 1)
                A, B = PointedStructure(A, random_tuple(rng, A, k)), PointedStructure(B, random_tuple(rng, B, k))
                m, logic = rng.randint(0, 3), "fo"
            else:
                A, B = (random_structure(rng, MIXED_VOCAB, rng.randint(0, 4)) for _ in range(2))
                m, logic = rng.randint(0, 2), "mso"
                mso_pairs += 1
            results.append(equivalent(A, B, m, logic) == ef_game_decide(A, B, m, logic))
        ok, bad = failures_of(results)
        return ok, f"{100 - mso_pairs} FO + {mso_pairs} MSO pairs, disagreements {bad}"

    gate(2, "type/game agreement", 60, check)


# ---------------------------------------------------------------- 3


def test_path_facts():
    def check():
        big = Caps(fo_universe=20)
        facts = {
            "P9 ~2 P10": equivalent(path(9), path(10), 2, caps=big),
            "P9 ~2 P12": equivalent(path(9), path(12), 2, caps=big),
            "P1 !~2 P9": not equivalent(path(1), path(9), 2, caps=big),
            "P0 !~2 P9": not equivalent(path(0), path(9), 2, caps=big),
        }
        return all(facts.values()), ", ".join(f"{k}: {v}" for k, v in facts.items())

    gate(3, "path threshold facts", 5, check)


# ---------------------------------------------------------------- 4


def test_chandra_merlin():
    def check():
        rng = random.Random(404)
        results = []
        for _ in range(200):
            A = random_structure(rng, MIXED_VOCAB, rng.randint(0, 5), density=0.3)
            B = random_structure(rng, MIXED_VOCAB, rng.randint(0, 5), density=0.5)
            results.append(evaluate(B, canonical_conjunctive_query(A)) == naive_homomorphism_exists(A, B))
        ok, bad = failures_of(results)
        return ok, f"200 pairs, mismatches {bad}"

    gate(4, "Chandra-Merlin", 30, check)


# ---------------------------------------------------------------- 5


def test_glt_translation():
    def check():
        phi = parse_formula("exists x. P(x)")
        chi = glt_translate(phi, 1, 3)
        members = FamilySpec.generated(Unary(("P",)), 6).structures()
        results = [evaluate(A, chi) == evaluate(A, phi) for A in members]
        ok, bad = failures_of(results)
        return ok, f"{len(members)} structures up to isomorphism, rank(chi) = {rank(chi)}, mismatches {bad}"

    gate(5, "GLT translation", 10, check)


# ---------------------------------------------------------------- 6


def test_duality():
    def check():
        rng = random.Random(606)
        mismatches, inconclusive, held = [], 0, 0
        for i in range(20):
            family, phi, k = duality_instance(rng)
            psc = check_psc_k(family, phi, k)
            pce = check_pce_k(family, Not(phi), k, cover_cap=6)
            inconclusive += pce.verdict == "inconclusive"
            held += psc.holds
            if psc.holds != pce.holds:
                mismatches.append(i)
        ok = not mismatches and not inconclusive
        return ok, f"20 instances ({held} PSC holds), mismatches {mismatches}, inconclusive {inconclusive}"

    gate(6, "PSC/PCE duality", 120, check)


# ---------------------------------------------------------------- 7


def test_composition_suites():
    def check():
        rng = random.Random(707)
        counts = {}
        runs = [("ordered joins", lambda n, m: tree_join_suite(rng, n, 2, ordered=True), [2])]
        runs += [
            ("nested insert/concat", lambda n, m: nested_word_suite(rng, n, m), [0, 1, 2]),
            ("cograph merge", lambda n, m: cograph_merge_suite(rng, n, m), [0, 1, 2]),
            ("unordered joins", lambda n, m: tree_join_suite(rng, n, m, ordered=False), [0, 1, 2]),
        ]
        ok = True
        for name, suite, ms in runs:
            shares = [100 // len(ms) + (1 if j < 100 % len(ms) else 0) for j in range(len(ms))]
            instances = failures = fresh = 0
            for m, share in zip(ms, shares):
                out = suite(share, m)
                instances += out.instances
                failures += len(out.failures)
                fresh += out.non_isomorphic_pairs
            counts[name] = f"{instances} ({fresh} non-iso, {failures} failed)"
            ok = ok and failures == 0 and instances >= 100
        return ok, "; ".join(f"{k}: {v}" for k, v in counts.items())

    gate(7, "composition suites", 300, check)


# ---------------------------------------------------------------- 8


def tree_reduction_case(t, oracle, str_map):
    rep = reduce_with_report(t, [(oracle, 2)])
    s = rep.tree
    small, big = str_map(s, ["a", "b"]), str_map(t, ["a", "b"])
    history = rep.size_history
    return (
        find_embedding(small, big) is not None
        and rank_type(small, 2, caps=TREE_CAPS) is rank_type(big, 2, caps=TREE_CAPS)
        and s.height <= rep.height_vectors
        and s.degree <= max(1, rep.degree_vectors)
        and history[0] == len(t)
        and all(a > b for a, b in zip(history, history[1:]))
    )


def test_tree_reduction():
    def check():
        rng = random.Random(808)
        words, unordered = builtin_oracle("words"), builtin_oracle("unordered")
        results, largest = [], 0
        for i in range(50):
            n = rng.randint(1, 200)
            largest = max(largest, n)
            if i % 2 == 0:
                results.append(tree_reduction_case(random_chain(rng, n), words, str_word))
            else:
                results.append(tree_reduction_case(random_tree(rng, n), unordered, str_unordered))
        ok, bad = failures_of(results)
        return ok, f"25 chains (words) + 25 trees (unordered), largest {largest} nodes, failures {bad}"

    gate(8, "tree reduction", 120, check)


# ---------------------------------------------------------------- 9


def test_unary_ebsp_bound():
    def check():
        rng = random.Random(909)
        gen = Unary(("P", "Q"))
        family = FamilySpec.generated(gen, 30)
        caps = Caps(fo_universe=64, subset_limit=1 << 22)
        misses, tight = [], 0
        for i in range(100):
            A = gen.build([rng.choice(gen.colours()) for _ in range(rng.randint(1, 30))])
            k, m = rng.randint(0, 1), rng.randint(0, 2)
            pins = tuple(rng.choice(A.elements) for _ in range(k))
            bound = unary_witness_bound(2, k)(m)
            B = ebsp_condition(family, A, pins, m, bound, caps=caps)
            if B is None:
                misses.append(i)
            else:
                tight += len(B) == bound
        return not misses, f"100 structures, misses {misses}, witnesses at the bound {tight}"

    gate(9, "EBSP unary bound", 60, check)


# ---------------------------------------------------------------- 10


def test_psi_fixture():
    def check():
        fx = glt_counterexample(1, 1)
        A, B, psi = fx
        caps = Caps(fo_universe=40)
        separates = evaluate(A, psi, caps=caps) and not evaluate(B, psi, caps=caps)
        weak_sub = B.universe == A.universe and all(B.rel(r) <= A.rel(r) for r in A.vocab.relation_names)
        rng = random.Random(1010)
        outside = [x for x in A.elements if x not in fx.block_range()]
        results = []
        for _ in range(100):
            witnesses = [rng.choice(outside) for _ in range(fx.k)]
            e = [rng.choice(B.elements) for _ in range(fx.n)]
            rho = fx.segment_map(witnesses, e)
            results.append(set(e) <= set(rho) and all(rho[a] == a for a in witnesses) and is_partial_isomorphism(B, A, rho))
        ok, bad = failures_of(results)
        return separates and weak_sub and ok, f"A |= psi and B |/= psi: {separates}, B <= A: {weak_sub}, 100 tuples, failed {bad}"

    gate(10, "psi_k fixture", 30, check)


# ---------------------------------------------------------------- 11


def test_transduction_property():
    def check():
        rng = random.Random(1111)
        property_ok = [fundamental_property(rng, rng.choice(SCHEME_NAMES)) for _ in range(100)]
        substructure_ok = []
        for _ in range(100):
            scheme = builtin_scheme(rng.choice(QF_SCHEMES))
            A = random_structure(rng, scheme.source, rng.randint(1, 4))
            B = induced_substructure(A, {x for x in A.universe if rng.random() < 0.6})
            width = default_width(A)
            big, small = apply_structure(scheme, A, width, WIDE), apply_structure(scheme, B, width, WIDE)
            substructure_ok.append(small.universe <= big.universe and induced_substructure(big, small.universe) == small)
        ok1, bad1 = failures_of(property_ok)
        ok2, bad2 = failures_of(substructure_ok)
        return ok1 and ok2, f"100 property cases failed {bad1}; 100 quantifier-free substructure cases failed {bad2}"

    gate(11, "transduction fundamental property", 60, check)


# ---------------------------------------------------------------- 12


def test_bounded_theory():
    def check():
        p = 4
        family = FamilySpec.generated(Words(("a", "b")), p)
        labels = decide_bounded_theory(family, lambda m: p, parse_formula("forall x. (a(x) | b(x))"))
        some_a = parse_formula("exists x. a(x)")
        rejected = decide_bounded_theory(family, lambda m: p, some_a)
        cert = rejected.certificate
        certified = cert is not None and family.contains(cert) and not evaluate(cert, some_a)
        word = Words(("a", "b")).word_of(cert) if cert is not None else None
        ok = labels.accepted and not rejected.accepted and certified
        return ok, f"words <= {p}: partition accepted {labels.accepted}, exists-a rejected {not rejected.accepted} with certificate {word!r}"

    gate(12, "bounded theory decision", 5, check)


# ---------------------------------------------------------------- 13


def test_nested_word_round_trip():
    def check():
        total, bad = 0, []
        for n in range(7):
            for w in all_nested_words(n):
                total += 1
                if tree_to_nested_word(nested_word_to_tree(w)) != w:
                    bad.append(w)
        expected = parse_tree("∘\n  a\n  (b,b)\n    ∘\n      a\n      (a,b)\n  a\n")
        fixture_tree = nested_word_to_tree(FIXTURE)
        fixture_ok = fixture_tree.shape() == expected.shape() and tree_to_nested_word(fixture_tree) == FIXTURE
        return not bad and fixture_ok, f"{total} nested words of length <= 6, failures {len(bad)}, abaabba fixture {fixture_ok}"

    gate(13, "nested-word round trip", 30, check)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failed = 0
    for test in sorted(tests, key=lambda f: f.__code__.co_firstlineno):
        try:
            test()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
