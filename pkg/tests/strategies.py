"""Hypothesis strategies for small structures and formulas."""

from __future__ import annotations

import itertools
import random

from hypothesis import strategies as st

from fmtk.sampling import random_formula
from fmtk.structures import Structure, Vocabulary

GRAPH_VOCAB = Vocabulary({"E": 2})
MIXED_VOCAB = Vocabulary({"E": 2, "P": 1})
CONST_VOCAB = Vocabulary({"E": 2, "P": 1}, ("c",))


@st.composite
def structures(draw, vocab=MIXED_VOCAB, min_size=0, max_size=5):
    n = draw(st.integers(min_size, max_size))
    if vocab.constants and n == 0:
        n = 1
    elements = list(range(n))
    rels = {}
    for name, arity in vocab.relations:
        candidates = list(itertools.product(elements, repeat=arity))
        flags = draw(st.lists(st.booleans(), min_size=len(candidates), max_size=len(candidates)))
        rels[name] = [t for t, f in zip(candidates, flags) if f]
    consts = {c: draw(st.sampled_from(elements)) for c in vocab.constants}
    return Structure(vocab, elements, rels, consts)


@st.composite
def pointed_structures(draw, vocab=MIXED_VOCAB, max_size=5, k=1):
    A = draw(structures(vocab, min_size=1 if k else 0, max_size=max_size))
    tup = tuple(draw(st.sampled_from(A.elements)) for _ in range(k))
    return A, tup


@st.composite
def sentences(draw, vocab=MIXED_VOCAB, max_rank=3, logic="fo", size=6):
    seed = draw(st.integers(0, 2**32 - 1))
    rank = draw(st.integers(0, max_rank))
    return random_formula(random.Random(seed), vocab, rank, (), logic, size)
