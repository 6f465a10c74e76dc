"""Seeded random generators for structures, formulas and trees.

Shared by the test-suite, the acceptance gate, the experiment scripts and
the CLI so that every random draw is reproducible from a seed.
"""

from __future__ import annotations

import itertools
import random
from collections.abc import Sequence

from .logic import (
    FALSE,
    TRUE,
    And,
    Atom,
    Eq,
    Exists,
    ExistsSet,
    Forall,
    ForallSet,
    Formula,
    Implies,
    Not,
    Or,
    SetAtom,
    Var,
    Con,
)
from .structures import GRAPH, Structure, Vocabulary


def random_structure(
    rng: random.Random,
    vocab: Vocabulary,
    n: int,
    density: float = 0.35,
    ids: Sequence[int] | None = None,
) -> Structure:
    elements = list(ids) if ids is not None else list(range(n))
    rels = {}
    for name, arity in vocab.relations:
        if not elements:
            rels[name] = []
            continue
        total = len(elements) ** arity
        if total <= 4096:
            rels[name] = [t for t in itertools.product(elements, repeat=arity) if rng.random() < density]
        else:
            count = int(total * density)
            rels[name] = {tuple(rng.choice(elements) for _ in range(arity)) for _ in range(count)}
    consts = {c: rng.choice(elements) for c in vocab.constants} if elements else {}
    return Structure(vocab, elements, rels, consts)


def random_graph(rng: random.Random, n: int, density: float = 0.4, directed: bool = False, loops: bool = False) -> Structure:
    edges = set()
    for a in range(n):
        for b in range(n):
            if a == b and not loops:
                continue
            if not directed and b < a:
                continue
            if rng.random() < density:
                edges.add((a, b))
                if not directed:
                    edges.add((b, a))
    return Structure(GRAPH, range(n), {"E": edges})


def random_tuple(rng: random.Random, A: Structure, k: int, distinct: bool = False) -> tuple[int, ...]:
    if distinct:
        return tuple(rng.sample(A.elements, k))
    return tuple(rng.choice(A.elements) for _ in range(k)) if A.elements else ()


def _random_term(rng: random.Random, names: Sequence[str], constants: Sequence[str]):
    pool = [Var(v) for v in names] + [Con(c) for c in constants]
    return rng.choice(pool)


def random_formula(
    rng: random.Random,
    vocab: Vocabulary,
    rank: int,
    free: Sequence[str] = (),
    logic: str = "fo",
    size: int = 6,
    set_vars: Sequence[str] = (),
    _counter: list | None = None,
) -> Formula:
    """Random formula of quantifier rank at most `rank` with free variables among `free`."""
    counter = _counter if _counter is not None else [0]
    names = list(free)

    def leaf() -> Formula:
        options = []
        if names or vocab.constants:
            for rel, arity in vocab.relations:
                options.append(("atom", rel, arity))
            options.append(("eq",))
            if set_vars:
                options.append(("set",))
        if not options:
            return rng.choice((TRUE, FALSE))
        choice = rng.choice(options)
        if choice[0] == "atom":
            return Atom(choice[1], tuple(_random_term(rng, names, vocab.constants) for _ in range(choice[2])))
        if choice[0] == "eq":
            return Eq(_random_term(rng, names, vocab.constants), _random_term(rng, names, vocab.constants))
        return SetAtom(rng.choice(list(set_vars)), _random_term(rng, names, vocab.constants))

    if size <= 1:
        if rank > 0 and rng.random() < 0.7:
            size = 2
        else:
            return leaf()
    roll = rng.random()
    if rank > 0 and (roll < 0.45 or not names):
        counter[0] += 1
        if logic == "mso" and rng.random() < 0.35:
            v = f"X{counter[0]}"
            body = random_formula(rng, vocab, rank - 1, names, logic, size - 1, list(set_vars) + [v], counter)
            return (ExistsSet if rng.random() < 0.5 else ForallSet)(v, body)
        v = f"v{counter[0]}"
        body = random_formula(rng, vocab, rank - 1, names + [v], logic, size - 1, set_vars, counter)
        return (Exists if rng.random() < 0.5 else Forall)(v, body)
    if roll < 0.6:
        return Not(random_formula(rng, vocab, rank, names, logic, size - 1, set_vars, counter))
    left_size = max(1, (size - 1) // 2)
    cls = rng.choice((And, Or, Implies))
    return cls(
        random_formula(rng, vocab, rank, names, logic, left_size, set_vars, counter),
        random_formula(rng, vocab, rank, names, logic, size - 1 - left_size, set_vars, counter),
    )


def random_sentence(rng: random.Random, vocab: Vocabulary, rank: int, logic: str = "fo", size: int = 6) -> Formula:
    return random_formula(rng, vocab, rank, (), logic, size)


# ---------------------------------------------------------------- trees and words

def random_tree(rng: random.Random, n: int, labels: Sequence[str] = ("a", "b"), max_children: int | None = None):
    """Random ordered tree on n nodes: each new node attaches under a random earlier node."""
    from .treerep import EMPTY_TREE, LabeledOrderedTree

    if n <= 0:
        return EMPTY_TREE
    children: dict[int, list[int]] = {0: []}
    open_nodes = [0]
    for v in range(1, n):
        p = rng.choice(open_nodes)
        children[p].insert(rng.randint(0, len(children[p])), v)
        children[v] = []
        open_nodes.append(v)
        if max_children is not None and len(children[p]) >= max_children:
            open_nodes.remove(p)
    return LabeledOrderedTree(0, children, {v: rng.choice(list(labels)) for v in range(n)})


def random_chain(rng: random.Random, n: int, labels: Sequence[str] = ("a", "b")):
    from .treerep import chain_tree

    return chain_tree([rng.choice(list(labels)) for _ in range(n)])


def random_nested_word(rng: random.Random, n: int, alphabet: Sequence[str] = ("a", "b"), density: float = 0.5):
    """Random nested word of length n; matched pairs come from a random bracket walk."""
    from .classes import NestedWord

    edges = []
    open_calls: list[int] = []
    for p in range(1, n + 1):
        remaining = n - p + 1
        if open_calls and (rng.random() < density or remaining <= len(open_calls)) and rng.random() < 0.7:
            edges.append((open_calls.pop(), p))
        elif remaining > len(open_calls) + 1 and rng.random() < density:
            open_calls.append(p)
    return NestedWord(tuple(rng.choice(list(alphabet)) for _ in range(n)), tuple(edges))


def random_function_table(rng: random.Random, parts: int) -> list[list[int]]:
    table = [[0] * parts for _ in range(parts)]
    for i in range(parts):
        for j in range(i, parts):
            table[i][j] = table[j][i] = rng.randint(0, 1)
    return table


def random_cotree(rng: random.Random, leaves: int, parts: int = 2, alphabet: Sequence[str] = ("a",), max_children: int = 3):
    """Random cotree with the given number of leaves, built by repeated grouping."""
    from .classes import function_label, leaf_label
    from .treerep import LabeledOrderedTree

    labels: dict[int, str] = {}
    children: dict[int, list[int]] = {}
    forest = []
    for v in range(leaves):
        labels[v] = leaf_label(rng.randint(1, parts), rng.choice(list(alphabet)))
        children[v] = []
        forest.append(v)
    nxt = leaves
    while len(forest) > 1:
        k = min(len(forest), rng.randint(2, max(2, max_children)))
        rng.shuffle(forest)
        group, forest = forest[:k], forest[k:]
        labels[nxt] = function_label(random_function_table(rng, parts))
        children[nxt] = group
        forest.append(nxt)
        nxt += 1
    return LabeledOrderedTree(forest[0], children, labels)
