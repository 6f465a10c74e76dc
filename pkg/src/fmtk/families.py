"""Finite slices of structure classes.

A family is either an explicit list of structures (closed under isomorphism
by convention) or a named generator together with a size bound.  Either can
be narrowed by a class sentence.  Generators enumerate one representative
per isomorphism class and come with a structural membership test, so that
induced substructures can be checked for membership without enumeration.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

from .config import Caps, resolve
from .errors import CapExceeded, StructureError, VocabularyError
from .logic import Formula, evaluate, is_sentence
from .structures import GRAPH, Structure, Vocabulary, dedupe_isomorphic, invariant_key, isomorphic
from .classes import ORDER, label_relation_names, word_to_structure


class Generator:
    """A class of structures with enumeration up to isomorphism and a membership test."""

    name = "generator"
    vocab: Vocabulary = GRAPH
    hereditary = True

    def of_size(self, n: int) -> list[Structure]:
        raise NotImplementedError

    def member(self, S: Structure) -> bool:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


def _signature(S: Structure, x: int) -> tuple:
    sig = []
    for name in S.vocab.relation_names:
        ts = S.rel(name)
        sig.append(tuple(sum(1 for t in ts if t[i] == x) for i in range(S.vocab.arity(name))))
        sig.append(sum(1 for t in ts if all(y == x for y in t)))
    return tuple(sig)


def canonical_form(S: Structure) -> tuple:
    """Isomorphism-complete key for small constant-free structures.

    Elements are grouped by a degree signature and only permuted inside
    groups; the lexicographically least relabelled fact list wins.
    """
    groups: dict[tuple, list[int]] = {}
    for x in S.elements:
        groups.setdefault(_signature(S, x), []).append(x)
    order = sorted(groups)
    best = None
    for perms in itertools.product(*(itertools.permutations(groups[g]) for g in order)):
        ranking = {x: i for i, x in enumerate(itertools.chain.from_iterable(perms))}
        facts = tuple(
            tuple(sorted(tuple(ranking[y] for y in t) for t in S.rel(name))) for name in S.vocab.relation_names
        )
        if best is None or facts < best:
            best = facts
    return (len(S), tuple(order), best)


class _Augmenting(Generator):
    """Hereditary classes grown one element at a time, deduplicated by isomorphism."""

    def __init__(self):
        self._levels: list[list[Structure]] = [[Structure(self.vocab, ())]]

    def _extensions(self, S: Structure, new: int) -> Iterator[Structure]:
        raise NotImplementedError

    def of_size(self, n: int) -> list[Structure]:
        while len(self._levels) <= n:
            size = len(self._levels)
            level = {}
            for S in self._levels[-1]:
                for T in self._extensions(S, size - 1):
                    if self.member(T):
                        level.setdefault(canonical_form(T), T)
            self._levels.append(list(level.values()))
        return self._levels[n]


class Graphs(_Augmenting):
    """Simple undirected graphs: E symmetric and irreflexive."""

    name = "graphs"

    def _extensions(self, S, new):
        old = S.elements
        for r in range(len(old) + 1):
            for nbrs in itertools.combinations(old, r):
                edges = set(S.rel("E"))
                edges.update((v, new) for v in nbrs)
                edges.update((new, v) for v in nbrs)
                yield Structure(GRAPH, S.universe | {new}, {"E": edges})

    def member(self, S):
        return _is_simple_graph(S)


class Digraphs(_Augmenting):
    """All {E}-structures, loops allowed."""

    name = "digraphs"

    def _extensions(self, S, new):
        fresh = [(v, new) for v in S.elements] + [(new, v) for v in S.elements] + [(new, new)]
        for r in range(len(fresh) + 1):
            for chosen in itertools.combinations(fresh, r):
                yield Structure(GRAPH, S.universe | {new}, {"E": S.rel("E") | set(chosen)})

    def member(self, S):
        return S.vocab == GRAPH


class PathUnions(Generator):
    """Disjoint unions of undirected paths, optionally with few components."""

    def __init__(self, max_components: int | None = None):
        self.max_components = max_components
        self.hereditary = max_components is None
        self.name = "paths" if max_components is None else f"paths:{max_components}"

    def of_size(self, n):
        out = []
        for parts in _partitions(n):
            if self.max_components is not None and len(parts) > self.max_components:
                continue
            edges, start = [], 0
            for size in parts:
                edges += [(start + i, start + i + 1) for i in range(size - 1)]
                start += size
            sym = edges + [(b, a) for a, b in edges]
            out.append(Structure(GRAPH, range(n), {"E": sym}))
        return out

    def member(self, S):
        if not _is_simple_graph(S):
            return False
        nbrs = {v: set() for v in S.universe}
        for a, b in S.rel("E"):
            nbrs[a].add(b)
        if any(len(ns) > 2 for ns in nbrs.values()):
            return False
        # acyclic with max degree 2: every component has one more vertex than edges
        components = _components(nbrs)
        if len(S.rel("E")) // 2 != len(S) - components:
            return False
        return self.max_components is None or components <= self.max_components


class Unary(Generator):
    """Structures over unary predicates only: one per multiset of colours."""

    def __init__(self, predicates: Sequence[str] = ("P",)):
        self.predicates = tuple(predicates)
        self.vocab = Vocabulary({p: 1 for p in self.predicates})
        self.name = "unary:" + ",".join(self.predicates)

    def colours(self) -> list[tuple[int, ...]]:
        return list(itertools.product((0, 1), repeat=len(self.predicates)))

    def build(self, colouring: Sequence[tuple[int, ...]]) -> Structure:
        rels = {p: [(i,) for i, c in enumerate(colouring) if c[j]] for j, p in enumerate(self.predicates)}
        return Structure(self.vocab, range(len(colouring)), rels)

    def of_size(self, n):
        return [self.build(c) for c in itertools.combinations_with_replacement(self.colours(), n)]

    def member(self, S):
        return S.vocab == self.vocab


class Words(Generator):
    """Word structures over a fixed alphabet: positions, `le`, one predicate per letter."""

    def __init__(self, alphabet: Sequence[str] = ("a", "b")):
        self.alphabet = tuple(sorted(set(alphabet)))
        names = label_relation_names(self.alphabet)
        self.letter_names = tuple(names[a] for a in self.alphabet)
        self.vocab = word_to_structure((), self.alphabet).vocab
        self.name = "words:" + "".join(self.alphabet)

    def of_size(self, n):
        return [word_to_structure(w, self.alphabet) for w in itertools.product(self.alphabet, repeat=n)]

    def word_of(self, S: Structure) -> str:
        order = sorted(S.universe, key=lambda x: sum(1 for y in S.universe if (y, x) in S.rel(ORDER)))
        letter = {}
        for a, name in zip(self.alphabet, self.letter_names):
            for (x,) in S.rel(name):
                letter[x] = a
        return "".join(letter[x] for x in order)

    def member(self, S):
        if S.vocab != self.vocab:
            return False
        le = S.rel(ORDER)
        xs = S.elements
        for x in xs:
            if (x, x) not in le:
                return False
        for x, y in itertools.combinations(xs, 2):
            if ((x, y) in le) == ((y, x) in le):
                return False
        for x, y, z in itertools.permutations(xs, 3):
            if (x, y) in le and (y, z) in le and (x, z) not in le:
                return False
        counts = {x: 0 for x in xs}
        for name in self.letter_names:
            for (x,) in S.rel(name):
                counts[x] += 1
        return all(c == 1 for c in counts.values())


def _is_simple_graph(S: Structure) -> bool:
    if S.vocab != GRAPH:
        return False
    E = S.rel("E")
    return all(a != b and (b, a) in E for a, b in E)


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _components(nbrs: dict[int, set[int]]) -> int:
    seen, count = set(), 0
    for v in nbrs:
        if v in seen:
            continue
        count += 1
        stack = [v]
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(nbrs[u] - seen)
    return count


def generator_from_name(text: str) -> Generator:
    """`graphs`, `digraphs`, `paths`, `paths:2`, `unary:P,Q`, `words:ab`."""
    head, _, arg = text.partition(":")
    if head == "graphs" and not arg:
        return Graphs()
    if head == "digraphs" and not arg:
        return Digraphs()
    if head == "paths":
        return PathUnions(int(arg) if arg else None)
    if head == "unary":
        return Unary(arg.split(",") if arg else ("P",))
    if head == "words":
        return Words(tuple(arg) if arg else ("a", "b"))
    raise VocabularyError(f"unknown family generator {text!r}")


@dataclass(frozen=True)
class FamilySpec:
    """A finite family: explicit members or generator + size bound, narrowed by a class sentence."""

    generator: Generator | None = None
    size_bound: int = 4
    members: tuple[Structure, ...] = ()
    class_sentence: Formula | None = None
    hereditary: bool | None = None
    min_size: int = 0
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.generator is not None and self.members:
            raise StructureError("a family has either a generator or explicit members, not both")
        vocabs = {S.vocab for S in self.members}
        if len(vocabs) > 1:
            raise VocabularyError("family members must share one vocabulary")
        if self.class_sentence is not None and not is_sentence(self.class_sentence):
            raise StructureError("the class sentence must be a sentence")
        if self.hereditary is None:
            object.__setattr__(self, "hereditary", bool(self.generator and self.generator.hereditary))
        for S in self.members:
            self._index.setdefault(invariant_key(S), []).append(S)

    @classmethod
    def of(cls, members: Iterable[Structure], class_sentence: Formula | None = None, hereditary: bool = False):
        return cls(None, 0, tuple(members), class_sentence, hereditary)

    @classmethod
    def generated(
        cls, name: str | Generator, size_bound: int, class_sentence: Formula | None = None, min_size: int = 0
    ):
        gen = generator_from_name(name) if isinstance(name, str) else name
        return cls(gen, size_bound, (), class_sentence, min_size=min_size)

    def with_bound(self, size_bound: int) -> "FamilySpec":
        return FamilySpec(self.generator, size_bound, self.members, self.class_sentence, self.hereditary, self.min_size)

    @property
    def vocab(self) -> Vocabulary:
        if self.generator is not None:
            return self.generator.vocab
        return self.members[0].vocab if self.members else GRAPH

    @property
    def name(self) -> str:
        if self.generator is not None:
            return f"{self.generator.describe()}<={self.size_bound}"
        return f"explicit[{len(self.members)}]"

    def _sentence_ok(self, S: Structure) -> bool:
        return self.class_sentence is None or evaluate(S, self.class_sentence)

    def structures(self, caps: Caps | None = None) -> list[Structure]:
        """One representative per isomorphism class, ascending size."""
        if self.generator is None:
            reps = dedupe_isomorphic(sorted(self.members, key=len))
            return [S for S in reps if len(S) >= self.min_size and self._sentence_ok(S)]
        caps = resolve(caps)
        if self.size_bound > caps.family_size:
            raise CapExceeded(f"family size bound {self.size_bound} exceeds cap {caps.family_size}")
        out = []
        for n in range(self.min_size, self.size_bound + 1):
            out.extend(S for S in self.generator.of_size(n) if self._sentence_ok(S))
        return out

    def of_size(self, n: int) -> list[Structure]:
        return [S for S in self.structures(Caps(family_size=max(n, self.size_bound))) if len(S) == n]

    def contains(self, S: Structure) -> bool:
        """Membership up to isomorphism (the size bound applies to generated families)."""
        if self.generator is not None:
            ok = self.min_size <= len(S) <= self.size_bound and self.generator.member(S)
        else:
            ok = len(S) >= self.min_size and any(isomorphic(S, T) for T in self._index.get(invariant_key(S), ()))
        return ok and self._sentence_ok(S)

    def __iter__(self):
        return iter(self.structures())
