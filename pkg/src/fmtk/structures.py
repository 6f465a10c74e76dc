"""Finite relational structures and the combinatorics around them.

Element ids are non-negative ints.  Everything here is immutable and every
enumeration runs in a fixed order (ascending ids; subsets by size, then
lexicographically) so results are reproducible.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType

from .errors import ParseError, StructureError, VocabularyError

Tuple = tuple[int, ...]
ElementMap = dict[int, int]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def is_identifier(name: str) -> bool:
    return bool(_IDENT.match(name))


@dataclass(frozen=True)
class Vocabulary:
    """Relation symbols with arities plus an ordered list of constants.

    Relations are stored sorted by name, so two vocabularies with the same
    symbols compare equal regardless of how they were written down.
    """

    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        rels = self.relations
        if isinstance(rels, Mapping):
            rels = rels.items()
        rels = tuple(sorted((str(n), int(a)) for n, a in rels))
        consts = tuple(str(c) for c in self.constants)
        seen = set()
        for name, arity in rels:
            if not is_identifier(name):
                raise VocabularyError(f"bad relation name {name!r}")
            if arity < 1:
                raise VocabularyError(f"relation {name} needs arity >= 1, got {arity}")
            if name in seen:
                raise VocabularyError(f"duplicate symbol {name}")
            seen.add(name)
        for name in consts:
            if not is_identifier(name):
                raise VocabularyError(f"bad constant name {name!r}")
            if name in seen:
                raise VocabularyError(f"duplicate symbol {name}")
            seen.add(name)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "constants", consts)

    @cached_property
    def arities(self) -> Mapping[str, int]:
        return MappingProxyType(dict(self.relations))

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.relations)

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(self.relation_names) | frozenset(self.constants)

    def arity(self, name: str) -> int:
        try:
            return self.arities[name]
        except KeyError:
            raise VocabularyError(f"unknown relation {name}") from None

    def expand(self, relations: Mapping[str, int] | Iterable = (), constants: Iterable[str] = ()) -> "Vocabulary":
        rels = dict(relations.items() if isinstance(relations, Mapping) else relations)
        clash = (set(rels) | set(constants)) & self.symbols
        if clash:
            raise VocabularyError(f"name clash: {sorted(clash)}")
        return Vocabulary(self.relations + tuple(rels.items()), self.constants + tuple(constants))

    def without(self, names: Iterable[str]) -> "Vocabulary":
        drop = set(names)
        return Vocabulary(
            tuple(r for r in self.relations if r[0] not in drop),
            tuple(c for c in self.constants if c not in drop),
        )

    def __str__(self):
        parts = [f"{n}/{a}" for n, a in self.relations] + [f"{c}/const" for c in self.constants]
        return " ".join(parts)


GRAPH = Vocabulary({"E": 2})


class Structure:
    """A finite structure over a Vocabulary."""

    __slots__ = ("vocab", "universe", "_rels", "_consts", "_hash", "__dict__")

    def __init__(
        self,
        vocab: Vocabulary,
        universe: Iterable[int],
        relations: Mapping[str, Iterable[Sequence[int]]] | None = None,
        constants: Mapping[str, int] | None = None,
    ):
        self.vocab = vocab
        self.universe = frozenset(int(x) for x in universe)
        relations = dict(relations or {})
        constants = dict(constants or {})
        for x in self.universe:
            if x < 0:
                raise StructureError(f"element ids must be non-negative, got {x}")
        unknown = set(relations) - set(vocab.relation_names)
        if unknown:
            raise VocabularyError(f"relations not in vocabulary: {sorted(unknown)}")
        rels = {}
        for name, arity in vocab.relations:
            tuples = frozenset(tuple(map(int, t)) for t in relations.get(name, ()))
            for t in tuples:
                if len(t) != arity:
                    raise VocabularyError(f"{name} has arity {arity}, got tuple {t}")
            if tuples and not self.universe.issuperset(set().union(*tuples)):
                t = next(t for t in sorted(tuples) if not self.universe.issuperset(t))
                x = next(x for x in t if x not in self.universe)
                raise StructureError(f"element {x} outside universe (in {name}{t})")
            rels[name] = tuples
        if set(constants) != set(vocab.constants):
            missing = set(vocab.constants) - set(constants)
            extra = set(constants) - set(vocab.constants)
            raise StructureError(f"constant interpretation mismatch (missing {sorted(missing)}, extra {sorted(extra)})")
        for name, x in constants.items():
            if int(x) not in self.universe:
                raise StructureError(f"constant {name} = {x} outside universe")
        self._rels = MappingProxyType(rels)
        self._consts = MappingProxyType({c: int(constants[c]) for c in vocab.constants})
        self._hash = None

    @property
    def relations(self) -> Mapping[str, frozenset[Tuple]]:
        return self._rels

    @property
    def constants(self) -> Mapping[str, int]:
        return self._consts

    def rel(self, name: str) -> frozenset[Tuple]:
        try:
            return self._rels[name]
        except KeyError:
            raise VocabularyError(f"unknown relation {name}") from None

    def const(self, name: str) -> int:
        try:
            return self._consts[name]
        except KeyError:
            raise VocabularyError(f"unknown constant {name}") from None

    @cached_property
    def elements(self) -> Tuple:
        return tuple(sorted(self.universe))

    @cached_property
    def constant_elements(self) -> frozenset[int]:
        return frozenset(self._consts.values())

    def __len__(self):
        return len(self.universe)

    def _key(self):
        return (self.vocab, self.universe, tuple(self._rels.items()), tuple(self._consts.items()))

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self is other or self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        facts = sum(len(v) for v in self._rels.values())
        return f"Structure(|U|={len(self)}, vocab=[{self.vocab}], facts={facts})"

    def relabel(self, mapping: Mapping[int, int]) -> "Structure":
        """Rename elements through an injective map defined on the universe."""
        if len(set(mapping[x] for x in self.universe)) != len(self.universe):
            raise StructureError("relabeling map is not injective")
        return Structure(
            self.vocab,
            (mapping[x] for x in self.universe),
            {n: [tuple(mapping[x] for x in t) for t in ts] for n, ts in self._rels.items()},
            {c: mapping[x] for c, x in self._consts.items()},
        )

    def expand(self, relations: Mapping[str, tuple[int, Iterable[Sequence[int]]]] = None,
               constants: Mapping[str, int] = None) -> "Structure":
        """Add new symbols: relations maps name -> (arity, tuples)."""
        relations = relations or {}
        constants = constants or {}
        vocab = self.vocab.expand({n: a for n, (a, _) in relations.items()}, list(constants))
        rels = dict(self._rels)
        rels.update({n: ts for n, (_, ts) in relations.items()})
        consts = dict(self._consts)
        consts.update(constants)
        return Structure(vocab, self.universe, rels, consts)

    def reduct(self, drop: Iterable[str]) -> "Structure":
        drop = set(drop)
        vocab = self.vocab.without(drop)
        return Structure(
            vocab,
            self.universe,
            {n: ts for n, ts in self._rels.items() if n not in drop},
            {c: x for c, x in self._consts.items() if c not in drop},
        )


@dataclass(frozen=True)
class PointedStructure:
    """A structure together with a distinguished tuple of elements."""

    structure: Structure
    tuple: Tuple = ()

    def __post_init__(self):
        t = tuple(int(x) for x in self.tuple)
        for x in t:
            if x not in self.structure.universe:
                raise StructureError(f"tuple element {x} outside universe")
        object.__setattr__(self, "tuple", t)


def pointed(x: Structure | PointedStructure, tup: Sequence[int] = ()) -> PointedStructure:
    if isinstance(x, PointedStructure):
        return x
    return PointedStructure(x, tuple(tup))


# ---------------------------------------------------------------- file format

def parse_structure(text: str) -> Structure:
    vocab = None
    universe = None
    facts: dict[str, list[Tuple]] = {}
    consts: dict[str, int] = {}

    def ids(tokens, lineno, line):
        out = []
        for tok in tokens:
            if not tok.isdigit():
                raise ParseError(f"expected element id, got {tok!r}", lineno, line.find(tok) + 1)
            out.append(int(tok))
        return out

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        head = tokens[0]
        if vocab is None:
            if head != "vocab":
                raise ParseError("expected 'vocab' line first", lineno, 1)
            rels, cs = [], []
            for tok in tokens[1:]:
                name, sep, kind = tok.partition("/")
                if not sep or not is_identifier(name):
                    raise ParseError(f"bad vocabulary entry {tok!r}", lineno, line.find(tok) + 1)
                if kind == "const":
                    cs.append(name)
                elif kind.isdigit() and int(kind) >= 1:
                    rels.append((name, int(kind)))
                else:
                    raise ParseError(f"bad arity in {tok!r}", lineno, line.find(tok) + 1)
            try:
                vocab = Vocabulary(tuple(rels), tuple(cs))
            except VocabularyError as e:
                raise ParseError(str(e), lineno, 1) from None
            continue
        if universe is None:
            if head != "universe":
                raise ParseError("expected 'universe' line after vocab", lineno, 1)
            universe = ids(tokens[1:], lineno, line)
            if len(set(universe)) != len(universe):
                raise ParseError("duplicate element in universe", lineno, 1)
            continue
        if head == "vocab" or head == "universe":
            raise ParseError(f"duplicate {head!r} line", lineno, 1)
        if len(tokens) == 3 and tokens[1] == "=":
            if head not in vocab.constants:
                raise ParseError(f"unknown constant {head}", lineno, 1)
            if head in consts:
                raise ParseError(f"duplicate constant {head}", lineno, 1)
            (x,) = ids(tokens[2:], lineno, line)
            if x not in universe:
                raise ParseError(f"element {x} outside universe", lineno, line.rfind(tokens[2]) + 1)
            consts[head] = x
            continue
        if head not in vocab.arities:
            raise ParseError(f"unknown relation {head}", lineno, 1)
        args = ids(tokens[1:], lineno, line)
        if len(args) != vocab.arities[head]:
            raise ParseError(f"{head} has arity {vocab.arities[head]}, got {len(args)} arguments", lineno, 1)
        for tok, x in zip(tokens[1:], args):
            if x not in universe:
                raise ParseError(f"element {x} outside universe", lineno, line.find(" " + tok) + 2)
        facts.setdefault(head, []).append(tuple(args))
    if vocab is None:
        raise ParseError("missing 'vocab' line")
    if universe is None:
        raise ParseError("missing 'universe' line")
    missing = [c for c in vocab.constants if c not in consts]
    if missing:
        raise ParseError(f"constants without interpretation: {missing}")
    return Structure(vocab, universe, facts, consts)


def serialize_structure(A: Structure) -> str:
    lines = [("vocab " + str(A.vocab)).rstrip()]
    lines.append(("universe " + " ".join(map(str, A.elements))).rstrip())
    for name in A.vocab.relation_names:
        for t in sorted(A.rel(name)):
            lines.append(name + " " + " ".join(map(str, t)))
    for c in A.vocab.constants:
        lines.append(f"{c} = {A.const(c)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- substructures

def induced_substructure(A: Structure, X: Iterable[int]) -> Structure:
    X = frozenset(X)
    if not X <= A.universe:
        raise StructureError(f"elements {sorted(X - A.universe)} are not in the universe")
    outside = [c for c, x in A.constants.items() if x not in X]
    if outside:
        raise StructureError(f"constants {outside} interpreted outside the chosen set")
    if X == A.universe:
        return A
    rels = {n: [t for t in ts if all(x in X for x in t)] for n, ts in A.relations.items()}
    return Structure(A.vocab, X, rels, dict(A.constants))


def enumerate_subsets(elements: Sequence[int], max_size: int, must_contain: Iterable[int] = ()) -> Iterator[frozenset[int]]:
    """Supersets of must_contain inside elements, by size then lexicographically."""
    must = frozenset(must_contain)
    rest = [x for x in sorted(elements) if x not in must]
    for size in range(len(must), min(max_size, len(must) + len(rest)) + 1):
        for extra in itertools.combinations(rest, size - len(must)):
            yield must.union(extra)


def enumerate_substructures(A: Structure, max_size: int, must_contain: Iterable[int] = ()) -> Iterator[Structure]:
    must = frozenset(must_contain)
    if not must <= A.universe:
        raise StructureError("mustContain is not a subset of the universe")
    if not A.constant_elements <= must:
        raise StructureError("mustContain must include every constant interpretation")
    for X in enumerate_subsets(A.elements, max_size, must):
        yield induced_substructure(A, X)


# ---------------------------------------------------------------- maps

def _check_compatible(A: PointedStructure, B: PointedStructure):
    if A.structure.vocab != B.structure.vocab:
        raise VocabularyError("structures have different vocabularies")
    if len(A.tuple) != len(B.tuple):
        raise StructureError(f"tuple lengths differ ({len(A.tuple)} vs {len(B.tuple)})")


def _forced_pairs(A: PointedStructure, B: PointedStructure) -> list[tuple[int, int]]:
    pairs = list(zip(A.tuple, B.tuple))
    for c in A.structure.vocab.constants:
        pairs.append((A.structure.const(c), B.structure.const(c)))
    return pairs


def is_homomorphism(A: PointedStructure, B: PointedStructure, h: Mapping[int, int]) -> bool:
    A, B = pointed(A), pointed(B)
    SA, SB = A.structure, B.structure
    if set(h) != set(SA.universe) or any(v not in SB.universe for v in h.values()):
        return False
    if any(h[a] != b for a, b in _forced_pairs(A, B)):
        return False
    for name, ts in SA.relations.items():
        target = SB.rel(name)
        if any(tuple(h[x] for x in t) not in target for t in ts):
            return False
    return True


def is_embedding(A: PointedStructure, B: PointedStructure, h: Mapping[int, int]) -> bool:
    A, B = pointed(A), pointed(B)
    if not is_homomorphism(A, B, h):
        return False
    if len(set(h.values())) != len(h):
        return False
    image = set(h.values())
    for name, ts in B.structure.relations.items():
        inside = sum(1 for t in ts if all(x in image for x in t))
        if inside != len(A.structure.rel(name)):
            return False
    return True


class _MapSearch:
    """Backtracking search for homomorphisms or embeddings.

    Variables are chosen dynamically: the unassigned element with the most
    already-assigned neighbours goes next (ties: higher degree, lower id).
    """

    def __init__(self, A: PointedStructure, B: PointedStructure, injective: bool):
        self.A, self.B = A, B
        self.injective = injective
        SA, SB = A.structure, B.structure
        self.rels_b = {n: SB.rel(n) for n in SB.vocab.relation_names}
        self.inc_a = {x: [] for x in SA.universe}
        for name, ts in SA.relations.items():
            for t in ts:
                for x in set(t):
                    self.inc_a[x].append((name, t))
        self.inc_b = {x: [] for x in SB.universe}
        self.nbr_b = {x: set() for x in SB.universe}
        for name, ts in SB.relations.items():
            for t in ts:
                for x in set(t):
                    self.inc_b[x].append((name, t))
                    self.nbr_b[x].update(t)
        self.nbr_a = {x: set() for x in SA.universe}
        for x, lst in self.inc_a.items():
            for _, t in lst:
                self.nbr_a[x].update(t)
        unary_a = {x: frozenset(n for n, t in lst if len(t) == 1) for x, lst in self.inc_a.items()}
        unary_b = {x: frozenset(n for n, t in lst if len(t) == 1) for x, lst in self.inc_b.items()}
        self.unary_a, self.unary_b = unary_a, unary_b

    def consistent(self, v: int, w: int, h: dict) -> bool:
        if self.injective:
            if self.unary_a[v] != self.unary_b[w]:
                return False
        elif not self.unary_a[v] <= self.unary_b[w]:
            return False
        counts = {}
        for name, t in self.inc_a[v]:
            if all(x == v or x in h for x in t):
                image = tuple(w if x == v else h[x] for x in t)
                if image not in self.rels_b[name]:
                    return False
                counts[name] = counts.get(name, 0) + 1
        if self.injective:
            image_set = set(h.values())
            image_set.add(w)
            counts_b = {}
            for name, t in self.inc_b[w]:
                if all(x in image_set for x in t):
                    counts_b[name] = counts_b.get(name, 0) + 1
            if counts != counts_b:
                return False
        return True

    def run(self) -> ElementMap | None:
        h: dict[int, int] = {}
        used: set[int] = set()
        for a, b in _forced_pairs(self.A, self.B):
            if a in h:
                if h[a] != b:
                    return None
                continue
            if self.injective and b in used:
                return None
            if not self.consistent(a, b, h):
                return None
            h[a] = b
            used.add(b)
        todo = set(self.A.structure.universe) - set(h)
        if self._extend(h, used, todo):
            return dict(sorted(h.items()))
        return None

    def _pick(self, h, todo):
        def score(v):
            assigned = sum(1 for u in self.nbr_a[v] if u in h and u != v)
            return (-assigned, -len(self.nbr_a[v]), v)
        return min(todo, key=score)

    def _extend(self, h, used, todo) -> bool:
        if not todo:
            return True
        v = self._pick(h, todo)
        todo.discard(v)
        cands = None
        for u in self.nbr_a[v]:
            if u in h and u != v:
                s = self.nbr_b[h[u]]
                cands = set(s) if cands is None else cands & s
        if cands is None:
            cands = self.B.structure.universe
        for w in sorted(cands):
            if self.injective and w in used:
                continue
            if not self.consistent(v, w, h):
                continue
            h[v] = w
            used.add(w)
            if self._extend(h, used, todo):
                return True
            del h[v]
            used.discard(w)
        todo.add(v)
        return False


def find_embedding(A, B, hint: Mapping[int, int] | None = None) -> ElementMap | None:
    """Embedding of A into B respecting pinned tuples and constants.

    A hint is checked first and returned when valid; otherwise the complete
    search runs, so the answer never depends on the hint.
    """
    A, B = pointed(A), pointed(B)
    _check_compatible(A, B)
    if hint is not None and is_embedding(A, B, dict(hint)):
        return dict(sorted(hint.items()))
    if len(A.structure) > len(B.structure):
        return None
    for name in A.structure.vocab.relation_names:
        if len(A.structure.rel(name)) > len(B.structure.rel(name)):
            return None
    return _MapSearch(A, B, injective=True).run()


def find_homomorphism(A, B) -> ElementMap | None:
    A, B = pointed(A), pointed(B)
    _check_compatible(A, B)
    if len(A.structure) and not len(B.structure):
        return None
    return _MapSearch(A, B, injective=False).run()


def find_isomorphism(A, B) -> ElementMap | None:
    A, B = pointed(A), pointed(B)
    _check_compatible(A, B)
    if len(A.structure) != len(B.structure):
        return None
    for name in A.structure.vocab.relation_names:
        if len(A.structure.rel(name)) != len(B.structure.rel(name)):
            return None
    return find_embedding(A, B)


def isomorphic(A, B) -> bool:
    return find_isomorphism(A, B) is not None


def invariant_key(A: Structure) -> tuple:
    """Cheap isomorphism invariant used to bucket structures before matching."""
    degree = {x: [0] * len(A.vocab.relations) for x in A.universe}
    for i, name in enumerate(A.vocab.relation_names):
        for t in A.rel(name):
            for x in t:
                degree[x][i] += 1
    return (
        len(A),
        tuple(len(A.rel(n)) for n in A.vocab.relation_names),
        tuple(sorted(tuple(v) for v in degree.values())),
    )


def dedupe_isomorphic(items: Iterable[PointedStructure | Structure]) -> list:
    """Keep the first representative of each isomorphism class (pinned)."""
    buckets: dict[tuple, list] = {}
    out = []
    for item in items:
        p = pointed(item)
        key = (invariant_key(p.structure), len(p.tuple))
        bucket = buckets.setdefault(key, [])
        if any(isomorphic(p, q) for q in bucket):
            continue
        bucket.append(p)
        out.append(item)
    return out


# ---------------------------------------------------------------- constructions

def _require_constant_free(*structures: Structure, op: str):
    for S in structures:
        if S.vocab.constants:
            raise VocabularyError(f"{op} is undefined for vocabularies with constants")


def disjoint_union(A: Structure, B: Structure) -> Structure:
    _require_constant_free(A, B, op="disjoint_union")
    if A.vocab != B.vocab:
        raise VocabularyError("disjoint_union needs a shared vocabulary")
    offset = max(A.universe) + 1 if A.universe else 0
    shifted = B.relabel({x: x + offset for x in B.universe})
    rels = {n: A.rel(n) | shifted.rel(n) for n in A.vocab.relation_names}
    return Structure(A.vocab, A.universe | shifted.universe, rels)


def _sum_names(n: int, total_constants: int) -> tuple[list[str], list[str]]:
    return [f"P_{i}" for i in range(1, n + 1)], [f"c_{j}" for j in range(1, total_constants + 1)]


def n_disjoint_sum(parts: Sequence[PointedStructure | Structure]) -> Structure:
    parts = [pointed(p) for p in parts]
    if not parts:
        raise StructureError("n_disjoint_sum needs at least one part")
    vocab = parts[0].structure.vocab
    for p in parts:
        if p.structure.vocab != vocab:
            raise VocabularyError("n_disjoint_sum parts must share one vocabulary")
    _require_constant_free(*(p.structure for p in parts), op="n_disjoint_sum")
    preds, consts = _sum_names(len(parts), sum(len(p.tuple) for p in parts))
    new_vocab = vocab.expand({p: 1 for p in preds}, consts)
    universe: set[int] = set()
    rels: dict[str, set] = {n: set() for n in new_vocab.relation_names}
    cinterp: dict[str, int] = {}
    offset = 0
    ci = 0
    for i, p in enumerate(parts):
        S = p.structure
        shift = {x: x + offset for x in S.universe}
        universe.update(shift.values())
        for name in vocab.relation_names:
            rels[name].update(tuple(shift[x] for x in t) for t in S.rel(name))
        rels[preds[i]].update((y,) for y in shift.values())
        for x in p.tuple:
            cinterp[consts[ci]] = shift[x]
            ci += 1
        if S.universe:
            offset = max(shift.values()) + 1
    return Structure(new_vocab, universe, rels, cinterp)


def n_copy(A: Structure, tuples: Sequence[Sequence[int]]) -> Structure:
    """n copies of A glued by the relation sim; the n = 1 case is (A, a_1).

    For n = 1 the pinned tuple becomes constants c_1..c_k on A itself.
    """
    tuples = [tuple(t) for t in tuples]
    if not tuples:
        raise StructureError("n_copy needs at least one tuple (n >= 1)")
    for t in tuples:
        for x in t:
            if x not in A.universe:
                raise StructureError(f"tuple element {x} outside universe")
    _require_constant_free(A, op="n_copy")
    n = len(tuples)
    if n == 1:
        _, consts = _sum_names(1, len(tuples[0]))
        return A.expand(constants=dict(zip(consts, tuples[0])))
    width = max(A.universe) + 1
    copy_id = {(i, a): i * width + a for i in range(n) for a in A.universe}
    preds, consts = _sum_names(n, sum(len(t) for t in tuples))
    vocab = A.vocab.expand({**{p: 1 for p in preds}, "sim": 2}, consts)
    rels: dict[str, set] = {name: set() for name in vocab.relation_names}
    for i in range(n):
        for name in A.vocab.relation_names:
            rels[name].update(tuple(copy_id[i, x] for x in t) for t in A.rel(name))
        rels[preds[i]].update((copy_id[i, a],) for a in A.universe)
    rels["sim"] = {(copy_id[i, a], copy_id[j, a]) for i in range(n) for j in range(n) for a in A.universe}
    cinterp = {}
    ci = 0
    for i, t in enumerate(tuples):
        for x in t:
            cinterp[consts[ci]] = copy_id[i, x]
            ci += 1
    return Structure(vocab, copy_id.values(), rels, cinterp)


def cartesian_product(A: Structure, B: Structure) -> Structure:
    """Tensor product: a tuple of pairs is in R iff both projections are."""
    _require_constant_free(A, B, op="cartesian_product")
    if A.vocab != B.vocab:
        raise VocabularyError("cartesian_product needs a shared vocabulary")
    nb = len(B)
    pos_a = {x: i for i, x in enumerate(A.elements)}
    pos_b = {x: i for i, x in enumerate(B.elements)}

    def pid(a, b):
        return pos_a[a] * nb + pos_b[b]

    universe = [pid(a, b) for a in A.elements for b in B.elements]
    rels = {}
    for name in A.vocab.relation_names:
        rels[name] = [
            tuple(pid(x, y) for x, y in zip(s, t)) for s in sorted(A.rel(name)) for t in sorted(B.rel(name))
        ]
    return Structure(A.vocab, universe, rels)


def underlying_graph(A: Structure) -> Structure:
    if A.vocab.constants:
        raise VocabularyError("underlying_graph needs a constant-free vocabulary")
    edges = set()
    for name, arity in A.vocab.relations:
        if arity > 2:
            raise VocabularyError(f"relation {name} has arity {arity} >= 3")
        if arity == 2:
            for a, b in A.rel(name):
                edges.add((a, b))
                edges.add((b, a))
    return Structure(GRAPH, A.universe, {"E": edges})


def label_expand(A: Structure, labeling: Mapping[int, int], p: int | None = None) -> Structure:
    if set(labeling) != set(A.universe):
        raise StructureError("labeling must be total on the universe")
    if p is None:
        p = max(labeling.values(), default=-1) + 1
    if any(not 0 <= v < p for v in labeling.values()):
        raise StructureError(f"labels must lie in 0..{p - 1}")
    names = [f"Q_{i}" for i in range(p)]
    return A.expand({q: (1, [(x,) for x, v in labeling.items() if v == i]) for i, q in enumerate(names)})


def tuple_pin_expand(A: Structure, tup: Sequence[int]) -> Structure:
    tup = tuple(tup)
    if len(set(tup)) != len(tup):
        raise StructureError("tuple_pin_expand needs pairwise distinct elements")
    for x in tup:
        if x not in A.universe:
            raise StructureError(f"element {x} outside universe")
    k = len(tup)
    labeling = {x: k for x in A.universe}
    for i, x in enumerate(tup):
        labeling[x] = i
    return label_expand(A, labeling, k + 1)


def strip_labels(A: Structure, p: int) -> Structure:
    return A.reduct(f"Q_{i}" for i in range(p))


def embedding_quasi_order_probe(seq: Sequence[PointedStructure | Structure]) -> tuple[int, int, ElementMap] | None:
    """First pair i < j (1-based, lexicographic) with seq[i] embedding into seq[j]."""
    seq = [pointed(s) for s in seq]
    for s in seq[1:]:
        if len(s.tuple) != len(seq[0].tuple):
            raise StructureError("mismatched tuple lengths in probe sequence")
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            h = find_embedding(seq[i], seq[j])
            if h is not None:
                return i + 1, j + 1, h
    return None


# ---------------------------------------------------------------- small builders

def graph(n_or_vertices: int | Iterable[int], edges: Iterable[tuple[int, int]] = (), symmetric: bool = True) -> Structure:
    vertices = range(n_or_vertices) if isinstance(n_or_vertices, int) else n_or_vertices
    es = set()
    for a, b in edges:
        es.add((a, b))
        if symmetric:
            es.add((b, a))
    return Structure(GRAPH, vertices, {"E": es})


def path(n: int) -> Structure:
    """Undirected path of length n: n edges, n + 1 vertices 0..n."""
    return graph(n + 1, [(i, i + 1) for i in range(n)])


def clique(n: int) -> Structure:
    return graph(n, [(i, j) for i in range(n) for j in range(n) if i != j])


def empty_structure(vocab: Vocabulary = GRAPH) -> Structure:
    return Structure(vocab, ())
