"""Concrete representation maps: words, trees, nested words and cographs.

Every map turns a labeled ordered tree (or a word) into a relational
structure.  Label predicates are named after the labels when the label is
a plain identifier, and sanitized otherwise, so that the vocabulary of a
tree's structure depends only on the label alphabet.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

from .errors import OracleError, ParseError, StructureError
from .structures import Structure, Vocabulary
from .treerep import EMPTY_TREE, LabeledOrderedTree, RepresentationOracle, tree_labels

ORDER = "le"
SIBLING = "sib"
NEST = "nest"
EDGE = "E"
RESERVED = frozenset({ORDER, SIBLING, NEST, EDGE})

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


@lru_cache(maxsize=1024)
def _label_names(labels: tuple[str, ...], reserved: frozenset[str]) -> Mapping[str, str]:
    names: dict[str, str] = {}
    taken = set(reserved)
    for label in sorted(set(labels)):
        if _IDENT.match(label) and label not in reserved and not label.startswith("L_"):
            base = label
        else:
            base = "L_" + "".join(ch if ch.isalnum() else f"_{ord(ch):x}_" for ch in label)
        name, n = base, 2
        while name in taken:
            name = f"{base}_{n}"
            n += 1
        taken.add(name)
        names[label] = name
    return names


def label_relation_names(labels: Iterable[str], reserved: Iterable[str] = RESERVED) -> dict[str, str]:
    """Deterministic map from labels to unary relation names."""
    return dict(_label_names(tuple(sorted(set(labels))), frozenset(reserved)))


def _labelled(binary: Mapping[str, list], labels: Sequence[str], labelling: Mapping[int, str], universe) -> Structure:
    names = label_relation_names(labels, RESERVED | set(binary))
    unknown = set(labelling.values()) - set(names)
    if unknown:
        raise StructureError(f"labels {sorted(unknown)} are not in the alphabet")
    vocab = Vocabulary({**{r: 2 for r in binary}, **{n: 1 for n in names.values()}})
    rels = dict(binary)
    for n in names.values():
        rels[n] = []
    for v, l in labelling.items():
        rels[names[l]].append((v,))
    return Structure(vocab, universe, rels)


# ---------------------------------------------------------------- words

def word_to_structure(word: Sequence[str], alphabet: Iterable[str] | None = None) -> Structure:
    """Positions 1..n with the reflexive order `le` and one predicate per letter."""
    letters = tuple(sorted(set(word) | set(alphabet or ())))
    n = len(word)
    order = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    return _labelled({ORDER: order}, letters, {i + 1: a for i, a in enumerate(word)}, range(1, n + 1))


def _chain_order(t: LabeledOrderedTree) -> list[int]:
    return t.preorder()


def is_chain(t: LabeledOrderedTree) -> bool:
    return all(len(cs) <= 1 for cs in t.children.values())


def str_word(t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
    """Word read along a chain-shaped tree; node ids are the positions."""
    if not is_chain(t):
        raise StructureError("the word map needs a chain-shaped tree")
    labels = tree_labels(t) if labels is None else labels
    nodes = _chain_order(t)
    order = [(a, b) for i, a in enumerate(nodes) for b in nodes[i:]]
    return _labelled({ORDER: order}, labels, t.labels, nodes)


# ---------------------------------------------------------------- trees

def _ancestor_order(t: LabeledOrderedTree) -> list[tuple[int, int]]:
    pairs = []
    for v in t.preorder():
        pairs.append((v, v))
        pairs.extend((a, v) for a in t.ancestors(v))
    return pairs


def str_unordered(t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
    """Nodes with the reflexive ancestor order `le` and label predicates."""
    labels = tree_labels(t) if labels is None else labels
    return _labelled({ORDER: _ancestor_order(t)}, labels, t.labels, t.nodes)


def _sibling_order(t: LabeledOrderedTree) -> list[tuple[int, int]]:
    pairs = [(v, v) for v in t.nodes]
    for kids in t.children.values():
        pairs.extend((x, y) for i, x in enumerate(kids) for y in kids[i + 1:])
    return pairs


def str_ordered(t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
    """As str_unordered plus `sib`, the reflexive left-to-right order among siblings."""
    labels = tree_labels(t) if labels is None else labels
    return _labelled({ORDER: _ancestor_order(t), SIBLING: _sibling_order(t)}, labels, t.labels, t.nodes)


def check_ranked(t: LabeledOrderedTree, ranks: Mapping[str, int]) -> bool:
    """Every internal node has exactly ranks[label] children."""
    for v, kids in t.children.items():
        if kids and ranks.get(t.labels[v]) != len(kids):
            return False
    return True


def _consistent_arity(t: LabeledOrderedTree) -> bool:
    seen: dict[str, int] = {}
    for v, kids in t.children.items():
        if kids and seen.setdefault(t.labels[v], len(kids)) != len(kids):
            return False
    return True


# ---------------------------------------------------------------- nested words

COMPOSE = "∘"
_COMPOSE_ALIASES = (COMPOSE, "<>")
_PAIR = re.compile(r"\((.),(.)\)\Z")


def _check_letter(a: str):
    if len(a) != 1 or a.isspace() or a in "(),<>" or a == COMPOSE:
        raise StructureError(f"bad nested-word letter {a!r}")


@dataclass(frozen=True)
class NestedWord:
    """A word over single-character letters with a non-crossing forward matching.

    Positions are 1-based; edges are kept sorted by call position.
    """

    letters: tuple[str, ...]
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        letters = tuple(self.letters)
        for a in letters:
            _check_letter(a)
        edges = tuple(sorted((int(i), int(j)) for i, j in self.edges))
        n = len(letters)
        used: set[int] = set()
        for i, j in edges:
            if not 1 <= i < j <= n:
                raise StructureError(f"nesting edge ({i},{j}) must go forward inside 1..{n}")
            if i in used or j in used:
                raise StructureError(f"position shared by two nesting edges at ({i},{j})")
            used.update((i, j))
        for i1, j1 in edges:
            for i2, j2 in edges:
                if i1 < i2 <= j1 < j2:
                    raise StructureError(f"nesting edges ({i1},{j1}) and ({i2},{j2}) cross")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "edges", edges)

    def __len__(self):
        return len(self.letters)

    @property
    def word(self) -> str:
        return "".join(self.letters)

    @classmethod
    def of(cls, word: str, edges: Iterable[tuple[int, int]] = ()) -> "NestedWord":
        return cls(tuple(word), tuple(edges))

    def __str__(self):
        return format_nested_word(self).rstrip("\n")


EMPTY_NESTED_WORD = NestedWord(())


def format_nested_word(w: NestedWord) -> str:
    edges = " ".join(f"({i},{j})" for i, j in w.edges)
    return f"letters: {w.word}\nedges: {edges}".rstrip() + "\n"


def parse_nested_word(text: str) -> NestedWord:
    letters, edges = None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise ParseError("expected 'letters:' or 'edges:'", lineno, 1)
        key = key.strip()
        rest = rest.strip()
        if key == "letters":
            letters = rest
        elif key == "edges":
            col = raw.index(":") + 2
            for m in re.finditer(r"\S+", rest):
                pair = re.fullmatch(r"\((\d+),(\d+)\)", m.group())
                if not pair:
                    raise ParseError(f"bad edge {m.group()!r}", lineno, col + m.start())
                edges.append((int(pair.group(1)), int(pair.group(2))))
        else:
            raise ParseError(f"unknown field {key!r}", lineno, 1)
    if letters is None:
        raise ParseError("missing 'letters:' line", 1, 1)
    try:
        return NestedWord.of(letters, edges)
    except StructureError as exc:
        raise ParseError(str(exc), 1, 1) from exc


def nested_word_insert(u: NestedWord, e: int, v: NestedWord) -> NestedWord:
    """Positions of v placed right after position e of u; matchings are kept."""
    if not 1 <= e <= len(u):
        raise StructureError(f"position {e} is not in 1..{len(u)}")
    k = len(v)

    def shift(p: int) -> int:
        return p if p <= e else p + k

    edges = [(shift(i), shift(j)) for i, j in u.edges] + [(i + e, j + e) for i, j in v.edges]
    return NestedWord(u.letters[:e] + v.letters + u.letters[e:], tuple(edges))


def nested_word_concat(u: NestedWord, v: NestedWord) -> NestedWord:
    if not len(u):
        return v
    return nested_word_insert(u, len(u), v)


def _components(w: NestedWord, lo: int, hi: int, partner: Mapping[int, int]) -> list[tuple[int, int]]:
    out = []
    p = lo
    while p <= hi:
        q = partner.get(p, p)
        if q < p:
            raise StructureError("matching is not well nested in this range")
        out.append((p, q))
        p = q + 1
    return out


def pair_label(a: str, b: str) -> str:
    return f"({a},{b})"


def nested_word_to_tree(w: NestedWord) -> LabeledOrderedTree:
    """Tree encoding: letters and matched pairs become nodes, concatenations become ∘ nodes."""
    if not len(w):
        return EMPTY_TREE
    partner = {i: j for i, j in w.edges}
    children: dict[int, list[int]] = {}
    labels: dict[int, str] = {}

    def node(label: str) -> int:
        v = len(labels)
        labels[v] = label
        children[v] = []
        return v

    def encode(lo: int, hi: int) -> int:
        parts = _components(w, lo, hi, partner)
        if len(parts) > 1:
            root = node(COMPOSE)
            children[root] = [encode_a(p, q) for p, q in parts]
            return root
        return encode_a(*parts[0])

    def encode_a(p: int, q: int) -> int:
        if p == q:
            return node(w.letters[p - 1])
        root = node(pair_label(w.letters[p - 1], w.letters[q - 1]))
        if q > p + 1:
            children[root] = [encode(p + 1, q - 1)]
        return root

    root = encode(1, len(w))
    return LabeledOrderedTree(root, children, labels)


def _decode_label(label: str) -> tuple[str, ...] | None:
    """("a",), ("a", "b") or None for the composition symbol."""
    if label in _COMPOSE_ALIASES:
        return None
    m = _PAIR.match(label)
    if m:
        _check_letter(m.group(1))
        _check_letter(m.group(2))
        return (m.group(1), m.group(2))
    _check_letter(label)
    return (label,)


def is_nested_leaf_label(label: str) -> bool:
    try:
        return _decode_label(label) is not None
    except StructureError:
        return False


def is_nested_internal_label(label: str) -> bool:
    try:
        decoded = _decode_label(label)
    except StructureError:
        return False
    return decoded is None or len(decoded) == 2


def _decode_positions(t: LabeledOrderedTree) -> list[tuple[int, str, int | None]]:
    """Positions in order as (id, letter, partner id); ids are 2v and 2v+1."""
    out: list[tuple[int, str, int | None]] = []
    if t.root is None:
        return out
    stack: list[tuple[int, tuple | None]] = [(t.root, None)]
    while stack:
        v, closing = stack.pop()
        if closing is not None:
            out.append(closing)
            continue
        try:
            decoded = _decode_label(t.labels[v])
        except StructureError as exc:
            raise StructureError(f"node {v}: {exc}") from exc
        kids = t.children[v]
        if decoded is None:
            if not kids:
                raise StructureError(f"node {v}: the composition symbol cannot label a leaf")
        elif len(decoded) == 1:
            if kids:
                raise StructureError(f"node {v}: a single letter cannot label an internal node")
            out.append((2 * v, decoded[0], None))
            continue
        else:
            out.append((2 * v, decoded[0], 2 * v + 1))
            stack.append((v, (2 * v + 1, decoded[1], 2 * v)))
        stack.extend((c, None) for c in reversed(kids))
    return out


def tree_to_nested_word(t: LabeledOrderedTree) -> NestedWord:
    positions = _decode_positions(t)
    index = {pid: i + 1 for i, (pid, _, _) in enumerate(positions)}
    edges = [(index[pid], index[other]) for pid, _, other in positions if other is not None and other > pid]
    return NestedWord(tuple(a for _, a, _ in positions), tuple(edges))


def nested_word_to_structure(w: NestedWord, alphabet: Iterable[str] | None = None) -> Structure:
    """Positions 1..n with `le`, letter predicates and the matching `nest`."""
    letters = tuple(sorted(set(w.letters) | set(alphabet or ())))
    n = len(w)
    order = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    labelling = {i + 1: a for i, a in enumerate(w.letters)}
    return _labelled({ORDER: order, NEST: list(w.edges)}, letters, labelling, range(1, n + 1))


def _letters_of(labels: Iterable[str]) -> tuple[str, ...]:
    letters = set()
    for label in labels:
        decoded = _decode_label(label)
        if decoded:
            letters.update(decoded)
    return tuple(sorted(letters))


def str_nested(t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
    """Nested word of a tree as a structure whose elements are 2v / 2v+1 for node v."""
    labels = tree_labels(t) if labels is None else labels
    positions = _decode_positions(t)
    ids = [pid for pid, _, _ in positions]
    order = [(a, b) for i, a in enumerate(ids) for b in ids[i:]]
    nest = [(pid, other) for pid, _, other in positions if other is not None and other > pid]
    labelling = {pid: a for pid, a, _ in positions}
    return _labelled({ORDER: order, NEST: nest}, _letters_of(labels), labelling, ids)


# ---------------------------------------------------------------- n-partite cographs

_LEAF = re.compile(r"leaf:(\d+):(\S+)\Z")
_FN = re.compile(r"fn:([01]+)\Z")


def leaf_label(part: int, letter: str) -> str:
    return f"leaf:{part}:{letter}"


def function_label(table: Sequence[Sequence[int]] | Callable[[int, int], int], n: int | None = None) -> str:
    """Row-major bit string for a symmetric function on [n] x [n] (parts are 1-based)."""
    if callable(table):
        if n is None:
            raise ValueError("n is required for a callable table")
        rows = [[int(bool(table(i, j))) for j in range(1, n + 1)] for i in range(1, n + 1)]
    else:
        rows = [[int(bool(x)) for x in row] for row in table]
    n = len(rows)
    for i in range(n):
        if len(rows[i]) != n:
            raise StructureError("function table must be square")
        for j in range(n):
            if rows[i][j] != rows[j][i]:
                raise StructureError("function table must be symmetric")
    return "fn:" + "".join(str(b) for row in rows for b in row)


def parse_leaf_label(label: str) -> tuple[int, str]:
    m = _LEAF.match(label)
    if not m or int(m.group(1)) < 1:
        raise StructureError(f"bad cotree leaf label {label!r}")
    return int(m.group(1)), m.group(2)


def parse_function_label(label: str) -> tuple[int, str]:
    """(n, bits) for a function label; checks squareness and symmetry."""
    m = _FN.match(label)
    if not m:
        raise StructureError(f"bad cotree function label {label!r}")
    bits = m.group(1)
    n = math.isqrt(len(bits))
    if n * n != len(bits):
        raise StructureError(f"function label {label!r} is not a square table")
    for i in range(n):
        for j in range(n):
            if bits[i * n + j] != bits[j * n + i]:
                raise StructureError(f"function label {label!r} is not symmetric")
    return n, bits


def _is_leaf_label(label: str) -> bool:
    try:
        parse_leaf_label(label)
    except StructureError:
        return False
    return True


def _is_function_label(label: str) -> bool:
    try:
        parse_function_label(label)
    except StructureError:
        return False
    return True


def _cotree_tables(t: LabeledOrderedTree):
    leaves: dict[int, tuple[int, str]] = {}
    tables: dict[int, tuple[int, str]] = {}
    for v in t.nodes:
        if t.is_leaf(v):
            leaves[v] = parse_leaf_label(t.labels[v])
        else:
            tables[v] = parse_function_label(t.labels[v])
    return leaves, tables


def _adjacent(tables, v: int, i: int, j: int) -> bool:
    n, bits = tables[v]
    if i > n or j > n:
        raise StructureError(f"part {max(i, j)} is outside the table of node {v}")
    return bits[(i - 1) * n + (j - 1)] == "1"


def cotree_to_graph(t: LabeledOrderedTree, parts: bool = False, labels: Sequence[str] | None = None) -> Structure:
    """Labeled graph on the leaves; adjacency is read at the greatest common ancestor.

    With parts=True the part of each vertex is also exposed as a unary
    predicate part<i>.
    """
    if t.root is None:
        raise StructureError("empty cotree")
    leaves, tables = _cotree_tables(t)
    alphabet = set(labels) if labels is not None else set(t.labels.values())
    letters = {parse_leaf_label(l)[1] for l in alphabet if _is_leaf_label(l)} | {a for _, a in leaves.values()}
    part_count = max(
        [i for l in alphabet if _is_leaf_label(l) for i in (parse_leaf_label(l)[0],)]
        + [i for i, _ in leaves.values()]
        + [0]
    )
    edges = []
    # leaves below each node in order, then pairs split at each internal node
    below: dict[int, list[int]] = {}
    for v in t.postorder():
        kids = t.children[v]
        if not kids:
            below[v] = [v]
            continue
        groups = [below[c] for c in kids]
        for x, gx in enumerate(groups):
            for gy in groups[x + 1:]:
                for a in gx:
                    for b in gy:
                        if _adjacent(tables, v, leaves[a][0], leaves[b][0]):
                            edges.extend(((a, b), (b, a)))
        below[v] = [leaf for g in groups for leaf in g]
    names = label_relation_names(letters, RESERVED | {f"part{i}" for i in range(1, part_count + 1)})
    rels: dict[str, list] = {EDGE: edges}
    arities = {EDGE: 2}
    for letter, name in names.items():
        arities[name] = 1
        rels[name] = [(v,) for v, (_, a) in leaves.items() if a == letter]
    if parts:
        for i in range(1, part_count + 1):
            arities[f"part{i}"] = 1
            rels[f"part{i}"] = [(v,) for v, (p, _) in leaves.items() if p == i]
    return Structure(Vocabulary(arities), leaves, rels)


def str_cograph(t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
    return cotree_to_graph(t, parts=True, labels=tree_labels(t) if labels is None else labels)


def _cotree_member(t: LabeledOrderedTree) -> bool:
    try:
        leaves, tables = _cotree_tables(t)
    except StructureError:
        return False
    if not tables:
        return True
    n = min(size for size, _ in tables.values())
    return all(i <= n for i, _ in leaves.values())


# ---------------------------------------------------------------- oracles

def _always(_label: str) -> bool:
    return True


def _builtin(name: str, ranks: Mapping[str, int] | None = None) -> RepresentationOracle:
    if name == "words":
        return RepresentationOracle(
            "words", str_word, _always, _always, True, True, 0, True, member=is_chain
        )
    if name == "unordered":
        return RepresentationOracle("unordered", str_unordered, _always, _always, True, True, 0, True)
    if name == "ordered":
        return RepresentationOracle("ordered", str_ordered, _always, _always, True, False, 2, True)
    if name == "ranked":
        if ranks is None:
            member = _consistent_arity
        else:
            fixed = dict(ranks)
            member = lambda t: check_ranked(t, fixed)  # noqa: E731
        return RepresentationOracle("ranked", str_ordered, _always, _always, True, False, 2, True, member=member)
    if name == "nested":
        return RepresentationOracle(
            "nested", str_nested, is_nested_leaf_label, is_nested_internal_label, True, True, 2, True
        )
    if name == "cograph":
        return RepresentationOracle(
            "cograph", str_cograph, _is_leaf_label, _is_function_label, True, True, 0, True, member=_cotree_member
        )
    raise OracleError(f"unknown oracle {name!r}; expected one of {', '.join(ORACLE_NAMES)}")


ORACLE_NAMES = ("words", "unordered", "ordered", "ranked", "nested", "cograph")
_ORACLES: dict[str, RepresentationOracle] = {}


def builtin_oracle(name: str, ranks: Mapping[str, int] | None = None) -> RepresentationOracle:
    """Built-in oracle by name; `ranks` fixes the child counts for the ranked oracle."""
    if ranks is not None:
        return _builtin(name, ranks)
    if name not in _ORACLES:
        _ORACLES[name] = _builtin(name)
    return _ORACLES[name]
