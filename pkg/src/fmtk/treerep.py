"""Labeled ordered trees, tree surgery, and type-driven tree pruning.

The pruning engine shrinks a tree while keeping the represented structure
(under one or more representation oracles) rank-m equivalent to the
original and embeddable into it.  Two kinds of splice are used:

* height: an ancestor a and a descendant b whose subtrees have the same
  type vector; the subtree at a is replaced by the subtree at b (or the
  tree becomes the subtree at b when a is the root);
* degree: a node whose suffix trees y_j (the node with its first j-1
  child subtrees removed) collide for j < k; the children j..k-1 and their
  subtrees are dropped.

Splices keep node ids, so the output's nodes are a subset of the input's
and the identity map is the natural embedding candidate.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

from .config import TREE_CAPS, Caps
from .equivalence import RankType, rank_type
from .errors import OracleError, ParseError, StructureError, VerificationError
from .structures import Structure, find_embedding


class LabeledOrderedTree:
    """Ordered tree with string labels; root None means the empty tree."""

    __slots__ = ("root", "children", "labels", "_hash", "__dict__")

    def __init__(self, root: int | None, children: Mapping[int, Sequence[int]], labels: Mapping[int, str]):
        self.root = root
        kids = {int(v): tuple(int(c) for c in cs) for v, cs in children.items()}
        labs = {int(v): str(l) for v, l in labels.items()}
        if root is None:
            if kids or labs:
                raise StructureError("empty tree cannot have nodes")
        else:
            for v in labs:
                kids.setdefault(v, ())
            seen = set()
            stack = [root]
            while stack:
                v = stack.pop()
                if v in seen:
                    raise StructureError(f"node {v} reached twice")
                if v not in labs:
                    raise StructureError(f"node {v} has no label")
                seen.add(v)
                stack.extend(kids.get(v, ()))
            if seen != set(labs) or set(kids) != seen:
                raise StructureError("tree nodes are not all reachable from the root")
        for l in labs.values():
            if not l or any(ch.isspace() for ch in l):
                raise StructureError(f"bad label {l!r}")
        self.children = MappingProxyType(kids)
        self.labels = MappingProxyType(labs)
        self._hash = None

    # basic accessors
    @cached_property
    def parent(self) -> Mapping[int, int]:
        return MappingProxyType({c: v for v, cs in self.children.items() for c in cs})

    @cached_property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.labels)

    def __len__(self):
        return len(self.labels)

    def is_empty(self) -> bool:
        return self.root is None

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def label(self, v: int) -> str:
        return self.labels[v]

    def preorder(self, start: int | None = None) -> list[int]:
        start = self.root if start is None else start
        if start is None:
            return []
        out, stack = [], [start]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def postorder(self, start: int | None = None) -> list[int]:
        start = self.root if start is None else start
        if start is None:
            return []
        out, stack = [], [(start, False)]
        while stack:
            v, done = stack.pop()
            if done:
                out.append(v)
                continue
            stack.append((v, True))
            stack.extend((c, False) for c in reversed(self.children[v]))
        return out

    @cached_property
    def sizes(self) -> Mapping[int, int]:
        size = {}
        for v in self.postorder():
            size[v] = 1 + sum(size[c] for c in self.children[v])
        return MappingProxyType(size)

    @cached_property
    def depths(self) -> Mapping[int, int]:
        depth = {}
        for v in self.preorder():
            depth[v] = 0 if v == self.root else depth[self.parent[v]] + 1
        return MappingProxyType(depth)

    @property
    def height(self) -> int:
        """Edges on the longest root-to-leaf path (0 for a singleton, -1 if empty)."""
        return max(self.depths.values(), default=-1)

    @property
    def degree(self) -> int:
        return max((len(cs) for cs in self.children.values()), default=0)

    def ancestors(self, v: int) -> list[int]:
        out = []
        while v in self.parent:
            v = self.parent[v]
            out.append(v)
        return out

    def leaves(self) -> list[int]:
        return [v for v in self.preorder() if not self.children[v]]

    def _key(self):
        return (self.root, tuple(sorted(self.children.items())), tuple(sorted(self.labels.items())))

    def __eq__(self, other):
        if not isinstance(other, LabeledOrderedTree):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        return f"LabeledOrderedTree(size={len(self)}, height={self.height}, degree={self.degree})"

    def shape(self, v: int | None = None) -> tuple:
        """Nested (label, children) tuple, independent of node ids."""
        v = self.root if v is None else v
        if v is None:
            return ()
        return (self.labels[v], tuple(self.shape(c) for c in self.children[v]))


EMPTY_TREE = LabeledOrderedTree(None, {}, {})


def build_tree(shape, start: int = 0) -> LabeledOrderedTree:
    """Tree from a nested (label, [children]) spec; a bare string is a leaf.

    Ids are assigned in preorder starting at `start`.
    """
    if shape is None or shape == ():
        return EMPTY_TREE
    children: dict[int, list[int]] = {}
    labels: dict[int, str] = {}
    counter = [start]

    def go(node) -> int:
        if isinstance(node, str):
            label, kids = node, ()
        else:
            label, kids = node[0], node[1] if len(node) > 1 else ()
        v = counter[0]
        counter[0] += 1
        labels[v] = label
        children[v] = [go(k) for k in kids]
        return v

    root = go(shape)
    return LabeledOrderedTree(root, children, labels)


def chain_tree(labels: Sequence[str]) -> LabeledOrderedTree:
    """Path-shaped tree: labels[0] at the root, each next label one level below."""
    if not labels:
        return EMPTY_TREE
    return LabeledOrderedTree(
        0, {i: ((i + 1,) if i + 1 < len(labels) else ()) for i in range(len(labels))}, dict(enumerate(labels))
    )


# ---------------------------------------------------------------- text format

def parse_tree(text: str) -> LabeledOrderedTree:
    children: dict[int, list[int]] = {}
    labels: dict[int, str] = {}
    stack: list[int] = []
    root = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        stripped = raw.lstrip(" ")
        indent = len(raw) - len(stripped)
        if indent % 2:
            raise ParseError("indentation must be a multiple of two spaces", lineno, indent + 1)
        depth = indent // 2
        label = stripped.rstrip()
        if any(ch.isspace() for ch in label):
            raise ParseError(f"label {label!r} contains whitespace", lineno, indent + 1)
        if root is None:
            if depth:
                raise ParseError("the first node must not be indented", lineno, 1)
        elif depth == 0:
            raise ParseError("a tree has exactly one root", lineno, 1)
        elif depth > len(stack):
            raise ParseError("indentation skips a level", lineno, indent + 1)
        v = len(labels)
        labels[v] = label
        children[v] = []
        if root is None:
            root = v
        else:
            del stack[depth:]
            children[stack[-1]].append(v)
        stack.append(v)
    if root is None:
        return EMPTY_TREE
    return LabeledOrderedTree(root, children, labels)


def serialize_tree(t: LabeledOrderedTree) -> str:
    lines = [("  " * t.depths[v]) + t.labels[v] for v in t.preorder()]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- surgery

def _require_node(t: LabeledOrderedTree, a: int):
    if t.root is None or a not in t.labels:
        raise StructureError(f"unknown node {a}")


def _require_non_root(t: LabeledOrderedTree, a: int, op: str):
    _require_node(t, a)
    if a == t.root:
        raise StructureError(f"{op} needs a non-root node")


def subtree_at(t: LabeledOrderedTree, a: int) -> LabeledOrderedTree:
    _require_node(t, a)
    keep = t.preorder(a)
    return LabeledOrderedTree(a, {v: t.children[v] for v in keep}, {v: t.labels[v] for v in keep})


def delete_subtree(t: LabeledOrderedTree, a: int) -> LabeledOrderedTree:
    _require_non_root(t, a, "delete_subtree")
    drop = set(t.preorder(a))
    p = t.parent[a]
    children = {v: cs for v, cs in t.children.items() if v not in drop}
    children[p] = tuple(c for c in children[p] if c != a)
    return LabeledOrderedTree(t.root, children, {v: l for v, l in t.labels.items() if v not in drop})


def relabel_tree(s: LabeledOrderedTree, start: int) -> LabeledOrderedTree:
    """Copy of s with ids start, start+1, ... in preorder."""
    order = s.preorder()
    new = {v: start + i for i, v in enumerate(order)}
    if s.root is None:
        return EMPTY_TREE
    return LabeledOrderedTree(
        new[s.root],
        {new[v]: tuple(new[c] for c in s.children[v]) for v in order},
        {new[v]: s.labels[v] for v in order},
    )


def _fresh_copy(t: LabeledOrderedTree, s: LabeledOrderedTree) -> LabeledOrderedTree:
    if s.nodes & t.nodes:
        return relabel_tree(s, max(t.nodes) + 1)
    return s


def _insert(t: LabeledOrderedTree, parent: int, index: int, s: LabeledOrderedTree, drop: Iterable[int] = ()) -> LabeledOrderedTree:
    drop = set(drop)
    children = {v: cs for v, cs in t.children.items() if v not in drop}
    labels = {v: l for v, l in t.labels.items() if v not in drop}
    kids = list(children[parent])
    kids.insert(index, s.root)
    children[parent] = tuple(kids)
    children.update(s.children)
    labels.update(s.labels)
    return LabeledOrderedTree(t.root, children, labels)


def replace(t: LabeledOrderedTree, a: int, s: LabeledOrderedTree) -> LabeledOrderedTree:
    """t with the subtree at a replaced by a fresh copy of s, same sibling slot."""
    _require_non_root(t, a, "replace")
    if s.root is None:
        raise StructureError("cannot replace with the empty tree")
    p = t.parent[a]
    index = t.children[p].index(a)
    s = relabel_tree(s, max(t.nodes) + 1)
    t = delete_subtree(t, a)
    return _insert(t, p, index, s)


def merge(t: LabeledOrderedTree, s: LabeledOrderedTree) -> LabeledOrderedTree:
    """Root children of s appended after those of t; the root labels must agree."""
    if t.root is None or s.root is None:
        raise StructureError("merge needs non-empty trees")
    if len(s) < 2:
        raise StructureError("merge needs s to have at least two nodes")
    if t.labels[t.root] != s.labels[s.root]:
        raise StructureError(f"root labels differ: {t.labels[t.root]!r} vs {s.labels[s.root]!r}")
    body = {v: l for v, l in s.labels.items() if v != s.root}
    clash = set(body) & t.nodes
    if clash:
        s = relabel_tree(s, max(t.nodes) + 1)
    children = dict(t.children)
    labels = dict(t.labels)
    for v in s.nodes - {s.root}:
        children[v] = s.children[v]
        labels[v] = s.labels[v]
    children[t.root] = t.children[t.root] + s.children[s.root]
    return LabeledOrderedTree(t.root, children, labels)


def join_right(t: LabeledOrderedTree, a: int, s: LabeledOrderedTree) -> LabeledOrderedTree:
    _require_non_root(t, a, "join_right")
    p = t.parent[a]
    return _insert(t, p, t.children[p].index(a) + 1, _fresh_copy(t, s))


def join_left(t: LabeledOrderedTree, a: int, s: LabeledOrderedTree) -> LabeledOrderedTree:
    _require_non_root(t, a, "join_left")
    p = t.parent[a]
    return _insert(t, p, t.children[p].index(a), _fresh_copy(t, s))


def join_below(t: LabeledOrderedTree, a: int, s: LabeledOrderedTree) -> LabeledOrderedTree:
    _require_node(t, a)
    if t.children[a]:
        raise StructureError("join_below needs a leaf")
    return _insert(t, a, 0, _fresh_copy(t, s))


# ---------------------------------------------------------------- id-preserving splices

def splice_height(t: LabeledOrderedTree, a: int, b: int) -> LabeledOrderedTree:
    """Put the subtree at descendant b where the subtree at a was."""
    if b == a or a not in t.ancestors(b):
        raise StructureError(f"{a} is not a proper ancestor of {b}")
    if a == t.root:
        return subtree_at(t, b)
    p = t.parent[a]
    keep_b = set(t.preorder(b))
    drop = set(t.preorder(a)) - keep_b
    children = {v: cs for v, cs in t.children.items() if v not in drop}
    children[p] = tuple(b if c == a else c for c in children[p])
    labels = {v: l for v, l in t.labels.items() if v not in drop}
    return LabeledOrderedTree(t.root, children, labels)


def splice_degree(t: LabeledOrderedTree, a: int, j: int, k: int) -> LabeledOrderedTree:
    """Drop the children of a with 0-based indices j..k-1 together with their subtrees."""
    kids = t.children[a]
    if not 0 <= j < k < len(kids):
        raise StructureError(f"bad child range {j}..{k} at node {a}")
    drop = set()
    for c in kids[j:k]:
        drop.update(t.preorder(c))
    children = {v: cs for v, cs in t.children.items() if v not in drop}
    children[a] = kids[:j] + kids[k:]
    labels = {v: l for v, l in t.labels.items() if v not in drop}
    return LabeledOrderedTree(t.root, children, labels)


# ---------------------------------------------------------------- oracles

@dataclass(frozen=True)
class RepresentationOracle:
    """A map from trees to structures plus the properties the pruner relies on.

    str_map(tree, labels) builds the structure; `labels` is the label
    alphabet fixing the vocabulary, so trees that lost a label during
    pruning still map into the same vocabulary.
    """

    name: str
    str_map: Callable[[LabeledOrderedTree, Sequence[str]], Structure]
    leaf_alphabet: Callable[[str], bool] | None = None
    internal_alphabet: Callable[[str], bool] | None = None
    height_favourable: bool = False
    degree_favourable: bool = False
    min_rank: int = 0
    closed_under_subtrees: bool = True
    member: Callable[[LabeledOrderedTree], bool] | None = None

    def feasible(self, t: LabeledOrderedTree) -> bool:
        for v in t.nodes:
            ok = self.leaf_alphabet if t.is_leaf(v) else self.internal_alphabet
            if ok is not None and not ok(t.labels[v]):
                return False
        return self.member is None or self.member(t)

    def structure(self, t: LabeledOrderedTree, labels: Sequence[str] | None = None) -> Structure:
        return self.str_map(t, tree_labels(t) if labels is None else labels)


def tree_labels(t: LabeledOrderedTree) -> tuple[str, ...]:
    return tuple(sorted(set(t.labels.values())))


OracleSpec = tuple  # (oracle, m) or (oracle, m, logic)


def _normalize(oracles: Sequence[OracleSpec], need: str, default_logic: str) -> list[tuple[RepresentationOracle, int, str]]:
    out = []
    if not oracles:
        raise OracleError("at least one oracle is required")
    for spec in oracles:
        oracle, m = spec[0], spec[1]
        logic = spec[2] if len(spec) > 2 else default_logic
        if need in ("height", "both") and not oracle.height_favourable:
            raise OracleError(f"oracle {oracle.name} is not height-reduction favourable")
        if need in ("degree", "both") and not oracle.degree_favourable:
            raise OracleError(f"oracle {oracle.name} is not degree-reduction favourable")
        if need in ("degree", "both") and not oracle.closed_under_subtrees:
            raise OracleError(f"oracle {oracle.name}: tree class is not closed under subtrees")
        if m < oracle.min_rank:
            raise OracleError(f"rank {m} is below the minimum rank {oracle.min_rank} of oracle {oracle.name}")
        out.append((oracle, m, logic))
    return out


# canonical ids of ordered labeled subtrees, shared across calls
_canon_lock = threading.Lock()
_canon_ids: dict[tuple, int] = {}
_type_cache: dict[tuple, RankType] = {}


def _canon(key: tuple) -> int:
    cid = _canon_ids.get(key)
    if cid is None:
        with _canon_lock:
            cid = _canon_ids.setdefault(key, len(_canon_ids))
    return cid


def _canonical_ids(t: LabeledOrderedTree) -> dict[int, int]:
    ids: dict[int, int] = {}
    for v in t.postorder():
        ids[v] = _canon((t.labels[v], tuple(ids[c] for c in t.children[v])))
    return ids


@dataclass
class _Context:
    oracles: list[tuple[RepresentationOracle, int, str]]
    labels: tuple[str, ...]
    caps: Caps
    evaluations: int = 0

    def vector(self, canon: int, build: Callable[[], LabeledOrderedTree]) -> tuple:
        out = []
        tree = None
        for oracle, m, logic in self.oracles:
            key = (oracle, m, logic, self.labels, canon)
            t = _type_cache.get(key)
            if t is None:
                if tree is None:
                    tree = build()
                t = rank_type(oracle.str_map(tree, self.labels), m, logic, self.caps)
                self.evaluations += 1
                _type_cache[key] = t
            out.append(t)
        return tuple(out)


@dataclass(frozen=True)
class Splice:
    kind: str  # "height" or "degree"
    node: int
    other: int | tuple[int, int]
    size_before: int
    size_after: int

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "node": self.node,
            "other": list(self.other) if isinstance(self.other, tuple) else self.other,
            "size_before": self.size_before,
            "size_after": self.size_after,
        }


@dataclass
class ReductionReport:
    tree: LabeledOrderedTree
    original: LabeledOrderedTree
    splices: list[Splice] = field(default_factory=list)
    size_history: list[int] = field(default_factory=list)
    height_vectors: int = 0
    degree_vectors: int = 0
    type_evaluations: int = 0

    def as_dict(self) -> dict:
        return {
            "input_size": len(self.original),
            "output_size": len(self.tree),
            "input_height": self.original.height,
            "output_height": self.tree.height,
            "input_degree": self.original.degree,
            "output_degree": self.tree.degree,
            "distinct_subtree_vectors": self.height_vectors,
            "distinct_suffix_vectors": self.degree_vectors,
            "size_history": list(self.size_history),
            "splices": [s.as_dict() for s in self.splices],
        }


def _subtree_vectors(t: LabeledOrderedTree, ctx: _Context) -> dict[int, tuple]:
    canon = _canonical_ids(t)
    return {v: ctx.vector(canon[v], lambda v=v: subtree_at(t, v)) for v in t.postorder()}


def _height_step(t: LabeledOrderedTree, ctx: _Context) -> tuple[LabeledOrderedTree, Splice] | None:
    vectors = _subtree_vectors(t, ctx)
    sizes = t.sizes
    best = None
    for b in t.preorder():
        for a in t.ancestors(b):
            if vectors[a] == vectors[b]:
                key = (-(sizes[a] - sizes[b]), a, b)
                if best is None or key < best:
                    best = key
    if best is None:
        return None
    _, a, b = best
    s = splice_height(t, a, b)
    return s, Splice("height", a, b, len(t), len(s))


def _suffix_vectors(t: LabeledOrderedTree, a: int, canon: dict[int, int], ctx: _Context) -> list[tuple]:
    kids = t.children[a]
    out = []
    for j in range(len(kids)):
        key = _canon((t.labels[a], tuple(canon[c] for c in kids[j:])))

        def build(j=j):
            sub = subtree_at(t, a)
            return splice_degree(sub, a, 0, j) if j else sub

        out.append(ctx.vector(key, build))
    return out


def _degree_step(t: LabeledOrderedTree, ctx: _Context) -> tuple[LabeledOrderedTree, Splice] | None:
    canon = _canonical_ids(t)
    sizes = t.sizes
    for a in t.postorder():
        kids = t.children[a]
        if len(kids) < 2:
            continue
        vectors = _suffix_vectors(t, a, canon, ctx)
        prefix = [0]
        for c in kids:
            prefix.append(prefix[-1] + sizes[c])
        best = None
        for j in range(len(kids)):
            for k in range(j + 1, len(kids)):
                if vectors[j] == vectors[k]:
                    retained = (1 + prefix[j]) + (1 + prefix[-1] - prefix[k]) - 1
                    key = (retained, j, k)
                    if best is None or key < best:
                        best = key
        if best is not None:
            _, j, k = best
            s = splice_degree(t, a, j, k)
            return s, Splice("degree", a, (j, k), len(t), len(s))
    return None


def _check_input(t: LabeledOrderedTree, oracles):
    if t.root is None:
        raise StructureError("cannot reduce the empty tree")
    for oracle, _, _ in oracles:
        if not oracle.feasible(t):
            raise OracleError(f"tree is not representation-feasible for oracle {oracle.name}")


def _verify(original: LabeledOrderedTree, reduced: LabeledOrderedTree, ctx: _Context):
    for oracle, m, logic in ctx.oracles:
        small = oracle.str_map(reduced, ctx.labels)
        big = oracle.str_map(original, ctx.labels)
        hint = {x: x for x in small.universe} if small.universe <= big.universe else None
        if find_embedding(small, big, hint=hint) is None:
            raise VerificationError(f"oracle {oracle.name}: reduced structure does not embed into the original")
        if rank_type(small, m, logic, ctx.caps) != rank_type(big, m, logic, ctx.caps):
            raise VerificationError(f"oracle {oracle.name}: reduced structure is not {m}-equivalent ({logic})")


def _run(t, oracles, kinds, logic, caps, verify) -> ReductionReport:
    need = "both" if kinds == ("height", "degree") else kinds[0]
    specs = _normalize(oracles, need, logic)
    _check_input(t, specs)
    ctx = _Context(specs, tree_labels(t), caps)
    report = ReductionReport(tree=t, original=t, size_history=[len(t)])
    current = t
    steps = {"height": _height_step, "degree": _degree_step}
    while True:
        progressed = False
        for kind in kinds:
            while True:
                step = steps[kind](current, ctx)
                if step is None:
                    break
                nxt, splice = step
                if len(nxt) >= len(current):
                    raise VerificationError("a splice did not decrease the node count")
                current = nxt
                report.splices.append(splice)
                report.size_history.append(len(current))
                progressed = True
        if not progressed or len(kinds) == 1:
            break
    report.tree = current
    if "height" in kinds:
        report.height_vectors = len(set(_subtree_vectors(current, ctx).values()))
    if "degree" in kinds:
        canon = _canonical_ids(current)
        vecs = set()
        for a in current.nodes:
            if current.children[a]:
                vecs.update(_suffix_vectors(current, a, canon, ctx))
        report.degree_vectors = len(vecs)
    report.type_evaluations = ctx.evaluations
    if verify:
        _verify(t, current, ctx)
    return report


def height_reduce(t, oracles, logic: str = "fo", caps: Caps = TREE_CAPS, verify: bool = True) -> LabeledOrderedTree:
    return _run(t, oracles, ("height",), logic, caps, verify).tree


def degree_reduce(t, oracles, logic: str = "fo", caps: Caps = TREE_CAPS, verify: bool = True) -> LabeledOrderedTree:
    return _run(t, oracles, ("degree",), logic, caps, verify).tree


def reduce_with_report(t, oracles, logic: str = "fo", caps: Caps = TREE_CAPS, verify: bool = True) -> ReductionReport:
    """Height then degree reduction, repeated until neither applies."""
    return _run(t, oracles, ("height", "degree"), logic, caps, verify)


def reduce(t, oracles, logic: str = "fo", caps: Caps = TREE_CAPS, verify: bool = True) -> LabeledOrderedTree:
    return reduce_with_report(t, oracles, logic, caps, verify).tree
