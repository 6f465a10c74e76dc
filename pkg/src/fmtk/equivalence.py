"""Rank-m types for FO and MSO, plus an independent EF-game decision procedure.

A type is built recursively: its atomic core describes the pinned positions
(constants first, then the tuple), and its children are the types one rank
lower after every possible point move (and, for MSO, every set move).
Types are hash-consed, so two types are equal exactly when they are the
same object.

Atomic cores are interned as chains: the core of positions p_1..p_k is the
core of p_1..p_{k-1} extended by a record describing how p_k relates to the
earlier positions.  Because both structures see positions in the same order,
equal chains mean equal atomic types.
"""

from __future__ import annotations

import hashlib
import itertools
import threading
from collections.abc import Iterable, Sequence

import numpy as np

from .config import Caps, resolve
from .errors import CapExceeded, StructureError, VocabularyError
from .structures import PointedStructure, Structure, pointed

LOGICS = ("fo", "mso")

_lock = threading.Lock()
_core_ids: dict[tuple, int] = {}
_core_chain: list[tuple] = [(None, ())]  # id 0 is the empty core
_types: dict[tuple, "RankType"] = {}


def _intern_core(parent: int, ext: tuple) -> int:
    key = (parent, ext)
    cid = _core_ids.get(key)
    if cid is None:
        with _lock:
            cid = _core_ids.get(key)
            if cid is None:
                cid = len(_core_chain)
                _core_chain.append(key)
                _core_ids[key] = cid
    return cid


class RankType:
    """Canonical (m, logic)-type.  Compare with ==, which is identity."""

    __slots__ = ("logic", "rank", "core", "points", "sets", "_hash", "_fp")

    def __init__(self, logic, rank, core, points, sets):
        self.logic = logic
        self.rank = rank
        self.core = core
        self.points = points
        self.sets = sets
        self._hash = hash((logic, rank, core, points, sets))
        self._fp = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"RankType({self.logic}, m={self.rank}, {self.fingerprint()[:12]})"

    def fingerprint(self) -> str:
        """Stable hex digest; identical across processes and runs."""
        if self._fp is None:
            h = hashlib.sha256()
            h.update(f"{self.logic}|{self.rank}|{_core_fingerprint(self.core)}|".encode())
            h.update(",".join(sorted(t.fingerprint() for t in self.points)).encode())
            h.update(b"|")
            h.update(",".join(sorted(t.fingerprint() for t in self.sets)).encode())
            self._fp = h.hexdigest()
        return self._fp


_core_fp_cache: dict[int, str] = {0: hashlib.sha256(b"core").hexdigest()}


def _core_fingerprint(cid: int) -> str:
    fp = _core_fp_cache.get(cid)
    if fp is None:
        parent, ext = _core_chain[cid]
        fp = hashlib.sha256(f"{_core_fingerprint(parent)}|{ext!r}".encode()).hexdigest()
        _core_fp_cache[cid] = fp
    return fp


def _intern_type(logic, rank, core, points=frozenset(), sets=frozenset()) -> RankType:
    key = (logic, rank, core, points, sets)
    t = _types.get(key)
    if t is None:
        with _lock:
            t = _types.get(key)
            if t is None:
                t = RankType(logic, rank, core, points, sets)
                _types[key] = t
    return t


def _check_logic(logic: str) -> str:
    logic = logic.lower()
    if logic not in LOGICS:
        raise ValueError(f"logic must be 'fo' or 'mso', got {logic!r}")
    return logic


def check_type_cap(A: Structure, logic: str, m: int, caps: Caps | None) -> None:
    caps = resolve(caps)
    if m == 0:
        return
    if logic == "mso" and len(A) > caps.mso_universe:
        raise CapExceeded(f"MSO types on {len(A)} elements exceed cap {caps.mso_universe}")
    if len(A) > caps.fo_universe:
        raise CapExceeded(f"FO types on {len(A)} elements exceed cap {caps.fo_universe}")


class _TypeBuilder:
    def __init__(self, A: Structure, logic: str):
        self.logic = logic
        self.elements = A.elements
        self.index = {x: i for i, x in enumerate(self.elements)}
        n = self.n = len(self.elements)
        unary = [r for r, a in A.vocab.relations if a == 1]
        code = np.zeros(n, dtype=np.int64)
        for j, r in enumerate(unary):
            for (x,) in A.rel(r):
                code[self.index[x]] |= 1 << j
        self.unary_code = code
        self.binary = []
        for r, a in A.vocab.relations:
            if a == 2:
                M = np.zeros((n, n), dtype=np.int64)
                for x, y in A.rel(r):
                    M[self.index[x], self.index[y]] = 1
                self.binary.append(M)
        self.diag = [M.diagonal().copy() for M in self.binary]
        self.higher = [
            (a, frozenset(tuple(self.index[x] for x in t) for t in A.rel(r)))
            for r, a in A.vocab.relations
            if a > 2
        ]

    def rows(self, P: list[int], S: list[np.ndarray]) -> np.ndarray:
        """One row per candidate element: how it relates to positions P and sets S."""
        n = self.n
        eqpos = np.full(n, -1, dtype=np.int64)
        for i in range(len(P) - 1, -1, -1):
            eqpos[P[i]] = i
        setbits = np.zeros(n, dtype=np.int64)
        for j, X in enumerate(S):
            setbits |= X.astype(np.int64) << j
        cols = [eqpos, self.unary_code, setbits]
        for M, d in zip(self.binary, self.diag):
            cols.append(d)
            for p in P:
                cols.append(M[p])
                cols.append(M[:, p])
        k = len(P)
        for arity, tuples in self.higher:
            for pattern in itertools.product(range(k + 1), repeat=arity):
                if k not in pattern:
                    continue
                col = np.zeros(n, dtype=np.int64)
                for b in range(n):
                    t = tuple(b if j == k else P[j] for j in pattern)
                    col[b] = t in tuples
                cols.append(col)
        return np.column_stack(cols) if n else np.zeros((0, len(cols)), dtype=np.int64)

    def initial(self, positions: Sequence[int]) -> tuple[int, list[int]]:
        core, P = 0, []
        for x in positions:
            row = self.rows(P, [])[x]
            core = _intern_core(core, tuple(int(v) for v in row))
            P.append(x)
        return core, P

    def set_patterns(self, P: list[int]) -> list[tuple]:
        """Membership patterns of P realisable by some subset of the universe."""
        distinct = list(dict.fromkeys(P))
        out = []
        for bits in itertools.product((0, 1), repeat=len(distinct)):
            chosen = dict(zip(distinct, bits))
            out.append(("s",) + tuple(chosen[p] for p in P))
        return out

    def build(self, P: list[int], S: list[np.ndarray], core: int, r: int) -> RankType:
        if r == 0:
            return _intern_type(self.logic, 0, core)
        rows = [tuple(row) for row in self.rows(P, S).tolist()]
        if r == 1:
            points = frozenset(_intern_type(self.logic, 0, _intern_core(core, row)) for row in set(rows))
        else:
            children = set()
            for b, row in enumerate(rows):
                child_core = _intern_core(core, row)
                children.add(self.build(P + [b], S, child_core, r - 1))
            points = frozenset(children)
        sets: frozenset = frozenset()
        if self.logic == "mso":
            if r == 1:
                sets = frozenset(_intern_type(self.logic, 0, _intern_core(core, pat)) for pat in self.set_patterns(P))
            else:
                children = set()
                for X in _subset_masks(self.n):
                    pat = ("s",) + tuple(int(X[p]) for p in P)
                    children.add(self.build(P, S + [X], _intern_core(core, pat), r - 1))
                sets = frozenset(children)
        return _intern_type(self.logic, r, core, points, sets)


def _subset_masks(n: int):
    for mask in range(1 << n):
        yield np.array([(mask >> i) & 1 for i in range(n)], dtype=np.int64)


def _positions(A: PointedStructure) -> list[int]:
    S = A.structure
    return [S.const(c) for c in S.vocab.constants] + list(A.tuple)


def rank_type(A: PointedStructure | Structure, m: int, logic: str = "fo", caps: Caps | None = None) -> RankType:
    A = pointed(A)
    logic = _check_logic(logic)
    if m < 0:
        raise ValueError("rank must be non-negative")
    check_type_cap(A.structure, logic, m, caps)
    builder = _TypeBuilder(A.structure, logic)
    core, P = builder.initial([builder.index[x] for x in _positions(A)])
    return builder.build(P, [], core, m)


def _check_pair(A: PointedStructure, B: PointedStructure):
    if A.structure.vocab != B.structure.vocab:
        raise VocabularyError("structures have different vocabularies")
    if len(A.tuple) != len(B.tuple):
        raise StructureError(f"tuple lengths differ ({len(A.tuple)} vs {len(B.tuple)})")


def equivalent(A, B, m: int, logic: str = "fo", caps: Caps | None = None) -> bool:
    A, B = pointed(A), pointed(B)
    _check_pair(A, B)
    return rank_type(A, m, logic, caps) == rank_type(B, m, logic, caps)


def count_equivalence_classes(family: Iterable, m: int, logic: str = "fo", caps: Caps | None = None) -> int:
    family = [pointed(x) for x in family]
    for x in family[1:]:
        _check_pair(family[0], x)
    return len({rank_type(x, m, logic, caps) for x in family})


def group_by_type(family: Iterable, m: int, logic: str = "fo", caps: Caps | None = None) -> dict[RankType, list]:
    groups: dict[RankType, list] = {}
    for x in family:
        groups.setdefault(rank_type(x, m, logic, caps), []).append(x)
    return groups


# ---------------------------------------------------------------- EF games

class _Game:
    def __init__(self, A: Structure, B: Structure, logic: str):
        self.A, self.B = A, B
        self.logic = logic
        self.rels = [(r, a, A.rel(r), B.rel(r)) for r, a in A.vocab.relations]
        self.memo: dict = {}
        self.subsets_a = self.subsets_b = None
        if logic == "mso":
            self.subsets_a = [frozenset(c) for k in range(len(A) + 1) for c in itertools.combinations(A.elements, k)]
            self.subsets_b = [frozenset(c) for k in range(len(B) + 1) for c in itertools.combinations(B.elements, k)]

    def point_ok(self, pairs, sets, a, b) -> bool:
        """Does adding (a, b) keep the position map a partial isomorphism?"""
        for x, y in pairs:
            if (x == a) != (y == b):
                return False
        for X, Y in sets:
            if (a in X) != (b in Y):
                return False
        ext_a = [x for x, _ in pairs] + [a]
        ext_b = [y for _, y in pairs] + [b]
        new = len(pairs)
        for _, arity, RA, RB in self.rels:
            for idx in itertools.product(range(new + 1), repeat=arity):
                if new not in idx:
                    continue
                ta = tuple(ext_a[i] for i in idx)
                tb = tuple(ext_b[i] for i in idx)
                if (ta in RA) != (tb in RB):
                    return False
        return True

    def set_ok(self, pairs, X, Y) -> bool:
        return all((x in X) == (y in Y) for x, y in pairs)

    def wins(self, pairs: tuple, sets: tuple, r: int) -> bool:
        if r == 0:
            return True
        key = (frozenset(pairs), frozenset(sets), r)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        result = self._wins(pairs, sets, r)
        self.memo[key] = result
        return result

    def _wins(self, pairs, sets, r) -> bool:
        A, B = self.A, self.B
        for a in A.elements:
            if not any(
                self.point_ok(pairs, sets, a, b) and self.wins(pairs + ((a, b),), sets, r - 1) for b in B.elements
            ):
                return False
        for b in B.elements:
            if not any(
                self.point_ok(pairs, sets, a, b) and self.wins(pairs + ((a, b),), sets, r - 1) for a in A.elements
            ):
                return False
        if self.logic == "mso":
            for X in self.subsets_a:
                if not any(self.set_ok(pairs, X, Y) and self.wins(pairs, sets + ((X, Y),), r - 1) for Y in self.subsets_b):
                    return False
            for Y in self.subsets_b:
                if not any(self.set_ok(pairs, X, Y) and self.wins(pairs, sets + ((X, Y),), r - 1) for X in self.subsets_a):
                    return False
        return True


def ef_game_decide(A, B, m: int, logic: str = "fo", caps: Caps | None = None) -> bool:
    """Whether the duplicator wins the m-round game on (A, a) and (B, b).

    Exhaustive minimax, kept independent of the type construction so the two
    can be used to check each other.
    """
    A, B = pointed(A), pointed(B)
    _check_pair(A, B)
    logic = _check_logic(logic)
    check_type_cap(A.structure, logic, m, caps)
    check_type_cap(B.structure, logic, m, caps)
    game = _Game(A.structure, B.structure, logic)
    pairs: tuple = ()
    for a, b in zip(_positions(A), _positions(B)):
        if not game.point_ok(pairs, (), a, b):
            return False
        pairs += ((a, b),)
    return game.wins(pairs, (), m)
