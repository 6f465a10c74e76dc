"""Cruxes, covers and preservation verdicts over finite families.

Both PSC(k) and PCE(k) checks reduce to one table per structure A: for every
subset X of A (containing the constants) whether A[X] lies in the family and
whether it models the sentence.  Subsets are bitmasks over A.elements.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .config import Caps, resolve
from .errors import CapExceeded, FormulaError, StructureError
from .families import FamilySpec
from .logic import (
    FALSE,
    TRUE,
    And,
    Atom,
    Con,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Truth,
    Var,
    atom,
    canonical_conjunctive_query,
    conj,
    disj,
    eq,
    evaluate,
    exists_many,
    forall_many,
    fresh_name,
    is_fo,
    is_sentence,
    relativize,
    variables_of,
)
from .structures import (
    PointedStructure,
    Structure,
    Vocabulary,
    dedupe_isomorphic,
    find_homomorphism,
    induced_substructure,
    pointed,
    serialize_structure,
)

# ---------------------------------------------------------------- subset tables


class _SubsetTable:
    """Family membership and truth of a sentence on every induced substructure of A."""

    def __init__(self, A: Structure, phi: Formula, family: FamilySpec, caps: Caps):
        self.A = A
        self.elements = A.elements
        n = len(self.elements)
        if 1 << n > caps.subset_limit:
            raise CapExceeded(f"{1 << n} subsets of a {n}-element structure exceed cap {caps.subset_limit}")
        self.bit = {x: 1 << i for i, x in enumerate(self.elements)}
        self.forced = self.mask(A.constant_elements)
        self.full = (1 << n) - 1
        self.phi = phi
        self.family = family
        self.caps = caps
        self._member: dict[int, bool] = {}
        self._models: dict[int, bool] = {}

    def mask(self, xs: Iterable[int]) -> int:
        m = 0
        for x in xs:
            m |= self.bit[x]
        return m

    def elements_of(self, mask: int) -> tuple[int, ...]:
        return tuple(x for x in self.elements if mask & self.bit[x])

    def substructure(self, mask: int) -> Structure:
        return induced_substructure(self.A, self.elements_of(mask))

    def masks(self, must: int = 0, max_size: int | None = None):
        """Subsets containing `must` and the constants, by size then lexicographically."""
        must |= self.forced
        rest = [x for x in self.elements if not must & self.bit[x]]
        fixed = bin(must).count("1")
        top = len(rest) if max_size is None else min(len(rest), max_size - fixed)
        for size in range(top + 1):
            for extra in itertools.combinations(rest, size):
                yield must | self.mask(extra)

    def member(self, mask: int) -> bool:
        if mask not in self._member:
            self._member[mask] = self.family.contains(self.substructure(mask))
        return self._member[mask]

    def models(self, mask: int) -> bool:
        if mask not in self._models:
            self._models[mask] = evaluate(self.substructure(mask), self.phi, caps=self.caps)
        return self._models[mask]

    def refuters(self, max_size: int | None = None) -> list[int]:
        """Subsets in the family whose induced substructure fails the sentence."""
        return [m for m in self.masks(max_size=max_size) if self.member(m) and not self.models(m)]

    def supporters(self, max_size: int | None = None) -> list[int]:
        return [m for m in self.masks(max_size=max_size) if self.member(m) and self.models(m)]


def _check_sentence(phi: Formula):
    if not is_sentence(phi):
        raise FormulaError("expected a sentence")


def _check_model(A: Structure, phi: Formula, family: FamilySpec, caps: Caps):
    if not family.contains(A):
        raise StructureError("the structure is not a member of the family")
    if not evaluate(A, phi, caps=caps):
        raise StructureError("the structure does not model the sentence")


# ---------------------------------------------------------------- cruxes


@dataclass
class CruxReport:
    structure: str
    cruxes: list[tuple[int, ...]]
    k: int

    @property
    def minimal_size(self) -> int | None:
        return min((len(c) for c in self.cruxes), default=None)

    def as_dict(self) -> dict:
        size = self.minimal_size
        return {
            "structure": self.structure,
            "k": self.k,
            "cruxes": [list(c) for c in self.cruxes],
            "minimal_size": size if size is not None else f"none <= {self.k}",
        }


def is_k_crux(A: Structure, C: Iterable[int], phi: Formula, family: FamilySpec, caps: Caps | None = None) -> bool:
    """Every induced substructure of A that contains C and lies in the family models phi."""
    caps = resolve(caps)
    _check_sentence(phi)
    C = frozenset(C)
    if not C <= A.universe:
        raise StructureError("the crux candidate is not a subset of the universe")
    _check_model(A, phi, family, caps)
    table = _SubsetTable(A, phi, family, caps)
    must = table.mask(C)
    return not any(table.member(m) and not table.models(m) for m in table.masks(must))


def _cruxes(table: _SubsetTable, k: int) -> list[int]:
    bad = table.refuters()
    found: list[int] = []
    for size in range(min(k, len(table.elements)) + 1):
        for combo in itertools.combinations(table.elements, size):
            m = table.mask(combo)
            if any(f & m == f for f in found):
                continue
            if not any(b & m == m for b in bad):
                found.append(m)
    return found


def find_cruxes(A: Structure, phi: Formula, family: FamilySpec, k: int, caps: Caps | None = None) -> CruxReport:
    """All minimal cruxes of size at most k, by size then lexicographically."""
    caps = resolve(caps)
    _check_sentence(phi)
    _check_model(A, phi, family, caps)
    table = _SubsetTable(A, phi, family, caps)
    cruxes = [table.elements_of(m) for m in _cruxes(table, k)]
    for c in cruxes:
        if not is_k_crux(A, c, phi, family, caps):
            raise AssertionError(f"reported crux {c} does not re-verify")
    return CruxReport(serialize_structure(A), cruxes, k)


# ---------------------------------------------------------------- verdicts


@dataclass
class Verdict:
    property: str
    k: int
    verdict: str
    witness: dict | None = None
    counterexample: dict | None = None

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def as_dict(self) -> dict:
        out = {"property": self.property, "k": self.k, "verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


def check_psc_k(family: FamilySpec, phi: Formula, k: int, caps: Caps | None = None) -> Verdict:
    """PSC(k) over the family: every member modelling phi has a crux of size <= k."""
    caps = resolve(caps)
    _check_sentence(phi)
    chosen = []
    for A in family.structures(caps):
        if not evaluate(A, phi, caps=caps):
            continue
        table = _SubsetTable(A, phi, family, caps)
        cruxes = _cruxes(table, k)
        if not cruxes:
            bad = table.refuters()
            refuters = []
            for size in range(min(k, len(A)) + 1):
                for combo in itertools.combinations(A.elements, size):
                    m = table.mask(combo)
                    b = next(b for b in bad if b & m == m)
                    refuters.append({"set": list(combo), "substructure": list(table.elements_of(b))})
            return Verdict("PSC", k, "counterexample", counterexample={
                "structure": serialize_structure(A), "refuters": refuters,
            })
        chosen.append(list(table.elements_of(cruxes[0])))
    return Verdict("PSC", k, "holds", witness={"models": len(chosen), "cruxes": chosen})


def is_k_ary_cover(A: Structure, R: Sequence[Structure], k: int) -> bool:
    """A extends every member of R and each set of at most k elements lies in some member."""
    for B in R:
        if not B.universe <= A.universe or induced_substructure(A, B.universe) != B:
            raise StructureError("cover member is not an induced substructure of A")
    if not R:
        return False
    for size in range(min(k, len(A)) + 1):
        for combo in itertools.combinations(A.elements, size):
            if not any(set(combo) <= B.universe for B in R):
                return False
    return True


def _greedy_cover(table: _SubsetTable, pool: list[int], k: int) -> list[int] | None:
    chosen: list[int] = []
    for size in range(min(k, len(table.elements)) + 1):
        for combo in itertools.combinations(table.elements, size):
            m = table.mask(combo)
            if any(c & m == m for c in chosen):
                continue
            hit = next((p for p in pool if p & m == m), None)
            if hit is None:
                return None
            chosen.append(hit)
    return chosen


def check_pce_k(family: FamilySpec, phi: Formula, k: int, cover_cap: int = 6, caps: Caps | None = None) -> Verdict:
    """PCE(k) over the family, searching covers among substructures of at most cover_cap elements.

    A member A that fails phi violates PCE(k) if its induced substructures in
    the family that model phi form a k-ary cover of A.  When A is larger than
    cover_cap and the bounded pool does not cover it, the outcome for A is
    inconclusive.
    """
    caps = resolve(caps)
    _check_sentence(phi)
    open_members = []
    for A in family.structures(caps):
        if evaluate(A, phi, caps=caps):
            continue
        table = _SubsetTable(A, phi, family, caps)
        pool = table.supporters(max_size=cover_cap)
        cover = _greedy_cover(table, pool, k)
        if cover is not None:
            R = [table.substructure(m) for m in cover]
            if not is_k_ary_cover(A, R, k):
                raise AssertionError("greedy cover does not re-verify")
            return Verdict("PCE", k, "violated", counterexample={
                "structure": serialize_structure(A),
                "cover": [list(table.elements_of(m)) for m in cover],
            })
        if len(A) > cover_cap:
            open_members.append(serialize_structure(A))
    if open_members:
        return Verdict("PCE", k, "inconclusive", witness={"unresolved": open_members, "cover_cap": cover_cap})
    return Verdict("PCE", k, "holds")


# ---------------------------------------------------------------- translations


def _fresh_vars(prefix: str, count: int, taken: set[str]) -> list[str]:
    out = []
    for i in range(1, count + 1):
        name = fresh_name(f"{prefix}{i}", taken)
        taken.add(name)
        out.append(name)
    return out


def at_most_distinct(names: Sequence[str], p: int) -> Formula:
    """Quantifier-free: the variables take at most p distinct values.

    Equivalent to relativizing the "at most p elements" sentence to names,
    but of size C(len(names), p + 1) instead of len(names) ** (p + 1).
    """
    names = list(dict.fromkeys(names))
    if len(names) <= p:
        return TRUE
    return conj(disj(eq(a, b) for a, b in itertools.combinations(group, 2)) for group in itertools.combinations(names, p + 1))


def glt_translate(phi: Formula, k: int, p: int, class_sentence: Formula | None = None) -> Formula:
    """The exists^k forall^p sentence built from a witness bound p.

    The inner sentence ((at most p elements) and class_sentence) -> phi is
    relativized to the k + p quantified variables.
    """
    if not is_fo(phi) or not is_sentence(phi):
        raise FormulaError("glt_translate needs an FO sentence")
    if class_sentence is not None and (not is_fo(class_sentence) or not is_sentence(class_sentence)):
        raise FormulaError("the class sentence must be an FO sentence")
    taken = set(variables_of(phi)) | (set(variables_of(class_sentence)) if class_sentence is not None else set())
    xs = _fresh_vars("u", k, taken)
    ys = _fresh_vars("w", p, taken)
    guard = at_most_distinct(xs + ys, p)
    if class_sentence is not None:
        guard = And(guard, relativize(class_sentence, xs + ys))
    body = Implies(guard, relativize(phi, xs + ys))
    return exists_many(xs, forall_many(ys, body))


def bounded_models(family: FamilySpec, phi: Formula, k: int, p: int, caps: Caps | None = None) -> list[PointedStructure]:
    """Members of size <= p that model phi, with every k-tuple pinned, up to pinned isomorphism."""
    caps = resolve(caps)
    out = []
    for B in family.structures(caps):
        if len(B) > p or not evaluate(B, phi, caps=caps):
            continue
        tuples = itertools.product(B.elements, repeat=k)
        out.extend(dedupe_isomorphic(PointedStructure(B, t) for t in tuples))
    return dedupe_isomorphic(out)


def hpt_translate(phi: Formula, k: int, p: int, family: FamilySpec, caps: Caps | None = None) -> Formula:
    """forall^k x of the disjunction of canonical queries of the bounded pinned models."""
    _check_sentence(phi)
    if family.class_sentence is None and family.generator is not None and family.size_bound < p:
        family = FamilySpec(family.generator, p, (), None)
    disjuncts = []
    for B in bounded_models(family, phi, k, p, caps):
        q = canonical_conjunctive_query(B)
        if q not in disjuncts:
            disjuncts.append(q)
    xs = [f"x{i}" for i in range(1, k + 1)]
    return forall_many(xs, disj(disjuncts) if disjuncts else FALSE)


def is_forall_exists_positive(phi: Formula, k: int) -> bool:
    """Prefix of k universal quantifiers followed by an existential-positive formula."""
    for _ in range(k):
        if not isinstance(phi, Forall):
            return False
        phi = phi.body

    def positive(f: Formula) -> bool:
        if isinstance(f, (Truth, Atom, Eq)):
            return True
        if isinstance(f, (And, Or)):
            return positive(f.left) and positive(f.right)
        if isinstance(f, Exists):
            return positive(f.body)
        return False

    return positive(phi)


def k_tuples(A: Structure, k: int) -> list[tuple[int, ...]]:
    """All k-tuples of A in the fixed enumeration order used by homomorphic covers."""
    return list(itertools.product(A.elements, repeat=k))


def is_k_ary_hom_cover(A: Structure, R: Sequence[PointedStructure | Structure], k: int) -> bool:
    """The i-th member of R maps homomorphically onto A pinned at the i-th k-tuple."""
    tuples = k_tuples(A, k)
    if len(R) != len(tuples):
        raise StructureError(f"a {k}-ary homomorphic cover of A needs {len(tuples)} members, got {len(R)}")
    for B, t in zip(R, tuples):
        B = pointed(B)
        if len(B.tuple) != k:
            raise StructureError(f"cover member pinned at {len(B.tuple)} elements, expected {k}")
        if find_homomorphism(B, PointedStructure(A, t)) is None:
            return False
    return True


# ---------------------------------------------------------------- fixtures


def _linear_order(le: str) -> Formula:
    x, y, z = Var("x"), Var("y"), Var("z")
    reflexive = Forall("x", Atom(le, (x, x)))
    antisymmetric = forall_many(["x", "y"], Implies(And(Atom(le, (x, y)), Atom(le, (y, x))), Eq(x, y)))
    transitive = forall_many(["x", "y", "z"], Implies(And(Atom(le, (x, y)), Atom(le, (y, z))), Atom(le, (x, z))))
    total = forall_many(["x", "y"], Or(Atom(le, (x, y)), Atom(le, (y, x))))
    return conj([reflexive, antisymmetric, transitive, total])


def _at_most_in(pred: str, k: int) -> Formula:
    xs = [f"x{i}" for i in range(1, k + 2)]
    members = conj(atom(pred, x) for x in xs)
    clash = disj(eq(a, b) for a, b in itertools.combinations(xs, 2)) if k else FALSE
    return forall_many(xs, Implies(members, clash))


ORDER_VOCAB = Vocabulary({"le": 2, "S": 2, "P": 1}, ("c", "d"))


def psi_k(k: int) -> Formula:
    """Preserved under substructures over all finite structures, yet not exists^k forall*."""
    x, y, z = Var("x"), Var("y"), Var("z")
    c, d = Con("c"), Con("d")
    order = _linear_order("le")
    ends = Forall("x", And(Atom("le", (c, x)), Atom("le", (x, d))))
    between = Implies(And(Atom("le", (x, z)), Atom("le", (z, y))), Or(Eq(z, x), Eq(z, y)))
    successor = forall_many(["x", "y"], Implies(
        Atom("S", (x, y)),
        And(And(Atom("le", (x, y)), Not(Eq(x, y))), Forall("z", between)),
    ))
    total_successor = Forall("x", Implies(Not(Eq(x, d)), Exists("y", Atom("S", (x, y)))))
    return And(conj([order, ends, successor]), Not(And(total_successor, _at_most_in("P", k))))


@dataclass
class GltCounterexample:
    """The order structure A, its copy B with one marked P-element removed, and psi_k."""

    k: int
    n: int
    block: int
    A: Structure
    B: Structure
    psi: Formula = field(repr=False)

    def __iter__(self):
        return iter((self.A, self.B, self.psi))

    @property
    def block_size(self) -> int:
        return 8 * self.n + 1

    @property
    def marked(self) -> int:
        return 4 * self.n + 1 + self.block * self.block_size

    def block_range(self) -> range:
        start = self.block * self.block_size + 1
        return range(start, start + self.block_size)

    def segment_map(self, witnesses: Sequence[int], tup: Sequence[int]) -> dict[int, int]:
        """The partial map from B to A that moves the inner segments of the marked block.

        Segments are maximal runs of consecutive elements of the tuple
        together with the fixed points c, d and the witnesses.  Runs that
        avoid every fixed point and sit inside the marked block are packed,
        in order and separated by one gap, starting n + 2 places into the
        block; everything else is mapped to itself.
        """
        block = self.block_range()
        if any(a in block for a in witnesses):
            raise StructureError("witnesses must avoid the marked block")
        top = len(self.A)
        fixed = {1, top, *witnesses}
        points = sorted(fixed | set(tup))
        runs: list[list[int]] = []
        for x in points:
            if runs and runs[-1][-1] + 1 == x:
                runs[-1].append(x)
            else:
                runs.append([x])
        rho = {x: x for x in fixed}
        # one place past the n positions an identity run can occupy at the block start
        cursor = block.start + self.n + 1
        for run in runs:
            inner = all(x in block for x in run) and not fixed & set(run)
            if inner:
                for offset, x in enumerate(run):
                    rho[x] = cursor + offset
                cursor += len(run) + 1
            else:
                rho.update({x: x for x in run})
        return {x: rho[x] for x in sorted(fixed | set(tup))}


def is_partial_isomorphism(source: Structure, target: Structure, mapping: dict[int, int]) -> bool:
    """Injective, preserves constants, and every relation restricted to the domain both ways."""
    if len(set(mapping.values())) != len(mapping):
        return False
    for c in source.vocab.constants:
        sc = source.const(c)
        if sc in mapping and mapping[sc] != target.const(c):
            return False
    dom = sorted(mapping)
    for name, arity in source.vocab.relations:
        for t in itertools.product(dom, repeat=arity):
            if (t in source.rel(name)) != (tuple(mapping[x] for x in t) in target.rel(name)):
                return False
    return True


def glt_counterexample(k: int, n: int, block: int | None = None) -> GltCounterexample:
    """Order 1..(8n+1)(k+1) with successor, P at the block centres, c = 1 and d = max."""
    if n < 1:
        raise StructureError("n must be at least 1")
    block = k if block is None else block
    if not 0 <= block <= k:
        raise StructureError(f"block must lie in 0..{k}")
    size = (8 * n + 1) * (k + 1)
    universe = range(1, size + 1)
    le = [(a, b) for a in universe for b in universe if a <= b]
    succ = [(a, a + 1) for a in range(1, size)]
    marks = [(4 * n + 1) + i * (8 * n + 1) for i in range(k + 1)]
    consts = {"c": 1, "d": size}
    A = Structure(ORDER_VOCAB, universe, {"le": le, "S": succ, "P": [(x,) for x in marks]}, consts)
    dropped = marks[block]
    B = Structure(ORDER_VOCAB, universe, {"le": le, "S": succ, "P": [(x,) for x in marks if x != dropped]}, consts)
    return GltCounterexample(k, n, block, A, B, psi_k(k))


def phi_k_paths(k: int) -> Formula:
    """At least k isolated vertices, or at least k + 1 vertices of degree at most 1."""

    def distinct(xs):
        return conj(Not(eq(a, b)) for a, b in itertools.combinations(xs, 2))

    isolated = [f"x{i}" for i in range(1, k + 1)]
    clause_isolated = exists_many(
        isolated, And(distinct(isolated), conj(Not(Exists("y", atom("E", x, "y"))) for x in isolated))
    )
    low = [f"x{i}" for i in range(1, k + 2)]
    at_most_one = lambda x: forall_many(["y", "z"], Implies(And(atom("E", x, "y"), atom("E", x, "z")), eq("y", "z")))  # noqa: E731
    clause_low = exists_many(low, And(distinct(low), conj(at_most_one(x) for x in low)))
    return Or(clause_isolated, clause_low)

