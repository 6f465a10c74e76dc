"""Searching for small equivalent substructures, and what follows from them.

The core search looks, around a pinned tuple, for the smallest induced
substructure in a family with the same rank-m type.  Interchangeable
elements (twins: swapping them is an automorphism fixing the pins) are
collapsed into counts, which makes unary structures with dozens of
elements cheap to search.
"""

from __future__ import annotations

import csv
import io
import random
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

from .config import Caps, resolve
from .equivalence import rank_type
from .errors import CapExceeded, FormulaError, StructureError, VerificationError
from .families import FamilySpec
from .logic import Formula, Not, evaluate, is_sentence, rank
from .structures import PointedStructure, Structure, induced_substructure, strip_labels, tuple_pin_expand


# ---------------------------------------------------------------- twins


def _swap_is_automorphism(A: Structure, x: int, y: int) -> bool:
    swap = {x: y, y: x}
    for ts in A.relations.values():
        for t in ts:
            if x in t or y in t:
                if tuple(swap.get(z, z) for z in t) not in ts:
                    return False
    return True


def twin_classes(A: Structure, fixed: Iterable[int] = ()) -> list[list[int]]:
    """Partition of the non-fixed elements into classes of pairwise swappable elements.

    Swappability is an equivalence relation, so comparing against the first
    element of each class suffices.
    """
    fixed = set(fixed) | set(A.constant_elements)
    classes: list[list[int]] = []
    for x in A.elements:
        if x in fixed:
            continue
        for cls in classes:
            if _swap_is_automorphism(A, cls[0], x):
                cls.append(x)
                break
        else:
            classes.append([x])
    return classes


def _candidate_sets(classes: list[list[int]], base: frozenset[int], size: int) -> list[tuple[int, ...]]:
    """Orbit-minimal subsets of the given size: the first c elements of each class."""
    extra = size - len(base)
    out = []

    def go(i: int, left: int, chosen: list[int]):
        if i == len(classes):
            if left == 0:
                out.append(tuple(sorted(base.union(chosen))))
            return
        cls = classes[i]
        for c in range(min(left, len(cls)) + 1):
            go(i + 1, left - c, chosen + cls[:c])

    if extra >= 0:
        go(0, extra, [])
    return sorted(out)


# ---------------------------------------------------------------- search


def _search(
    A: Structure,
    pins: tuple[int, ...],
    m: int,
    bound: int,
    logic: str,
    member: Callable[[Structure], bool],
    caps: Caps,
) -> Structure | None:
    base = frozenset(pins) | A.constant_elements
    target = rank_type(PointedStructure(A, pins), m, logic, caps)
    classes = twin_classes(A, base)
    budget = caps.subset_limit
    for size in range(len(base), min(bound, len(A)) + 1):
        for chosen in _candidate_sets(classes, base, size):
            budget -= 1
            if budget < 0:
                raise CapExceeded(f"EBSP search examined more than {caps.subset_limit} candidate sets")
            B = induced_substructure(A, chosen)
            if not member(B):
                continue
            if rank_type(PointedStructure(B, pins), m, logic, caps) is target:
                return B
    return None


def verify_ebsp(
    family: FamilySpec,
    A: Structure,
    pins: Sequence[int],
    m: int,
    bound: int,
    B: Structure,
    logic: str = "fo",
    caps: Caps | None = None,
) -> bool:
    """Membership, induced substructure, pins contained, size bound and equal rank-m types."""
    pins = tuple(pins)
    return (
        family.contains(B)
        and B.universe <= A.universe
        and induced_substructure(A, B.universe) == B
        and set(pins) <= B.universe
        and len(B) <= bound
        and rank_type(PointedStructure(B, pins), m, logic, caps) is rank_type(PointedStructure(A, pins), m, logic, caps)
    )


def ebsp_condition(
    family: FamilySpec,
    A: Structure,
    pins: Sequence[int],
    m: int,
    bound: int,
    logic: str = "fo",
    caps: Caps | None = None,
) -> Structure | None:
    """Smallest, then lexicographically first, family member B <= A around the pins with A's type."""
    caps = resolve(caps)
    pins = tuple(pins)
    if not set(pins) <= A.universe:
        raise StructureError("pinned elements must lie in the universe")
    if not family.contains(A):
        raise StructureError("the structure is not a member of the family")
    B = _search(A, pins, m, bound, logic, family.contains, caps)
    if B is not None and not verify_ebsp(family, A, pins, m, bound, B, logic, caps):
        raise VerificationError("EBSP witness failed re-verification")
    return B


def reduce_k_to_zero(
    family: FamilySpec,
    A: Structure,
    pins: Sequence[int],
    m: int,
    logic: str = "fo",
    bound: int | None = None,
    extra_rounds: int | None = None,
    caps: Caps | None = None,
) -> Structure | None:
    """Pinned search via the unpinned search on the label expansion.

    The pins become unique labels Q_0..Q_{k-1} (everything else Q_k); the
    labelled structure is searched with no pins and the labels are
    stripped.  By default the labelled search runs at rank m + k: an
    m-round game on the labelled structures does not see relations between
    played elements and unplayed pins, so rank m alone does not always
    transfer back.
    """
    caps = resolve(caps)
    pins = tuple(pins)
    if len(set(pins)) != len(pins):
        raise StructureError("reduce_k_to_zero needs pairwise distinct pinned elements")
    if not family.contains(A):
        raise StructureError("the structure is not a member of the family")
    k = len(pins)
    labelled = tuple_pin_expand(A, pins)
    depth = m + (k if extra_rounds is None else extra_rounds)
    bound = len(A) if bound is None else bound

    def member(Bl: Structure) -> bool:
        return family.contains(strip_labels(Bl, k + 1))

    found = _search(labelled, (), depth, bound, logic, member, caps)
    if found is None:
        return None
    B = strip_labels(found, k + 1)
    if not verify_ebsp(family, A, pins, m, bound, B, logic, caps):
        raise VerificationError("label-stripped witness does not satisfy the pinned condition")
    return B


# ---------------------------------------------------------------- witness profiles


@dataclass
class WitnessProfile:
    """Empirical witness sizes: per sample the minimal |B|, aggregated as a max per rank."""

    logic: str
    k: int
    family: str
    samples: list[tuple[int, int, int]] = field(default_factory=list)

    def record(self, index: int, m: int, size: int):
        self.samples.append((index, m, size))

    @property
    def aggregate(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for _, m, size in self.samples:
            out[m] = max(out.get(m, 0), size)
        return dict(sorted(out.items()))

    def sample_count(self, m: int) -> int:
        return sum(1 for _, mm, _ in self.samples if mm == m)

    def monotone(self) -> dict[int, int]:
        """The cumulative-sum monotonisation of the aggregate."""
        agg = self.aggregate
        total, out = 0, {}
        for m in range(max(agg, default=-1) + 1):
            total += agg.get(m, 0)
            out[m] = total
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "k", "logic", "family", "max_bound", "sample_count"])
        for m, size in self.aggregate.items():
            writer.writerow([m, self.k, self.logic, self.family, size, self.sample_count(m)])
        return buf.getvalue()


def estimate_witness(
    family: FamilySpec,
    k: int,
    ms: int | Sequence[int],
    logic: str = "fo",
    sample_count: int = 20,
    seed: int = 0,
    samples: Sequence[Structure] | None = None,
    caps: Caps | None = None,
) -> WitnessProfile:
    """Minimal EBSP witness size over sampled (A, pins).

    The search is ordered by size, so the first witness found has the
    minimal size and no separate bisection over the bound is needed.
    """
    caps = resolve(caps)
    ms = [ms] if isinstance(ms, int) else list(ms)
    rng = random.Random(seed)
    pool = list(samples) if samples is not None else family.structures(caps)
    pool = [S for S in pool if len(S) > 0 or k == 0]
    if not pool:
        raise StructureError("the family has no structure to sample")
    profile = WitnessProfile(logic, k, family.name)
    for index in range(sample_count):
        A = rng.choice(pool)
        pins = tuple(rng.choice(A.elements) for _ in range(k))
        for m in ms:
            B = ebsp_condition(family, A, pins, m, len(A), logic, caps)
            if B is None:
                raise VerificationError(f"sample {index}: no witness even at bound |A| = {len(A)}")
            profile.record(index, m, len(B))
    return profile


# ---------------------------------------------------------------- bounded theories


@dataclass
class TheoryDecision:
    accepted: bool
    bound: int
    rank: int
    checked: int
    certificate: Structure | None = None

    def as_dict(self, describe: Callable[[Structure], object] | None = None) -> dict:
        out = {"accepted": self.accepted, "bound": self.bound, "rank": self.rank, "checked": self.checked}
        if self.certificate is not None:
            out["certificate"] = describe(self.certificate) if describe else sorted(self.certificate.universe)
        return out


def decide_bounded_theory(
    family: FamilySpec,
    witness: Callable[[int], int],
    phi: Formula,
    logic: str = "fo",
    caps: Caps | None = None,
) -> TheoryDecision:
    """Accept phi iff no member of size <= witness(rank(phi)) satisfies its negation.

    Under the witness assumption every counter-model has a counter-model of
    that size, so acceptance means phi holds on the whole class.
    """
    caps = resolve(caps)
    if not is_sentence(phi):
        raise FormulaError("decide_bounded_theory needs a sentence")
    m = rank(phi)
    p = witness(m)
    if p > caps.family_size:
        raise CapExceeded(f"witness bound {p} exceeds the family enumeration cap {caps.family_size}")
    bounded = family.with_bound(p)
    negation = Not(phi)
    checked = 0
    for S in bounded.structures(caps):
        if len(S) > p:
            continue
        checked += 1
        if evaluate(S, negation, caps=caps):
            return TheoryDecision(False, p, m, checked, S)
    return TheoryDecision(True, p, m, checked)


def unary_witness_bound(predicates: int, k: int) -> Callable[[int], int]:
    """m * 2^|tau| + k, the witness function for purely unary vocabularies."""
    return lambda m: m * 2**predicates + k

