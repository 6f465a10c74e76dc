"""Translation schemes (first-order interpretations) and operation trees.

A scheme of dimension t interprets a target structure inside t-tuples of a
source structure.  Its formulas use the variables ``x{i}_{j}``: argument i
(1-based) of the target relation, coordinate j (1-based) of the tuple.
The domain formula uses argument 1.

Target elements are numbered row-major over the source element ids,
``sum(a_j * width ** (t - j))``, with width defaulting to max id + 1.  For
t = 1 the ids are unchanged.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

from .config import Caps, resolve
from .errors import CapExceeded, FormulaError, ParseError, StructureError, VocabularyError
from .logic import (
    And,
    Atom,
    Con,
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
    Truth,
    Var,
    check_vocabulary,
    conj,
    disj,
    evaluate,
    format_formula,
    free_set_variables,
    free_variables,
    is_fo,
    parse_formula,
    rank,
    substitute_terms,
)
from .structures import GRAPH, PointedStructure, Structure, Vocabulary, n_copy, n_disjoint_sum
from .treerep import LabeledOrderedTree


def scheme_var(arg: int, coord: int) -> str:
    return f"x{arg}_{coord}"


@dataclass(frozen=True)
class TranslationScheme:
    dimension: int
    source: Vocabulary
    target: Vocabulary
    domain: Formula
    relations: Mapping[str, Formula]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        t = self.dimension
        if t < 1:
            raise FormulaError("dimension must be at least 1")
        if self.target.constants:
            raise VocabularyError("target vocabularies with constants are not supported")
        rels = dict(self.relations)
        if set(rels) != set(self.target.relation_names):
            raise VocabularyError(
                f"relation formulas {sorted(rels)} do not match the target {sorted(self.target.relation_names)}"
            )
        object.__setattr__(self, "relations", MappingProxyType(rels))
        formulas = [("domain", self.domain, 1)] + [(r, f, self.target.arity(r)) for r, f in sorted(rels.items())]
        for label, f, arity in formulas:
            check_vocabulary(f, self.source)
            allowed = {scheme_var(i, j) for i in range(1, arity + 1) for j in range(1, t + 1)}
            extra = free_variables(f) - allowed
            if extra:
                raise FormulaError(f"{label}: free variables {sorted(extra)} outside {sorted(allowed)}")
            if free_set_variables(f):
                raise FormulaError(f"{label}: free set variables are not allowed")
            if not is_fo(f) and t != 1:
                raise FormulaError("MSO schemes must be scalar (dimension 1)")

    def __hash__(self):
        return hash((self.dimension, self.source, self.target, self.domain, tuple(sorted(self.relations.items()))))

    @property
    def logic(self) -> str:
        return "fo" if all(is_fo(f) for f in self.formulas()) else "mso"

    def formulas(self) -> list[Formula]:
        return [self.domain] + [self.relations[r] for r in sorted(self.relations)]

    def with_source(self, source: Vocabulary) -> "TranslationScheme":
        return TranslationScheme(self.dimension, source, self.target, self.domain, self.relations, self.name)


def scheme_rank(scheme: TranslationScheme) -> int:
    return max(rank(f) for f in scheme.formulas())


def is_quantifier_free(scheme: TranslationScheme) -> bool:
    return scheme_rank(scheme) == 0


# ---------------------------------------------------------------- structures

def tuple_id(tup: Sequence[int], width: int) -> int:
    out = 0
    for a in tup:
        out = out * width + a
    return out


def decode_id(code: int, dimension: int, width: int) -> tuple[int, ...]:
    out = []
    for _ in range(dimension):
        code, r = divmod(code, width)
        out.append(r)
    return tuple(reversed(out))


def default_width(A: Structure) -> int:
    return max(A.universe, default=-1) + 1


def _check_tuple_cap(count: int, caps: Caps, what: str):
    if count > caps.tuple_limit:
        raise CapExceeded(f"{what}: {count} tuples exceed the cap {caps.tuple_limit}")


def _bind(scheme: TranslationScheme, tuples: Sequence[Sequence[int]]) -> dict[str, int]:
    return {scheme_var(i + 1, j + 1): a for i, tup in enumerate(tuples) for j, a in enumerate(tup)}


def apply_structure(
    scheme: TranslationScheme, A: Structure, width: int | None = None, caps: Caps | None = None
) -> Structure:
    """The interpreted structure; relations are restricted to domain tuples."""
    caps = resolve(caps)
    if A.vocab != scheme.source:
        raise VocabularyError(f"scheme expects {scheme.source}, got {A.vocab}")
    t = scheme.dimension
    width = default_width(A) if width is None else width
    if A.universe and width <= max(A.universe):
        raise StructureError(f"width {width} is too small for element ids up to {max(A.universe)}")
    _check_tuple_cap(len(A) ** t, caps, "domain")
    domain = [tup for tup in itertools.product(A.elements, repeat=t) if evaluate(A, scheme.domain, _bind(scheme, [tup]), caps=caps)]
    ids = {tup: tuple_id(tup, width) for tup in domain}
    rels = {}
    for name, arity in scheme.target.relations:
        _check_tuple_cap(len(domain) ** arity, caps, f"relation {name}")
        f = scheme.relations[name]
        rels[name] = [
            tuple(ids[x] for x in args)
            for args in itertools.product(domain, repeat=arity)
            if evaluate(A, f, _bind(scheme, args), caps=caps)
        ]
    return Structure(scheme.target, ids.values(), rels)


def apply_pointed(scheme: TranslationScheme, A: PointedStructure, width: int | None = None, caps: Caps | None = None) -> PointedStructure:
    """Interpret A; the pinned tuple is read as consecutive t-blocks."""
    t = scheme.dimension
    if len(A.tuple) % t:
        raise StructureError(f"pinned tuple length {len(A.tuple)} is not a multiple of {t}")
    width = default_width(A.structure) if width is None else width
    image = apply_structure(scheme, A.structure, width, caps)
    pins = tuple(tuple_id(A.tuple[i:i + t], width) for i in range(0, len(A.tuple), t))
    for p in pins:
        if p not in image.universe:
            raise StructureError(f"pinned block {decode_id(p, t, width)} is outside the interpreted domain")
    return PointedStructure(image, pins)


# ---------------------------------------------------------------- formulas

def coordinate_names(var: str, dimension: int) -> tuple[str, ...]:
    if dimension == 1:
        return (var,)
    return tuple(f"{var}_{j}" for j in range(1, dimension + 1))


def _instantiate(scheme: TranslationScheme, f: Formula, blocks: Sequence[Sequence[str]]) -> Formula:
    mapping = {scheme_var(i + 1, j + 1): Var(v) for i, block in enumerate(blocks) for j, v in enumerate(block)}
    return substitute_terms(f, mapping)


def apply_formula(scheme: TranslationScheme, phi: Formula) -> Formula:
    """Formula over the source vocabulary equivalent to phi on interpreted structures.

    A free variable v of phi becomes the block v_1..v_t (or v itself when
    t = 1).
    """
    t = scheme.dimension
    check_vocabulary(phi, scheme.target)
    if not is_fo(phi) and t != 1:
        raise FormulaError("MSO formulas need a scalar scheme")

    def block(v: str) -> tuple[str, ...]:
        return coordinate_names(v, t)

    def dom(v: str) -> Formula:
        return _instantiate(scheme, scheme.domain, [block(v)])

    def term_var(term) -> str:
        if isinstance(term, Con):
            raise FormulaError("target formulas cannot mention constants")
        return term.name

    def go(f: Formula) -> Formula:
        if isinstance(f, Truth):
            return f
        if isinstance(f, Atom):
            names = [term_var(x) for x in f.args]
            core = _instantiate(scheme, scheme.relations[f.rel], [block(v) for v in names])
            return conj([core] + [dom(v) for v in names])
        if isinstance(f, Eq):
            a, b = term_var(f.left), term_var(f.right)
            coords = [Eq(Var(x), Var(y)) for x, y in zip(block(a), block(b))]
            return conj(coords + [dom(a), dom(b)])
        if isinstance(f, SetAtom):
            v = term_var(f.term)
            return And(f, dom(v))
        if isinstance(f, Not):
            return Not(go(f.sub))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, Exists):
            body = And(go(f.body), dom(f.var))
            for y in reversed(block(f.var)):
                body = Exists(y, body)
            return body
        if isinstance(f, Forall):
            body = Implies(dom(f.var), go(f.body))
            for y in reversed(block(f.var)):
                body = Forall(y, body)
            return body
        if isinstance(f, (ExistsSet, ForallSet)):
            return type(f)(f.var, go(f.body))
        raise FormulaError(f"unsupported formula node {type(f).__name__}")

    return go(phi)


# ---------------------------------------------------------------- text format

_DIM = re.compile(r"dim\s+(\d+)\s*\Z")
_REL = re.compile(r"rel\s+([A-Za-z_][A-Za-z0-9_]*)(?:/(\d+))?\s*:(.*)\Z")
_ARG = re.compile(r"x(\d+)_(\d+)\Z")


def parse_scheme(text: str, source: Vocabulary | None = None, name: str = "") -> TranslationScheme:
    """Read `dim t`, `source: ...`, `domain: ...` and `rel R[/k]: ...` lines."""
    dim, domain, rels, arities = 1, None, {}, {}
    src_text = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if m := _DIM.match(line):
            dim = int(m.group(1))
        elif line.startswith("source:"):
            src_text = line[len("source:"):].strip()
        elif line.startswith("domain:"):
            domain = (line[len("domain:"):].strip(), lineno)
        elif m := _REL.match(line):
            rels[m.group(1)] = (m.group(3).strip(), lineno)
            if m.group(2):
                arities[m.group(1)] = int(m.group(2))
        else:
            raise ParseError("expected 'dim', 'source:', 'domain:' or 'rel R:'", lineno, 1)
    if src_text is not None and source is None:
        source = _parse_vocab(src_text)
    parsed = {}
    for r, (body, lineno) in list(rels.items()) + ([("", domain)] if domain else []):
        try:
            parsed[r] = parse_formula(body, source)
        except ParseError as exc:
            raise ParseError(exc.args[0] if exc.args else str(exc), lineno, exc.column) from exc
    domain_f = parsed.pop("", None) or _trivial_domain(dim)
    for r, f in parsed.items():
        if r not in arities:
            args = [int(m.group(1)) for v in free_variables(f) if (m := _ARG.match(v))]
            arities[r] = max(args, default=0)
    if source is None:
        source = _infer_vocab(list(parsed.values()) + [domain_f])
    try:
        return TranslationScheme(dim, source, Vocabulary(arities), domain_f, parsed, name)
    except (FormulaError, VocabularyError) as exc:
        raise ParseError(str(exc), 1, 1) from exc


def _parse_vocab(text: str) -> Vocabulary:
    rels, consts = {}, []
    for item in text.split():
        sym, _, kind = item.partition("/")
        if kind == "const":
            consts.append(sym)
        elif kind.isdigit():
            rels[sym] = int(kind)
        else:
            raise ParseError(f"bad vocabulary item {item!r}", 1, 1)
    return Vocabulary(rels, consts)


def _infer_vocab(formulas: Sequence[Formula]) -> Vocabulary:
    from .logic import constants_of, relations_of

    rels, consts = {}, set()
    for f in formulas:
        rels.update(relations_of(f))
        consts |= constants_of(f)
    return Vocabulary(rels, sorted(consts))


def _trivial_domain(t: int) -> Formula:
    return conj([Eq(Var(scheme_var(1, j)), Var(scheme_var(1, j))) for j in range(1, t + 1)])


def format_scheme(scheme: TranslationScheme) -> str:
    lines = [f"dim {scheme.dimension}", f"source: {scheme.source}", f"domain: {format_formula(scheme.domain)}"]
    for r in sorted(scheme.relations):
        lines.append(f"rel {r}/{scheme.target.arity(r)}: {format_formula(scheme.relations[r])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- built-in schemes

def _v(i: int, j: int = 1) -> Var:
    return Var(scheme_var(i, j))


def _atom(rel: str, *vars_: Var) -> Atom:
    return Atom(rel, tuple(vars_))


def sum_vocabulary(base: Vocabulary, n: int) -> Vocabulary:
    return base.expand({f"P_{i}": 1 for i in range(1, n + 1)})


def copy_vocabulary(base: Vocabulary, n: int) -> Vocabulary:
    return base.expand({**{f"P_{i}": 1 for i in range(1, n + 1)}, "sim": 2})


def identity_scheme(vocab: Vocabulary, source: Vocabulary | None = None) -> TranslationScheme:
    rels = {r: _atom(r, *(_v(i) for i in range(1, k + 1))) for r, k in vocab.relations}
    return TranslationScheme(1, source or vocab, vocab.without(vocab.constants), Eq(_v(1), _v(1)), rels, "identity")


def _graph_scheme(name: str, edge: Formula, source: Vocabulary, dimension: int = 1, domain: Formula | None = None):
    return TranslationScheme(dimension, source, GRAPH, domain or _trivial_domain(dimension), {"E": edge}, name)


def _builtin(name: str) -> TranslationScheme:
    x, y = _v(1), _v(2)
    if name == "identity":
        return identity_scheme(GRAPH)
    if name == "complement":
        return _graph_scheme(name, And(Not(_atom("E", x, y)), Not(Eq(x, y))), GRAPH)
    if name == "transpose":
        return _graph_scheme(name, _atom("E", y, x), GRAPH)
    if name in ("cartesian", "tensor"):
        x1, x2, y1, y2 = _v(1, 1), _v(1, 2), _v(2, 1), _v(2, 2)
        return _graph_scheme(
            "cartesian",
            And(_atom("E", x1, y1), _atom("E", x2, y2)),
            sum_vocabulary(GRAPH, 2),
            2,
            And(_atom("P_1", x1), _atom("P_2", x2)),
        )
    if name == "across_connect":
        cross = Or(And(_atom("P_1", x), _atom("P_2", y)), And(_atom("P_2", x), _atom("P_1", y)))
        return _graph_scheme(name, Or(_atom("E", x, y), And(cross, _atom("sim", x, y))), copy_vocabulary(GRAPH, 2))
    if name == "union":
        return _graph_scheme(name, _atom("E", x, y), sum_vocabulary(GRAPH, 2))
    if name == "join":
        cross = Or(And(_atom("P_1", x), _atom("P_2", y)), And(_atom("P_2", x), _atom("P_1", y)))
        return _graph_scheme(name, Or(_atom("E", x, y), cross), sum_vocabulary(GRAPH, 2))
    if name == "line_graph":
        x1, x2, y1, y2 = _v(1, 1), _v(1, 2), _v(2, 1), _v(2, 2)
        share = disj([Eq(a, b) for a in (x1, x2) for b in (y1, y2)])
        same = Or(And(Eq(x1, y1), Eq(x2, y2)), And(Eq(x1, y2), Eq(x2, y1)))
        return _graph_scheme(name, And(share, Not(same)), GRAPH, 2, _atom("E", x1, x2))
    if name == "successor_closure":
        # universal edge formula over a linear order `le`: E(x,y) iff every z strictly above x is above y
        z = Var("z")
        body = Implies(And(_atom("le", x, z), Not(Eq(x, z))), _atom("le", y, z))
        return TranslationScheme(1, Vocabulary({"le": 2}), GRAPH, Eq(x, x), {"E": Forall("z", body)}, name)
    raise VocabularyError(f"unknown scheme {name!r}; expected one of {', '.join(SCHEME_NAMES)}")


SCHEME_NAMES = (
    "identity",
    "complement",
    "transpose",
    "cartesian",
    "tensor",
    "across_connect",
    "union",
    "join",
    "line_graph",
    "successor_closure",
)


def builtin_scheme(name: str) -> TranslationScheme:
    return _builtin(name)


# ---------------------------------------------------------------- operations

NO_OP = "◇"
_NO_OP_ALIASES = (NO_OP, "*")


@dataclass(frozen=True)
class Operation:
    """An operation implemented by a scheme over an n-disjoint-sum or an n-copy."""

    name: str
    arity: int
    scheme: TranslationScheme
    kind: str = "sum"  # "sum": arity-many inputs combined by n_disjoint_sum; "copy": one input, arity copies

    def __post_init__(self):
        if self.kind not in ("sum", "copy"):
            raise ValueError(f"unknown operation kind {self.kind!r}")
        if self.arity < 1:
            raise ValueError("arity must be positive")

    @property
    def inputs(self) -> int:
        return self.arity if self.kind == "sum" else 1

    def __call__(self, *parts: Structure, caps: Caps | None = None) -> Structure:
        if len(parts) != self.inputs:
            raise StructureError(f"operation {self.name} takes {self.inputs} inputs, got {len(parts)}")
        if self.kind == "sum":
            combined = n_disjoint_sum(list(parts))
        else:
            combined = n_copy(parts[0], [()] * self.arity) if self.arity > 1 else parts[0]
        scheme = self.scheme
        if combined.vocab != scheme.source:
            scheme = scheme.with_source(combined.vocab)
        return apply_structure(scheme, combined, caps=caps)


def _unary(name: str) -> Operation:
    return Operation(name, 1, _builtin(name).with_source(sum_vocabulary(GRAPH, 1)))


@dataclass
class OperationRegistry:
    operations: dict[str, Operation] = field(default_factory=dict)

    def register(self, op: Operation) -> Operation:
        if op.name in self.operations or op.name in _NO_OP_ALIASES:
            raise ValueError(f"operation {op.name!r} is already registered")
        self.operations[op.name] = op
        return op

    def __getitem__(self, name: str) -> Operation:
        try:
            return self.operations[name]
        except KeyError:
            raise StructureError(f"unregistered operation {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.operations


def default_registry() -> OperationRegistry:
    reg = OperationRegistry()
    reg.register(Operation("union", 2, _builtin("union")))
    reg.register(Operation("join", 2, _builtin("join")))
    reg.register(Operation("product", 2, _builtin("cartesian")))
    reg.register(Operation("across_connect", 2, _builtin("across_connect"), kind="copy"))
    reg.register(_unary("complement"))
    reg.register(_unary("transpose"))
    return reg


def operation_tree_eval(
    tree: LabeledOrderedTree,
    leaves: Sequence[Structure],
    registry: OperationRegistry | None = None,
    caps: Caps | None = None,
) -> Structure:
    """Evaluate an operation tree; ◇ leaves take the given structures left to right."""
    registry = registry or default_registry()
    if tree.root is None:
        raise StructureError("empty operation tree")
    slots = [v for v in tree.preorder() if tree.labels[v] in _NO_OP_ALIASES]
    if len(slots) != len(leaves):
        raise StructureError(f"tree has {len(slots)} ◇ leaves but {len(leaves)} structures were given")
    given = dict(zip(slots, leaves))
    value: dict[int, Structure] = {}
    for v in tree.postorder():
        label, kids = tree.labels[v], tree.children[v]
        if label in _NO_OP_ALIASES:
            if kids:
                raise StructureError(f"node {v}: ◇ must be a leaf")
            value[v] = given[v]
            continue
        op = registry[label]
        if len(kids) != op.inputs:
            raise StructureError(f"node {v}: operation {label} needs {op.inputs} children, has {len(kids)}")
        value[v] = op(*(value[c] for c in kids), caps=caps)
    return value[tree.root]
