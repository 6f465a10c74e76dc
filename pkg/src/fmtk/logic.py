"""FO and MSO formulas: syntax tree, parser, printer, evaluation and rewrites."""

from __future__ import annotations

import itertools
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .config import Caps, resolve
from .errors import CapExceeded, FormulaError, ParseError, StructureError, VocabularyError
from .structures import PointedStructure, Structure, Vocabulary, pointed


# ---------------------------------------------------------------- syntax tree

@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Con:
    name: str


Term = Union[Var, Con]


@dataclass(frozen=True, slots=True)
class Truth:
    value: bool


@dataclass(frozen=True, slots=True)
class Atom:
    rel: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class SetAtom:
    var: str
    term: Term


@dataclass(frozen=True, slots=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class ExistsSet:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class ForallSet:
    var: str
    body: "Formula"


Formula = Union[Truth, Atom, Eq, SetAtom, Not, And, Or, Implies, Exists, Forall, ExistsSet, ForallSet]

TRUE = Truth(True)
FALSE = Truth(False)
_BINARY = (And, Or, Implies)
_POINT_Q = (Exists, Forall)
_SET_Q = (ExistsSet, ForallSet)
_QUANT = _POINT_Q + _SET_Q


def _fold(parts: list[Formula], cls) -> Formula:
    # balanced, so long conjunctions stay shallow
    if len(parts) == 1:
        return parts[0]
    mid = (len(parts) + 1) // 2
    return cls(_fold(parts[:mid], cls), _fold(parts[mid:], cls))


def conj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    return _fold(parts, And) if parts else TRUE


def disj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    return _fold(parts, Or) if parts else FALSE


def exists_many(names: Sequence[str], body: Formula) -> Formula:
    for v in reversed(names):
        body = Exists(v, body)
    return body


def forall_many(names: Sequence[str], body: Formula) -> Formula:
    for v in reversed(names):
        body = Forall(v, body)
    return body


def atom(rel: str, *vars_: str) -> Atom:
    return Atom(rel, tuple(Var(v) for v in vars_))


def eq(a: str, b: str) -> Eq:
    return Eq(Var(a), Var(b))


# ---------------------------------------------------------------- inspection

@lru_cache(maxsize=65536)
def rank(phi: Formula) -> int:
    if isinstance(phi, (Truth, Atom, Eq, SetAtom)):
        return 0
    if isinstance(phi, Not):
        return rank(phi.sub)
    if isinstance(phi, _BINARY):
        return max(rank(phi.left), rank(phi.right))
    return 1 + rank(phi.body)


@lru_cache(maxsize=65536)
def is_fo(phi: Formula) -> bool:
    if isinstance(phi, _SET_Q + (SetAtom,)):
        return False
    if isinstance(phi, (Truth, Atom, Eq)):
        return True
    if isinstance(phi, Not):
        return is_fo(phi.sub)
    if isinstance(phi, _BINARY):
        return is_fo(phi.left) and is_fo(phi.right)
    return is_fo(phi.body)


def _term_vars(t: Term) -> frozenset[str]:
    return frozenset((t.name,)) if isinstance(t, Var) else frozenset()


@lru_cache(maxsize=65536)
def free_variables(phi: Formula) -> frozenset[str]:
    """Free point variables."""
    if isinstance(phi, Truth):
        return frozenset()
    if isinstance(phi, Atom):
        return frozenset(a.name for a in phi.args if isinstance(a, Var))
    if isinstance(phi, Eq):
        return _term_vars(phi.left) | _term_vars(phi.right)
    if isinstance(phi, SetAtom):
        return _term_vars(phi.term)
    if isinstance(phi, Not):
        return free_variables(phi.sub)
    if isinstance(phi, _BINARY):
        return free_variables(phi.left) | free_variables(phi.right)
    if isinstance(phi, _POINT_Q):
        return free_variables(phi.body) - {phi.var}
    return free_variables(phi.body)


@lru_cache(maxsize=65536)
def free_set_variables(phi: Formula) -> frozenset[str]:
    if isinstance(phi, SetAtom):
        return frozenset((phi.var,))
    if isinstance(phi, (Truth, Atom, Eq)):
        return frozenset()
    if isinstance(phi, Not):
        return free_set_variables(phi.sub)
    if isinstance(phi, _BINARY):
        return free_set_variables(phi.left) | free_set_variables(phi.right)
    if isinstance(phi, _SET_Q):
        return free_set_variables(phi.body) - {phi.var}
    return free_set_variables(phi.body)


def is_sentence(phi: Formula) -> bool:
    return not free_variables(phi) and not free_set_variables(phi)


def _walk(phi: Formula):
    stack = [phi]
    while stack:
        f = stack.pop()
        yield f
        if isinstance(f, Not):
            stack.append(f.sub)
        elif isinstance(f, _BINARY):
            stack.extend((f.right, f.left))
        elif isinstance(f, _QUANT):
            stack.append(f.body)


def _terms(f: Formula) -> tuple[Term, ...]:
    if isinstance(f, Atom):
        return f.args
    if isinstance(f, Eq):
        return (f.left, f.right)
    if isinstance(f, SetAtom):
        return (f.term,)
    return ()


def constants_of(phi: Formula) -> frozenset[str]:
    return frozenset(t.name for f in _walk(phi) for t in _terms(f) if isinstance(t, Con))


def relations_of(phi: Formula) -> dict[str, int]:
    out: dict[str, int] = {}
    for f in _walk(phi):
        if isinstance(f, Atom):
            if out.setdefault(f.rel, len(f.args)) != len(f.args):
                raise VocabularyError(f"relation {f.rel} used with two arities")
    return out


def variables_of(phi: Formula) -> frozenset[str]:
    """Every point variable name occurring anywhere, bound or free."""
    names = set()
    for f in _walk(phi):
        if isinstance(f, _POINT_Q):
            names.add(f.var)
        names.update(t.name for t in _terms(f) if isinstance(t, Var))
    return frozenset(names)


@lru_cache(maxsize=16384)
def check_vocabulary(phi: Formula, vocab: Vocabulary) -> None:
    for name, arity in relations_of(phi).items():
        if name not in vocab.arities:
            raise VocabularyError(f"unknown relation {name}")
        if vocab.arities[name] != arity:
            raise VocabularyError(f"{name} has arity {vocab.arities[name]}, used with {arity} arguments")
    unknown = constants_of(phi) - set(vocab.constants)
    if unknown:
        raise VocabularyError(f"unknown constants {sorted(unknown)}")


# ---------------------------------------------------------------- printing

def _term_str(t: Term) -> str:
    return t.name


def format_formula(phi: Formula) -> str:
    """Canonical, fully parenthesized text; parse_formula reads it back."""
    return _fmt(phi, True)


def _fmt(f: Formula, tail: bool) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f"{f.rel}({','.join(_term_str(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f"{_term_str(f.left)}={_term_str(f.right)}"
    if isinstance(f, SetAtom):
        return f"{f.var}({_term_str(f.term)})"
    if isinstance(f, Not):
        return "!" + _fmt(f.sub, tail)
    if isinstance(f, _BINARY):
        op = {And: "&", Or: "|", Implies: "->"}[type(f)]
        return f"({_fmt(f.left, False)} {op} {_fmt(f.right, True)})"
    word = {Exists: "exists", Forall: "forall", ExistsSet: "Exists", ForallSet: "Forall"}[type(f)]
    text = f"{word} {f.var}. {_fmt(f.body, True)}"
    return text if tail else f"({text})"


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(?P<arrow>->)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[()!&|=,.])|(?P<bad>\S))")
_KEYWORDS = {"true", "false", "exists", "forall", "Exists", "Forall"}


def _tokenize(text: str):
    tokens = []
    line_starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == "\n"]

    def where(pos):
        line = max(i for i, s in enumerate(line_starts) if s <= pos)
        return line + 1, pos - line_starts[line] + 1

    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start() or m.lastgroup is None:
            break
        start = m.start(m.lastgroup)
        if m.lastgroup == "bad":
            raise ParseError(f"unexpected character {m.group('bad')!r}", *where(start))
        value = m.group(m.lastgroup)
        kind = "ident" if m.lastgroup == "ident" else value
        tokens.append((kind, value, where(start)))
        pos = m.end()
    tokens.append(("eof", "", where(len(text))))
    return tokens


class _Parser:
    def __init__(self, text, vocab, free):
        self.toks = _tokenize(text)
        self.i = 0
        self.vocab = vocab
        self.free = None if free is None else set(free)
        self.bound: list[str] = []
        self.bound_sets: list[str] = []

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, *tok[2])

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            self.fail(f"expected {kind!r}, got {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self):
        f = self.implication()
        if self.peek()[0] != "eof":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return f

    def implication(self):
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.peek()[0] == "|":
            self.next()
            parts.append(self.conjunction())
        return disj(parts)

    def conjunction(self):
        parts = [self.unary()]
        while self.peek()[0] == "&":
            self.next()
            parts.append(self.unary())
        return conj(parts)

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "!":
            self.next()
            return Not(self.unary())
        if kind == "(":
            self.next()
            f = self.implication()
            self.expect(")")
            return f
        if kind == "ident" and value in ("exists", "forall", "Exists", "Forall"):
            return self.quantifier()
        if kind == "ident" and value in ("true", "false"):
            self.next()
            return Truth(value == "true")
        return self.atomic()

    def quantifier(self):
        word = self.next()[1]
        tok = self.expect("ident")
        name = tok[1]
        if name in _KEYWORDS:
            self.fail(f"keyword {name!r} used as a variable", tok)
        is_set = word[0].isupper()
        if is_set and not name[0].isupper():
            self.fail(f"set variable {name!r} must start with an uppercase letter", tok)
        if not is_set and not name[0].islower():
            self.fail(f"point variable {name!r} must start with a lowercase letter", tok)
        self.expect(".")
        stack = self.bound_sets if is_set else self.bound
        stack.append(name)
        body = self.implication()
        stack.pop()
        cls = {"exists": Exists, "forall": Forall, "Exists": ExistsSet, "Forall": ForallSet}[word]
        return cls(name, body)

    def term(self):
        tok = self.expect("ident")
        name = tok[1]
        if name in _KEYWORDS:
            self.fail(f"keyword {name!r} used as a term", tok)
        if name in self.bound:
            return Var(name)
        if self.vocab is not None and name in self.vocab.constants:
            return Con(name)
        if self.free is not None:
            if name in self.free:
                return Var(name)
            self.fail(f"unbound variable {name!r}", tok)
        return Var(name)

    def atomic(self):
        kind, value, pos = self.peek()
        if kind == "ident" and self.peek(1)[0] == "(":
            tok = self.next()
            self.next()
            args = [self.term()]
            while self.peek()[0] == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
            if value in self.bound_sets:
                if len(args) != 1:
                    self.fail(f"set variable {value} takes one argument", tok)
                return SetAtom(value, args[0])
            if self.vocab is not None:
                if value in self.vocab.arities:
                    if self.vocab.arities[value] != len(args):
                        self.fail(f"{value} has arity {self.vocab.arities[value]}, got {len(args)} arguments", tok)
                    return Atom(value, tuple(args))
                if value[0].isupper() and len(args) == 1:
                    return SetAtom(value, args[0])
                self.fail(f"unknown relation {value!r}", tok)
            return Atom(value, tuple(args))
        if kind == "ident":
            left = self.term()
            self.expect("=")
            return Eq(left, self.term())
        self.fail(f"unexpected {value or 'end of input'!r}")


def parse_formula(text: str, vocab: Vocabulary | None = None, free: Iterable[str] | None = None) -> Formula:
    """Parse the ASCII formula grammar.

    With a vocabulary, identifiers naming its constants become constants and
    relation arities are checked.  If free is given, any other unbound
    variable is an error; otherwise unbound names become free variables.
    """
    return _Parser(text, vocab, free).parse()


# ---------------------------------------------------------------- evaluation

class _Ctx:
    __slots__ = ("U", "rels", "consts", "env", "senv")

    def __init__(self, A: Structure, env, senv):
        self.U = A.elements
        self.rels = A.relations
        self.consts = A.constants
        self.env = env
        self.senv = senv


_MISSING = object()


def _compile_term(t: Term):
    name = t.name
    if isinstance(t, Var):
        return lambda c: c.env[name]
    return lambda c: c.consts[name]


@lru_cache(maxsize=16384)
def _compile(f: Formula):
    if isinstance(f, Truth):
        v = f.value
        return lambda c: v
    if isinstance(f, Atom):
        rel = f.rel
        getters = [_compile_term(t) for t in f.args]
        if len(getters) == 1:
            g0 = getters[0]
            return lambda c: (g0(c),) in c.rels[rel]
        if len(getters) == 2:
            g0, g1 = getters
            return lambda c: (g0(c), g1(c)) in c.rels[rel]
        return lambda c: tuple(g(c) for g in getters) in c.rels[rel]
    if isinstance(f, Eq):
        gl, gr = _compile_term(f.left), _compile_term(f.right)
        return lambda c: gl(c) == gr(c)
    if isinstance(f, SetAtom):
        name, g = f.var, _compile_term(f.term)
        return lambda c: g(c) in c.senv[name]
    if isinstance(f, Not):
        s = _compile(f.sub)
        return lambda c: not s(c)
    if isinstance(f, And):
        a, b = _compile(f.left), _compile(f.right)
        return lambda c: a(c) and b(c)
    if isinstance(f, Or):
        a, b = _compile(f.left), _compile(f.right)
        return lambda c: a(c) or b(c)
    if isinstance(f, Implies):
        a, b = _compile(f.left), _compile(f.right)
        return lambda c: (not a(c)) or b(c)
    body = _compile(f.body)
    name = f.var
    want = isinstance(f, (Exists, ExistsSet))

    if isinstance(f, _POINT_Q):
        def point_q(c):
            env = c.env
            old = env.get(name, _MISSING)
            result = not want
            for a in c.U:
                env[name] = a
                if body(c) == want:
                    result = want
                    break
            if old is _MISSING:
                env.pop(name, None)
            else:
                env[name] = old
            return result
        return point_q

    def set_q(c):
        senv = c.senv
        old = senv.get(name, _MISSING)
        result = not want
        for subset in _all_subsets(c.U):
            senv[name] = subset
            if body(c) == want:
                result = want
                break
        if old is _MISSING:
            senv.pop(name, None)
        else:
            senv[name] = old
        return result
    return set_q


def _all_subsets(elements: Sequence[int]):
    for size in range(len(elements) + 1):
        for combo in itertools.combinations(elements, size):
            yield frozenset(combo)


def has_set_quantifier(phi: Formula) -> bool:
    return any(isinstance(f, _SET_Q) for f in _walk(phi))


def check_eval_cap(A: Structure, phi: Formula, caps: Caps | None) -> None:
    caps = resolve(caps)
    if rank(phi) == 0:
        return
    if has_set_quantifier(phi):
        if len(A) > caps.mso_universe:
            raise CapExceeded(f"MSO evaluation on {len(A)} elements exceeds cap {caps.mso_universe}")
    elif len(A) > caps.fo_universe:
        raise CapExceeded(f"FO evaluation on {len(A)} elements exceeds cap {caps.fo_universe}")


def evaluate(
    A: Structure | PointedStructure,
    phi: Formula,
    env: Mapping[str, int] | None = None,
    set_env: Mapping[str, Iterable[int]] | None = None,
    caps: Caps | None = None,
) -> bool:
    """Truth of phi in A under the given assignments."""
    if isinstance(A, PointedStructure):
        A = A.structure
    env = dict(env or {})
    senv = {k: frozenset(v) for k, v in (set_env or {}).items()}
    check_vocabulary(phi, A.vocab)
    missing = free_variables(phi) - set(env)
    if missing:
        raise FormulaError(f"unbound free variables {sorted(missing)}")
    missing = free_set_variables(phi) - set(senv)
    if missing:
        raise FormulaError(f"unbound free set variables {sorted(missing)}")
    for k, v in env.items():
        if v not in A.universe:
            raise StructureError(f"{k} = {v} outside universe")
    for k, v in senv.items():
        if not v <= A.universe:
            raise StructureError(f"set {k} not contained in the universe")
    check_eval_cap(A, phi, caps)
    return bool(_compile(phi)(_Ctx(A, env, senv)))


def evaluate_pointed(A: PointedStructure, phi: Formula, names: Sequence[str], caps: Caps | None = None) -> bool:
    """Evaluate with names[i] bound to the i-th pinned element."""
    A = pointed(A)
    if len(names) != len(A.tuple):
        raise FormulaError("variable list and tuple differ in length")
    return evaluate(A.structure, phi, dict(zip(names, A.tuple)), caps=caps)


# ---------------------------------------------------------------- substitution

def _map_terms(f: Formula, fn) -> Formula:
    """Apply fn to every term of a formula without binders in the way."""
    if isinstance(f, Truth):
        return f
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(fn(t) for t in f.args))
    if isinstance(f, Eq):
        return Eq(fn(f.left), fn(f.right))
    if isinstance(f, SetAtom):
        return SetAtom(f.var, fn(f.term))
    if isinstance(f, Not):
        return Not(_map_terms(f.sub, fn))
    if isinstance(f, _BINARY):
        return type(f)(_map_terms(f.left, fn), _map_terms(f.right, fn))
    raise FormulaError("term mapping reached a quantifier")


def substitute(phi: Formula, mapping: Mapping[str, str]) -> Formula:
    """Replace constants or free variables by variables, refusing capture.

    Keys name a constant or a free variable of phi; values are variable
    names.  A key that occurs nowhere in phi is an error.
    """
    mapping = dict(mapping)
    known = constants_of(phi) | free_variables(phi)
    unknown = set(mapping) - known
    if unknown:
        raise FormulaError(f"unknown symbols {sorted(unknown)}")
    targets = set(mapping.values())

    def go(f: Formula, bound: frozenset[str]) -> Formula:
        if isinstance(f, _QUANT):
            inner = bound | {f.var} if isinstance(f, _POINT_Q) else bound
            return type(f)(f.var, go(f.body, inner))
        if isinstance(f, Not):
            return Not(go(f.sub, bound))
        if isinstance(f, _BINARY):
            return type(f)(go(f.left, bound), go(f.right, bound))

        def sub(t: Term) -> Term:
            if t.name not in mapping or (isinstance(t, Var) and t.name in bound):
                return t
            target = mapping[t.name]
            if target in bound:
                raise FormulaError(f"substituting {t.name} -> {target} would be captured by a binder")
            return Var(target)

        return _map_terms(f, sub)

    if not targets:
        return phi
    return go(phi, frozenset())


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in taken:
            return cand


def substitute_terms(phi: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Replace free variables by terms, renaming binders to avoid capture."""
    mapping = {k: v for k, v in mapping.items()}
    if not mapping:
        return phi
    if isinstance(phi, (Truth, Atom, Eq, SetAtom)):
        def sub(t: Term) -> Term:
            if isinstance(t, Var) and t.name in mapping:
                return mapping[t.name]
            return t
        return _map_terms(phi, sub)
    if isinstance(phi, Not):
        return Not(substitute_terms(phi.sub, mapping))
    if isinstance(phi, _BINARY):
        return type(phi)(substitute_terms(phi.left, mapping), substitute_terms(phi.right, mapping))
    if isinstance(phi, _SET_Q):
        return type(phi)(phi.var, substitute_terms(phi.body, mapping))
    inner = {k: v for k, v in mapping.items() if k != phi.var}
    if not inner:
        return phi
    incoming = {t.name for t in inner.values() if isinstance(t, Var)}
    var, body = phi.var, phi.body
    if var in incoming:
        new = fresh_name(var, incoming | variables_of(body) | set(inner))
        body = substitute_terms(body, {var: Var(new)})
        var = new
    return type(phi)(var, substitute_terms(body, inner))


# ---------------------------------------------------------------- relativization

def relativize(psi: Formula, xs: Sequence[str]) -> Formula:
    """Quantifier-free formula in xs true iff the set they name satisfies psi.

    Quantifiers become finite disjunctions / conjunctions over xs, built
    bottom-up.  Repeated names in xs are collapsed.
    """
    if not is_fo(psi):
        raise FormulaError("relativize needs an FO sentence")
    if free_variables(psi):
        raise FormulaError(f"relativize needs a sentence, free: {sorted(free_variables(psi))}")
    xs = list(dict.fromkeys(xs))
    clash = set(xs) & variables_of(psi)
    if clash:
        raise FormulaError(f"variables {sorted(clash)} already occur in the sentence")

    def go(f: Formula) -> Formula:
        if isinstance(f, (Truth, Atom, Eq)):
            return f
        if isinstance(f, Not):
            return Not(go(f.sub))
        if isinstance(f, _BINARY):
            return type(f)(go(f.left), go(f.right))
        body = go(f.body)
        name = f.var
        instances = [_map_terms(body, lambda t, x=x: Var(x) if t == Var(name) else t) for x in xs]
        return disj(instances) if isinstance(f, Exists) else conj(instances)

    return go(psi)


# ---------------------------------------------------------------- fixed sentences

def size_bound_sentence(n: int) -> Formula:
    """At most n elements: exists x1..xn forall y (y = x1 | ... | y = xn)."""
    xs = [f"x{i}" for i in range(1, n + 1)]
    return exists_many(xs, Forall("y", disj(eq("y", x) for x in xs)))


def canonical_conjunctive_query(A: PointedStructure | Structure) -> Formula:
    """Primitive-positive description of A; pins become free x1..xk."""
    A = pointed(A)
    S = A.structure
    k = len(A.tuple)
    name: dict[int, str] = {}
    equalities = []
    for i, a in enumerate(A.tuple, start=1):
        if a in name:
            equalities.append(Eq(Var(f"x{i}"), Var(name[a])))
        else:
            name[a] = f"x{i}"
    quantified = []
    nxt = k + 1
    for a in S.elements:
        if a not in name:
            name[a] = f"x{nxt}"
            quantified.append(name[a])
            nxt += 1
    atoms = []
    for rel in S.vocab.relation_names:
        for t in sorted(S.rel(rel)):
            atoms.append(Atom(rel, tuple(Var(name[x]) for x in t)))
    for c in S.vocab.constants:
        equalities.append(Eq(Var(name[S.const(c)]), Con(c)))
    return exists_many(quantified, conj(atoms + equalities))
