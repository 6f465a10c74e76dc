"""Command-line frontend: one verb per toolkit operation, text or JSON reports.

Exit codes: 0 success, 1 property refuted (the report carries the
counterexample), 2 usage or parse error, 3 cap exceeded or undecided within
caps, 4 an internal re-verification failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .classes import (
    ORACLE_NAMES,
    builtin_oracle,
    cotree_to_graph,
    format_nested_word,
    nested_word_to_tree,
    parse_nested_word,
    tree_to_nested_word,
)
from .config import Caps
from .ebsp import decide_bounded_theory, ebsp_condition, estimate_witness, reduce_k_to_zero, unary_witness_bound
from .equivalence import LOGICS, ef_game_decide, equivalent, rank_type
from .errors import CapExceeded, FmtkError, ParseError, VerificationError
from .families import FamilySpec, Unary, Words, generator_from_name
from .logic import (
    Formula,
    canonical_conjunctive_query,
    evaluate,
    format_formula,
    free_variables,
    has_set_quantifier,
    parse_formula,
    rank,
    relativize,
)
from .preservation import (
    check_pce_k,
    check_psc_k,
    find_cruxes,
    glt_counterexample,
    glt_translate,
    hpt_translate,
    is_k_ary_cover,
    is_k_crux,
    phi_k_paths,
    psi_k,
)
from .structures import PointedStructure, Structure, parse_structure, serialize_structure
from .transl import SCHEME_NAMES, apply_formula, apply_structure, builtin_scheme, format_scheme, operation_tree_eval, parse_scheme
from .treerep import parse_tree, reduce_with_report, serialize_tree

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_CAP, EXIT_INTERNAL = 0, 1, 2, 3, 4

# FO evaluation is polynomial in the universe, so the command line allows
# larger universes than the library default (the fixtures have 18+ elements).
CLI_FO_UNIVERSE = 64

FIXTURE_SCHEME = "successor_closure"


class UsageError(Exception):
    pass


@dataclass
class Report:
    verb: str
    exit_code: int
    result: dict
    text: str

    def as_dict(self) -> dict:
        return {"verb": self.verb, "exit_code": self.exit_code, "result": self.result}

    def render(self, as_json: bool) -> str:
        if as_json:
            return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        return self.text if self.text.endswith("\n") else self.text + "\n"


# ---------------------------------------------------------------- inputs


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _parsed(path: str, parse: Callable[[str], object], text: str | None = None):
    try:
        return parse(_read(path) if text is None else text)
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_structure(path: str) -> Structure:
    return _parsed(path, parse_structure)


def load_formula(arg: str, vocab=None) -> Formula:
    """A formula file, or the formula text itself when no such file exists."""
    if Path(arg).is_file():
        return _parsed(arg, lambda t: parse_formula(t, vocab))
    return _parsed("<formula>", lambda t: parse_formula(t, vocab), arg)


def _is_structure_text(text: str) -> bool:
    for line in text.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            return stripped.split()[0] == "vocab"
    return False


def _ints(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated element ids, got {text!r}") from None


def _names(text: str | None) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()] if text else []


def _caps(args) -> Caps:
    caps = Caps(fo_universe=CLI_FO_UNIVERSE)
    changes = {}
    if args.max_universe is not None:
        changes["fo_universe"] = args.max_universe
    if args.max_mso_universe is not None:
        changes["mso_universe"] = args.max_mso_universe
    if args.subset_limit is not None:
        changes["subset_limit"] = args.subset_limit
    if args.family_size is not None:
        changes["family_size"] = args.family_size
    return caps.with_(**changes)


def _family(args) -> FamilySpec:
    sentence = load_formula(args.class_sentence) if args.class_sentence else None
    if args.member:
        return FamilySpec.of([load_structure(p) for p in args.member], sentence, hereditary=False)
    if not args.family:
        raise UsageError("a family is required: --family NAME[<=N] or --member FILE ...")
    name, sep, bound = args.family.partition("<=")
    try:
        size = int(bound) if sep else 4
    except ValueError:
        raise UsageError(f"bad family size bound in {args.family!r}") from None
    try:
        gen = generator_from_name(name)
    except ValueError as exc:
        raise UsageError(f"bad family {args.family!r}: {exc}") from None
    return FamilySpec.generated(gen, size, sentence, min_size=args.min_size)


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required for this verb")
    return value


def _logic_for(args, phi: Formula | None = None) -> str:
    if args.logic:
        return args.logic
    return "mso" if phi is not None and has_set_quantifier(phi) else "fo"


# ---------------------------------------------------------------- verbs


def cmd_eval(args, caps):
    A = load_structure(args.structure)
    phi = load_formula(args.formula, A.vocab)
    tup = _ints(args.tuple)
    names = _names(args.vars) if args.vars else sorted(free_variables(phi))
    if len(names) != len(tup):
        raise UsageError(f"{len(names)} free variables {names} but {len(tup)} tuple elements")
    value = evaluate(A, phi, dict(zip(names, tup)), caps=caps)
    return EXIT_OK, {"value": value}, "true" if value else "false"


def cmd_rank(args, caps):
    phi = load_formula(args.formula)
    logic = _logic_for(args, phi)
    return EXIT_OK, {"rank": rank(phi), "logic": logic}, str(rank(phi))


def cmd_equiv(args, caps):
    A = PointedStructure(load_structure(args.structure), _ints(args.tuple))
    B = PointedStructure(load_structure(args.other), _ints(args.tuple2) if args.tuple2 else _ints(args.tuple))
    m, logic = _need(args.m, "--m"), _logic_for(args)
    decide = ef_game_decide if args.game else equivalent
    same = decide(A, B, m, logic, caps=caps)
    result = {"equivalent": same, "m": m, "logic": logic, "method": "game" if args.game else "types"}
    return EXIT_OK, result, "equivalent" if same else "not equivalent"


def cmd_type(args, caps):
    A = PointedStructure(load_structure(args.structure), _ints(args.tuple))
    m, logic = _need(args.m, "--m"), _logic_for(args)
    fp = rank_type(A, m, logic, caps).fingerprint()
    return EXIT_OK, {"fingerprint": fp, "m": m, "logic": logic}, fp


def _formula_report(phi: Formula):
    text = format_formula(phi)
    return EXIT_OK, {"formula": text, "rank": rank(phi)}, text


def cmd_relativize(args, caps):
    names = _names(args.vars)
    if not names:
        raise UsageError("--vars is required for relativize")
    return _formula_report(relativize(load_formula(args.formula), names))


def cmd_ccq(args, caps):
    A = PointedStructure(load_structure(args.structure), _ints(args.tuple))
    return _formula_report(canonical_conjunctive_query(A))


def cmd_crux(args, caps):
    A = load_structure(args.structure)
    phi = load_formula(args.formula, A.vocab)
    family = _family(args)
    if args.set is not None:
        C = _ints(args.set)
        ok = is_k_crux(A, C, phi, family, caps)
        return (EXIT_OK if ok else EXIT_REFUTED), {"set": list(C), "crux": ok}, "crux" if ok else "not a crux"
    k = _need(args.k, "--k")
    report = find_cruxes(A, phi, family, k, caps)
    lines = [" ".join(map(str, c)) or "{}" for c in report.cruxes]
    text = "\n".join(lines) if lines else f"no crux of size <= {k}"
    return (EXIT_OK if report.cruxes else EXIT_REFUTED), report.as_dict(), text


def _verdict_text(verdict) -> str:
    head = f"{verdict.property}({verdict.k}): {verdict.verdict}"
    if verdict.counterexample:
        return head + "\n" + verdict.counterexample["structure"]
    return head


def cmd_psc(args, caps):
    family = _family(args)
    phi = load_formula(args.formula, family.vocab)
    verdict = check_psc_k(family, phi, _need(args.k, "--k"), caps)
    result = verdict.as_dict() | {"family": family.name}
    return (EXIT_OK if verdict.holds else EXIT_REFUTED), result, _verdict_text(verdict)


def cmd_pce(args, caps):
    family = _family(args)
    phi = load_formula(args.formula, family.vocab)
    verdict = check_pce_k(family, phi, _need(args.k, "--k"), args.cover_cap, caps)
    code = {"holds": EXIT_OK, "violated": EXIT_REFUTED}.get(verdict.verdict, EXIT_CAP)
    result = verdict.as_dict() | {"family": family.name, "cover_cap": args.cover_cap}
    if code == EXIT_CAP:
        result["error"] = f"undecided within cover cap {args.cover_cap}"
    return code, result, _verdict_text(verdict)


def cmd_cover(args, caps):
    A = load_structure(args.structure)
    members = [load_structure(p) for p in args.members]
    k = _need(args.k, "--k")
    ok = is_k_ary_cover(A, members, k)
    return (EXIT_OK if ok else EXIT_REFUTED), {"cover": ok, "k": k, "members": len(members)}, "cover" if ok else "not a cover"


def cmd_glt(args, caps):
    phi = load_formula(args.formula)
    guard = load_formula(args.class_sentence) if args.class_sentence else None
    return _formula_report(glt_translate(phi, _need(args.k, "--k"), _need(args.p, "--p"), guard))


def cmd_hpt(args, caps):
    family = _family(args)
    phi = load_formula(args.formula, family.vocab)
    return _formula_report(hpt_translate(phi, _need(args.k, "--k"), _need(args.p, "--p"), family, caps))


def _load_scheme(arg: str, source=None):
    if arg in SCHEME_NAMES:
        scheme = builtin_scheme(arg)
        return scheme if source is None or scheme.source == source else scheme.with_source(source)
    return _parsed(arg, lambda t: parse_scheme(t, source, name=Path(arg).stem))


def cmd_scheme_apply(args, caps):
    if Path(args.input).is_file() and _is_structure_text(_read(args.input)):
        A = load_structure(args.input)
        B = apply_structure(_load_scheme(args.scheme, A.vocab), A, caps=caps)
        text = serialize_structure(B)
        return EXIT_OK, {"structure": text}, text
    scheme = _load_scheme(args.scheme)
    phi = load_formula(args.input, scheme.target)
    return _formula_report(apply_formula(scheme, phi))


def cmd_optree(args, caps):
    tree = _parsed(args.tree, parse_tree)
    leaves = [load_structure(p) for p in args.leaves]
    text = serialize_structure(operation_tree_eval(tree, leaves, caps=caps))
    return EXIT_OK, {"structure": text}, text


def cmd_prune(args, caps):
    tree = _parsed(args.tree, parse_tree)
    names = _names(args.oracle)
    if not names:
        raise UsageError(f"--oracle is required; choose from {', '.join(ORACLE_NAMES)}")
    m = _need(args.m, "--m")
    oracles = [(builtin_oracle(name), m) for name in names]
    report = reduce_with_report(tree, oracles, _logic_for(args), caps.with_(fo_universe=max(caps.fo_universe, 512)))
    out = serialize_tree(report.tree)
    return EXIT_OK, report.as_dict() | {"tree": out, "oracles": names, "m": m}, out


def _describe(family: FamilySpec, S: Structure) -> dict:
    out = {"structure": serialize_structure(S), "size": len(S)}
    if isinstance(family.generator, Words):
        out["word"] = family.generator.word_of(S)
    return out


def cmd_ebsp(args, caps):
    A = load_structure(args.structure)
    family = _family(args)
    pins = _ints(args.tuple)
    m, logic = _need(args.m, "--m"), _logic_for(args)
    bound = len(A) if args.bound is None else args.bound
    if args.via_labels:
        B = reduce_k_to_zero(family, A, pins, m, logic, bound, caps=caps)
    else:
        B = ebsp_condition(family, A, pins, m, bound, logic, caps)
    result = {"found": B is not None, "m": m, "bound": bound, "tuple": list(pins)}
    if B is None:
        return EXIT_REFUTED, result, f"no witness of size <= {bound}"
    result["witness"] = _describe(family, B)
    return EXIT_OK, result, serialize_structure(B)


def cmd_profile(args, caps):
    family = _family(args)
    m = _need(args.m, "--m")
    profile = estimate_witness(family, args.k or 0, range(m + 1), _logic_for(args), args.samples, args.seed, caps=caps)
    csv_text = profile.to_csv()
    result = {
        "family": family.name,
        "k": profile.k,
        "seed": args.seed,
        "aggregate": {str(r): s for r, s in profile.aggregate.items()},
        "monotone": {str(r): s for r, s in profile.monotone().items()},
        "csv": csv_text,
    }
    return EXIT_OK, result, csv_text


def cmd_theory(args, caps):
    family = _family(args)
    phi = load_formula(args.formula, family.vocab)
    if args.p is not None:
        p = args.p
        witness = lambda m: p  # noqa: E731
    elif isinstance(family.generator, Unary):
        witness = unary_witness_bound(len(family.generator.predicates), args.k or 0)
    else:
        raise UsageError("--p is required unless the family is unary")
    decision = decide_bounded_theory(family, witness, phi, _logic_for(args, phi), caps)
    result = decision.as_dict(lambda S: _describe(family, S))
    text = "accepted" if decision.accepted else "rejected\n" + serialize_structure(decision.certificate)
    return (EXIT_OK if decision.accepted else EXIT_REFUTED), result, text


def cmd_nw_encode(args, caps):
    text = serialize_tree(nested_word_to_tree(_parsed(args.input, parse_nested_word)))
    return EXIT_OK, {"tree": text}, text


def cmd_nw_decode(args, caps):
    text = format_nested_word(tree_to_nested_word(_parsed(args.input, parse_tree)))
    return EXIT_OK, {"nested_word": text}, text


def cmd_cotree(args, caps):
    text = serialize_structure(cotree_to_graph(_parsed(args.tree, parse_tree), parts=args.parts))
    return EXIT_OK, {"structure": text}, text


def _write(out: str | None, files: dict[str, str]) -> list[str]:
    if out is None:
        return []
    folder = Path(out)
    folder.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (folder / name).write_text(content, encoding="utf-8")
    return sorted(files)


def cmd_fixture(args, caps):
    kind, params = args.kind, args.params

    def ints(count: int) -> list[int]:
        if len(params) != count:
            raise UsageError(f"fixture {kind} takes {count} integer argument(s)")
        try:
            return [int(x) for x in params]
        except ValueError:
            raise UsageError(f"fixture {kind} takes integer arguments") from None

    if kind == "glt-counterexample":
        k, n = ints(2)
        fx = glt_counterexample(k, n, args.block)
        files = {"A.str": serialize_structure(fx.A), "B.str": serialize_structure(fx.B), "psi_k.fml": format_formula(fx.psi) + "\n"}
        extra = {"k": k, "n": n, "block": fx.block, "marked": fx.marked}
    elif kind in ("phi-k", "psi-k"):
        (k,) = ints(1)
        phi = phi_k_paths(k) if kind == "phi-k" else psi_k(k)
        files = {kind.replace("-", "_") + ".fml": format_formula(phi) + "\n"}
        extra = {"k": k}
    elif kind == "scheme":
        if params not in ([], ["xi1"], ["Xi1"], ["Ξ₁"]):
            raise UsageError("the only scheme fixture is xi1")
        files = {"xi1.scheme": format_scheme(builtin_scheme(FIXTURE_SCHEME))}
        extra = {"builtin": FIXTURE_SCHEME}
    else:
        raise UsageError(f"unknown fixture {kind!r}")
    written = _write(args.out, files)
    result = {"kind": kind, "files": files, "written": written} | extra
    text = "".join(f"== {name}\n{content}" for name, content in files.items())
    return EXIT_OK, result, text


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, *groups: str):
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.add_argument("--logic", choices=LOGICS)
    p.add_argument("--max-universe", type=int, help=f"FO universe cap (default {CLI_FO_UNIVERSE})")
    p.add_argument("--max-mso-universe", type=int)
    p.add_argument("--subset-limit", type=int)
    p.add_argument("--family-size", type=int, help="largest member size a generator may enumerate")
    flags = {
        "m": lambda: p.add_argument("--m", type=int),
        "k": lambda: p.add_argument("--k", type=int),
        "p": lambda: p.add_argument("--p", type=int),
        "tuple": lambda: p.add_argument("--tuple", help="comma-separated element ids"),
        "vars": lambda: p.add_argument("--vars", help="comma-separated variable names"),
        "bound": lambda: p.add_argument("--bound", type=int),
        "cover": lambda: p.add_argument("--cover-cap", type=int, default=6),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "class": lambda: p.add_argument("--class-sentence", help="formula file or text restricting the class"),
    }
    for g in groups:
        if g == "family":
            p.add_argument("--family", help="generator with optional size bound, e.g. graphs<=4, paths:2<=6, words:ab<=4")
            p.add_argument("--member", action="append", help="explicit member structure file (repeatable)")
            p.add_argument("--min-size", type=int, default=0)
            if "class" not in groups:
                flags["class"]()
        else:
            flags[g]()


VERBS: dict[str, tuple[Callable, tuple[str, ...], tuple[str, ...], str]] = {
    "eval": (cmd_eval, ("structure", "formula"), ("tuple", "vars"), "truth of a formula in a structure"),
    "rank": (cmd_rank, ("formula",), (), "quantifier rank"),
    "equiv": (cmd_equiv, ("structure", "other"), ("m", "tuple"), "rank-m equivalence of two structures"),
    "type": (cmd_type, ("structure",), ("m", "tuple"), "fingerprint of the rank-m type"),
    "relativize": (cmd_relativize, ("formula",), ("vars",), "relativize a sentence to variables"),
    "ccq": (cmd_ccq, ("structure",), ("tuple",), "canonical conjunctive query"),
    "crux": (cmd_crux, ("structure", "formula"), ("k", "family"), "find cruxes or test one"),
    "psc-check": (cmd_psc, ("formula",), ("k", "family"), "PSC(k) over a family"),
    "pce-check": (cmd_pce, ("formula",), ("k", "cover", "family"), "PCE(k) over a family"),
    "cover-check": (cmd_cover, ("structure", "members"), ("k",), "k-ary cover test"),
    "glt-translate": (cmd_glt, ("formula",), ("k", "p", "class"), "existential-universal translation"),
    "hpt-translate": (cmd_hpt, ("formula",), ("k", "p", "family"), "existential-positive translation"),
    "scheme-apply": (cmd_scheme_apply, ("scheme", "input"), (), "apply a translation scheme"),
    "optree-eval": (cmd_optree, ("tree", "leaves"), (), "evaluate an operation tree"),
    "prune": (cmd_prune, ("tree",), ("m",), "height and degree reduction of a tree"),
    "ebsp-search": (cmd_ebsp, ("structure",), ("m", "tuple", "bound", "family"), "smallest equivalent substructure"),
    "witness-profile": (cmd_profile, (), ("m", "k", "seed", "family"), "empirical witness sizes"),
    "decide-theory": (cmd_theory, ("formula",), ("p", "k", "family"), "decide a sentence on a bounded family"),
    "nw-encode": (cmd_nw_encode, ("input",), (), "nested word to tree"),
    "nw-decode": (cmd_nw_decode, ("input",), (), "tree to nested word"),
    "cotree-graph": (cmd_cotree, ("tree",), (), "graph of a cotree"),
    "fixture": (cmd_fixture, ("kind", "params"), (), "write a counterexample fixture"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fmtk", description="finite model theory toolkit")
    parser.add_argument("--version", action="version", version=f"fmtk {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb, (handler, positionals, groups, summary) in VERBS.items():
        p = sub.add_parser(verb, help=summary, description=summary)
        for name in positionals:
            if name in ("members", "leaves"):
                p.add_argument(name, nargs="+")
            elif name == "params":
                p.add_argument(name, nargs="*")
            else:
                p.add_argument(name)
        _common(p, *groups)
        if verb == "equiv":
            p.add_argument("--tuple2", help="tuple for the second structure (default: --tuple)")
            p.add_argument("--game", action="store_true", help="decide by the game instead of types")
        if verb == "crux":
            p.add_argument("--set", help="test this element set instead of searching")
        if verb == "prune":
            p.add_argument("--oracle", help=f"comma-separated oracle names: {', '.join(ORACLE_NAMES)}")
        if verb == "ebsp-search":
            p.add_argument("--via-labels", action="store_true", help="search the label expansion with no pins")
        if verb == "witness-profile":
            p.add_argument("--samples", type=int, default=20)
        if verb == "cotree-graph":
            p.add_argument("--parts", action="store_true", help="expose parts as unary predicates")
        if verb == "fixture":
            p.add_argument("--out", help="directory to write the fixture files into")
            p.add_argument("--block", type=int, help="marked block of the glt-counterexample")
        p.set_defaults(handler=handler)
    return parser


def run(argv: Sequence[str]) -> Report:
    argv = list(argv)
    verb = next((a for a in argv if a in VERBS), "")
    try:
        args = build_parser().parse_args(argv)
        code, result, text = args.handler(args, _caps(args))
        return Report(args.verb, code, result, text)
    except UsageError as exc:
        return Report(verb, EXIT_USAGE, {"error": str(exc)}, f"error: {exc}")
    except CapExceeded as exc:
        return Report(verb, EXIT_CAP, {"error": f"cap exceeded: {exc}"}, f"cap exceeded: {exc}")
    except VerificationError as exc:
        return Report(verb, EXIT_INTERNAL, {"error": f"verification failed: {exc}"}, f"verification failed: {exc}")
    except (FmtkError, ValueError) as exc:
        return Report(verb, EXIT_USAGE, {"error": str(exc)}, f"error: {exc}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        report = run(argv)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    as_json = "--json" in argv
    stream = sys.stdout if report.exit_code in (EXIT_OK, EXIT_REFUTED) or as_json else sys.stderr
    stream.write(report.render(as_json))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
