"""Empirical EBSP witness sizes for a few generated families, printed as CSV."""

import argparse

from fmtk.config import Caps
from fmtk.ebsp import estimate_witness, unary_witness_bound
from fmtk.families import FamilySpec

FAMILIES = ["unary:P,Q<=12", "paths<=8", "graphs<=5", "words:ab<=7"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-rank", type=int, default=2)
    parser.add_argument("--k", type=int, default=1)
    parser.add_argument("--samples", type=int, default=25)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--family", action="append", help="NAME<=N, repeatable (default: a fixed set)")
    args = parser.parse_args()
    caps = Caps(fo_universe=32, family_size=12, subset_limit=1 << 22)
    header = True
    for text in args.family or FAMILIES:
        name, _, bound = text.partition("<=")
        family = FamilySpec.generated(name, int(bound))
        profile = estimate_witness(family, args.k, range(args.max_rank + 1), sample_count=args.samples, seed=args.seed, caps=caps)
        lines = profile.to_csv().splitlines()
        print("\n".join(lines if header else lines[1:]))
        header = False
        if name.startswith("unary:"):
            bound_of = unary_witness_bound(len(name.split(":")[1].split(",")), args.k)
            print(f"# {name}: m*2^|tau|+k gives " + ", ".join(f"m={m}: {bound_of(m)}" for m in range(args.max_rank + 1)))


if __name__ == "__main__":
    main()
