"""Smallest n from which all paths P_n, P_n+1, ... share one rank-m type, for m = 1..3.

Compares each path against the next `--window` lengths and reports the
first n where the type stops changing.
"""

import argparse

from fmtk.config import Caps
from fmtk.equivalence import rank_type
from fmtk.structures import path


def threshold(m: int, limit: int, window: int, caps: Caps) -> int | None:
    types = [rank_type(path(n), m, caps=caps) for n in range(limit + window + 1)]
    for n in range(limit + 1):
        if all(t is types[n] for t in types[n : n + window + 1]):
            return n
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-rank", type=int, default=3)
    parser.add_argument("--limit", type=int, default=30)
    parser.add_argument("--window", type=int, default=6)
    args = parser.parse_args()
    caps = Caps(fo_universe=args.limit + args.window + 2)
    print("m,threshold,3^m")
    for m in range(1, args.max_rank + 1):
        print(f"{m},{threshold(m, args.limit, args.window, caps)},{3**m}")


if __name__ == "__main__":
    main()
