"""Reduce random trees with the built-in oracles and report how far they shrink."""

import argparse
import random
import time

from fmtk.classes import builtin_oracle
from fmtk.sampling import random_chain, random_tree
from fmtk.treerep import reduce_with_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", type=int, default=10)
    parser.add_argument("--max-nodes", type=int, default=200)
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    print("oracle,input_size,output_size,height,degree,height_vectors,degree_vectors,splices,seconds")
    for i in range(args.trees):
        n = rng.randint(1, args.max_nodes)
        name = "words" if i % 2 == 0 else "unordered"
        t = random_chain(rng, n) if name == "words" else random_tree(rng, n)
        start = time.perf_counter()
        rep = reduce_with_report(t, [(builtin_oracle(name), args.m)])
        s = rep.tree
        print(f"{name},{len(t)},{len(s)},{s.height},{s.degree},{rep.height_vectors},{rep.degree_vectors},"
              f"{len(rep.splices)},{time.perf_counter() - start:.2f}")


if __name__ == "__main__":
    main()
