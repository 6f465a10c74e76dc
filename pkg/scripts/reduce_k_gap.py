"""Search for pinned graphs where the label-expansion search at rank m alone
gives a witness that fails the pinned condition, and show that rank m + k
repairs it.
"""

import argparse
import random

from fmtk.config import Caps
from fmtk.ebsp import ebsp_condition, reduce_k_to_zero
from fmtk.errors import VerificationError
from fmtk.families import FamilySpec
from fmtk.sampling import random_graph


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--show", type=int, default=3, help="print this many failing instances")
    args = parser.parse_args()
    rng = random.Random(args.seed)
    family = FamilySpec.generated("graphs", 7)
    caps = Caps(fo_universe=32)
    failures = {0: 0, 1: 0, 2: 0}
    trials = {0: 0, 1: 0, 2: 0}
    shown = 0
    for _ in range(args.trials):
        A = random_graph(rng, rng.randint(2, 6))
        pins = tuple(rng.sample(A.elements, rng.randint(1, 2)))
        m = rng.randint(0, 2)
        trials[m] += 1
        try:
            reduce_k_to_zero(family, A, pins, m, extra_rounds=0, caps=caps)
        except VerificationError:
            failures[m] += 1
            if shown < args.show:
                shown += 1
                edges = sorted(e for e in A.rel("E") if e[0] < e[1])
                direct = ebsp_condition(family, A, pins, m, len(A), caps=caps)
                print(f"m={m} pins={pins} edges={edges}: direct witness {sorted(direct.universe)}")
        # the default depth must always re-verify
        reduce_k_to_zero(family, A, pins, m, caps=caps)
    for m in sorted(trials):
        print(f"rank {m}: {failures[m]} of {trials[m]} label-stripped witnesses fail at depth m; 0 fail at depth m + k")


if __name__ == "__main__":
    main()
