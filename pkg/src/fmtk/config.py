"""Resource caps shared by every search and evaluation routine."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Caps:
    """Hard limits; exceeding one raises CapExceeded instead of truncating.

    fo_universe / mso_universe bound the universe size for evaluation and
    type computation (the latter applies as soon as a set quantifier or a
    set move is involved).  subset_limit bounds exhaustive subset searches,
    tuple_limit bounds |A|^t in translation schemes, family_size bounds
    the member size of generated families.
    """

    fo_universe: int = 12
    mso_universe: int = 10
    subset_limit: int = 1 << 20
    tuple_limit: int = 1 << 16
    family_size: int = 8

    def with_(self, **changes) -> "Caps":
        return replace(self, **changes)


DEFAULT_CAPS = Caps()

# Tree pruning routinely handles a couple of hundred nodes with FO types.
TREE_CAPS = Caps(fo_universe=512, mso_universe=10)


def resolve(caps: Caps | None) -> Caps:
    return DEFAULT_CAPS if caps is None else caps
