"""Combination binary tree: merge users pairwise into superusers.

Users are merged two at a time, each time picking an adjacent pair (in
increasing-NIS order) that overlaps or touches, until a single superuser
holding every user remains. Splitting later walks the merges backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple

from .allocation import (PairRelation, RateAllocation, Status, classify_pair,
                         polymatroid_membership, sum_capacity, tighten)
from .errors import InvariantViolation, NotOnDominantFace, ValidationError
from .shannon import DEFAULT_TOLERANCE, nis_for_rate

__all__ = ["NodeEntry", "CombinationTree", "combine", "find_combinable_pair",
           "build_combination_tree"]


@dataclass(frozen=True)
class NodeEntry:
    """A user (leaf) or superuser (internal node) of the combination tree.

    ``members`` holds 0-based user indices.
    """

    id: int
    power: float
    rate: float
    nis: float
    members: FrozenSet[int]

    @classmethod
    def leaf(cls, user: int, power: float, rate: float) -> "NodeEntry":
        return cls(user, power, rate, nis_for_rate(rate, power), frozenset((user,)))

    @property
    def is_leaf(self) -> bool:
        return len(self.members) == 1


def combine(a: NodeEntry, b: NodeEntry, node_id: int) -> NodeEntry:
    """Superuser carrying the pooled power and the summed rate of ``a`` and ``b``."""
    if not a.members or not b.members:
        raise ValidationError("cannot combine a node without members")
    if a.members & b.members:
        raise ValidationError(f"nodes {a.id} and {b.id} share users")
    power = a.power + b.power
    rate = a.rate + b.rate
    return NodeEntry(node_id, power, rate, nis_for_rate(rate, power), a.members | b.members)


def _nis_order(entries: Sequence[NodeEntry]) -> List[int]:
    return sorted(range(len(entries)), key=lambda k: (entries[k].nis, entries[k].id))


def find_combinable_pair(entries: Sequence[NodeEntry], tolerance: float = DEFAULT_TOLERANCE
                         ) -> Tuple[int, int, PairRelation]:
    """Lowest-NIS adjacent pair that is overlapping or contiguous.

    Returns the positions of the lower- and higher-NIS entry within
    ``entries`` along with their relation.
    """
    order = _nis_order(entries)
    for lo, hi in zip(order, order[1:]):
        low, high = entries[lo], entries[hi]
        relation = classify_pair((low.power, low.nis), (high.power, high.nis), tolerance)
        if relation is not PairRelation.DISCONTINUOUS:
            return lo, hi, relation
    raise InvariantViolation(
        "no overlapping or contiguous pair among "
        f"{len(entries)} entries; the allocation is not tight within tolerance")


@dataclass(frozen=True)
class CombinationTree:
    """Binary merge tree over ``n`` users.

    Leaves have ids ``0..n-1`` (the user indices); internal nodes get
    ids ``n..2n-2`` in creation order, so ``merge_order`` is simply that
    range and the last id is the root. ``children[k]`` is ``(low, high)``
    ordered by NIS at merge time (ties by lower id).
    """

    nodes: Tuple[NodeEntry, ...]
    children: Dict[int, Tuple[int, int]]
    relation_at_merge: Dict[int, PairRelation]
    noise: float

    @property
    def n(self) -> int:
        return (len(self.nodes) + 1) // 2

    @property
    def root(self) -> NodeEntry:
        return self.nodes[-1]

    @property
    def leaves(self) -> Tuple[NodeEntry, ...]:
        return self.nodes[:self.n]

    @property
    def merge_order(self) -> Tuple[int, ...]:
        return tuple(range(self.n, len(self.nodes)))

    @property
    def parent(self) -> Dict[int, int]:
        return {c: p for p, pair in self.children.items() for c in pair}

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": node.id, "users": sorted(k + 1 for k in node.members),
                 "power": node.power, "rate": node.rate, "nis": node.nis}
                for node in self.nodes
            ],
            "merges": [
                {"node": k, "low": self.children[k][0], "high": self.children[k][1],
                 "relation": str(self.relation_at_merge[k])}
                for k in self.merge_order
            ],
        }


def build_combination_tree(ra: RateAllocation, tolerance: float = DEFAULT_TOLERANCE,
                           check_membership: bool = True) -> CombinationTree:
    """Merge users pairwise until one superuser remains.

    Leaf rates are those of ``tighten(ra)``, i.e. rescaled so the sum
    rate matches the sum capacity exactly.

    Raises
    ------
    NotOnDominantFace
        If the allocation is not a base (checked unless
        ``check_membership`` is false).
    InvariantViolation
        If a merge step finds no combinable pair or a partial allocation
        stops being tight.
    """
    if check_membership:
        verdict = polymatroid_membership(ra, tolerance)
        if verdict.status is not Status.DOMINANT_FACE:
            raise NotOnDominantFace(verdict)
    ra = tighten(ra)

    nodes = [NodeEntry.leaf(k, p, r) for k, (p, r) in enumerate(zip(ra.powers, ra.rates))]
    active = list(nodes)
    children = {}
    relations = {}
    rate_band = tolerance * max(sum_capacity(ra.powers, ra.noise), 1.0)
    while len(active) > 1:
        lo, hi, relation = find_combinable_pair(active, tolerance)
        low, high = active[lo], active[hi]
        merged = combine(low, high, len(nodes))
        nodes.append(merged)
        children[merged.id] = (low.id, high.id)
        relations[merged.id] = relation
        active = [e for k, e in enumerate(active) if k not in (lo, hi)] + [merged]

        # every partial allocation must remain tight
        rate = math.fsum(e.rate for e in active)
        cap = sum_capacity([e.power for e in active], ra.noise)
        if abs(rate - cap) > rate_band:
            raise InvariantViolation(
                f"allocation lost tightness after merge {merged.id}: "
                f"sum rate {rate!r} vs capacity {cap!r}")

    root = nodes[-1]
    if abs(root.nis - ra.noise) > tolerance * max(ra.noise, ra.total_power):
        raise InvariantViolation(f"root NIS {root.nis!r} differs from noise {ra.noise!r}")
    return CombinationTree(tuple(nodes), children, relations, ra.noise)
