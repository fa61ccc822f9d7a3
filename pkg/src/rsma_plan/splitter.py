"""Split users into virtual users by walking the combination tree backwards.

Geometry: a piece of power ``p`` whose NIS is ``d`` occupies the interval
``[d, d + p]`` on the NIS axis and carries ``capacity(p, d)`` bits. A
plan is valid when the pieces of all users tile ``[noise, noise + sum(P)]``
without gaps or overlap. Each tree node owns a *region* of one or two such
intervals; partitioning hands every child a region of at most two
intervals whose length is the child's power and whose rate is its rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .allocation import PairRelation, RateAllocation
from .combiner import CombinationTree, NodeEntry, build_combination_tree
from .errors import PartitionError, ValidationError
from .shannon import DEFAULT_TOLERANCE, capacity, interval_rate, nis_for_rate

__all__ = [
    "Rect",
    "Region",
    "Partition",
    "VirtualUser",
    "SplitPlan",
    "BisectionResult",
    "double_rect_case",
    "partition_single_rect",
    "partition_double_rect",
    "epsilon_bisection",
    "closed_form_placement",
    "compute_split_plan",
]

Interval = Tuple[float, float]

# closed form vs. bisection disagreement that aborts planning
CROSS_CHECK_RTOL = 1e-6
# epsilon values below this are compared absolutely
EPSILON_ATOL = 1e-12


@dataclass(frozen=True)
class Rect:
    """A slab of ``power`` sitting at NIS ``nis``."""

    power: float
    nis: float

    @property
    def top(self) -> float:
        return self.nis + self.power

    @property
    def rate(self) -> float:
        return capacity(self.power, self.nis)


@dataclass(frozen=True)
class Region:
    """One or two disjoint rects, stored bottom-up.

    For two rects, ``upper`` and ``lower`` correspond to the rects
    labelled 1 and 2 in the case analysis.
    """

    rects: Tuple[Rect, ...]

    def __post_init__(self):
        if not 1 <= len(self.rects) <= 2:
            raise ValidationError(f"a region holds one or two rects, got {len(self.rects)}")
        if len(self.rects) == 2 and not self.rects[1].nis > self.rects[0].top:
            raise ValidationError("region rects must be disjoint and stored bottom-up")

    @classmethod
    def single(cls, power: float, nis: float) -> "Region":
        return cls((Rect(power, nis),))

    @classmethod
    def from_intervals(cls, intervals: Sequence[Interval], snap: float = 0.0,
                       scale: float = math.inf) -> "Region":
        """Build a region, dropping slivers and fusing near-touching intervals.

        The snapping width at NIS position ``x`` is ``snap * min(x, scale)``,
        so a dropped sliver costs at most about ``0.72 * snap`` bits and at
        most ``snap * scale`` power.
        """
        merged: List[List[float]] = []
        for lo, hi in sorted(intervals):
            if hi - lo <= snap * min(lo, scale):
                continue
            if merged and lo - merged[-1][1] <= snap * min(merged[-1][1], scale):
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        if not merged:
            raise ValidationError("region would be empty")
        return cls(tuple(Rect(hi - lo, lo) for lo, hi in merged))

    @property
    def upper(self) -> Rect:
        return self.rects[-1]

    @property
    def lower(self) -> Rect:
        return self.rects[0]

    @property
    def power(self) -> float:
        return math.fsum(r.power for r in self.rects)

    @property
    def rate(self) -> float:
        return math.fsum(r.rate for r in self.rects)

    @property
    def intervals(self) -> List[Interval]:
        return [(r.nis, r.top) for r in self.rects]


def _pieces_rate(pieces: Sequence[Interval]) -> float:
    return math.fsum(interval_rate(lo, hi) for lo, hi in pieces if hi > lo)


def _subtract(region: Sequence[Interval], pieces: Sequence[Interval]) -> List[Interval]:
    """Parts of ``region`` not covered by ``pieces``."""
    out = []
    for lo, hi in region:
        cursor = lo
        for a, b in sorted(pieces):
            if b <= lo or a >= hi:
                continue
            if a > cursor:
                out.append((cursor, a))
            cursor = max(cursor, b)
        if cursor < hi:
            out.append((cursor, hi))
    return out


def _snap_pieces(pieces: Sequence[Interval], region: Sequence[Interval],
                 snap: float, scale: float) -> List[Interval]:
    """Pull piece endpoints close to a rect edge onto that edge."""
    edges = [e for iv in region for e in iv]

    def pull(x):
        nearest = min(edges, key=lambda e: abs(e - x))
        return nearest if abs(nearest - x) <= snap * min(nearest, scale) else x

    out = []
    for lo, hi in pieces:
        lo, hi = pull(lo), pull(hi)
        if hi - lo > snap * min(lo, scale):
            out.append((lo, hi))
    return out


@dataclass(frozen=True)
class Partition:
    """Result of splitting a parent region between its two children.

    ``case`` names the filling pattern used; ``epsilon`` is the
    coefficient of the split child (the lower-NIS one) or ``None`` when
    no closed form was involved.
    """

    low: Region
    high: Region
    case: str
    epsilon: Optional[float] = None


def _check_children(parent_power: float, parent_rate: float, low: NodeEntry,
                    high: NodeEntry, relation: PairRelation, tolerance: float):
    if relation is PairRelation.DISCONTINUOUS:
        raise PartitionError("discontinuous children cannot share a parent region")
    if low.nis > high.nis * (1 + tolerance):
        raise PartitionError(f"low child NIS {low.nis!r} above high child NIS {high.nis!r}")
    if abs(low.power + high.power - parent_power) > tolerance * parent_power:
        raise PartitionError("children powers do not add up to the parent region")
    rate = low.rate + high.rate
    if abs(rate - parent_rate) > tolerance * max(rate, 1.0):
        raise PartitionError(
            f"children rates {rate!r} do not add up to the region rate {parent_rate!r}")


def _finish(region: Region, j_pieces: Sequence[Interval], snap: float
            ) -> Tuple[Region, Region]:
    """Regions for j (given pieces) and i (the complement)."""
    scale = region.power
    j_pieces = _snap_pieces(j_pieces, region.intervals, snap, scale)
    i_pieces = _subtract(region.intervals, j_pieces)
    j_region = Region.from_intervals(j_pieces, snap, scale)
    i_region = Region.from_intervals(i_pieces, snap, scale)
    if len(j_region.rects) > 2 or len(i_region.rects) > 2:
        raise PartitionError("partition produced a child with more than two pieces")
    return j_region, i_region


def partition_single_rect(parent: Rect, low: NodeEntry, high: NodeEntry,
                          relation: PairRelation, tolerance: float = DEFAULT_TOLERANCE,
                          ) -> Partition:
    """Split one rect between two children, splitting at most the lower child.

    Contiguous children stack directly. For overlapping children the
    higher-NIS child keeps a single piece at its own NIS and the lower
    one takes what is left below and above it.
    """
    _check_children(parent.power, parent.rate, low, high, relation, tolerance)
    region = Region((parent,))
    if relation is PairRelation.CONTIGUOUS:
        low_region = Region.single(low.power, parent.nis)
        high_region = Region.single(high.power, parent.nis + low.power)
        return Partition(low_region, high_region, "contiguous", None)

    # the unsplit child must fit inside the parent; allow float residue only
    slack = tolerance * parent.top
    if high.nis < parent.nis - slack or high.nis + high.power > parent.top + slack:
        raise PartitionError(
            f"child at NIS {high.nis!r} with power {high.power!r} does not fit in "
            f"[{parent.nis!r}, {parent.top!r}]")
    i_lo = min(max(high.nis, parent.nis), parent.top - high.power)
    epsilon = (parent.top - (high.power + high.nis)) / low.power
    j_pieces = _subtract(region.intervals, [(i_lo, i_lo + high.power)])
    low_region, high_region = _finish(region, j_pieces, tolerance)
    return Partition(low_region, high_region, "single", _clip_epsilon(epsilon, tolerance))


def _clip_epsilon(epsilon: float, tolerance: float) -> float:
    if not -tolerance <= epsilon <= 1 + tolerance:
        raise PartitionError(f"splitting coefficient {epsilon!r} outside [0, 1]")
    return min(max(epsilon, 0.0), 1.0)


def double_rect_case(parent: Region, power: float) -> str:
    """Which of the four power patterns applies to a child of ``power``.

    Equalities fall into the earlier case; the formulas agree there.
    """
    p1, p2 = parent.upper.power, parent.lower.power
    if p1 >= power and p2 >= power:
        return "i"
    if p1 <= power and p2 <= power:
        return "ii"
    if p1 > power > p2:
        return "iii"
    return "iv"


# -- filling pattern families ------------------------------------------------
#
# Each family maps a parameter s in [0, 1] to (epsilon, pieces of the split
# child j); s = 0 puts j as low as the family allows (largest rate for j)
# and s = 1 as high as it allows.  The families of a case, in order, form
# one continuous path from j at the very bottom to j at the very top.

def _split_ends(parent: Region, pj: float, e0: float, e1: float):
    """j at the bottom of the lower rect and the top of the upper rect."""
    d2, t1 = parent.lower.nis, parent.upper.top

    def pieces(s):
        eps = e0 + s * (e1 - e0)
        return eps, [(d2, d2 + (1 - eps) * pj), (t1 - eps * pj, t1)]
    return pieces


def _split_inner(parent: Region, pj: float):
    """j at the top of the lower rect and the bottom of the upper rect."""
    r1, r2 = parent.upper, parent.lower
    e0, e1 = 1 - r2.power / pj, r1.power / pj

    def pieces(s):
        eps = e0 + s * (e1 - e0)
        return eps, [(r2.top - (1 - eps) * pj, r2.top), (r1.nis, r1.nis + eps * pj)]
    return pieces


def _slide(fixed: Rect, host: Rect, pj: float):
    """j fills ``fixed``; the rest of its power slides up through ``host``."""
    rest = pj - fixed.power
    # epsilon is the share of the upper piece
    eps = rest / pj if host.nis > fixed.nis else fixed.power / pj

    def pieces(s):
        lo = host.nis + s * (host.power - rest)
        return eps, [(fixed.nis, fixed.top), (lo, lo + rest)]
    return pieces


def _single_sweep(parent: Region, pj: float):
    """i as one piece sweeping down through a single rect; j is the rest."""
    rect = parent.rects[0]
    pi = rect.power - pj

    def pieces(s):
        lo = rect.top - pi - s * (rect.power - pi)
        eps = (rect.top - lo - pi) / pj
        return eps, [(rect.nis, lo), (lo + pi, rect.top)]
    return pieces


def _families(case: str, parent: Region, pj: float) -> List[Tuple[str, Callable]]:
    if case == "single":
        return [("single", _single_sweep(parent, pj))]
    p1, p2 = parent.upper.power, parent.lower.power
    if case == "i":
        return [("i", _split_ends(parent, pj, 0.0, 1.0))]
    if case == "ii":
        return [("ii", _split_inner(parent, pj))]
    if case == "iii":
        return [("iii.1", _slide(parent.lower, parent.upper, pj)),
                ("iii.2", _split_ends(parent, pj, 1 - p2 / pj, 1.0))]
    if case == "iv":
        return [("iv.1", _split_ends(parent, pj, 0.0, p1 / pj)),
                ("iv.2", _slide(parent.upper, parent.lower, pj))]
    raise ValueError(f"unknown case {case!r}")


@dataclass(frozen=True)
class BisectionResult:
    pattern: str
    epsilon: float
    pieces: Tuple[Interval, ...]
    iterations: int


def epsilon_bisection(case: str, parent: Region, power: float, rate: float,
                      width: float = 1e-14, max_iter: int = 200) -> BisectionResult:
    """Place child j (``power``, ``rate``) in ``parent`` by bisection.

    Walks the pattern families of ``case`` (``"single"`` or
    ``"i"``..``"iv"``) and bisects the one whose rate bracket holds
    ``rate``. Independent of the closed forms; used to cross-check them.

    Raises
    ------
    PartitionError
        If no family of the case can realize ``rate``.
    """
    if case != "single" and len(parent.rects) != 2:
        raise ValidationError(f"case {case!r} needs a two-rect region")
    families = _families(case, parent, power)

    def rho(pieces, s):
        return _pieces_rate(pieces(s)[1])

    hi_rate = rho(families[0][1], 0.0)
    lo_rate = rho(families[-1][1], 1.0)
    slack = 1e-12 * max(rate, 1.0)
    if not lo_rate - slack <= rate <= hi_rate + slack:
        raise PartitionError(
            f"rate {rate!r} outside the achievable bracket [{lo_rate!r}, {hi_rate!r}] "
            f"for case {case}")
    for k, (name, pieces) in enumerate(families):
        bottom = rho(pieces, 1.0)
        if rate < bottom and k < len(families) - 1:
            continue
        steps = 0
        if rate >= rho(pieces, 0.0):
            s = 0.0
        elif rate <= bottom:
            s = 1.0
        else:
            a, b = 0.0, 1.0
            while b - a > width and steps < max_iter:
                mid = 0.5 * (a + b)
                if rho(pieces, mid) > rate:
                    a = mid
                else:
                    b = mid
                steps += 1
            s = 0.5 * (a + b)
        eps, found = pieces(s)
        found = tuple(iv for iv in found if iv[1] > iv[0])
        return BisectionResult(name, eps, found, steps)
    raise AssertionError("unreachable")


def closed_form_placement(parent: Region, pj: float, rj: float
                          ) -> Tuple[str, float, List[Interval]]:
    """Closed-form placement of child j (``pj``, ``rj``) in a two-rect region.

    Returns the pattern name, the splitting coefficient and j's pieces
    as ``(bottom, top)`` intervals. The coefficient is not clipped.
    """
    r1, r2 = parent.upper, parent.lower
    p1, d1, t1 = r1.power, r1.nis, r1.top
    p2, d2, t2 = r2.power, r2.nis, r2.top
    x = 2.0 ** (2.0 * rj)

    def split_ends(pattern):
        # j's lower part sits at the bottom of rect 2, so the numerator
        # carries rect 2's NIS
        eps = t1 * (d2 * x - pj - d2) / (pj * (d2 * x - t1))
        return pattern, eps, [(d2, d2 + (1 - eps) * pj), (t1 - eps * pj, t1)]

    case = double_rect_case(parent, pj)
    if case == "i":
        return split_ends("i")
    if case == "ii":
        eps = 1 - t2 * (d1 * x - pj - d1) / (pj * (d1 * x - t2))
        return "ii", eps, [(t2 - (1 - eps) * pj, t2), (d1, d1 + eps * pj)]
    if case == "iii":
        rest = pj - p2
        threshold = capacity(p2, d2) + capacity(rest, t1 - rest)
        if rj >= threshold:
            eps = 1 - p2 / pj
            left = rj - capacity(p2, d2)
            nis = nis_for_rate(left, rest) if left > 0 and rest > 0 else t1 - rest
            nis = min(max(nis, d1), t1 - rest)
            return "iii.1", eps, [(d2, t2), (nis, nis + rest)]
        return split_ends("iii.2")
    rest = pj - p1
    threshold = capacity(p1, d1) + capacity(rest, d2)
    if rj >= threshold:
        return split_ends("iv.1")
    eps = p1 / pj
    left = rj - capacity(p1, d1)
    nis = nis_for_rate(left, rest) if left > 0 and rest > 0 else t2 - rest
    nis = min(max(nis, d2), t2 - rest)
    return "iv.2", eps, [(d1, t1), (nis, nis + rest)]


def _agree(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= max(rtol * max(abs(a), abs(b)), EPSILON_ATOL)


def partition_double_rect(parent: Region, low: NodeEntry, high: NodeEntry,
                          relation: PairRelation, tolerance: float = DEFAULT_TOLERANCE,
                          cross_check: bool = True
                          ) -> Partition:
    """Split a two-rect region between two children.

    The lower-NIS child j is placed with the closed form of its case; the
    higher-NIS child i receives the complement. With ``cross_check`` the
    closed form is compared against :func:`epsilon_bisection`.
    """
    if len(parent.rects) != 2:
        raise ValidationError("partition_double_rect needs a two-rect region")
    _check_children(parent.power, parent.rate, low, high, relation, tolerance)
    pattern, eps, pieces = closed_form_placement(parent, low.power, low.rate)
    eps = _clip_epsilon(eps, tolerance)
    if pattern in ("i", "ii", "iii.2", "iv.1"):
        # rebuild from the clipped coefficient
        pieces = _split_pieces(parent, low.power, eps, inner=pattern == "ii")

    if cross_check:
        oracle = epsilon_bisection(double_rect_case(parent, low.power), parent,
                                   low.power, low.rate)
        if not _agree(eps, oracle.epsilon, CROSS_CHECK_RTOL):
            raise PartitionError(
                f"case {pattern}: closed-form epsilon {eps!r} disagrees with "
                f"bisection {oracle.epsilon!r} ({oracle.pattern})")
        scale = parent.upper.top
        for (a, _), (b, _) in zip(sorted(pieces), sorted(oracle.pieces)):
            if abs(a - b) > CROSS_CHECK_RTOL * scale:
                raise PartitionError(
                    f"case {pattern}: closed-form piece at {a!r} disagrees with "
                    f"bisection piece at {b!r}")

    low_region, high_region = _finish(parent, pieces, tolerance)
    return Partition(low_region, high_region, pattern, eps)


def _split_pieces(parent: Region, pj: float, eps: float, inner: bool) -> List[Interval]:
    r1, r2 = parent.upper, parent.lower
    if inner:
        return [(r2.top - (1 - eps) * pj, r2.top), (r1.nis, r1.nis + eps * pj)]
    return [(r2.nis, r2.nis + (1 - eps) * pj), (r1.top - eps * pj, r1.top)]


# -- full plan -----------------------------------------------------------------

@dataclass(frozen=True)
class VirtualUser:
    """One single-user stream. ``piece`` is 1 for the upper (epsilon) part,
    2 for the lower part, 0 for an unsplit user."""

    user: int
    piece: int
    power: float
    nis: float

    @property
    def rate(self) -> float:
        return capacity(self.power, self.nis)

    @property
    def label(self) -> str:
        return f"{self.user + 1}" if self.piece == 0 else f"{self.user + 1}.{self.piece}"


@dataclass(frozen=True)
class PartitionStep:
    node: int
    low: int
    high: int
    relation: PairRelation
    case: str
    epsilon: Optional[float]


@dataclass(frozen=True)
class SplitPlan:
    """Splitting coefficients, virtual users and decoding order.

    ``decode_order`` lists indices into ``virtual_users``, first decoded
    first (highest NIS first).
    """

    ra: RateAllocation
    epsilon: Tuple[float, ...]
    virtual_users: Tuple[VirtualUser, ...]
    decode_order: Tuple[int, ...]
    tree: Optional[CombinationTree] = None
    steps: Tuple[PartitionStep, ...] = field(default=())

    def stack(self) -> List[VirtualUser]:
        """Virtual users bottom-up (increasing NIS)."""
        return [self.virtual_users[k] for k in reversed(self.decode_order)]

    def pieces_of(self, user: int) -> List[VirtualUser]:
        return [v for v in self.virtual_users if v.user == user]

    @property
    def split_count(self) -> int:
        return sum(1 for e in self.epsilon if 0.0 < e < 1.0)


def _leaf_pieces(user: int, power: float, region: Region) -> Tuple[float, List[VirtualUser]]:
    if len(region.rects) == 1:
        return 1.0, [VirtualUser(user, 0, power, region.lower.nis)]
    eps = region.upper.power / region.power
    upper = VirtualUser(user, 1, eps * power, region.upper.nis)
    lower = VirtualUser(user, 2, power - upper.power, region.lower.nis)
    return eps, [upper, lower]


def compute_split_plan(ra: RateAllocation, tolerance: float = DEFAULT_TOLERANCE,
                       cross_check: bool = True) -> SplitPlan:
    """Plan virtual users realizing the dominant-face rate tuple of ``ra``.

    Raises
    ------
    NotOnDominantFace
        If the tuple is not a base within ``tolerance``.
    PartitionError
        If a partition step fails; ``node_id`` names the tree node.
    """
    tree = build_combination_tree(ra, tolerance)
    regions: Dict[int, Region] = {tree.root.id: Region.single(tree.root.power, ra.noise)}
    steps = []
    for node_id in reversed(tree.merge_order):
        low_id, high_id = tree.children[node_id]
        low, high = tree.nodes[low_id], tree.nodes[high_id]
        relation = tree.relation_at_merge[node_id]
        region = regions.pop(node_id)
        try:
            if len(region.rects) == 1:
                part = partition_single_rect(region.rects[0], low, high, relation,
                                             tolerance)
            else:
                part = partition_double_rect(region, low, high, relation, tolerance,
                                             cross_check)
        except PartitionError as exc:
            raise PartitionError(str(exc), node_id) from exc
        regions[low_id], regions[high_id] = part.low, part.high
        steps.append(PartitionStep(node_id, low_id, high_id, relation, part.case, part.epsilon))

    epsilon = []
    virtual = []
    for user in range(ra.n):
        eps, pieces = _leaf_pieces(user, ra.powers[user], regions[user])
        epsilon.append(eps)
        virtual.extend(pieces)
    decode_order = sorted(range(len(virtual)), key=lambda k: -virtual[k].nis)
    return SplitPlan(ra, tuple(epsilon), tuple(virtual), tuple(decode_order), tree, tuple(steps))
