"""Rate allocations, NIS profiles, pair relations and polymatroid checks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ValidationError
from .shannon import DEFAULT_TOLERANCE, capacity, nis_for_rate

__all__ = [
    "RateAllocation",
    "NisProfile",
    "PairRelation",
    "Status",
    "MembershipVerdict",
    "compute_nis",
    "classify_pair",
    "polymatroid_membership",
    "vertex_rates",
    "sum_capacity",
    "validate_permutation",
    "tighten",
    "DEFAULT_USER_CAP",
]

DEFAULT_USER_CAP = 20


@dataclass(frozen=True)
class RateAllocation:
    """Powers, target rates and noise power of an ``n``-user adder channel."""

    powers: Tuple[float, ...]
    rates: Tuple[float, ...]
    noise: float

    def __post_init__(self):
        powers = tuple(float(p) for p in self.powers)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "noise", float(self.noise))
        if not powers:
            raise ValidationError("at least one user is required")
        if len(powers) != len(rates):
            raise ValidationError(
                f"{len(powers)} powers but {len(rates)} rates")
        for name, values in (("power", powers), ("rate", rates)):
            for k, v in enumerate(values):
                if not (math.isfinite(v) and v > 0):
                    raise ValidationError(
                        f"{name} of user {k + 1} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.noise) and self.noise > 0):
            raise ValidationError(f"noise must be positive and finite, got {self.noise!r}")

    @property
    def n(self) -> int:
        return len(self.powers)

    @property
    def total_power(self) -> float:
        return math.fsum(self.powers)

    @property
    def sum_rate(self) -> float:
        return math.fsum(self.rates)

    def with_rates(self, rates: Sequence[float]) -> "RateAllocation":
        return RateAllocation(self.powers, tuple(rates), self.noise)


def sum_capacity(powers: Sequence[float], noise: float) -> float:
    """Sum-rate of every base: capacity of the pooled power over the noise."""
    return capacity(math.fsum(powers), noise)


@dataclass(frozen=True)
class NisProfile:
    """Per-user NIS values and the user order by increasing NIS."""

    nis: Tuple[float, ...]
    order: Tuple[int, ...]


def compute_nis(ra: RateAllocation) -> NisProfile:
    nis = tuple(nis_for_rate(r, p) for r, p in zip(ra.rates, ra.powers))
    # sorted() is stable, so equal NIS keeps the lower user index first
    order = tuple(sorted(range(ra.n), key=lambda k: nis[k]))
    return NisProfile(nis, order)


class PairRelation(enum.Enum):
    OVERLAPPING = "overlapping"
    DISCONTINUOUS = "discontinuous"
    CONTIGUOUS = "contiguous"

    def __str__(self):
        return self.value


def classify_pair(lower: Tuple[float, float], upper: Tuple[float, float],
                  tolerance: float = DEFAULT_TOLERANCE) -> PairRelation:
    """Classify two users given as ``(power, nis)`` with ``lower`` below ``upper``.

    The boundary band for contiguity is ``tolerance * max(P_lower, nis_lower)``.

    Raises
    ------
    ValidationError
        If ``lower`` has a larger NIS than ``upper`` (beyond the band).
    """
    p_low, nis_low = lower
    _, nis_up = upper
    band = tolerance * max(p_low, nis_low)
    if nis_low > nis_up + band:
        raise ValidationError(
            f"pair misordered: lower NIS {nis_low!r} exceeds upper NIS {nis_up!r}")
    gap = nis_up - (nis_low + p_low)
    if abs(gap) <= band:
        return PairRelation.CONTIGUOUS
    if gap < 0:
        return PairRelation.OVERLAPPING
    return PairRelation.DISCONTINUOUS


class Status(enum.Enum):
    OUTSIDE = "Outside"
    INTERIOR = "Interior"
    DOMINANT_FACE = "DominantFace"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class MembershipVerdict:
    """Outcome of checking a rate tuple against the capacity polymatroid.

    ``violated_subset`` holds 0-based user indices and is set only for
    ``Outside``. ``violation`` is the excess rate of that subset;
    ``sum_rate_gap`` is the sum capacity minus the requested sum rate.
    """

    status: Status
    violated_subset: Optional[Tuple[int, ...]] = None
    violation: float = 0.0
    sum_rate_gap: float = 0.0

    def describe(self) -> str:
        if self.status is Status.OUTSIDE:
            users = ",".join(str(k + 1) for k in self.violated_subset)
            return f"Outside, subset {{{users}}} exceeds its capacity by {self.violation:.6g} bit"
        if self.status is Status.INTERIOR:
            return f"Interior, {self.sum_rate_gap:.6g} bit below the dominant face"
        return "DominantFace"


def polymatroid_membership(ra: RateAllocation, tolerance: float = DEFAULT_TOLERANCE,
                           max_users: int = DEFAULT_USER_CAP) -> MembershipVerdict:
    """Check every one of the ``2**n - 1`` subset constraints.

    A constraint counts as satisfied when the subset's rate exceeds its
    capacity by no more than ``tolerance`` times the sum capacity; the
    same band decides whether the full-set constraint is met with
    equality.
    """
    n = ra.n
    if n > max_users:
        raise CapacityError(f"{n} users exceeds the enumeration cap of {max_users}")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    members = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    subset_power = members @ np.asarray(ra.powers)
    subset_rate = members @ np.asarray(ra.rates)
    subset_cap = 0.5 * np.log1p(subset_power / ra.noise) / np.log(2.0)
    excess = subset_rate - subset_cap

    full_cap = sum_capacity(ra.powers, ra.noise)
    band = tolerance * full_cap
    gap = full_cap - ra.sum_rate
    worst = int(np.argmax(excess))
    if excess[worst] > band:
        subset = tuple(k for k in range(n) if (int(masks[worst]) >> k) & 1)
        return MembershipVerdict(Status.OUTSIDE, subset, float(excess[worst]), gap)
    if gap > band:
        return MembershipVerdict(Status.INTERIOR, sum_rate_gap=gap)
    return MembershipVerdict(Status.DOMINANT_FACE, sum_rate_gap=gap)


def tighten(ra: RateAllocation) -> RateAllocation:
    """Rescale the rates so their sum equals the sum capacity exactly.

    Meant for tuples already accepted as on the dominant face within
    tolerance; it removes the residual slack so downstream geometry
    closes exactly. It is not a projection of arbitrary points.
    """
    scale = sum_capacity(ra.powers, ra.noise) / ra.sum_rate
    return ra.with_rates(r * scale for r in ra.rates)


def validate_permutation(pi: Sequence[int], n: int) -> Tuple[int, ...]:
    pi = tuple(int(k) for k in pi)
    if sorted(pi) != list(range(n)):
        raise ValidationError(f"{pi!r} is not a permutation of 0..{n - 1}")
    return pi


def vertex_rates(powers: Sequence[float], noise: float, pi: Sequence[int]) -> Tuple[float, ...]:
    """Rates of the polymatroid vertex selected by ``pi`` (0-based).

    User ``pi[0]`` sees only the noise, ``pi[1]`` sees noise plus the
    power of ``pi[0]``, and so on; the receiver decodes ``pi[-1]`` first.
    """
    pi = validate_permutation(pi, len(powers))
    if not noise > 0:
        raise ValidationError(f"noise must be positive, got {noise!r}")
    if any(not p > 0 for p in powers):
        raise ValidationError("all powers must be positive")
    rates = [0.0] * len(powers)
    floor = float(noise)
    for k in pi:
        rates[k] = capacity(powers[k], floor)
        floor += powers[k]
    return tuple(rates)

