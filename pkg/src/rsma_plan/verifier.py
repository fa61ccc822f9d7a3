"""Independent plan verification and dominant-face sampling.

Verification looks only at the (power, NIS) pairs of the virtual users
and recomputes everything else, so it does not trust the splitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .allocation import RateAllocation, sum_capacity, validate_permutation, vertex_rates
from .errors import ValidationError
from .shannon import DEFAULT_TOLERANCE, capacity
from .splitter import SplitPlan

__all__ = ["VerificationReport", "verify_plan", "sample_dominant_face", "random_problem"]

RATE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of simulating successive decoding of a plan.

    Rate errors are absolute, in bits per channel use; user keys are
    0-based. ``reconstructed_rates`` uses the interference actually left
    when each piece is decoded, not the NIS the plan claims.
    """

    stacking_ok: bool
    per_user_rate_error: Dict[int, float]
    reconstructed_rates: Tuple[float, ...]
    virtual_count: int
    max_stack_gap: float
    per_user_power_error: Dict[int, float]
    rate_tolerance: float = RATE_TOLERANCE

    @property
    def max_rate_error(self) -> float:
        return max(self.per_user_rate_error.values())

    @property
    def rates_ok(self) -> bool:
        return self.max_rate_error <= self.rate_tolerance

    @property
    def ok(self) -> bool:
        return self.stacking_ok and self.rates_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "stacking_ok": self.stacking_ok,
            "max_stack_gap": self.max_stack_gap,
            "virtual_count": self.virtual_count,
            "reconstructed_rates": list(self.reconstructed_rates),
            "per_user_rate_error": [self.per_user_rate_error[k]
                                    for k in sorted(self.per_user_rate_error)],
            "per_user_power_error": [self.per_user_power_error[k]
                                     for k in sorted(self.per_user_power_error)],
            "rate_tolerance": self.rate_tolerance,
        }


def verify_plan(plan: SplitPlan, ra: Optional[RateAllocation] = None,
                tolerance: float = DEFAULT_TOLERANCE,
                rate_tolerance: Optional[float] = None) -> VerificationReport:
    """Replay successive decoding of ``plan`` against ``ra``.

    Walking the decode order, each piece must claim an NIS equal to the
    noise plus the power of every piece not yet decoded; the stacking
    check passes when the worst mismatch is within ``tolerance`` times
    the total power. Mismatches are recorded, never raised.

    ``rate_tolerance`` defaults to the larger of ``1e-8`` bit and
    ``tolerance`` times the sum capacity, the slack with which a tuple is
    accepted as lying on the dominant face.

    Raises
    ------
    ValidationError
        On structural problems: unknown users, a decode order that is
        not a permutation of the pieces, more than two pieces per user.
    """
    ra = plan.ra if ra is None else ra
    if rate_tolerance is None:
        rate_tolerance = max(RATE_TOLERANCE, tolerance * sum_capacity(ra.powers, ra.noise))
    pieces = plan.virtual_users
    if sorted(plan.decode_order) != list(range(len(pieces))):
        raise ValidationError("decode order is not a permutation of the virtual users")
    counts: Dict[int, int] = {}
    for v in pieces:
        if not 0 <= v.user < ra.n:
            raise ValidationError(f"virtual user {v.label} refers to an unknown user")
        if not (v.power > 0 and v.nis > 0):
            raise ValidationError(f"virtual user {v.label} has nonpositive power or NIS")
        counts[v.user] = counts.get(v.user, 0) + 1
    if any(c > 2 for c in counts.values()):
        raise ValidationError("a user has more than two virtual users")
    labels = [(v.user, v.piece) for v in pieces]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate virtual users")

    remaining = math.fsum(v.power for v in pieces)
    gap = 0.0
    rates = [0.0] * ra.n
    for k in plan.decode_order:
        v = pieces[k]
        remaining -= v.power
        floor = ra.noise + max(remaining, 0.0)
        gap = max(gap, abs(v.nis - floor))
        rates[v.user] += capacity(v.power, floor)

    scale = tolerance * math.fsum(ra.powers)
    rate_error = {k: abs(rates[k] - ra.rates[k]) for k in range(ra.n)}
    power_error = {
        k: abs(math.fsum(v.power for v in pieces if v.user == k) - ra.powers[k])
        for k in range(ra.n)
    }
    return VerificationReport(
        stacking_ok=gap <= scale,
        per_user_rate_error=rate_error,
        reconstructed_rates=tuple(rates),
        virtual_count=len(pieces),
        max_stack_gap=gap,
        per_user_power_error=power_error,
        rate_tolerance=rate_tolerance,
    )


def sample_dominant_face(powers: Sequence[float], noise: float,
                         weights: Dict[Tuple[int, ...], float],
                         tolerance: float = DEFAULT_TOLERANCE) -> RateAllocation:
    """Convex combination of polymatroid vertices.

    ``weights`` maps 0-based permutations to nonnegative weights that sum
    to one.
    """
    if not weights:
        raise ValidationError("at least one permutation is required")
    total = math.fsum(weights.values())
    if any(w < 0 for w in weights.values()) or abs(total - 1.0) > tolerance:
        raise ValidationError(f"weights must be nonnegative and sum to 1, got {total!r}")
    if not any(w > 0 for w in weights.values()):
        raise ValidationError("no permutation has positive weight")
    n = len(powers)
    rates = np.zeros(n)
    for pi, w in weights.items():
        validate_permutation(pi, n)
        rates += w * np.asarray(vertex_rates(powers, noise, pi))
    return RateAllocation(tuple(powers), tuple(rates), noise)


def random_problem(n: int, seed: int, power_range=(0.1, 10.0), noise: float = 1.0,
                   n_vertices: Optional[int] = None,
                   powers: Optional[Sequence[float]] = None) -> RateAllocation:
    """Seeded random dominant-face allocation.

    Powers are uniform in ``power_range`` unless given; rates mix
    ``n_vertices`` random vertices (default ``n``) with Dirichlet weights.
    """
    rng = np.random.default_rng(seed)
    if powers is None:
        powers = tuple(rng.uniform(*power_range, size=n))
    elif len(powers) != n:
        raise ValidationError(f"expected {n} powers, got {len(powers)}")
    k = n if n_vertices is None else n_vertices
    weights: Dict[Tuple[int, ...], float] = {}
    for w in rng.dirichlet(np.ones(k)):
        pi = tuple(int(x) for x in rng.permutation(n))
        weights[pi] = weights.get(pi, 0.0) + float(w)
    total = math.fsum(weights.values())
    weights = {pi: w / total for pi, w in weights.items()}
    return sample_dominant_face(powers, noise, weights)
