"""Scalar capacity and noise-plus-interference (NIS) primitives.

Rates are in bits per channel use (base-2 logarithm); powers and NIS
values share one arbitrary linear unit.
"""

import math

from .errors import DomainError

__all__ = ["DEFAULT_TOLERANCE", "capacity", "nis_for_rate", "interval_rate"]

DEFAULT_TOLERANCE = 1e-9


def capacity(power: float, nis: float) -> float:
    """Capacity of a single-user AWGN link, ``0.5 * log2(1 + power / nis)``.

    Parameters
    ----------
    power : float
        Transmit power, ``>= 0``.
    nis : float
        Noise plus interference power seen by the user, ``> 0``.

    Returns
    -------
    float
        Rate in bits per channel use.
    """
    if not nis > 0 or not math.isfinite(nis):
        raise DomainError(f"nis must be positive and finite, got {nis!r}")
    if not power >= 0 or not math.isfinite(power):
        raise DomainError(f"power must be nonnegative and finite, got {power!r}")
    # log1p keeps precision at low SNR
    return 0.5 * math.log1p(power / nis) / math.log(2.0)


def nis_for_rate(rate: float, power: float) -> float:
    """Largest NIS under which ``power`` still supports ``rate``.

    Inverse of :func:`capacity` in its second argument:
    ``power / (2**(2*rate) - 1)``.
    """
    if not rate > 0 or not math.isfinite(rate):
        raise DomainError(f"rate must be positive and finite, got {rate!r}")
    if not power > 0 or not math.isfinite(power):
        raise DomainError(f"power must be positive and finite, got {power!r}")
    # expm1 keeps precision for small rates
    return power / math.expm1(2.0 * rate * math.log(2.0))


def interval_rate(bottom: float, top: float) -> float:
    """Rate of a power slab occupying ``[bottom, top]`` on the NIS axis.

    Equal to ``capacity(top - bottom, bottom)`` but computed from the
    endpoints, which is what the geometric code needs.
    """
    if not bottom > 0:
        raise DomainError(f"bottom must be positive, got {bottom!r}")
    if top < bottom:
        raise DomainError(f"top {top!r} below bottom {bottom!r}")
    return capacity(top - bottom, bottom)
