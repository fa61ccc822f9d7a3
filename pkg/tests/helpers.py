"""Independent oracles and instance generators shared by the tests.

Nothing here calls the closed forms under test; geometry is done with
plain interval arithmetic and ``math.log2``.
"""

import itertools
import math

import numpy as np

LOG2_7 = math.log2(7.0)


def g(power, nis):
    return 0.5 * math.log2(1.0 + power / nis)


def bisect_decreasing(fn, target, lo, hi, iters=200):
    """Root of a decreasing ``fn(x) = target`` on ``[lo, hi]``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nis_by_bisection(rate, power):
    """NIS solving g(power, nis) = rate without inverting the formula."""
    hi = 1.0
    while g(power, hi) > rate:
        hi *= 2.0
    return bisect_decreasing(lambda d: g(power, d), rate, 1e-300, hi)


def brute_membership(powers, rates, noise, tolerance):
    """Literal subset enumeration with itertools; returns a status string."""
    n = len(powers)
    full = g(sum(powers), noise)
    band = tolerance * full
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            cap = g(sum(powers[k] for k in subset), noise)
            if sum(rates[k] for k in subset) - cap > band:
                return "Outside"
    if full - sum(rates) > band:
        return "Interior"
    return "DominantFace"


def pieces_rate(pieces):
    return sum(g(hi - lo, lo) for lo, hi in pieces if hi > lo)


def lowest_fill(rects, power):
    """Pieces of ``power`` packed from the bottom of the (bottom-up) rects."""
    out, left = [], power
    for lo, hi in rects:
        take = min(left, hi - lo)
        if take > 0:
            out.append((lo, lo + take))
        left -= take
    return out


def highest_fill(rects, power):
    out, left = [], power
    for lo, hi in reversed(rects):
        take = min(left, hi - lo)
        if take > 0:
            out.append((hi - take, hi))
        left -= take
    return out


def random_two_rect_instance(rng, case):
    """Two-rect parent plus child (power, rate) for pattern family ``case``.

    Returns ``(rects, pj, rj, pi, ri)`` with rects bottom-up, or ``None``
    when the draw does not produce the requested power ordering.
    """
    d2 = rng.uniform(0.05, 5.0)
    p2 = rng.uniform(0.1, 10.0)
    d1 = d2 + p2 + rng.uniform(1e-3, 5.0)
    p1 = rng.uniform(0.1, 10.0)
    lo_p, hi_p = min(p1, p2), max(p1, p2)
    if case == "i":
        pj = rng.uniform(0.02, 0.999) * lo_p
    elif case == "ii":
        pj = rng.uniform(hi_p, p1 + p2)
    elif case == "iii":
        if p1 <= p2:
            return None
        pj = rng.uniform(p2, p1)
    else:
        if p2 <= p1:
            return None
        pj = rng.uniform(p1, p2)
    pi = p1 + p2 - pj
    if pi <= 1e-3 or pj <= 1e-3:
        return None
    rects = [(d2, d2 + p2), (d1, d1 + p1)]
    top = pieces_rate(lowest_fill(rects, pj))
    bottom = pieces_rate(highest_fill(rects, pj))
    rj = rng.uniform(bottom, top)
    total = g(p2, d2) + g(p1, d1)
    return rects, pj, rj, pi, total - rj


def all_vertex_sums(powers, noise):
    sums = []
    for pi in itertools.permutations(range(len(powers))):
        floor, total = noise, 0.0
        for k in pi:
            total += g(powers[k], floor)
            floor += powers[k]
        sums.append(total)
    return np.array(sums)
