"""Bisection shared by every threshold search (tolerance 1e-9, at most 200 halvings)."""

import math

from .exceptions import NoIndifferenceError

BISECT_TOL = 1e-9
BISECT_MAXITER = 200


def bisect(f, lo, hi, *, tol=BISECT_TOL, maxiter=BISECT_MAXITER):
    """Root of ``f`` on ``[lo, hi]`` where ``f(lo)`` and ``f(hi)`` differ in sign.

    Stops when the bracket is narrower than ``tol * max(1, |mid|)`` or ``f``
    hits zero exactly. Raises :class:`NoIndifferenceError` without a sign change.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise NoIndifferenceError(f"no sign change on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0 or hi - lo <= tol * max(1.0, abs(mid)):
            return mid
        if math.copysign(1.0, fmid) == math.copysign(1.0, flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)
