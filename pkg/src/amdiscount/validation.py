"""Input validation helpers shared by every module."""

import math
from numbers import Integral, Real

import numpy as np

from .exceptions import DomainError


def check_real(name, value):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name, value):
    value = check_real(name, value)
    if value <= 0:
        raise DomainError(f"{name} must be > 0, got {value!r}")
    return value


def check_nonnegative(name, value):
    value = check_real(name, value)
    if value < 0:
        raise DomainError(f"{name} must be >= 0, got {value!r}")
    return value


def check_in_interval(name, value, low, high, *, low_open=True, high_open=False):
    """Check ``value`` lies in the interval between ``low`` and ``high``."""
    value = check_real(name, value)
    below = value <= low if low_open else value < low
    above = value >= high if high_open else value > high
    if below or above:
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise DomainError(f"{name} must lie in {lb}{low}, {high}{rb}, got {value!r}")
    return value


def check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, Integral):
        # accept integral floats coming from JSON, e.g. 3.0
        if isinstance(value, Real) and float(value).is_integer():
            value = int(value)
        else:
            raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value!r}")
    return value


def check_nonnegative_array(name, values, *, min_len=1):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if arr.size < min_len:
        raise DomainError(f"{name} needs at least {min_len} element(s)")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be non-negative")
    return arr
